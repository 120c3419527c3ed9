#pragma once

// Experiment runner behind the `qtpnet` command line tool.
//
// Configuration is a flat JSON object with dotted keys ("qepfe.n_qubits").
// Precedence: command-line overrides > config file > built-in defaults. Every
// run writes manifest.json into the output directory; feeding that manifest
// back as --config reproduces the run.

#include <qtpnet/adaptive_search.hpp>
#include <qtpnet/error.hpp>
#include <qtpnet/grover.hpp>
#include <qtpnet/metrics.hpp>
#include <qtpnet/neural_head.hpp>
#include <qtpnet/qepfe.hpp>
#include <qtpnet/random.hpp>
#include <qtpnet/text_data.hpp>
#include <qtpnet/training.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace qtpnet {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumeric = 4,
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Data:
    case ErrorKind::DegenerateInput:
        return kExitData;
    case ErrorKind::Numeric:
    case ErrorKind::Precondition:
        return kExitNumeric;
    default:
        return kExitConfig;
    }
}

inline const std::set<std::string>& known_tasks() {
    static const std::set<std::string> tasks{"grover-demo", "validate-pm", "bbht-bench",
                                             "extract-features", "train", "eval"};
    return tasks;
}

struct RunConfig {
    std::string task;
    std::uint64_t seed = 0;
    QepfeConfig qepfe;
    TrainConfig training;

    std::string dataset;
    std::string embeddings;
    std::string output_dir = "out";
    std::string checkpoint;

    OovPolicy oov = OovPolicy::HashFallback;
    std::size_t embedding_dim = 32; // used when no embedding file is given

    int demo_qubits = 3;
    std::vector<basis_index> demo_marked{5};
    long demo_iters = -1; // -1: k_opt

    int pm_qubits = 2;
    std::size_t pm_marked_count = 1;
    std::vector<long> pm_m{1, 2, 4, 8};
    long pm_trials = 10000;

    int bench_qubits = 10;
    std::vector<std::size_t> bench_marked_counts{1, 4, 16};
    long bench_runs = 1000;
};

using Settings = nlohmann::json; // flat object, dotted keys

/// Every key with its default value.
inline Settings to_settings(const RunConfig& c) {
    Settings s = Settings::object();
    s["task"] = c.task;
    s["seed"] = c.seed;
    s["qepfe.n_qubits"] = c.qepfe.n_qubits;
    s["qepfe.encoding"] = std::string(to_string(c.qepfe.encoding));
    s["qepfe.tau"] = c.qepfe.tau;
    s["qepfe.pooling"] = std::string(to_string(c.qepfe.pooling));
    s["qepfe.fixed_iterations"] = c.qepfe.fixed_iterations ? Settings(*c.qepfe.fixed_iterations) : Settings();
    s["qepfe.search.lambda"] = c.qepfe.search.lambda;
    s["qepfe.search.max_m"] = c.qepfe.search.max_m ? Settings(*c.qepfe.search.max_m) : Settings();
    s["qepfe.search.k_convention"] = std::string(to_string(c.qepfe.search.k_convention));
    s["training.lr"] = c.training.lr;
    s["training.epochs"] = c.training.epochs;
    s["training.batch_size"] = c.training.batch_size;
    s["training.convergence_tol"] = c.training.convergence_tol;
    s["paths.dataset"] = c.dataset;
    s["paths.embeddings"] = c.embeddings;
    s["paths.output_dir"] = c.output_dir;
    s["paths.checkpoint"] = c.checkpoint;
    s["data.oov_policy"] = std::string(to_string(c.oov));
    s["data.embedding_dim"] = c.embedding_dim;
    s["demo.qubits"] = c.demo_qubits;
    s["demo.marked"] = c.demo_marked;
    s["demo.iters"] = c.demo_iters;
    s["pm.qubits"] = c.pm_qubits;
    s["pm.marked_count"] = c.pm_marked_count;
    s["pm.m"] = c.pm_m;
    s["pm.trials"] = c.pm_trials;
    s["bench.qubits"] = c.bench_qubits;
    s["bench.marked_counts"] = c.bench_marked_counts;
    s["bench.runs"] = c.bench_runs;
    return s;
}

namespace detail {

[[noreturn]] inline void bad_field(const std::string& key, const std::string& why) {
    fail(ErrorKind::Config, "invalid value for '" + key + "': " + why);
}

/// Values may arrive as JSON scalars or, from the command line, as strings.
inline nlohmann::json scalar(const Settings& s, const std::string& key) {
    const auto& v = s.at(key);
    if (!v.is_string()) {
        return v;
    }
    const auto str = v.get<std::string>();
    try {
        auto parsed = nlohmann::json::parse(str);
        if (parsed.is_number() || parsed.is_null() || parsed.is_boolean()) {
            return parsed;
        }
    } catch (const nlohmann::json::exception&) {
    }
    return v;
}

inline double get_double(const Settings& s, const std::string& key) {
    const auto v = scalar(s, key);
    if (!v.is_number()) {
        bad_field(key, "expected a number");
    }
    return v.get<double>();
}

inline long get_long(const Settings& s, const std::string& key) {
    const auto v = scalar(s, key);
    if (!v.is_number_integer()) {
        bad_field(key, "expected an integer");
    }
    return v.get<long>();
}

inline std::uint64_t get_u64(const Settings& s, const std::string& key) {
    const auto v = scalar(s, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        bad_field(key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline std::string get_string(const Settings& s, const std::string& key) {
    const auto& v = s.at(key);
    if (!v.is_string()) {
        bad_field(key, "expected a string");
    }
    return v.get<std::string>();
}

template <typename T>
std::vector<T> get_list(const Settings& s, const std::string& key) {
    const auto& raw = s.at(key);
    nlohmann::json v = raw;
    if (raw.is_string()) {
        // "1,4,16" from the command line
        v = nlohmann::json::array();
        std::string item;
        const auto str = raw.get<std::string>();
        for (std::size_t i = 0; i <= str.size(); ++i) {
            if (i == str.size() || str[i] == ',') {
                try {
                    v.push_back(nlohmann::json::parse(item));
                } catch (const nlohmann::json::exception&) {
                    bad_field(key, "expected a comma-separated list of integers");
                }
                item.clear();
            } else {
                item.push_back(str[i]);
            }
        }
    } else if (raw.is_number()) {
        v = nlohmann::json::array({raw});
    }
    if (!v.is_array() || v.empty()) {
        bad_field(key, "expected a non-empty list");
    }
    std::vector<T> out;
    for (const auto& item : v) {
        if (!item.is_number_integer() || item.get<long long>() < 0) {
            bad_field(key, "expected non-negative integers");
        }
        out.push_back(item.get<T>());
    }
    return out;
}

template <typename F>
auto field(const std::string& key, F&& parse) {
    try {
        return parse();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config && std::string(e.what()).find(key) != std::string::npos) {
            throw;
        }
        bad_field(key, e.what());
    }
}

} // namespace detail

/// Typed configuration from flat settings; unknown keys are rejected.
inline RunConfig from_settings(const Settings& input) {
    if (!input.is_object()) {
        fail(ErrorKind::Config, "configuration must be a JSON object");
    }
    Settings s = to_settings(RunConfig{});
    for (const auto& [key, value] : input.items()) {
        if (key == "version") {
            continue;
        }
        if (!s.contains(key)) {
            fail(ErrorKind::Config, "unknown configuration key '" + key + "'");
        }
        s[key] = value;
    }
    using namespace detail;
    RunConfig c;
    c.task = get_string(s, "task");
    c.seed = get_u64(s, "seed");
    c.qepfe.n_qubits = static_cast<int>(get_long(s, "qepfe.n_qubits"));
    c.qepfe.encoding = field("qepfe.encoding", [&] { return parse_encoding(get_string(s, "qepfe.encoding")); });
    c.qepfe.tau = get_double(s, "qepfe.tau");
    c.qepfe.pooling = field("qepfe.pooling", [&] { return parse_pooling(get_string(s, "qepfe.pooling")); });
    if (!scalar(s, "qepfe.fixed_iterations").is_null()) {
        c.qepfe.fixed_iterations = get_long(s, "qepfe.fixed_iterations");
    }
    c.qepfe.search.lambda = get_double(s, "qepfe.search.lambda");
    if (!scalar(s, "qepfe.search.max_m").is_null()) {
        c.qepfe.search.max_m = get_double(s, "qepfe.search.max_m");
    }
    c.qepfe.search.k_convention = field("qepfe.search.k_convention", [&] {
        return parse_k_convention(get_string(s, "qepfe.search.k_convention"));
    });
    c.qepfe.search.seed = child_seed(c.seed, "qepfe");
    c.training.lr = get_double(s, "training.lr");
    c.training.epochs = static_cast<int>(get_long(s, "training.epochs"));
    c.training.batch_size = static_cast<int>(get_long(s, "training.batch_size"));
    c.training.convergence_tol = get_double(s, "training.convergence_tol");
    c.training.seed = child_seed(c.seed, "training");
    c.dataset = get_string(s, "paths.dataset");
    c.embeddings = get_string(s, "paths.embeddings");
    c.output_dir = get_string(s, "paths.output_dir");
    c.checkpoint = get_string(s, "paths.checkpoint");
    c.oov = field("data.oov_policy", [&] { return parse_oov_policy(get_string(s, "data.oov_policy")); });
    c.embedding_dim = get_u64(s, "data.embedding_dim");
    c.demo_qubits = static_cast<int>(get_long(s, "demo.qubits"));
    c.demo_marked = get_list<basis_index>(s, "demo.marked");
    c.demo_iters = get_long(s, "demo.iters");
    c.pm_qubits = static_cast<int>(get_long(s, "pm.qubits"));
    c.pm_marked_count = get_u64(s, "pm.marked_count");
    c.pm_m = get_list<long>(s, "pm.m");
    c.pm_trials = get_long(s, "pm.trials");
    c.bench_qubits = static_cast<int>(get_long(s, "bench.qubits"));
    c.bench_marked_counts = get_list<std::size_t>(s, "bench.marked_counts");
    c.bench_runs = get_long(s, "bench.runs");
    return c;
}

/// defaults < file < overrides
inline RunConfig resolve_config(const std::string& config_path, const Settings& overrides) {
    Settings merged = Settings::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            fail(ErrorKind::Config, "cannot open config file '" + config_path + "'");
        }
        try {
            merged = Settings::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Config, "config file '" + config_path + "' is not valid JSON: " + e.what());
        }
        if (!merged.is_object()) {
            fail(ErrorKind::Config, "config file must hold a JSON object");
        }
    }
    for (const auto& [key, value] : overrides.items()) {
        merged[key] = value;
    }
    return from_settings(merged);
}

namespace detail {

/// Files written by a run; removed again if the run fails.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path path(const std::string& name) {
        auto p = dir_ / name;
        if (!std::filesystem::exists(p)) {
            created_.push_back(p);
        }
        return p;
    }

    void rollback() noexcept {
        std::error_code ec;
        for (const auto& p : created_) {
            std::filesystem::remove(p, ec);
        }
        created_.clear();
    }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> created_;
};

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) {
        fail(ErrorKind::Data, "cannot write '" + p.string() + "'");
    }
    return out;
}

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void require_file(const std::string& path, const std::string& key) {
    if (path.empty()) {
        fail(ErrorKind::Config, "'" + key + "' is required for this task");
    }
    if (!std::filesystem::is_regular_file(path)) {
        fail(ErrorKind::Config, "'" + key + "' does not name a readable file: " + path);
    }
}

inline EmbeddingStore open_store(const RunConfig& c) {
    if (c.embeddings.empty()) {
        return EmbeddingStore(c.embedding_dim, c.oov);
    }
    return EmbeddingStore::load(c.embeddings, c.oov);
}

inline const char* kPmHeader = "N,a,m,p_m_analytic,p_m_empirical,mean_calls,success_rate\n";

inline void run_grover_demo(const RunConfig& c, OutputSet& files, std::ostream& log) {
    const MarkedSet marked(c.demo_qubits, c.demo_marked);
    const auto angles = grover_angles(c.demo_qubits, marked.size());
    const long iters = c.demo_iters < 0 ? angles.k_opt : c.demo_iters;
    auto csv = open_out(files.path("grover_demo.csv"));
    csv << "k,analytic,simulated,abs_diff\n";
    char line[160];
    std::snprintf(line, sizeof line, "%4s  %12s  %12s  %10s\n", "k", "analytic", "simulated", "|diff|");
    log << "N=" << marked.universe() << " a=" << marked.size() << " k_opt=" << angles.k_opt << "\n" << line;
    Statevector state = uniform_superposition(c.demo_qubits);
    for (long k = 0; k <= iters; ++k) {
        const double analytic = analytic_success(c.demo_qubits, marked.size(), k);
        const double simulated = marked.mass(state);
        const double diff = std::abs(analytic - simulated);
        std::snprintf(line, sizeof line, "%4ld  %12.6f  %12.6f  %10.3g\n", k, analytic, simulated, diff);
        log << line;
        csv << k << ',' << fmt_g(analytic) << ',' << fmt_g(simulated) << ',' << fmt_g(diff) << '\n';
        grover_iterate(state, marked);
    }
}

inline void run_validate_pm(const RunConfig& c, OutputSet& files, std::ostream& log) {
    const MarkedSet marked = random_marked_set(c.pm_qubits, c.pm_marked_count, child_seed(c.seed, "pm.marked"));
    auto csv = open_out(files.path("validate_pm.csv"));
    csv << kPmHeader;
    log << kPmHeader;
    for (long m : c.pm_m) {
        const auto est = estimate_p_m(marked, m, c.pm_trials, child_seed(c.seed, "pm.m" + std::to_string(m)),
                                      c.qepfe.search.k_convention);
        const std::string row = std::to_string(est.N) + ',' + std::to_string(est.a) + ',' + std::to_string(m) + ',' +
                                fmt_g(est.analytic) + ',' + fmt_g(est.empirical) + ',' + fmt_g(est.mean_calls) +
                                ',' + fmt_g(est.empirical) + '\n';
        csv << row;
        log << row;
    }
}

inline void run_bbht_bench(const RunConfig& c, OutputSet& files, std::ostream& log) {
    auto csv = open_out(files.path("bbht_bench.csv"));
    csv << kPmHeader;
    log << kPmHeader;
    SearchConfig search = c.qepfe.search;
    for (std::size_t a : c.bench_marked_counts) {
        const auto r = run_bbht_bench(c.bench_qubits, a, c.bench_runs,
                                      child_seed(c.seed, "bench.a" + std::to_string(a)), search);
        const std::string row = std::to_string(r.N) + ',' + std::to_string(r.a) + ',' + fmt_g(r.max_m) + ',' +
                                fmt_g(r.analytic_success) + ',' + fmt_g(r.success_rate) + ',' +
                                fmt_g(r.mean_calls) + ',' + fmt_g(r.success_rate) + '\n';
        csv << row;
        log << row;
        if (r.false_positives != 0) {
            fail(ErrorKind::Numeric, "adaptive search reported a non-marked element");
        }
    }
}

inline void run_extract_features(const RunConfig& c, OutputSet& files, std::ostream& log) {
    const Dataset data = load_dataset(c.dataset);
    const EmbeddingStore store = open_store(c);
    auto out = open_out(files.path("features.jsonl"));
    std::size_t fallbacks = 0;
    for (const auto& ex : data.examples) {
        const FusedExample f = fuse_text(ex.text, store, c.qepfe);
        fallbacks += f.fallback ? 1 : 0;
        out << nlohmann::json{{"id", ex.id}, {"p", f.p}}.dump() << '\n';
    }
    log << "wrote features for " << data.examples.size() << " examples (" << fallbacks
        << " with no usable tokens)\n";
}

inline void run_train(const RunConfig& c, OutputSet& files, std::ostream& log) {
    const Dataset data = load_dataset(c.dataset);
    const EmbeddingStore store = open_store(c);
    const auto samples = build_samples(data, store, c.qepfe);
    const TrainResult result = train_head(samples, static_cast<std::size_t>(data.class_count), c.training);
    {
        auto out = open_out(files.path("head.qtph"), true);
        write_checkpoint(out, {result.head, static_cast<std::uint32_t>(c.qepfe.feature_dim()),
                               static_cast<std::uint32_t>(store.dim())});
    }
    auto hist = open_out(files.path("loss_history.csv"));
    hist << "epoch,mean_loss,train_accuracy\n";
    for (const auto& e : result.history) {
        hist << e.epoch << ',' << fmt_g(e.mean_loss) << ',' << fmt_g(e.train_accuracy) << '\n';
    }
    const auto& last = result.history.back();
    log << "trained " << result.history.size() << " epochs" << (result.converged ? " (converged)" : "")
        << ": loss " << last.mean_loss << ", train accuracy " << last.train_accuracy << "\n";
}

inline void run_eval(const RunConfig& c, OutputSet& files, std::ostream& log) {
    const Dataset data = load_dataset(c.dataset);
    const EmbeddingStore store = open_store(c);
    const Checkpoint ckpt = load_checkpoint(c.checkpoint);
    if (ckpt.feature_dim != c.qepfe.feature_dim()) {
        fail(ErrorKind::Config, "'qepfe.n_qubits' gives " + std::to_string(c.qepfe.feature_dim()) +
                                    " features but the checkpoint was trained with " +
                                    std::to_string(ckpt.feature_dim));
    }
    if (ckpt.embedding_dim != store.dim()) {
        fail(ErrorKind::Config, "embedding dimension " + std::to_string(store.dim()) +
                                    " does not match the checkpoint's " + std::to_string(ckpt.embedding_dim));
    }
    if (static_cast<std::size_t>(data.class_count) > ckpt.head.classes) {
        fail(ErrorKind::Data, "dataset has more classes than the checkpoint");
    }
    const auto samples = build_samples(data, store, c.qepfe);
    const Metrics m = compute_metrics(confusion(ckpt.head, samples));
    auto j = to_json(m);
    j["seed"] = c.seed;
    j["examples"] = samples.size();
    open_out(files.path("metrics.json")) << j.dump(2) << '\n';
    append_metrics_csv(files.path("metrics_log.csv").string(), m, c.seed);
    log << j.dump(2) << '\n';
}

} // namespace detail

/// Executes one task. Errors are reported on `err` and mapped to exit codes;
/// files created by a failed run are removed.
inline int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
    if (!known_tasks().contains(config.task)) {
        err << "config error: invalid value for 'task': '" << config.task << "'\n";
        return kExitConfig;
    }
    std::filesystem::path dir(config.output_dir);
    bool made_dir = false;
    detail::OutputSet files(dir);
    try {
        config.qepfe.validate();
        if (config.task == "extract-features" || config.task == "train" || config.task == "eval") {
            detail::require_file(config.dataset, "paths.dataset");
            if (!config.embeddings.empty()) {
                detail::require_file(config.embeddings, "paths.embeddings");
            }
        }
        if (config.task == "eval") {
            detail::require_file(config.checkpoint, "paths.checkpoint");
        }
        if (config.task == "train") {
            config.training.validate();
        }
        if (config.output_dir.empty()) {
            fail(ErrorKind::Config, "'paths.output_dir' must not be empty");
        }
        if (!std::filesystem::exists(dir)) {
            std::filesystem::create_directories(dir);
            made_dir = true;
        }

        if (config.task == "grover-demo") {
            detail::run_grover_demo(config, files, log);
        } else if (config.task == "validate-pm") {
            detail::run_validate_pm(config, files, log);
        } else if (config.task == "bbht-bench") {
            detail::run_bbht_bench(config, files, log);
        } else if (config.task == "extract-features") {
            detail::run_extract_features(config, files, log);
        } else if (config.task == "train") {
            detail::run_train(config, files, log);
        } else {
            detail::run_eval(config, files, log);
        }

        Settings manifest = to_settings(config);
        manifest["version"] = kVersion;
        detail::open_out(files.path("manifest.json")) << manifest.dump(2) << '\n';
        return kExitOk;
    } catch (const Error& e) {
        files.rollback();
        if (made_dir) {
            std::error_code ec;
            std::filesystem::remove(dir, ec); // only succeeds when empty
        }
        err << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        files.rollback();
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

} // namespace qtpnet
