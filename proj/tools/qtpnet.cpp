// qtpnet: command line entry point.
//
//   qtpnet grover-demo --qubits 3 --marked 5 --iters 2
//   qtpnet validate-pm --qubits 2 --marked-count 1 --m 1
//   qtpnet bbht-bench --qubits 10 --marked-counts 1,4,16 --runs 1000
//   qtpnet extract-features --dataset data.jsonl [--embeddings vocab.qtpe]
//   qtpnet train --dataset data.jsonl --lr 0.00001 --epochs 5 --batch 32
//   qtpnet eval --dataset data.jsonl --checkpoint out/head.qtph
//   qtpnet run --config out/manifest.json

#include <qtpnet/cli.hpp>

#include <CLI11.hpp>

#include <deque>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

// Flags shared by every subcommand.
const std::vector<Flag> kCommon = {
    {"--seed", "seed", "top-level seed; every subsystem derives its own"},
    {"--output-dir", "paths.output_dir", "directory receiving all outputs"},
};

const std::vector<Flag> kQepfe = {
    {"--qubits", "qepfe.n_qubits", "register size n (N = 2^n features)"},
    {"--encoding", "qepfe.encoding", "amplitude|angle"},
    {"--tau", "qepfe.tau", "marked-set threshold in (0, 1]"},
    {"--pooling", "qepfe.pooling", "mean|max"},
    {"--lambda", "qepfe.search.lambda", "growth factor of the iteration bound"},
    {"--k-convention", "qepfe.search.k_convention", "zero-based|one-based"},
    {"--dataset", "paths.dataset", "JSONL dataset"},
    {"--embeddings", "paths.embeddings", "QTPE embedding file (hash fallback only when omitted)"},
    {"--oov", "data.oov_policy", "hash|zero|skip"},
    {"--embedding-dim", "data.embedding_dim", "dimension of hash embeddings when no file is given"},
};

const std::vector<Flag> kTraining = {
    {"--lr", "training.lr", "learning rate"},
    {"--epochs", "training.epochs", "maximum epochs"},
    {"--batch", "training.batch_size", "mini-batch size"},
};

struct Command {
    CLI::App* app;
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::string> keys; // dotted key of each flag, parallel to raw
    std::deque<std::string> raw; // stable addresses for CLI11 bindings
};

void add_flags(Command& cmd, const std::vector<Flag>& flags) {
    for (const auto& f : flags) {
        cmd.raw.emplace_back();
        cmd.keys.emplace_back(f.key);
    }
    const std::size_t base = cmd.raw.size() - flags.size();
    for (std::size_t i = 0; i < flags.size(); ++i) {
        cmd.app->add_option(flags[i].name, cmd.raw[base + i], flags[i].help);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-enhanced text features and fusion classifier"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qtpnet::kVersion);

    struct Spec {
        const char* task;
        const char* help;
        std::vector<Flag> flags;
    };
    const std::vector<Spec> specs = {
        {"grover-demo", "analytic vs simulated Grover success table",
         {{"--qubits", "demo.qubits", "register size"},
          {"--marked", "demo.marked", "comma-separated marked indices"},
          {"--iters", "demo.iters", "largest iteration count (default k_opt)"}}},
        {"validate-pm", "closed-form vs empirical success for fixed bound m",
         {{"--qubits", "pm.qubits", "register size"},
          {"--marked-count", "pm.marked_count", "number of marked states"},
          {"--m", "pm.m", "comma-separated bounds m"},
          {"--trials", "pm.trials", "seeded trials per m"},
          {"--k-convention", "qepfe.search.k_convention", "zero-based|one-based"}}},
        {"bbht-bench", "seeded runs of the adaptive search",
         {{"--qubits", "bench.qubits", "register size"},
          {"--marked-counts", "bench.marked_counts", "comma-separated marked counts"},
          {"--runs", "bench.runs", "runs per marked count"},
          {"--lambda", "qepfe.search.lambda", "growth factor"},
          {"--k-convention", "qepfe.search.k_convention", "zero-based|one-based"}}},
        {"extract-features", "write quantum feature vectors as JSONL", kQepfe},
        {"train", "train the fusion head", {}},
        {"eval", "evaluate a checkpoint", {{"--checkpoint", "paths.checkpoint", "QTPH checkpoint"}}},
        {"run", "run the task named in a config file or manifest", {}},
    };

    std::vector<Command> commands(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto& cmd = commands[i];
        cmd.app = app.add_subcommand(specs[i].task, specs[i].help);
        cmd.app->add_option("--config", cmd.config_path, "flat JSON config (dotted keys)");
        cmd.app->add_option("--set", cmd.sets, "override any key: --set qepfe.tau=0.4");
        add_flags(cmd, kCommon);
        add_flags(cmd, specs[i].flags);
        const std::string task = specs[i].task;
        if (task == "train" || task == "eval") {
            add_flags(cmd, kQepfe);
        }
        if (task == "train") {
            add_flags(cmd, kTraining);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qtpnet::kExitConfig;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto& cmd = commands[i];
        if (!cmd.app->parsed()) {
            continue;
        }
        qtpnet::Settings overrides = qtpnet::Settings::object();
        const std::string task = specs[i].task;
        if (task != "run") {
            overrides["task"] = task;
        }
        for (std::size_t f = 0; f < cmd.keys.size(); ++f) {
            if (!cmd.raw[f].empty()) {
                overrides[cmd.keys[f]] = cmd.raw[f];
            }
        }
        for (const auto& s : cmd.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                std::cerr << "config error: --set expects key=value, got '" << s << "'\n";
                return qtpnet::kExitConfig;
            }
            overrides[s.substr(0, eq)] = s.substr(eq + 1);
        }
        try {
            const auto config = qtpnet::resolve_config(cmd.config_path, overrides);
            return qtpnet::run(config, std::cout, std::cerr);
        } catch (const qtpnet::Error& e) {
            std::cerr << qtpnet::to_string(e.kind()) << ": " << e.what() << '\n';
            return qtpnet::exit_code_for(e.kind());
        }
    }
    return qtpnet::kExitConfig;
}
