#pragma once

// Randomized amplitude amplification for an unknown number of marked items.
// The iteration bound m starts at 1 and grows by lambda after every failed
// measurement; the iteration count of each round is drawn uniformly below
// ceil(m).

#include <qtpnet/error.hpp>
#include <qtpnet/grover.hpp>
#include <qtpnet/random.hpp>
#include <qtpnet/statevector.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtpnet {

enum class KConvention {
    ZeroBased, // k uniform on {0, ..., ceil(m)-1}; matches the closed-form P_m
    OneBased,  // k uniform on {1, ..., ceil(m)}
};

inline std::string_view to_string(KConvention c) {
    return c == KConvention::ZeroBased ? "zero-based" : "one-based";
}

inline KConvention parse_k_convention(std::string_view name) {
    if (name == "zero-based" || name == "zero") {
        return KConvention::ZeroBased;
    }
    if (name == "one-based" || name == "one") {
        return KConvention::OneBased;
    }
    fail(ErrorKind::Config, "unknown k convention '" + std::string(name) + "' (expected zero-based|one-based)");
}

struct SearchConfig {
    double lambda = 6.0 / 5.0;
    std::optional<double> max_m; // defaults to sqrt(N)
    KConvention k_convention = KConvention::ZeroBased;
    std::uint64_t seed = 0;
    bool record_pd = false;

    double max_m_for(std::size_t N) const { return max_m.value_or(std::sqrt(static_cast<double>(N))); }

    void validate() const {
        if (!(lambda > 1.0 && lambda <= 2.0)) {
            fail(ErrorKind::Config, "search.lambda must lie in (1, 2]");
        }
        if (max_m && !(*max_m >= 1.0)) {
            fail(ErrorKind::Config, "search.max_m must be >= 1");
        }
    }
};

struct SearchRound {
    double m;
    long k;
    basis_index measured;
    bool success;
};

struct SearchOutcome {
    std::optional<basis_index> found;
    long oracle_calls = 0;  // sum of k over all rounds
    long verifications = 0; // classical f(x) checks, one per round
    std::vector<SearchRound> rounds;
    std::vector<double> pd_trace;
    Statevector final_state; // pre-measurement state of the last round
};

/// Number of admissible k values for bound m.
inline long k_range(double m) { return static_cast<long>(std::ceil(m)); }

inline long draw_iterations(double m, KConvention convention, Rng& rng) {
    const auto k = static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(k_range(m))));
    return convention == KConvention::ZeroBased ? k : k + 1;
}

/// Runs the randomized schedule from `initial` (the uniform state when absent).
inline SearchOutcome adaptive_search(const MarkedSet& marked, const SearchConfig& config,
                                     const Statevector* initial = nullptr) {
    config.validate();
    const int n = marked.num_qubits();
    if (initial != nullptr && initial->num_qubits() != n) {
        fail(ErrorKind::Shape, "initial state does not match the marked set's register");
    }
    const Statevector start = initial != nullptr ? *initial : uniform_superposition(n);
    const double max_m = config.max_m_for(marked.universe());

    Rng rng(config.seed);
    SearchOutcome out{.found = std::nullopt, .rounds = {}, .pd_trace = {}, .final_state = start};
    std::vector<double>* trace = config.record_pd ? &out.pd_trace : nullptr;

    double m = 1.0;
    while (m <= max_m) {
        const long k = draw_iterations(m, config.k_convention, rng);
        Statevector state = start;
        for (long i = 0; i < k; ++i) {
            grover_iterate(state, marked, trace);
        }
        out.oracle_calls += k;
        const basis_index x = measure(state, rng);
        ++out.verifications;
        const bool hit = marked.contains(x);
        out.rounds.push_back({m, k, x, hit});
        out.final_state = std::move(state);
        if (hit) {
            out.found = x;
            return out;
        }
        m *= config.lambda;
    }
    return out;
}

/// Closed form of the mean of sin^2((2k+1) theta_a) over k = 0..m-1:
/// 1/2 - sin(4 m theta_a) / (4 m sin(2 theta_a)).
inline double p_m(int n_qubits, std::size_t a, long m) {
    if (m < 1) {
        fail(ErrorKind::Config, "m must be >= 1");
    }
    const double theta = grover_angles(n_qubits, a).theta_a;
    const double s2 = std::sin(2.0 * theta);
    if (s2 < 1e-12) {
        fail(ErrorKind::DegenerateInput, "sin(2 theta_a) vanishes; P_m is undefined");
    }
    const double md = static_cast<double>(m);
    return 0.5 - std::sin(4.0 * md * theta) / (4.0 * md * s2);
}

/// Expected marked-measurement probability of one round with bound m under
/// either convention, summed term by term.
inline double round_success(int n_qubits, std::size_t a, double m, KConvention convention) {
    const long range = k_range(m);
    const long first = convention == KConvention::ZeroBased ? 0 : 1;
    double total = 0.0;
    for (long k = first; k < first + range; ++k) {
        total += analytic_success(n_qubits, a, k);
    }
    return total / static_cast<double>(range);
}

/// Probability that the whole schedule ends with a marked measurement,
/// starting from the uniform state.
inline double schedule_success_probability(int n_qubits, std::size_t a, const SearchConfig& config) {
    config.validate();
    const double max_m = config.max_m_for(std::size_t{1} << n_qubits);
    double miss = 1.0;
    for (double m = 1.0; m <= max_m; m *= config.lambda) {
        miss *= 1.0 - round_success(n_qubits, a, m, config.k_convention);
    }
    return 1.0 - miss;
}

/// Envelope on mean oracle calls used by the benchmarks: 8 sqrt(N/a).
inline double expected_calls_bound(int n_qubits, std::size_t a) {
    const double N = std::ldexp(1.0, n_qubits);
    if (a < 1 || static_cast<double>(a) >= N) {
        fail(ErrorKind::Config, "marked count must satisfy 1 <= a < N");
    }
    return 8.0 * std::sqrt(N / static_cast<double>(a));
}

// ---- seeded Monte-Carlo harness ------------------------------------------

/// A reproducible marked set of size a: the first a indices of a seeded
/// Fisher-Yates shuffle of {0..N-1}.
inline MarkedSet random_marked_set(int n_qubits, std::size_t a, std::uint64_t seed) {
    const std::size_t N = std::size_t{1} << n_qubits;
    if (a < 1 || a >= N) {
        fail(ErrorKind::Config, "marked count must satisfy 1 <= a < N");
    }
    std::vector<basis_index> idx(N);
    for (std::size_t i = 0; i < N; ++i) {
        idx[i] = i;
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < a; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, N - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(a);
    return MarkedSet(n_qubits, std::move(idx));
}

/// Seed of run `index` in a benchmark with base seed `base`.
inline std::uint64_t run_seed(std::uint64_t base, std::uint64_t index) { return mix64(base + mix64(index)); }

struct PmEstimate {
    std::size_t N;
    std::size_t a;
    long m;
    double analytic;  // closed form (ZeroBased) or term-by-term average
    double empirical; // fraction of trials whose measurement landed in A
    double mean_calls;
    long trials;
};

/// Fixes the bound m, draws k per convention, simulates G^k|In> and
/// measures; repeated `trials` times with seeded generators.
inline PmEstimate estimate_p_m(const MarkedSet& marked, long m, long trials, std::uint64_t seed,
                               KConvention convention = KConvention::ZeroBased) {
    if (m < 1 || trials < 1) {
        fail(ErrorKind::Config, "m and trials must be >= 1");
    }
    const int n = marked.num_qubits();
    const long first = convention == KConvention::ZeroBased ? 0 : 1;

    // CDFs of G^k|In> for every admissible k, by simulation.
    std::vector<std::vector<double>> cdfs;
    Statevector state = uniform_superposition(n);
    for (long k = 0; k < first + m; ++k) {
        if (k >= first) {
            cdfs.push_back(cumulative(probabilities(state)));
        }
        grover_iterate(state, marked);
    }

    Rng rng(seed);
    long hits = 0;
    long calls = 0;
    for (long t = 0; t < trials; ++t) {
        const long k = draw_iterations(static_cast<double>(m), convention, rng);
        calls += k;
        if (marked.contains(draw_from_cdf(cdfs[static_cast<std::size_t>(k - first)], rng))) {
            ++hits;
        }
    }
    const std::size_t a = marked.size();
    const double analytic = convention == KConvention::ZeroBased
                                ? p_m(n, a, m)
                                : round_success(n, a, static_cast<double>(m), convention);
    return {marked.universe(),
            a,
            m,
            analytic,
            static_cast<double>(hits) / static_cast<double>(trials),
            static_cast<double>(calls) / static_cast<double>(trials),
            trials};
}

struct BenchSummary {
    std::size_t N;
    std::size_t a;
    double max_m;
    double analytic_success; // schedule_success_probability
    double success_rate;
    double mean_calls;
    long runs;
    long false_positives; // found but not in A; must be zero
};

/// `runs` independent adaptive searches on one random marked set, aggregated
/// in run order.
inline BenchSummary run_bbht_bench(int n_qubits, std::size_t a, long runs, std::uint64_t seed,
                                   SearchConfig config = {}) {
    if (runs < 1) {
        fail(ErrorKind::Config, "runs must be >= 1");
    }
    const MarkedSet marked = random_marked_set(n_qubits, a, child_seed(seed, "marked"));
    long successes = 0;
    long false_positives = 0;
    long calls = 0;
    for (long r = 0; r < runs; ++r) {
        config.seed = run_seed(seed, static_cast<std::uint64_t>(r));
        const SearchOutcome out = adaptive_search(marked, config);
        calls += out.oracle_calls;
        if (out.found) {
            ++successes;
            if (!marked.contains(*out.found)) {
                ++false_positives;
            }
        }
    }
    return {marked.universe(),
            a,
            config.max_m_for(marked.universe()),
            schedule_success_probability(n_qubits, a, config),
            static_cast<double>(successes) / static_cast<double>(runs),
            static_cast<double>(calls) / static_cast<double>(runs),
            runs,
            false_positives};
}

} // namespace qtpnet
