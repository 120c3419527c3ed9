#pragma once

// Quantum feature extraction: encode a token vector, amplify the states
// selected by the sense predicate, and read out the Born distribution.

#include <qtpnet/adaptive_search.hpp>
#include <qtpnet/encoding.hpp>
#include <qtpnet/error.hpp>
#include <qtpnet/grover.hpp>
#include <qtpnet/statevector.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtpnet {

enum class Pooling { Mean, Max };

inline std::string_view to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "max"; }

inline Pooling parse_pooling(std::string_view name) {
    if (name == "mean") {
        return Pooling::Mean;
    }
    if (name == "max") {
        return Pooling::Max;
    }
    fail(ErrorKind::Config, "unknown pooling '" + std::string(name) + "' (expected mean|max)");
}

struct QepfeConfig {
    int n_qubits = 6;
    EncodingKind encoding = EncodingKind::Amplitude;
    double tau = 0.5;
    SearchConfig search;
    Pooling pooling = Pooling::Mean;
    // Replaces the randomized schedule with exactly this many iterations.
    std::optional<long> fixed_iterations;

    std::size_t feature_dim() const { return std::size_t{1} << n_qubits; }

    void validate() const {
        if (n_qubits < 2 || n_qubits > 12) {
            fail(ErrorKind::Config, "qepfe.n_qubits must lie in 2..12");
        }
        if (!(tau > 0.0 && tau <= 1.0)) {
            fail(ErrorKind::Config, "qepfe.tau must lie in (0, 1]");
        }
        if (fixed_iterations && *fixed_iterations < 0) {
            fail(ErrorKind::Config, "qepfe.fixed_iterations must be >= 0");
        }
        search.validate();
    }
};

struct FeatureVector {
    std::vector<double> p;
    std::size_t source_tokens = 0;
};

namespace detail {

/// A = { x : |a_x| >= tau * max |a| }, falling back to {argmax} when A is
/// empty or covers every state. argmax ties resolve to the smaller index.
inline MarkedSet threshold_marked_set(const Statevector& encoded, double tau) {
    std::vector<double> mag(encoded.dim());
    std::size_t best = 0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::abs(encoded[i]);
        if (mag[i] > mag[best]) {
            best = i;
        }
    }
    const double cut = tau * mag[best];
    std::vector<basis_index> members;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (mag[i] >= cut) {
            members.push_back(i);
        }
    }
    if (members.empty() || members.size() == mag.size()) {
        members = {best};
    }
    return MarkedSet(encoded.num_qubits(), std::move(members));
}

} // namespace detail

/// Marked states of a token: the basis states whose encoded amplitude
/// magnitude is within a factor tau of the largest.
inline MarkedSet derive_marked_set(std::span<const double> w, const QepfeConfig& config) {
    config.validate();
    return detail::threshold_marked_set(encode(w, config.n_qubits, config.encoding), config.tau);
}

/// Amplifies `marked` starting from the encoding of `w` and returns the exact
/// distribution of the final pre-measurement state.
inline FeatureVector extract_features(std::span<const double> w, const QepfeConfig& config,
                                      const MarkedSet& marked) {
    config.validate();
    Statevector state = encode(w, config.n_qubits, config.encoding);
    if (config.fixed_iterations) {
        for (long i = 0; i < *config.fixed_iterations; ++i) {
            grover_iterate(state, marked);
        }
    } else {
        state = adaptive_search(marked, config.search, &state).final_state;
    }
    return {probabilities(state), 1};
}

inline FeatureVector extract_features(std::span<const double> w, const QepfeConfig& config) {
    config.validate();
    const Statevector encoded = encode(w, config.n_qubits, config.encoding);
    return extract_features(w, config, detail::threshold_marked_set(encoded, config.tau));
}

/// Pools a list of per-token features. Both pooling modes return a
/// distribution that sums to one.
inline FeatureVector pool_features(std::span<const FeatureVector> parts, Pooling pooling) {
    if (parts.empty()) {
        fail(ErrorKind::DegenerateInput, "no token features to pool");
    }
    const std::size_t dim = parts.front().p.size();
    FeatureVector out{std::vector<double>(dim, 0.0), 0};
    for (const auto& f : parts) {
        if (f.p.size() != dim) {
            fail(ErrorKind::Shape, "token features of different dimensions");
        }
        for (std::size_t i = 0; i < dim; ++i) {
            out.p[i] = pooling == Pooling::Mean ? out.p[i] + f.p[i] : std::max(out.p[i], f.p[i]);
        }
        out.source_tokens += f.source_tokens;
    }
    if (parts.size() == 1) {
        out.p = parts.front().p;
        return out;
    }
    if (pooling == Pooling::Mean) {
        for (auto& v : out.p) {
            v /= static_cast<double>(parts.size());
        }
    } else {
        double total = 0.0;
        for (double v : out.p) {
            total += v;
        }
        for (auto& v : out.p) {
            v /= total;
        }
    }
    return out;
}

inline FeatureVector extract_sequence_features(std::span<const std::vector<double>> tokens,
                                               const QepfeConfig& config) {
    if (tokens.empty()) {
        fail(ErrorKind::DegenerateInput, "empty token list");
    }
    std::vector<FeatureVector> parts;
    parts.reserve(tokens.size());
    for (const auto& w : tokens) {
        parts.push_back(extract_features(w, config));
    }
    return pool_features(parts, config.pooling);
}

} // namespace qtpnet
