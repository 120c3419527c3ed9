#pragma once

// Dense statevector simulator.
//
// Basis index x uses big-endian qubit order: qubit 0 is the most significant
// bit of x, qubit n-1 the least significant.

#include <qtpnet/error.hpp>
#include <qtpnet/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qtpnet {

using amplitude = std::complex<double>;
using basis_index = std::uint64_t;

inline constexpr int kMaxQubits = 20;

enum class GateKind { X, H, RY, MCX, MCZ };

/// A gate from the simulator's gate set. Controls apply to every kind; a
/// controlled gate acts iff all control qubits are 1.
struct GateSpec {
    GateKind kind = GateKind::X;
    std::vector<int> controls;
    int target = 0;
    double angle = 0.0; // RY only, radians

    static GateSpec x(int target) { return {GateKind::X, {}, target, 0.0}; }
    static GateSpec h(int target) { return {GateKind::H, {}, target, 0.0}; }
    static GateSpec ry(int target, double angle) { return {GateKind::RY, {}, target, angle}; }
    static GateSpec mcx(std::vector<int> controls, int target) {
        return {GateKind::MCX, std::move(controls), target, 0.0};
    }
    static GateSpec mcz(std::vector<int> controls, int target) {
        return {GateKind::MCZ, std::move(controls), target, 0.0};
    }
};

using Matrix2 = std::array<amplitude, 4>; // row-major

/// The 2x2 matrix the gate applies to its target when all controls are set.
inline Matrix2 target_matrix(const GateSpec& gate) {
    const double r = 1.0 / std::sqrt(2.0);
    switch (gate.kind) {
    case GateKind::X:
    case GateKind::MCX:
        return {0.0, 1.0, 1.0, 0.0};
    case GateKind::H:
        return {r, r, r, -r};
    case GateKind::RY: {
        const double c = std::cos(gate.angle / 2.0);
        const double s = std::sin(gate.angle / 2.0);
        return {c, -s, s, c};
    }
    case GateKind::MCZ:
        return {1.0, 0.0, 0.0, -1.0};
    }
    return {1.0, 0.0, 0.0, 1.0};
}

class Statevector {
public:
    /// |0...0> on n qubits.
    static Statevector zero(int n_qubits) {
        check_qubit_count(n_qubits);
        Statevector s;
        s.n_qubits_ = n_qubits;
        s.amps_.assign(std::size_t{1} << n_qubits, amplitude{0.0, 0.0});
        s.amps_[0] = 1.0;
        return s;
    }

    /// Computational basis state |index>.
    static Statevector basis(int n_qubits, basis_index index) {
        Statevector s = zero(n_qubits);
        if (index >= s.dim()) {
            fail(ErrorKind::Validation, "basis index " + std::to_string(index) + " out of range");
        }
        s.amps_[0] = 0.0;
        s.amps_[index] = 1.0;
        return s;
    }

    /// Takes ownership of raw amplitudes. The caller is responsible for
    /// normalization; only the length is checked.
    static Statevector from_amplitudes(int n_qubits, std::vector<amplitude> amps) {
        check_qubit_count(n_qubits);
        if (amps.size() != (std::size_t{1} << n_qubits)) {
            fail(ErrorKind::Shape, "expected " + std::to_string(std::size_t{1} << n_qubits) +
                                       " amplitudes, got " + std::to_string(amps.size()));
        }
        Statevector s;
        s.n_qubits_ = n_qubits;
        s.amps_ = std::move(amps);
        return s;
    }

    int num_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return amps_.size(); }

    std::span<const amplitude> amplitudes() const noexcept { return amps_; }
    std::span<amplitude> amplitudes() noexcept { return amps_; }

    const amplitude& operator[](std::size_t i) const { return amps_[i]; }
    amplitude& operator[](std::size_t i) { return amps_[i]; }

    double norm_squared() const {
        double total = 0.0;
        for (const auto& a : amps_) {
            total += std::norm(a);
        }
        return total;
    }

    /// Bit mask of a qubit inside a basis index.
    basis_index qubit_mask(int qubit) const noexcept {
        return basis_index{1} << (n_qubits_ - 1 - qubit);
    }

    void apply(const GateSpec& gate);

    friend bool operator==(const Statevector&, const Statevector&) = default;

private:
    static void check_qubit_count(int n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            fail(ErrorKind::Config, "qubit count " + std::to_string(n_qubits) +
                                        " outside supported range 1.." + std::to_string(kMaxQubits));
        }
    }

    int n_qubits_ = 0;
    std::vector<amplitude> amps_;
};

inline Statevector new_zero_state(int n_qubits) { return Statevector::zero(n_qubits); }

/// Throws Validation if the gate's qubits are out of range or overlap.
inline void validate_gate(const GateSpec& gate, int n_qubits) {
    auto in_range = [n_qubits](int q) { return q >= 0 && q < n_qubits; };
    if (!in_range(gate.target)) {
        fail(ErrorKind::Validation, "gate target " + std::to_string(gate.target) + " out of range for " +
                                        std::to_string(n_qubits) + " qubits");
    }
    std::vector<int> seen{gate.target};
    for (int c : gate.controls) {
        if (!in_range(c)) {
            fail(ErrorKind::Validation, "control qubit " + std::to_string(c) + " out of range");
        }
        if (std::find(seen.begin(), seen.end(), c) != seen.end()) {
            fail(ErrorKind::Validation, "qubit " + std::to_string(c) + " used twice in one gate");
        }
        seen.push_back(c);
    }
}

inline void Statevector::apply(const GateSpec& gate) {
    validate_gate(gate, n_qubits_);
    basis_index control_mask = 0;
    for (int c : gate.controls) {
        control_mask |= qubit_mask(c);
    }
    const basis_index tmask = qubit_mask(gate.target);
    const std::size_t n = amps_.size();

    switch (gate.kind) {
    case GateKind::MCZ:
        // Diagonal: phase -1 where controls and target are all 1.
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & (control_mask | tmask)) == (control_mask | tmask)) {
                amps_[i] = -amps_[i];
            }
        }
        return;
    case GateKind::X:
    case GateKind::MCX:
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & tmask) == 0 && (i & control_mask) == control_mask) {
                std::swap(amps_[i], amps_[i | tmask]);
            }
        }
        return;
    case GateKind::H:
    case GateKind::RY: {
        const Matrix2 u = target_matrix(gate);
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & tmask) == 0 && (i & control_mask) == control_mask) {
                const amplitude a0 = amps_[i];
                const amplitude a1 = amps_[i | tmask];
                amps_[i] = u[0] * a0 + u[1] * a1;
                amps_[i | tmask] = u[2] * a0 + u[3] * a1;
            }
        }
        return;
    }
    }
}

inline Statevector apply_gate(Statevector state, const GateSpec& gate) {
    state.apply(gate);
    return state;
}

/// Born probabilities |amplitude(x)|^2.
inline std::vector<double> probabilities(const Statevector& state) {
    std::vector<double> p(state.dim());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::norm(state[i]);
    }
    return p;
}

/// Draws one index from a discrete distribution by inverse CDF.
/// `cdf` must be non-decreasing with a positive last entry.
inline basis_index draw_from_cdf(std::span<const double> cdf, Rng& rng) {
    const double u = uniform_unit(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) {
        return cdf.size() - 1;
    }
    return static_cast<basis_index>(it - cdf.begin());
}

inline std::vector<double> cumulative(std::span<const double> weights) {
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf[i] = acc;
    }
    return cdf;
}

/// Measures one computational-basis outcome without collapsing `state`.
inline basis_index measure(const Statevector& state, Rng& rng) {
    const auto p = probabilities(state);
    return draw_from_cdf(cumulative(p), rng);
}

/// `shots` independent measurements from a freshly seeded generator.
inline std::vector<basis_index> sample(const Statevector& state, int shots, std::uint64_t seed) {
    if (shots < 1) {
        fail(ErrorKind::Config, "shots must be >= 1");
    }
    const auto p = probabilities(state);
    const auto cdf = cumulative(p);
    Rng rng(seed);
    std::vector<basis_index> out(static_cast<std::size_t>(shots));
    for (auto& x : out) {
        x = draw_from_cdf(cdf, rng);
    }
    return out;
}

/// <a|b>
inline amplitude inner_product(const Statevector& a, const Statevector& b) {
    if (a.dim() != b.dim()) {
        fail(ErrorKind::Shape, "inner product of states with different dimensions");
    }
    amplitude acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.dim(); ++i) {
        acc += std::conj(a[i]) * b[i];
    }
    return acc;
}

} // namespace qtpnet
