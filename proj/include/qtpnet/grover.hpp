#pragma once

// Amplitude-amplification operators: phase oracle, diffusion about the
// uniform state, and the phase-detection (PD) coupling to an ancilla.

#include <qtpnet/error.hpp>
#include <qtpnet/statevector.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace qtpnet {

/// The marked subset A of basis states, with O(1) membership.
class MarkedSet {
public:
    MarkedSet(int n_qubits, std::vector<basis_index> members)
        : n_qubits_(n_qubits), members_(std::move(members)) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            fail(ErrorKind::Config, "marked set qubit count out of range");
        }
        const std::size_t N = std::size_t{1} << n_qubits;
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
        if (members_.empty()) {
            fail(ErrorKind::Validation, "marked set must not be empty");
        }
        if (members_.back() >= N) {
            fail(ErrorKind::Validation, "marked index " + std::to_string(members_.back()) + " out of range");
        }
        if (members_.size() == N) {
            fail(ErrorKind::Validation, "marked set must leave at least one unmarked state");
        }
        flags_.assign(N, false);
        for (auto x : members_) {
            flags_[x] = true;
        }
    }

    static MarkedSet from_predicate(int n_qubits, const std::function<bool(basis_index)>& f) {
        std::vector<basis_index> members;
        const basis_index N = basis_index{1} << n_qubits;
        for (basis_index x = 0; x < N; ++x) {
            if (f(x)) {
                members.push_back(x);
            }
        }
        return MarkedSet(n_qubits, std::move(members));
    }

    int num_qubits() const noexcept { return n_qubits_; }
    std::size_t size() const noexcept { return members_.size(); }
    std::size_t universe() const noexcept { return flags_.size(); }
    const std::vector<basis_index>& members() const noexcept { return members_; }

    /// f(x)
    bool contains(basis_index x) const { return x < flags_.size() && flags_[x]; }

    /// Total probability the state assigns to A.
    double mass(const Statevector& state) const {
        double total = 0.0;
        for (auto x : members_) {
            total += std::norm(state[x]);
        }
        return total;
    }

private:
    int n_qubits_;
    std::vector<basis_index> members_;
    std::vector<bool> flags_;
};

struct GroverAngles {
    double theta_a; // arcsin sqrt(a/N)
    long k_opt;     // floor(pi/4 * sqrt(N/a))
};

inline GroverAngles grover_angles(int n_qubits, std::size_t a) {
    const double N = std::ldexp(1.0, n_qubits);
    if (a < 1 || static_cast<double>(a) >= N) {
        fail(ErrorKind::Config, "marked count must satisfy 1 <= a < N");
    }
    const double ratio = static_cast<double>(a) / N;
    return {std::asin(std::sqrt(ratio)),
            static_cast<long>(std::floor(std::numbers::pi / 4.0 * std::sqrt(1.0 / ratio)))};
}

/// Or|x> = (-1)^f(x) |x>.
inline void apply_oracle(Statevector& state, const MarkedSet& marked) {
    if (marked.num_qubits() != state.num_qubits()) {
        fail(ErrorKind::Shape, "oracle on " + std::to_string(marked.num_qubits()) + " qubits applied to a " +
                                   std::to_string(state.num_qubits()) + "-qubit state");
    }
    for (auto x : marked.members()) {
        state[x] = -state[x];
    }
}

/// |In> = H^n |0...0>.
inline Statevector uniform_superposition(int n_qubits) {
    Statevector state = Statevector::zero(n_qubits);
    const double a = 1.0 / std::sqrt(static_cast<double>(state.dim()));
    for (auto& amp : state.amplitudes()) {
        amp = a;
    }
    return state;
}

/// D = 2|In><In| - I, i.e. inversion about the mean amplitude.
inline void apply_diffusion(Statevector& state) {
    amplitude sum{0.0, 0.0};
    for (const auto& amp : state.amplitudes()) {
        sum += amp;
    }
    const amplitude twice_mean = 2.0 * sum / static_cast<double>(state.dim());
    for (auto& amp : state.amplitudes()) {
        amp = twice_mean - amp;
    }
}

/// |<s|psi>|^2 with |s> the uniform state on the whole register.
inline double uniform_overlap_probability(const Statevector& state) {
    amplitude sum{0.0, 0.0};
    for (const auto& amp : state.amplitudes()) {
        sum += amp;
    }
    return std::norm(sum) / static_cast<double>(state.dim());
}

namespace detail {

/// Full basis index from an ancilla bit value and data-register index,
/// removing the ancilla's bit position from the big-endian layout.
inline basis_index with_ancilla(basis_index data, basis_index ancilla_mask, bool bit) {
    const basis_index low = data & (ancilla_mask - 1);
    const basis_index high = (data & ~(ancilla_mask - 1)) << 1;
    return high | low | (bit ? ancilla_mask : 0);
}

} // namespace detail

/// PD = (I - |s><s|) (x) I + |s><s| (x) X on the full register, with `ancilla`
/// as the X target and the remaining qubits as the data register. Defined on
/// every state; returns nothing.
inline void apply_phase_detection_unitary(Statevector& state, int ancilla) {
    if (state.num_qubits() < 2 || ancilla < 0 || ancilla >= state.num_qubits()) {
        fail(ErrorKind::Validation, "phase detection needs an ancilla inside a register of >= 2 qubits");
    }
    const basis_index amask = state.qubit_mask(ancilla);
    const std::size_t data_dim = state.dim() / 2;
    amplitude sum0{0.0, 0.0};
    amplitude sum1{0.0, 0.0};
    for (basis_index y = 0; y < data_dim; ++y) {
        sum0 += state[detail::with_ancilla(y, amask, false)];
        sum1 += state[detail::with_ancilla(y, amask, true)];
    }
    // P psi_b = <s|psi_b> |s>, and <s|psi_b>|s>_y = sum_b / data_dim.
    const amplitude proj0 = sum0 / static_cast<double>(data_dim);
    const amplitude proj1 = sum1 / static_cast<double>(data_dim);
    for (basis_index y = 0; y < data_dim; ++y) {
        amplitude& a0 = state[detail::with_ancilla(y, amask, false)];
        amplitude& a1 = state[detail::with_ancilla(y, amask, true)];
        const amplitude new0 = a0 - proj0 + proj1;
        const amplitude new1 = a1 - proj1 + proj0;
        a0 = new0;
        a1 = new1;
    }
}

/// Applies PD to a state whose ancilla is |0> and returns the probability
/// that the ancilla was flipped, |<s|psi_data>|^2. No measurement is made.
inline double apply_phase_detection(Statevector& state, int ancilla) {
    if (ancilla < 0 || ancilla >= state.num_qubits()) {
        fail(ErrorKind::Validation, "ancilla index out of range");
    }
    const basis_index amask = state.qubit_mask(ancilla);
    double excited = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if (i & amask) {
            excited += std::norm(state[i]);
        }
    }
    if (excited > 1e-12) {
        fail(ErrorKind::Precondition, "phase detection requires the ancilla in |0>");
    }
    apply_phase_detection_unitary(state, ancilla);
    double flipped = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if (i & amask) {
            flipped += std::norm(state[i]);
        }
    }
    return flipped;
}

/// Gate-level PD: H and X on the data qubits map |s> to |1...1>, an MCX
/// flips the ancilla, and the basis change is undone.
inline std::vector<GateSpec> phase_detection_circuit(int n_qubits, int ancilla) {
    std::vector<int> data;
    for (int q = 0; q < n_qubits; ++q) {
        if (q != ancilla) {
            data.push_back(q);
        }
    }
    std::vector<GateSpec> gates;
    for (int q : data) {
        gates.push_back(GateSpec::h(q));
    }
    for (int q : data) {
        gates.push_back(GateSpec::x(q));
    }
    gates.push_back(GateSpec::mcx(data, ancilla));
    for (int q : data) {
        gates.push_back(GateSpec::x(q));
    }
    for (int q : data) {
        gates.push_back(GateSpec::h(q));
    }
    return gates;
}

/// One oracle call followed by diffusion. When `pd_trace` is given, the PD
/// flip probability of the post-oracle state is appended to it; the data
/// register itself is left as if PD were not applied.
inline void grover_iterate(Statevector& state, const MarkedSet& marked, std::vector<double>* pd_trace = nullptr) {
    apply_oracle(state, marked);
    if (pd_trace != nullptr) {
        pd_trace->push_back(uniform_overlap_probability(state));
    }
    apply_diffusion(state);
}

/// sin^2((2k+1) theta_a)
inline double analytic_success(int n_qubits, std::size_t a, long k) {
    if (k < 0) {
        fail(ErrorKind::Config, "iteration count must be >= 0");
    }
    const double theta = grover_angles(n_qubits, a).theta_a;
    const double s = std::sin((2.0 * static_cast<double>(k) + 1.0) * theta);
    return s * s;
}

} // namespace qtpnet
