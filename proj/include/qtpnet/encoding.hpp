#pragma once

// Loading real word vectors into a register.

#include <qtpnet/error.hpp>
#include <qtpnet/statevector.hpp>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtpnet {

enum class EncodingKind { Amplitude, Angle };

inline std::string_view to_string(EncodingKind kind) {
    return kind == EncodingKind::Amplitude ? "amplitude" : "angle";
}

inline EncodingKind parse_encoding(std::string_view name) {
    if (name == "amplitude") {
        return EncodingKind::Amplitude;
    }
    if (name == "angle") {
        return EncodingKind::Angle;
    }
    fail(ErrorKind::Config, "unknown encoding '" + std::string(name) + "' (expected amplitude|angle)");
}

inline int qubits_required(std::size_t length) {
    int n = 0;
    while ((std::size_t{1} << n) < length) {
        ++n;
    }
    return n;
}

/// Amplitudes w / ||w||, zero-padded to 2^n.
inline Statevector amplitude_encode(std::span<const double> w, int n_qubits) {
    Statevector state = Statevector::zero(n_qubits);
    if (w.empty() || w.size() > state.dim()) {
        fail(ErrorKind::Capacity, "vector of length " + std::to_string(w.size()) + " needs " +
                                      std::to_string(qubits_required(w.size())) + " qubits, register has " +
                                      std::to_string(n_qubits));
    }
    double norm2 = 0.0;
    for (double v : w) {
        norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    if (!(norm > 1e-12)) {
        fail(ErrorKind::DegenerateInput, "cannot amplitude-encode a zero vector");
    }
    state[0] = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        state[i] = w[i] / norm;
    }
    return state;
}

/// Product state RY(w_0)|0> (x) ... (x) RY(w_{n-1})|0>; one angle per qubit.
inline Statevector angle_encode(std::span<const double> w, int n_qubits) {
    if (w.size() != static_cast<std::size_t>(n_qubits)) {
        fail(ErrorKind::Shape, "angle encoding needs one angle per qubit: got " + std::to_string(w.size()) +
                                   " angles for " + std::to_string(n_qubits) + " qubits");
    }
    Statevector state = Statevector::zero(n_qubits);
    for (int q = 0; q < n_qubits; ++q) {
        state.apply(GateSpec::ry(q, w[static_cast<std::size_t>(q)]));
    }
    return state;
}

/// Stride-fold into `width` slots: out[j] = sum_k v[j + k*width]. Shorter
/// inputs are zero-padded.
inline std::vector<double> fold_to_width(std::span<const double> v, std::size_t width) {
    std::vector<double> out(width, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i % width] += v[i];
    }
    return out;
}

/// Maps an arbitrary-dimension embedding onto the 2^n amplitude slots.
inline std::vector<double> project_to_register(std::span<const double> embedding, int n_qubits) {
    return fold_to_width(embedding, std::size_t{1} << n_qubits);
}

/// Projects the embedding to the shape the encoding expects and encodes it.
inline Statevector encode(std::span<const double> embedding, int n_qubits, EncodingKind kind) {
    if (kind == EncodingKind::Amplitude) {
        const auto projected = project_to_register(embedding, n_qubits);
        return amplitude_encode(projected, n_qubits);
    }
    const auto angles = fold_to_width(embedding, static_cast<std::size_t>(n_qubits));
    return angle_encode(angles, n_qubits);
}

} // namespace qtpnet
