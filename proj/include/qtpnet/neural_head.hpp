#pragma once

// Linear softmax head over the fused vector z = p (+) h, cross-entropy loss,
// and the rectified Adam optimizer.

#include <qtpnet/error.hpp>
#include <qtpnet/random.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtpnet {

/// z = p (+) h
inline std::vector<double> fuse(std::span<const double> p, std::span<const double> h) {
    std::vector<double> z;
    z.reserve(p.size() + h.size());
    z.insert(z.end(), p.begin(), p.end());
    z.insert(z.end(), h.begin(), h.end());
    return z;
}

/// logits = W z + b with W stored row-major, classes x input_dim.
struct LinearHead {
    std::size_t classes = 0;
    std::size_t input_dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    static LinearHead zeros(std::size_t classes, std::size_t input_dim) {
        return {classes, input_dim, std::vector<double>(classes * input_dim, 0.0), std::vector<double>(classes, 0.0)};
    }

    /// Weights uniform in [-scale, scale), zero bias.
    static LinearHead random(std::size_t classes, std::size_t input_dim, std::uint64_t seed, double scale) {
        LinearHead head = zeros(classes, input_dim);
        Rng rng(seed);
        for (auto& w : head.weights) {
            w = scale * (2.0 * uniform_unit(rng) - 1.0);
        }
        return head;
    }

    double& weight(std::size_t c, std::size_t j) { return weights[c * input_dim + j]; }
    double weight(std::size_t c, std::size_t j) const { return weights[c * input_dim + j]; }

    friend bool operator==(const LinearHead&, const LinearHead&) = default;
};

/// Softmax with max subtraction.
inline std::vector<double> softmax(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

inline double log_sum_exp(std::span<const double> v) {
    const double peak = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) {
        total += std::exp(x - peak);
    }
    return peak + std::log(total);
}

struct Prediction {
    std::vector<double> logits;
    std::vector<double> probs;

    int label() const {
        return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
};

inline Prediction forward(const LinearHead& head, std::span<const double> z) {
    if (z.size() != head.input_dim) {
        fail(ErrorKind::Shape, "head expects input of dimension " + std::to_string(head.input_dim) + ", got " +
                                   std::to_string(z.size()));
    }
    Prediction out;
    out.logits.resize(head.classes);
    for (std::size_t c = 0; c < head.classes; ++c) {
        double acc = head.bias[c];
        const double* row = head.weights.data() + c * head.input_dim;
        for (std::size_t j = 0; j < head.input_dim; ++j) {
            acc += row[j] * z[j];
        }
        out.logits[c] = acc;
    }
    out.probs = softmax(out.logits);
    return out;
}

struct Sample {
    std::vector<double> z;
    int label = 0;
};

struct LossAndGrad {
    double loss = 0.0;
    LinearHead grad; // same shapes as the head
};

/// Mean cross-entropy of the selected samples and its exact gradient.
inline LossAndGrad loss_and_grad(const LinearHead& head, std::span<const Sample> samples,
                                 std::span<const std::size_t> batch) {
    if (batch.empty()) {
        fail(ErrorKind::DegenerateInput, "empty batch");
    }
    LossAndGrad out{0.0, LinearHead::zeros(head.classes, head.input_dim)};
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t idx : batch) {
        const Sample& s = samples[idx];
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= head.classes) {
            fail(ErrorKind::Validation, "label " + std::to_string(s.label) + " outside the head's classes");
        }
        const Prediction pred = forward(head, s.z);
        out.loss += (log_sum_exp(pred.logits) - pred.logits[static_cast<std::size_t>(s.label)]) * scale;
        // dL/dlogit_c = probs_c - [c == label]
        for (std::size_t c = 0; c < head.classes; ++c) {
            const double delta =
                (pred.probs[c] - (static_cast<std::size_t>(s.label) == c ? 1.0 : 0.0)) * scale;
            out.grad.bias[c] += delta;
            double* row = out.grad.weights.data() + c * head.input_dim;
            for (std::size_t j = 0; j < head.input_dim; ++j) {
                row[j] += delta * s.z[j];
            }
        }
    }
    return out;
}

inline LossAndGrad loss_and_grad(const LinearHead& head, std::span<const Sample> batch) {
    std::vector<std::size_t> all(batch.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return loss_and_grad(head, batch, all);
}

// ---- RAdam ------------------------------------------------------------------

struct RAdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// rho_inf = 2 / (1 - beta2) - 1
inline double radam_rho_infinity(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }

/// rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t)
inline double radam_rho(double beta2, long t) {
    const double b2t = std::pow(beta2, static_cast<double>(t));
    return radam_rho_infinity(beta2) - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

/// A named parameter block updated in place.
struct ParamBlock {
    std::string_view name;
    std::span<double> values;
    std::span<const double> grads;
};

class RAdam {
public:
    explicit RAdam(RAdamConfig config = {}) : config_(config) {}

    long step_count() const noexcept { return t_; }
    const RAdamConfig& config() const noexcept { return config_; }

    /// One update of every block. Moments are allocated on the first call
    /// and must keep their shapes afterwards.
    void step(std::span<const ParamBlock> blocks, double lr) {
        if (!(lr > 0.0)) {
            fail(ErrorKind::Config, "learning rate must be > 0");
        }
        for (const auto& b : blocks) {
            if (b.values.size() != b.grads.size()) {
                fail(ErrorKind::Shape, "parameter block '" + std::string(b.name) + "' has mismatched gradient");
            }
            for (double g : b.grads) {
                if (!std::isfinite(g)) {
                    fail(ErrorKind::Numeric, "non-finite gradient in parameter block '" + std::string(b.name) + "'");
                }
            }
        }
        if (first_.empty()) {
            for (const auto& b : blocks) {
                first_.emplace_back(b.values.size(), 0.0);
                second_.emplace_back(b.values.size(), 0.0);
            }
        }
        if (first_.size() != blocks.size()) {
            fail(ErrorKind::Shape, "optimizer called with a different number of parameter blocks");
        }

        ++t_;
        const double b1 = config_.beta1;
        const double b2 = config_.beta2;
        const double t = static_cast<double>(t_);
        const double bias1 = 1.0 - std::pow(b1, t);
        const double bias2 = 1.0 - std::pow(b2, t);
        const double rho_inf = radam_rho_infinity(b2);
        const double rho_t = radam_rho(b2, t_);
        const bool rectify = rho_t > 4.0;
        const double r = rectify ? std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf /
                                             ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                                 : 0.0;

        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto& b = blocks[bi];
            auto& m = first_[bi];
            auto& v = second_[bi];
            if (m.size() != b.values.size()) {
                fail(ErrorKind::Shape, "parameter block '" + std::string(b.name) + "' changed shape");
            }
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double g = b.grads[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                const double m_hat = m[i] / bias1;
                if (rectify) {
                    const double v_hat = std::sqrt(v[i] / bias2);
                    b.values[i] -= lr * r * m_hat / (v_hat + config_.epsilon);
                } else {
                    b.values[i] -= lr * m_hat;
                }
            }
        }
    }

    /// Convenience overload for a linear head.
    void step(LinearHead& head, const LinearHead& grad, double lr) {
        const ParamBlock blocks[] = {{"weights", head.weights, grad.weights}, {"bias", head.bias, grad.bias}};
        step(blocks, lr);
    }

private:
    RAdamConfig config_;
    long t_ = 0;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

// ---- checkpoint -------------------------------------------------------------
//
// "QTPH" | u32 version | u32 C | u32 N | u32 d | W (C x (N+d), row-major) | b (C)
// All integers little-endian; weights and bias as little-endian f64.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    LinearHead head;
    std::uint32_t feature_dim = 0;   // N
    std::uint32_t embedding_dim = 0; // d
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_le(std::istream& in, int bytes) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), bytes)) {
        fail(ErrorKind::Data, "truncated checkpoint");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

} // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const auto& h = ckpt.head;
    if (h.input_dim != std::size_t{ckpt.feature_dim} + ckpt.embedding_dim) {
        fail(ErrorKind::Shape, "checkpoint dimensions disagree with the head");
    }
    out.write("QTPH", 4);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(h.classes));
    detail::put_u32(out, ckpt.feature_dim);
    detail::put_u32(out, ckpt.embedding_dim);
    for (double w : h.weights) {
        detail::put_f64(out, w);
    }
    for (double b : h.bias) {
        detail::put_f64(out, b);
    }
}

inline Checkpoint read_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "QTPH", 4) != 0) {
        fail(ErrorKind::Data, "not a checkpoint (bad magic)");
    }
    const auto version = detail::get_le(in, 4);
    if (version != kCheckpointVersion) {
        fail(ErrorKind::Data, "unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto classes = detail::get_le(in, 4);
    ckpt.feature_dim = static_cast<std::uint32_t>(detail::get_le(in, 4));
    ckpt.embedding_dim = static_cast<std::uint32_t>(detail::get_le(in, 4));
    ckpt.head = LinearHead::zeros(classes, std::size_t{ckpt.feature_dim} + ckpt.embedding_dim);
    for (auto& w : ckpt.head.weights) {
        w = std::bit_cast<double>(detail::get_le(in, 8));
    }
    for (auto& b : ckpt.head.bias) {
        b = std::bit_cast<double>(detail::get_le(in, 8));
    }
    return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Data, "cannot write checkpoint '" + path + "'");
    }
    write_checkpoint(out, ckpt);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Data, "cannot open checkpoint '" + path + "'");
    }
    return read_checkpoint(in);
}

} // namespace qtpnet
