#pragma once

// Training and evaluation of the fusion classifier. The feature branches
// (quantum probabilities and the embedding store) are frozen, so fused
// vectors are computed once and reused by every epoch.

#include <qtpnet/error.hpp>
#include <qtpnet/metrics.hpp>
#include <qtpnet/neural_head.hpp>
#include <qtpnet/qepfe.hpp>
#include <qtpnet/random.hpp>
#include <qtpnet/text_data.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace qtpnet {

struct TrainConfig {
    double lr = 1e-5;
    int epochs = 5;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double convergence_tol = 1e-6; // stop when the epoch-mean loss improves by less
    double init_scale = 0.01;

    static TrainConfig sentiment_defaults() { return {1e-5, 5, 32}; }
    static TrainConfig wsd_defaults() { return {3e-4, 30, 50}; }

    void validate() const {
        if (!(lr > 0.0)) {
            fail(ErrorKind::Config, "training.lr must be > 0");
        }
        if (epochs < 1) {
            fail(ErrorKind::Config, "training.epochs must be >= 1");
        }
        if (batch_size < 1) {
            fail(ErrorKind::Config, "training.batch_size must be >= 1");
        }
    }
};

struct FusedExample {
    std::vector<double> p; // quantum features, dim N
    std::vector<double> h; // sentence embedding, dim d
    bool fallback = false; // every token was dropped by the OOV policy
};

/// Fused features of one text. When the OOV policy drops every token, the
/// example gets the uniform distribution for p and zeros for h.
inline FusedExample fuse_text(std::string_view text, const EmbeddingStore& store, const QepfeConfig& qepfe) {
    const auto tokens = tokenize(text);
    const auto vectors = token_vectors(store, tokens);
    FusedExample out;
    if (vectors.empty()) {
        const std::size_t N = qepfe.feature_dim();
        out.p.assign(N, 1.0 / static_cast<double>(N));
        out.h.assign(store.dim(), 0.0);
        out.fallback = true;
        return out;
    }
    out.p = extract_sequence_features(vectors, qepfe).p;
    out.h = sentence_embedding(store, tokens);
    return out;
}

inline std::vector<Sample> build_samples(const Dataset& data, const EmbeddingStore& store,
                                         const QepfeConfig& qepfe, std::size_t* fallbacks = nullptr) {
    qepfe.validate();
    std::vector<Sample> samples;
    samples.reserve(data.examples.size());
    std::size_t dropped = 0;
    for (const auto& ex : data.examples) {
        const FusedExample f = fuse_text(ex.text, store, qepfe);
        dropped += f.fallback ? 1 : 0;
        samples.push_back({fuse(f.p, f.h), ex.label});
    }
    if (fallbacks != nullptr) {
        *fallbacks = dropped;
    }
    return samples;
}

struct EpochStats {
    int epoch;
    double mean_loss;      // mean of batch losses weighted by batch size
    double train_accuracy; // after the epoch's updates
};

struct TrainResult {
    LinearHead head;
    std::vector<EpochStats> history;
    bool converged = false;
};

inline double accuracy(const LinearHead& head, std::span<const Sample> samples) {
    std::size_t correct = 0;
    for (const auto& s : samples) {
        correct += forward(head, s.z).label() == s.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

/// Mini-batch RAdam on fixed fused vectors. The shuffle order of every epoch
/// derives from config.seed, so identical inputs give identical weights.
inline TrainResult train_head(std::span<const Sample> samples, std::size_t classes, const TrainConfig& config) {
    config.validate();
    if (samples.empty()) {
        fail(ErrorKind::DegenerateInput, "cannot train on an empty dataset");
    }
    if (classes < 2) {
        fail(ErrorKind::Config, "need at least 2 classes");
    }
    const std::size_t dim = samples.front().z.size();
    TrainResult result{LinearHead::random(classes, dim, child_seed(config.seed, "train.init"), config.init_scale), {}};
    RAdam optimizer;
    Rng shuffle_rng(child_seed(config.seed, "train.shuffle"));

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const auto batch = static_cast<std::size_t>(config.batch_size);
    double previous_loss = 0.0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<std::size_t>(uniform_below(shuffle_rng, i + 1))]);
        }
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            const std::span<const std::size_t> ids(order.data() + start, len);
            const LossAndGrad lg = loss_and_grad(result.head, samples, ids);
            if (!std::isfinite(lg.loss)) {
                fail(ErrorKind::Numeric, "non-finite loss in epoch " + std::to_string(epoch));
            }
            loss_sum += lg.loss * static_cast<double>(len);
            optimizer.step(result.head, lg.grad, config.lr);
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        result.history.push_back({epoch, mean_loss, accuracy(result.head, samples)});
        if (epoch > 1 && previous_loss - mean_loss < config.convergence_tol) {
            result.converged = true;
            break;
        }
        previous_loss = mean_loss;
    }
    return result;
}

inline ConfusionMatrix confusion(const LinearHead& head, std::span<const Sample> samples) {
    ConfusionMatrix cm(static_cast<int>(head.classes));
    for (const auto& s : samples) {
        cm.add(s.label, forward(head, s.z).label());
    }
    return cm;
}

} // namespace qtpnet
