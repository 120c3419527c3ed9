#include "oracles.hpp"
#include "synthetic.hpp"

#include <qtpnet/neural_head.hpp>
#include <qtpnet/training.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace qtpnet;

namespace {

// Flattened (weights, bias) so the finite-difference oracle sees one vector.
std::vector<double> flatten(const LinearHead& h) {
    std::vector<double> x = h.weights;
    x.insert(x.end(), h.bias.begin(), h.bias.end());
    return x;
}

LinearHead unflatten(const LinearHead& shape, const std::vector<double>& x) {
    LinearHead h = shape;
    std::copy(x.begin(), x.begin() + static_cast<long>(h.weights.size()), h.weights.begin());
    std::copy(x.begin() + static_cast<long>(h.weights.size()), x.end(), h.bias.begin());
    return h;
}

// Cross-entropy straight from its definition, -log(softmax_label).
double reference_loss(const LinearHead& h, const std::vector<Sample>& batch) {
    double total = 0.0;
    for (const auto& s : batch) {
        std::vector<double> logits(h.classes);
        for (std::size_t c = 0; c < h.classes; ++c) {
            logits[c] = h.bias[c];
            for (std::size_t j = 0; j < h.input_dim; ++j) {
                logits[c] += h.weights[c * h.input_dim + j] * s.z[j];
            }
        }
        double denom = 0.0;
        for (double l : logits) {
            denom += std::exp(l);
        }
        total -= std::log(std::exp(logits[static_cast<std::size_t>(s.label)]) / denom);
    }
    return total / static_cast<double>(batch.size());
}

QepfeConfig small_qepfe() {
    QepfeConfig q;
    q.n_qubits = 4;
    q.search.seed = 5;
    return q;
}

} // namespace

TEST(Forward, ZeroHeadIsUniform) {
    const auto head = LinearHead::zeros(2, 3);
    const auto pred = forward(head, std::vector<double>{0.3, -1.0, 2.0});
    EXPECT_DOUBLE_EQ(pred.probs[0], 0.5);
    EXPECT_DOUBLE_EQ(pred.probs[1], 0.5);
}

TEST(Forward, SoftmaxShiftInvariance) {
    EXPECT_EQ(softmax(std::vector<double>{0, 0}), softmax(std::vector<double>{1000, 1000}));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(5);
        for (auto& l : logits) {
            l = u(rng);
        }
        auto shifted = logits;
        const double c = u(rng) * 10;
        for (auto& l : shifted) {
            l += c;
        }
        const auto a = softmax(logits);
        const auto b = softmax(shifted);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-12);
        }
    }
}

TEST(Forward, IdentityBlock) {
    auto head = LinearHead::zeros(2, 2);
    head.weight(0, 0) = 1.0;
    head.weight(1, 1) = 1.0;
    const auto pred = forward(head, std::vector<double>{1.0, 0.0});
    EXPECT_NEAR(pred.probs[0], std::numbers::e / (std::numbers::e + 1), 1e-12);
    EXPECT_NEAR(pred.probs[0], 0.7311, 1e-4);
    EXPECT_NEAR(pred.probs[1], 0.2689, 1e-4);
    EXPECT_EQ(pred.label(), 0);
    EXPECT_THROW(forward(head, std::vector<double>{1.0}), Error);
}

TEST(Fuse, Concatenates) {
    EXPECT_EQ(fuse(std::vector<double>{1, 2}, std::vector<double>{3}), (std::vector<double>{1, 2, 3}));
}

TEST(Loss, UniformPredictionIsLogC) {
    const auto head = LinearHead::zeros(2, 2);
    const std::vector<Sample> batch = {{{0.5, 0.5}, 0}};
    EXPECT_NEAR(loss_and_grad(head, batch).loss, std::numbers::ln2, 1e-12);
    const auto head5 = LinearHead::zeros(5, 1);
    const std::vector<Sample> batch5 = {{{1.0}, 3}, {{2.0}, 0}};
    EXPECT_NEAR(loss_and_grad(head5, batch5).loss, std::log(5.0), 1e-12);
}

TEST(Loss, ConfidentCorrectPredictionApproachesZero) {
    auto head = LinearHead::zeros(2, 1);
    head.bias[1] = 50.0;
    const std::vector<Sample> batch = {{{0.0}, 1}};
    const double loss = loss_and_grad(head, batch).loss;
    EXPECT_GE(loss, 0.0);
    EXPECT_LT(loss, 1e-20);
    head.bias[1] = -800.0; // finite even far out in the tail
    EXPECT_NEAR(loss_and_grad(head, batch).loss, 800.0, 1e-9);
}

TEST(Loss, RejectsBadLabels) {
    const auto head = LinearHead::zeros(2, 1);
    const std::vector<Sample> batch = {{{0.0}, 2}};
    EXPECT_THROW(loss_and_grad(head, batch), Error);
    EXPECT_THROW(loss_and_grad(head, std::vector<Sample>{}), Error);
}

TEST(Loss, MatchesDefinition) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t C = 2 + rng() % 3;
        const std::size_t D = 1 + rng() % 6;
        const auto head = LinearHead::random(C, D, rng(), 1.0);
        std::vector<Sample> batch(4);
        std::normal_distribution<double> g;
        for (auto& s : batch) {
            s.z.resize(D);
            for (auto& x : s.z) {
                x = g(rng);
            }
            s.label = static_cast<int>(rng() % C);
        }
        EXPECT_NEAR(loss_and_grad(head, batch).loss, reference_loss(head, batch), 1e-12);
    }
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t C = 2 + rng() % 4;
        const std::size_t D = 1 + rng() % 8;
        const auto head = LinearHead::random(C, D, rng(), 1.0);
        std::vector<Sample> batch(1 + rng() % 5);
        for (auto& s : batch) {
            s.z.resize(D);
            for (auto& x : s.z) {
                x = g(rng);
            }
            s.label = static_cast<int>(rng() % C);
        }
        const auto analytic = flatten(loss_and_grad(head, batch).grad);
        const auto f = [&](const std::vector<double>& x) { return reference_loss(unflatten(head, x), batch); };
        const auto x0 = flatten(head);
        for (std::size_t i = 0; i < x0.size(); ++i) {
            const double numeric = oracle::central_difference(f, x0, i, 1e-5);
            const double rel = std::abs(numeric - analytic[i]) / std::max(1e-6, std::abs(numeric) + std::abs(analytic[i]));
            worst = std::max(worst, rel);
        }
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(RAdam, RhoValues) {
    EXPECT_NEAR(radam_rho_infinity(0.999), 1999.0, 1e-9);
    EXPECT_NEAR(radam_rho(0.999, 1), 1.0, 1e-9);
    EXPECT_LE(radam_rho(0.999, 4), 4.0);
    EXPECT_GT(radam_rho(0.999, 6), 4.0);
}

TEST(RAdam, FirstStepIsPlainMomentum) {
    // t = 1: m_hat = g, no rectification, so the step is lr * g.
    std::vector<double> w = {1.0, -2.0};
    const std::vector<double> g = {0.5, -0.25};
    RAdam opt;
    const ParamBlock blocks[] = {{"w", w, g}};
    opt.step(blocks, 0.1);
    EXPECT_NEAR(w[0], 1.0 - 0.05, 1e-15);
    EXPECT_NEAR(w[1], -2.0 + 0.025, 1e-15);
    EXPECT_EQ(opt.step_count(), 1);
}

TEST(RAdam, RectifiedStepMatchesReference) {
    // Constant gradient, replayed by hand with the published update rule.
    const double g = 0.3;
    const double lr = 0.01;
    const double b1 = 0.9;
    const double b2 = 0.999;
    double ref = 0.0;
    double m = 0.0;
    double v = 0.0;
    std::vector<double> w = {0.0};
    const std::vector<double> grad = {g};
    RAdam opt;
    for (int t = 1; t <= 12; ++t) {
        const ParamBlock blocks[] = {{"w", w, grad}};
        opt.step(blocks, lr);
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double m_hat = m / (1 - std::pow(b1, t));
        const double rho_inf = 2 / (1 - b2) - 1;
        const double rho = rho_inf - 2 * t * std::pow(b2, t) / (1 - std::pow(b2, t));
        if (rho > 4) {
            const double r = std::sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho));
            ref -= lr * r * m_hat / (std::sqrt(v / (1 - std::pow(b2, t))) + 1e-8);
        } else {
            ref -= lr * m_hat;
        }
        EXPECT_NEAR(w[0], ref, 1e-14) << "t=" << t;
    }
}

TEST(RAdam, ZeroGradientIsFixedPoint) {
    auto head = LinearHead::random(3, 4, 9, 1.0);
    const auto before = head;
    const auto zero = LinearHead::zeros(3, 4);
    RAdam opt;
    for (int t = 0; t < 20; ++t) {
        opt.step(head, zero, 0.1);
    }
    EXPECT_EQ(head, before);
}

TEST(RAdam, NonFiniteGradientNamesBlock) {
    auto head = LinearHead::zeros(2, 2);
    auto grad = LinearHead::zeros(2, 2);
    grad.bias[1] = std::numeric_limits<double>::quiet_NaN();
    RAdam opt;
    try {
        opt.step(head, grad, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
        EXPECT_NE(std::string(e.what()).find("bias"), std::string::npos);
    }
    EXPECT_EQ(head, LinearHead::zeros(2, 2));
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Checkpoint ckpt{LinearHead::random(3, 5, 77, 2.0), 4, 1};
    ckpt.head.bias = {-0.0, 1e-300, 3.25};
    std::stringstream buf;
    write_checkpoint(buf, ckpt);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 4), "QTPH");
    EXPECT_EQ(bytes.size(), 4 + 4 * 4 + 8 * (15 + 3));
    const auto loaded = read_checkpoint(buf);
    EXPECT_EQ(loaded.feature_dim, 4u);
    EXPECT_EQ(loaded.embedding_dim, 1u);
    ASSERT_EQ(loaded.head.weights.size(), ckpt.head.weights.size());
    for (std::size_t i = 0; i < ckpt.head.weights.size(); ++i) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(loaded.head.weights[i]), std::bit_cast<std::uint64_t>(ckpt.head.weights[i]));
    }
    EXPECT_EQ(std::bit_cast<std::uint64_t>(loaded.head.bias[0]), std::bit_cast<std::uint64_t>(-0.0));
}

TEST(Checkpoint, LayoutIsLittleEndian) {
    auto head = LinearHead::zeros(2, 1);
    head.weights = {1.0, 2.0};
    std::stringstream buf;
    write_checkpoint(buf, {head, 1, 0});
    const std::string b = buf.str();
    const unsigned char expected_header[] = {'Q', 'T', 'P', 'H', 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
    ASSERT_GE(b.size(), sizeof expected_header);
    for (std::size_t i = 0; i < sizeof expected_header; ++i) {
        EXPECT_EQ(static_cast<unsigned char>(b[i]), expected_header[i]) << i;
    }
    // 1.0 = 0x3FF0000000000000
    EXPECT_EQ(static_cast<unsigned char>(b[20 + 7]), 0x3F);
    EXPECT_EQ(static_cast<unsigned char>(b[20 + 6]), 0xF0);
}

TEST(Checkpoint, RejectsCorruptInput) {
    std::stringstream bad("QTPX");
    EXPECT_THROW(read_checkpoint(bad), Error);
    std::stringstream buf;
    write_checkpoint(buf, {LinearHead::zeros(2, 3), 2, 1});
    std::string bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_checkpoint(truncated), Error);
    EXPECT_THROW(write_checkpoint(buf, {LinearHead::zeros(2, 3), 2, 2}), Error);
}

TEST(TrainConfig, Defaults) {
    const auto sc = TrainConfig::sentiment_defaults();
    EXPECT_EQ(sc.lr, 1e-5);
    EXPECT_EQ(sc.epochs, 5);
    EXPECT_EQ(sc.batch_size, 32);
    const auto wsd = TrainConfig::wsd_defaults();
    EXPECT_EQ(wsd.lr, 3e-4);
    EXPECT_EQ(wsd.epochs, 30);
    EXPECT_EQ(wsd.batch_size, 50);
    TrainConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Training, CachedFeaturesEqualRecomputed) {
    const auto data = synthetic::separable_corpus(40, 1);
    const EmbeddingStore store(16);
    const auto first = build_samples(data, store, small_qepfe());
    const auto second = build_samples(data, store, small_qepfe());
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        EXPECT_EQ(first[i].z, second[i].z);
        EXPECT_EQ(first[i].label, second[i].label);
    }
}

TEST(Training, AllTokensDroppedFallsBack) {
    const EmbeddingStore store(8, OovPolicy::Skip);
    const auto f = fuse_text("nothing known here", store, small_qepfe());
    EXPECT_TRUE(f.fallback);
    EXPECT_EQ(f.p, std::vector<double>(16, 1.0 / 16));
    EXPECT_EQ(f.h, std::vector<double>(8, 0.0));
}

TEST(Training, SeparableCorpusIsLearned) {
    const auto data = synthetic::separable_corpus(200, 7);
    const EmbeddingStore store(32);
    const auto samples = build_samples(data, store, small_qepfe());

    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    for (const auto& s : samples) {
        xs.push_back(s.z);
        labels.push_back(s.label);
    }
    ASSERT_TRUE(oracle::perceptron_separates(xs, labels));

    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 50;
    cfg.batch_size = 32;
    cfg.seed = 11;
    const auto a = train_head(samples, 2, cfg);
    EXPECT_GE(accuracy(a.head, samples), 0.95);
    const auto b = train_head(samples, 2, cfg);
    EXPECT_EQ(a.head, b.head);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(a.history[i].mean_loss, b.history[i].mean_loss);
    }
    cfg.seed = 12;
    EXPECT_NE(train_head(samples, 2, cfg).head, a.head);
}

TEST(Training, ConfusionCountsEveryExample) {
    const auto data = synthetic::separable_corpus(30, 2);
    const EmbeddingStore store(8);
    const auto samples = build_samples(data, store, small_qepfe());
    const auto cm = confusion(LinearHead::zeros(2, samples.front().z.size()), samples);
    EXPECT_EQ(cm.total(), 30u);
    // A zero head ties every class and predicts class 0.
    EXPECT_EQ(cm.count(0, 0), 15u);
    EXPECT_EQ(cm.count(1, 0), 15u);
}
