#pragma once

// Confusion matrices and accuracy / precision / recall / F1.

#include <qtpnet/error.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace qtpnet {

struct BinaryCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
};

/// Set when a ratio had a zero denominator and was reported as 0.
struct DegenerateFlags {
    bool precision = false;
    bool recall = false;
    bool f1 = false;

    bool any() const noexcept { return precision || recall || f1; }
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    DegenerateFlags degenerate;
};

namespace detail {

inline double ratio_or_zero(double num, double den, bool& flag) {
    if (den == 0.0) {
        flag = true;
        return 0.0;
    }
    return num / den;
}

inline Metrics precision_recall_f1(const BinaryCounts& c) {
    Metrics m;
    m.precision = ratio_or_zero(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp), m.degenerate.precision);
    m.recall = ratio_or_zero(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn), m.degenerate.recall);
    m.f1 = ratio_or_zero(2.0 * m.precision * m.recall, m.precision + m.recall, m.degenerate.f1);
    return m;
}

} // namespace detail

inline Metrics compute_metrics(const BinaryCounts& c) {
    if (c.total() == 0) {
        fail(ErrorKind::DegenerateInput, "cannot compute metrics of an empty confusion matrix");
    }
    Metrics m = detail::precision_recall_f1(c);
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return m;
}

/// C x C counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int classes) : classes_(classes) {
        if (classes < 2) {
            fail(ErrorKind::Config, "confusion matrix needs at least 2 classes");
        }
        counts_.assign(static_cast<std::size_t>(classes * classes), 0);
    }

    int classes() const noexcept { return classes_; }

    void add(int truth, int predicted) {
        if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
            fail(ErrorKind::Validation, "class index out of range");
        }
        ++counts_[index(truth, predicted)];
    }

    void merge(const ConfusionMatrix& other) {
        if (other.classes_ != classes_) {
            fail(ErrorKind::Shape, "cannot merge confusion matrices of different sizes");
        }
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            counts_[i] += other.counts_[i];
        }
    }

    std::uint64_t count(int truth, int predicted) const { return counts_[index(truth, predicted)]; }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts_) {
            t += c;
        }
        return t;
    }

    /// One-vs-rest counts for class `positive`.
    BinaryCounts one_vs_rest(int positive) const {
        BinaryCounts b;
        for (int t = 0; t < classes_; ++t) {
            for (int p = 0; p < classes_; ++p) {
                const auto c = count(t, p);
                if (t == positive && p == positive) {
                    b.tp += c;
                } else if (p == positive) {
                    b.fp += c;
                } else if (t == positive) {
                    b.fn += c;
                } else {
                    b.tn += c;
                }
            }
        }
        return b;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t index(int t, int p) const { return static_cast<std::size_t>(t * classes_ + p); }

    int classes_;
    std::vector<std::uint64_t> counts_;
};

/// Accuracy over all classes; precision, recall and F1 as unweighted means
/// of the per-class one-vs-rest values.
inline Metrics macro_metrics(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) {
        fail(ErrorKind::DegenerateInput, "cannot compute metrics of an empty confusion matrix");
    }
    Metrics out;
    std::uint64_t correct = 0;
    for (int c = 0; c < cm.classes(); ++c) {
        correct += cm.count(c, c);
        const Metrics m = detail::precision_recall_f1(cm.one_vs_rest(c));
        out.precision += m.precision;
        out.recall += m.recall;
        out.f1 += m.f1;
        out.degenerate.precision |= m.degenerate.precision;
        out.degenerate.recall |= m.degenerate.recall;
        out.degenerate.f1 |= m.degenerate.f1;
    }
    const double k = cm.classes();
    out.precision /= k;
    out.recall /= k;
    out.f1 /= k;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return out;
}

/// Binary tasks report the positive class (label 1); multiclass tasks
/// report macro averages.
inline Metrics compute_metrics(const ConfusionMatrix& cm) {
    if (cm.classes() == 2) {
        return compute_metrics(cm.one_vs_rest(1));
    }
    return macro_metrics(cm);
}

inline nlohmann::json to_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"degenerate_flags",
             {{"precision", m.degenerate.precision}, {"recall", m.degenerate.recall}, {"f1", m.degenerate.f1}}}};
}

/// Appends one row to a CSV run log, writing the header for a new file.
inline void append_metrics_csv(const std::string& path, const Metrics& m, std::uint64_t seed) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) {
        fail(ErrorKind::Data, "cannot write metrics log '" + path + "'");
    }
    if (fresh) {
        out << "seed,accuracy,precision,recall,f1,degenerate\n";
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%d\n", static_cast<unsigned long long>(seed),
                  m.accuracy, m.precision, m.recall, m.f1, m.degenerate.any() ? 1 : 0);
    out << buf;
}

} // namespace qtpnet
