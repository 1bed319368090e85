#include "glee/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "glee/error.hpp"

namespace glee {

namespace {

constexpr std::size_t kEvalBatch = 256;

std::vector<int> argmax_rows(const RealMatrix& logits) {
    std::vector<int> out(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* z = logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols; ++j) {
            if (z[j] > z[best]) best = j;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

double mean_over(const std::vector<double>& per_class, const std::set<int>& classes) {
    if (classes.empty()) return 0.0;
    double sum = 0.0;
    for (int c : classes) sum += per_class[static_cast<std::size_t>(c)];
    return sum / static_cast<double>(classes.size());
}

}  // namespace

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& gold,
                                                       const std::vector<int>& pred,
                                                       std::size_t num_classes) {
    if (gold.size() != pred.size()) {
        throw DimensionError("confusion_matrix: gold/pred length mismatch");
    }
    std::vector<std::vector<std::size_t>> cm(num_classes,
                                             std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const int g = gold[i];
        const int p = pred[i];
        if (g < 0 || static_cast<std::size_t>(g) >= num_classes ||
            p < 0 || static_cast<std::size_t>(p) >= num_classes) {
            throw IndexError("confusion_matrix: label outside [0, " +
                             std::to_string(num_classes) + ") at example " + std::to_string(i));
        }
        ++cm[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    }
    return cm;
}

std::vector<double> f1_from_confusion(const std::vector<std::vector<std::size_t>>& cm) {
    const std::size_t C = cm.size();
    std::vector<double> f1(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t tp = cm[c][c];
        std::size_t fn = 0, fp = 0;
        for (std::size_t j = 0; j < C; ++j) {
            if (j != c) {
                fn += cm[c][j];
                fp += cm[j][c];
            }
        }
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1[c] = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return f1;
}

EvalReport report_from_predictions(const std::vector<int>& gold, const std::vector<int>& pred,
                                   std::size_t num_classes, const HeadTailSplit& split) {
    EvalReport r;
    r.n_test = gold.size();
    auto cm = confusion_matrix(gold, pred, num_classes);
    r.per_class_f1 = f1_from_confusion(cm);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pred[i]) ++correct;
    }
    r.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());

    double sum = 0.0;
    for (double v : r.per_class_f1) sum += v;
    r.macro_f1 = num_classes == 0 ? 0.0 : sum / static_cast<double>(num_classes);
    r.head_f1 = mean_over(r.per_class_f1, split.head);
    r.tail_f1 = mean_over(r.per_class_f1, split.tail);
    return r;
}

double macro_f1_score(const std::vector<int>& gold, const std::vector<int>& pred,
                      std::size_t num_classes) {
    auto f1 = f1_from_confusion(confusion_matrix(gold, pred, num_classes));
    double sum = 0.0;
    for (double v : f1) sum += v;
    return num_classes == 0 ? 0.0 : sum / static_cast<double>(num_classes);
}

std::vector<int> predict(Model& model, const std::vector<std::vector<int>>& inputs) {
    std::vector<int> pred;
    pred.reserve(inputs.size());
    for (std::size_t start = 0; start < inputs.size(); start += kEvalBatch) {
        const std::size_t end = std::min(inputs.size(), start + kEvalBatch);
        std::vector<std::vector<int>> batch(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                            inputs.begin() + static_cast<std::ptrdiff_t>(end));
        auto part = argmax_rows(model.forward(batch));
        pred.insert(pred.end(), part.begin(), part.end());
    }
    return pred;
}

std::vector<int> predict_features(Model& model, const RealMatrix& features) {
    std::vector<int> pred;
    pred.reserve(features.rows);
    for (std::size_t start = 0; start < features.rows; start += kEvalBatch) {
        const std::size_t end = std::min(features.rows, start + kEvalBatch);
        RealMatrix batch(end - start, features.cols);
        std::copy(features.row(start), features.row(start) + batch.size(), batch.data.begin());
        auto part = argmax_rows(model.forward_features(batch));
        pred.insert(pred.end(), part.begin(), part.end());
    }
    return pred;
}

EvalReport evaluate(Model& model, const Corpus& test, const HeadTailSplit& split) {
    if (test.examples.empty()) throw EmptyInputError("evaluate: empty test set");
    std::vector<std::vector<int>> inputs;
    std::vector<int> gold;
    inputs.reserve(test.examples.size());
    gold.reserve(test.examples.size());
    for (const auto& ex : test.examples) {
        inputs.push_back(ex.tokens);
        gold.push_back(ex.label);
    }
    return report_from_predictions(gold, predict(model, inputs), test.num_classes, split);
}

EvalReport evaluate_features(Model& model, const FeatureDataset& test,
                             const HeadTailSplit& split) {
    if (test.size() == 0) throw EmptyInputError("evaluate: empty test set");
    return report_from_predictions(test.labels, predict_features(model, test.features),
                                   test.num_classes(), split);
}

NormProfile norm_profile(const HeadParams& head, const std::vector<std::size_t>& class_counts) {
    if (class_counts.size() != head.num_classes) {
        throw DimensionError("norm_profile: counts for " + std::to_string(class_counts.size()) +
                             " classes vs head with " + std::to_string(head.num_classes));
    }
    RealMatrix rows = effective_class_rows(head);
    NormProfile profile;
    profile.entries.resize(head.num_classes);
    for (std::size_t c = 0; c < head.num_classes; ++c) {
        profile.entries[c] = {c, class_counts[c], l2_norm(rows.row(c), rows.cols)};
    }
    std::sort(profile.entries.begin(), profile.entries.end(),
              [](const NormProfile::Entry& a, const NormProfile::Entry& b) {
                  if (a.count != b.count) return a.count > b.count;
                  return a.class_id < b.class_id;
              });
    return profile;
}

namespace {

// Fractional (average) ranks of `v`, ascending.
std::vector<double> fractional_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j);  // mean of tied positions
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

NormSlope norm_slope(const NormProfile& profile) {
    const std::size_t n = profile.entries.size();
    if (n < 3) throw ConfigError("norm_slope needs at least 3 classes");
    std::vector<double> rank(n), norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        rank[i] = static_cast<double>(i);
        norm[i] = profile.entries[i].norm;
    }
    NormSlope s;
    // Flat = zero variance up to rounding: post-calibration norms agree only
    // to ~1e-16, and correlating that noise would be meaningless.
    double lo = norm[0], hi = norm[0];
    for (double v : norm) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-9 * std::max(1.0, std::abs(hi))) {
        s.flat = true;
        return s;  // (0, 0)
    }
    s.pearson_r = pearson(rank, norm);
    s.spearman_rho = pearson(rank, fractional_ranks(norm));
    return s;
}

FeatureDistribution feature_distribution(Model& model, const Corpus& corpus, int class_id,
                                         std::size_t k) {
    if (class_id < 0 || static_cast<std::size_t>(class_id) >= corpus.num_classes) {
        throw IndexError("feature_distribution: unknown class " + std::to_string(class_id));
    }
    if (k > model.head.dim()) {
        throw ConfigError("feature_distribution: k exceeds feature dimension");
    }
    std::vector<std::vector<int>> inputs;
    for (const auto& ex : corpus.examples) {
        if (ex.label == class_id) inputs.push_back(ex.tokens);
    }
    if (inputs.size() < 2) {
        throw ConfigError("feature_distribution: class " + std::to_string(class_id) +
                          " has fewer than 2 examples");
    }

    FeatureDistribution dist;
    dist.class_id = static_cast<std::size_t>(class_id);
    dist.k = k;
    dist.values.assign(k, {});
    for (std::size_t start = 0; start < inputs.size(); start += kEvalBatch) {
        const std::size_t end = std::min(inputs.size(), start + kEvalBatch);
        std::vector<std::vector<int>> batch(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                            inputs.begin() + static_cast<std::ptrdiff_t>(end));
        model.forward(batch);
        const RealMatrix& feats = model.last_features();
        for (std::size_t i = 0; i < feats.rows; ++i) {
            for (std::size_t j = 0; j < k; ++j) dist.values[j].push_back(feats.at(i, j));
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        bool dead = true;
        for (double v : dist.values[j]) {
            if (v != 0.0) {
                dead = false;
                break;
            }
        }
        if (dead) ++dist.dead_features;
    }
    return dist;
}

}  // namespace glee
