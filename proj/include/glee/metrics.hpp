#pragma once

// Evaluation metrics, weight-norm profiling, and feature-distribution
// sampling.

#include <string>
#include <vector>

#include "glee/data.hpp"
#include "glee/features.hpp"
#include "glee/model.hpp"

namespace glee {

struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double head_f1 = 0.0;
    double tail_f1 = 0.0;
    std::vector<double> per_class_f1;
    std::size_t n_test = 0;
};

// Full C x C confusion matrix: entry [gold][pred].
std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& gold,
                                                       const std::vector<int>& pred,
                                                       std::size_t num_classes);

// Per-class F1 against all others; a class with no gold and no predicted
// positives scores 0 and stays in the macro mean.
std::vector<double> f1_from_confusion(const std::vector<std::vector<std::size_t>>& cm);

EvalReport report_from_predictions(const std::vector<int>& gold, const std::vector<int>& pred,
                                   std::size_t num_classes, const HeadTailSplit& split);

// Argmax predictions, lowest index on ties; runs in fixed-size batches.
std::vector<int> predict(Model& model, const std::vector<std::vector<int>>& inputs);
std::vector<int> predict_features(Model& model, const RealMatrix& features);

EvalReport evaluate(Model& model, const Corpus& test, const HeadTailSplit& split);
EvalReport evaluate_features(Model& model, const FeatureDataset& test,
                             const HeadTailSplit& split);

// Dev-selection helper: macro F1 without head/tail bookkeeping.
double macro_f1_score(const std::vector<int>& gold, const std::vector<int>& pred,
                      std::size_t num_classes);

struct NormProfile {
    struct Entry {
        std::size_t class_id = 0;
        std::size_t count = 0;
        double norm = 0.0;
    };
    std::vector<Entry> entries;  // descending count, ties by ascending class id
};

// L2 norm of each class's predictor row (effective row for masked-token
// heads), paired with train counts.
NormProfile norm_profile(const HeadParams& head, const std::vector<std::size_t>& class_counts);

struct NormSlope {
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    bool flat = false;  // zero-variance norms; correlations forced to 0
};

// Correlation between frequency rank (0 = most frequent) and norm; negative
// values mean norms decay toward the tail. Needs >= 3 classes.
NormSlope norm_slope(const NormProfile& profile);

struct FeatureDistribution {
    std::size_t class_id = 0;
    std::size_t k = 0;
    std::vector<std::vector<double>> values;  // values[j] = feature j over the class's examples
    std::size_t dead_features = 0;            // sampled features identically zero
};

FeatureDistribution feature_distribution(Model& model, const Corpus& corpus, int class_id,
                                         std::size_t k = 10);

}  // namespace glee
