#pragma once

// CSV and SVG emitters for experiment results. All real numbers are printed
// with 17 significant digits so re-parsing reproduces them exactly and
// identical runs produce byte-identical files.

#include <string>
#include <vector>

#include "glee/metrics.hpp"

namespace glee {

struct ResultRow {
    std::string variant;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double head_f1 = 0.0;
    double tail_f1 = 0.0;
};

// Round-trip exact decimal rendering of a double.
std::string format_real(double v);

// Schema: variant,seed,accuracy,macro_f1,head_f1,tail_f1
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

struct SummaryRow {
    std::string variant;
    std::size_t n_seeds = 0;
    // mean / population standard deviation / population variance per metric
    double accuracy_mean = 0, accuracy_std = 0, accuracy_var = 0;
    double macro_f1_mean = 0, macro_f1_std = 0, macro_f1_var = 0;
    double head_f1_mean = 0, head_f1_std = 0, head_f1_var = 0;
    double tail_f1_mean = 0, tail_f1_std = 0, tail_f1_var = 0;
    std::string flags;  // semicolon-joined annotations
};

// Aggregates rows by variant, preserving first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// Schema: variant,class,rank,count,norm
void write_norm_csv(const std::string& path,
                    const std::vector<std::pair<std::string, NormProfile>>& profiles);

// Schema: variant,seed,pearson_r,spearman_rho,flat
struct SlopeRow {
    std::string variant;
    std::uint64_t seed = 0;
    NormSlope slope;
};
void write_slopes_csv(const std::string& path, const std::vector<SlopeRow>& rows);

// Directional checks surfaced as flagged rows instead of hard failures.
// Schema: check,detail,status (status: ok | flagged)
struct CheckRow {
    std::string name;
    std::string detail;
    bool ok = true;
};
void write_checks_csv(const std::string& path, const std::vector<CheckRow>& rows);

// Line plot of norm profiles: class rank on x, norm on y, one polyline per
// variant. Output is a standalone well-formed XML document.
void write_norm_svg(const std::string& path,
                    const std::vector<std::pair<std::string, NormProfile>>& profiles);

// Schema: variant,class,feature,value (one row per sampled coordinate)
void write_feature_csv(const std::string& path, const std::string& variant,
                       const std::vector<FeatureDistribution>& dists);

}  // namespace glee
