#pragma once

// GLEE feature file (kind 0): pre-extracted representation vectors with
// labels, for running the head laboratory without the toy backbone.
//
//   magic   "GLEE"            4 bytes
//   version u16 little-endian (currently 1)
//   kind    u8                (0 = features)
//   n       u64               number of examples (must be > 0)
//   d       u32               feature dimension
//   C       u32               number of classes
//   labels  n x u32
//   data    n*d little-endian f64

#include <string>
#include <vector>

#include "glee/matrix.hpp"

namespace glee {

struct FeatureDataset {
    RealMatrix features;  // [n x d]
    std::vector<int> labels;
    std::vector<std::size_t> class_counts;  // size C, recomputed from labels

    std::size_t num_classes() const { return class_counts.size(); }
    std::size_t size() const { return labels.size(); }
};

FeatureDataset ingest_features(const std::string& path);
void write_features(const FeatureDataset& data, const std::string& path);

// Convenience constructor that validates labels and fills class_counts.
FeatureDataset make_feature_dataset(RealMatrix features, std::vector<int> labels,
                                    std::size_t num_classes);

}  // namespace glee
