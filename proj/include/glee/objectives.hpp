#pragma once

// Training losses (cross-entropy, focal) and post-hoc weight-norm
// calibration.

#include <vector>

#include "glee/heads.hpp"
#include "glee/matrix.hpp"

namespace glee {

enum class LossKind { CrossEntropy, Focal };

struct LossSpec {
    LossKind kind = LossKind::CrossEntropy;
    double gamma = 2.0;  // focal only
};

struct LossResult {
    double loss = 0.0;
    RealMatrix dlogits;
};

// Cross-entropy: mean of -log softmax[target]. Focal: mean of
// -(1-p_t)^gamma * log p_t. gamma = 0 takes the exact cross-entropy code
// path, so the two agree bitwise there.
LossResult loss_forward_backward(const RealMatrix& logits, const std::vector<int>& targets,
                                 const LossSpec& spec);

struct CalibrationSpec {
    enum class Kind { None, EtaNorm } kind = Kind::None;
    double tau = 1.0;
};

// Returns a calibrated deep copy: each class weight row w is replaced by
// w / ||w||^tau; biases untouched; tau = 0 is the bitwise identity. For a
// masked-token head, the per-class effective row (mean of verbalizer-token
// rows) defines the norm and every token row of the class is scaled by the
// same factor — an extrapolation of the per-class rule, flagged in reports.
HeadParams eta_norm_calibrate(const HeadParams& head, double tau);

std::string loss_kind_name(LossKind kind);

}  // namespace glee
