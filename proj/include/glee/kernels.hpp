#pragma once

#include <vector>

#include "glee/matrix.hpp"

// Dense numerical kernels with hand-derived forward and backward passes.
// Every model in the lab is composed from these; each backward is checked
// against central finite differences in the test suite.

namespace glee {

// Variance floor used by every LayerNorm in the lab.
inline constexpr double kLayerNormEps = 1e-12;

enum class Activation { Tanh, ReLU, Gelu };

// out = x W + b, b broadcast over rows. b is 1xk.
RealMatrix linear_forward(const RealMatrix& x, const RealMatrix& w, const RealMatrix& b);

struct LinearGrads {
    RealMatrix dx, dw, db;
};
LinearGrads linear_backward(const RealMatrix& x, const RealMatrix& w, const RealMatrix& dout);

double activation_scalar(double x, Activation kind);
RealMatrix activation_forward(const RealMatrix& x, Activation kind);
// x is the pre-activation input of the forward pass.
RealMatrix activation_backward(const RealMatrix& x, const RealMatrix& dout, Activation kind);

struct LayerNormCache {
    RealMatrix x_hat;             // normalized inputs, needed for dgamma and dx
    std::vector<double> inv_std;  // per-row 1/sqrt(var + eps)
};

// Per row: (x - mean) / sqrt(var + eps) * gamma + beta, population variance.
// gamma/beta are 1xd. When `cache` is non-null it is filled for the backward.
RealMatrix layer_norm_forward(const RealMatrix& x, const RealMatrix& gamma,
                              const RealMatrix& beta, double eps,
                              LayerNormCache* cache = nullptr);

struct LayerNormGrads {
    RealMatrix dx, dgamma, dbeta;
};
LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const RealMatrix& gamma,
                                   const RealMatrix& dout);

struct SoftmaxCrossEntropyResult {
    double loss = 0.0;
    RealMatrix dlogits;  // (softmax - onehot) / n
};
SoftmaxCrossEntropyResult softmax_cross_entropy(const RealMatrix& logits,
                                                const std::vector<int>& targets);

// Row-wise softmax probabilities (used by losses and prediction).
RealMatrix softmax_rows(const RealMatrix& logits);

// Scores a batch of features against per-class (or per-token) weight rows:
// out[i][k] = h[i] . p[k] + bias[k]. Keeping the class vectors as rows of
// `p` lets the MLM predictor alias the embedding table directly.
RealMatrix predictor_forward(const RealMatrix& h, const RealMatrix& p,
                             const RealMatrix* bias);

struct PredictorGrads {
    RealMatrix dh, dp, dbias;
};
PredictorGrads predictor_backward(const RealMatrix& h, const RealMatrix& p,
                                  const RealMatrix& dout, bool want_bias);

}  // namespace glee
