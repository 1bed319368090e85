#pragma once

// A trainable unit: backbone + head with a single forward/backward surface
// and a named-parameter registry for the optimizer. A feature-mode model has
// no backbone and feeds stored vectors straight into the head.

#include <optional>
#include <vector>

#include "glee/backbone.hpp"
#include "glee/heads.hpp"
#include "glee/optim.hpp"

namespace glee {

struct Gradients {
    RealMatrix d_embedding;
    RealMatrix d_enc1_w, d_enc1_b, d_enc2_w, d_enc2_b;
    RealMatrix d_dense_w, d_dense_b;
    RealMatrix d_gamma, d_beta;
    RealMatrix d_predictor, d_bias;
};

class Model {
public:
    Model(BackboneParams backbone_params, HeadParams head_params);
    // Head-only model over pre-extracted vectors; masked-token heads are not
    // available here (no embedding table to predict over).
    static Model feature_model(HeadParams head_params);

    bool has_backbone() const { return has_backbone_; }
    // True when the head predictor is the backbone embedding table itself.
    bool tied() const;
    std::size_t num_classes() const { return head.num_classes; }

    RealMatrix forward(const std::vector<std::vector<int>>& batch);
    RealMatrix forward_features(const RealMatrix& x);

    // Gradient of the scalar loss whose dlogits is given; consumes the cache
    // of the preceding forward. StateError when no forward is pending.
    Gradients backward(const RealMatrix& dlogits);

    // Trainable parameters paired with their gradient slots. A tied predictor
    // appears once, as the embedding (its gradient already carries both usage
    // sites). freeze_backbone with a tied predictor is a ConfigError: the
    // shared storage cannot be frozen on one side only.
    std::vector<ParamRef> param_refs(Gradients& g, bool freeze_backbone = false);

    // Deep copy preserving the tie structure inside the copy.
    Model clone() const;

    // Pre-predictor feature vectors of the last forward (post activation,
    // post LN when present).
    const RealMatrix& last_features() const { return head_cache_.features; }

    BackboneParams backbone;
    HeadParams head;

private:
    Model() = default;
    bool has_backbone_ = false;
    bool forward_pending_ = false;
    std::optional<EncodedBatch> enc_;
    HeadCache head_cache_;
};

}  // namespace glee
