#include "glee/model.hpp"

#include "glee/error.hpp"

namespace glee {

Model::Model(BackboneParams backbone_params, HeadParams head_params) {
    backbone = std::move(backbone_params);
    head = std::move(head_params);
    has_backbone_ = true;
    if (!backbone.embedding) throw StateError("Model: backbone has no embedding");
    if (head.dim() != backbone.dim()) {
        throw DimensionError("Model: head dim " + std::to_string(head.dim()) +
                             " vs backbone dim " + std::to_string(backbone.dim()));
    }
}

Model Model::feature_model(HeadParams head_params) {
    if (head_params.spec.scheme == HeadScheme::Mlm) {
        throw ConfigError(
            "feature-level datasets provide no embedding table for a masked-token head");
    }
    Model m;
    m.head = std::move(head_params);
    m.has_backbone_ = false;
    return m;
}

bool Model::tied() const {
    return has_backbone_ && head.predictor && head.predictor == backbone.embedding;
}

RealMatrix Model::forward(const std::vector<std::vector<int>>& batch) {
    if (!has_backbone_) {
        throw StateError("Model::forward: feature-mode model cannot encode token batches");
    }
    enc_ = encode(batch, backbone);
    RealMatrix logits = head_forward(head, *enc_, &head_cache_);
    forward_pending_ = true;
    return logits;
}

RealMatrix Model::forward_features(const RealMatrix& x) {
    enc_.reset();
    RealMatrix logits = head_forward_features(head, x, &head_cache_);
    forward_pending_ = true;
    return logits;
}

Gradients Model::backward(const RealMatrix& dlogits) {
    if (!forward_pending_) throw StateError("Model::backward before forward");
    forward_pending_ = false;

    HeadGrads hg = head_backward(head, head_cache_, dlogits);

    Gradients g;
    g.d_dense_w = std::move(hg.ddense_w);
    g.d_dense_b = std::move(hg.ddense_b);
    if (head.ln) {
        g.d_gamma = std::move(hg.dgamma);
        g.d_beta = std::move(hg.dbeta);
    }
    if (head.has_bias()) g.d_bias = std::move(hg.dbias);

    if (!enc_) {  // feature mode: input vectors are data, their grad is dropped
        g.d_predictor = std::move(hg.dpredictor);
        return g;
    }

    if (tied()) {
        g.d_embedding = std::move(hg.dpredictor);  // predictor usage site
    } else {
        g.d_predictor = std::move(hg.dpredictor);
        g.d_embedding = RealMatrix(backbone.vocab_size(), backbone.dim());
    }

    const bool mask_input = head.spec.input_repr == InputRepr::Mask;
    const EncodePath& path = mask_input ? *enc_->mask_path : enc_->cls_path;
    EncoderGrads eg = encoder_backward(backbone, path, hg.dinput);
    g.d_enc1_w = std::move(eg.dw1);
    g.d_enc1_b = std::move(eg.db1);
    g.d_enc2_w = std::move(eg.dw2);
    g.d_enc2_b = std::move(eg.db2);

    if (mask_input) {
        double* gm = g.d_embedding.row(Vocabulary::kMask);
        for (std::size_t i = 0; i < eg.dpooled.rows; ++i) {
            const double* row = eg.dpooled.row(i);
            for (std::size_t j = 0; j < eg.dpooled.cols; ++j) gm[j] += row[j];
        }
    }
    scatter_pool_gradient(enc_->tokens, enc_->non_pad, eg.dpooled, g.d_embedding);
    for (std::size_t j = 0; j < g.d_embedding.cols; ++j) {
        g.d_embedding.at(Vocabulary::kPad, j) = 0.0;
    }
    return g;
}

std::vector<ParamRef> Model::param_refs(Gradients& g, bool freeze_backbone) {
    std::vector<ParamRef> refs;
    if (has_backbone_) {
        if (freeze_backbone && tied()) {
            throw ConfigError(
                "freeze_backbone with a tied predictor: the embedding table is shared with "
                "the head; decouple the predictor or unfreeze");
        }
        if (!freeze_backbone) {
            refs.push_back({"backbone.embedding", backbone.embedding.get(), &g.d_embedding});
            refs.push_back({"backbone.enc1.w", &backbone.enc1.w, &g.d_enc1_w});
            refs.push_back({"backbone.enc1.b", &backbone.enc1.b, &g.d_enc1_b});
            refs.push_back({"backbone.enc2.w", &backbone.enc2.w, &g.d_enc2_w});
            refs.push_back({"backbone.enc2.b", &backbone.enc2.b, &g.d_enc2_b});
        }
    }
    refs.push_back({"head.dense.w", &head.dense.w, &g.d_dense_w});
    refs.push_back({"head.dense.b", &head.dense.b, &g.d_dense_b});
    if (head.ln) {
        refs.push_back({"head.ln.gamma", &head.ln->gamma, &g.d_gamma});
        refs.push_back({"head.ln.beta", &head.ln->beta, &g.d_beta});
    }
    if (!tied()) {
        refs.push_back({"head.predictor", head.predictor.get(), &g.d_predictor});
    }
    if (head.has_bias()) {
        refs.push_back({"head.bias", &head.predictor_bias, &g.d_bias});
    }
    return refs;
}

Model Model::clone() const {
    Model copy;
    copy.has_backbone_ = has_backbone_;
    copy.head = head;
    if (has_backbone_) {
        copy.backbone = backbone;
        copy.backbone.embedding = std::make_shared<RealMatrix>(*backbone.embedding);
        if (tied()) {
            copy.head.predictor = copy.backbone.embedding;
        } else if (head.predictor) {
            copy.head.predictor = std::make_shared<RealMatrix>(*head.predictor);
        }
    } else if (head.predictor) {
        copy.head.predictor = std::make_shared<RealMatrix>(*head.predictor);
    }
    return copy;
}

}  // namespace glee
