#include "glee/heads.hpp"

#include <cmath>

#include "glee/error.hpp"
#include "glee/rng.hpp"

namespace glee {

void HeadSpec::validate() const {
    switch (scheme) {
        case HeadScheme::Cls:
            if (input_repr != InputRepr::Cls) {
                throw ConfigError("Cls head must read the pooled representation");
            }
            break;
        case HeadScheme::Hybrid:
        case HeadScheme::Mlm:
            if (input_repr != InputRepr::Mask) {
                throw ConfigError(head_scheme_name(scheme) +
                                  " head must read the mask representation");
            }
            break;
    }
    if (scheme == HeadScheme::Mlm) {
        if (activation != Activation::Gelu) {
            throw ConfigError("Mlm head activation is fixed to GELU");
        }
    } else {
        if (activation == Activation::Gelu) {
            throw ConfigError("Cls/Hybrid heads use Tanh or ReLU");
        }
    }
}

HeadSpec HeadSpec::cls(Activation act, LnMode ln) {
    HeadSpec s;
    s.scheme = HeadScheme::Cls;
    s.activation = act;
    s.ln_mode = ln;
    s.input_repr = InputRepr::Cls;
    return s;
}

HeadSpec HeadSpec::hybrid(Activation act, LnMode ln) {
    HeadSpec s;
    s.scheme = HeadScheme::Hybrid;
    s.activation = act;
    s.ln_mode = ln;
    s.input_repr = InputRepr::Mask;
    return s;
}

HeadSpec HeadSpec::mlm(bool tied) {
    HeadSpec s;
    s.scheme = HeadScheme::Mlm;
    s.activation = Activation::Gelu;
    s.ln_mode = LnMode::Pretrained;
    s.tied = tied;
    s.input_repr = InputRepr::Mask;
    return s;
}

HeadParams HeadParams::clone() const {
    HeadParams copy = *this;
    if (predictor) copy.predictor = std::make_shared<RealMatrix>(*predictor);
    return copy;
}

std::string head_scheme_name(HeadScheme scheme) {
    switch (scheme) {
        case HeadScheme::Cls: return "Cls";
        case HeadScheme::Mlm: return "Mlm";
        case HeadScheme::Hybrid: return "Hybrid";
    }
    return "?";
}

HeadParams build_head(const HeadSpec& spec, const BackboneParams& backbone,
                      std::size_t num_classes, std::uint64_t seed,
                      const Verbalizer& verbalizer) {
    spec.validate();
    if (num_classes < 2) throw ConfigError("build_head: need at least 2 classes");
    const std::size_t d = backbone.dim();
    if (d == 0) throw ConfigError("build_head: backbone has no embedding");

    HeadParams head;
    head.spec = spec;
    head.num_classes = num_classes;

    if (spec.scheme == HeadScheme::Mlm) {
        head.dense = backbone.mlm_dense;  // continues training a copy
        head.ln = backbone.mlm_ln;
        head.predictor = spec.tied ? backbone.embedding
                                   : std::make_shared<RealMatrix>(*backbone.embedding);
        if (verbalizer.num_classes() != num_classes) {
            throw ConfigError("build_head: Mlm head needs a verbalizer covering " +
                              std::to_string(num_classes) + " classes, got " +
                              std::to_string(verbalizer.num_classes()));
        }
        for (const auto& [cls, tokens] : verbalizer.classes()) {
            for (int t : tokens) {
                if (static_cast<std::size_t>(t) >= backbone.vocab_size()) {
                    throw VerbalizerError("build_head: verbalizer token id " +
                                          std::to_string(t) + " outside vocabulary");
                }
            }
        }
        head.verbalizer = verbalizer;
        return head;
    }

    // Cls/Hybrid: fixed draw order (dense then predictor) independent of
    // activation and LN mode, so ablation pairs share initializations.
    Rng rng(mix_seed(seed, 0x4ead));
    auto normal_matrix = [&](std::size_t r, std::size_t c) {
        RealMatrix m(r, c);
        for (auto& v : m.data) v = 0.02 * normal01(rng);
        return m;
    };
    head.dense = {normal_matrix(d, d), RealMatrix(1, d)};
    head.predictor = std::make_shared<RealMatrix>(normal_matrix(num_classes, d));
    head.predictor_bias = RealMatrix(1, num_classes);

    switch (spec.ln_mode) {
        case LnMode::None:
            break;
        case LnMode::Fresh:
            head.ln = LayerNormParams{RealMatrix(1, d, 1.0), RealMatrix(1, d, 0.0)};
            break;
        case LnMode::Pretrained:
            if (backbone.provenance != Provenance::Pretrained) {
                throw ConfigError(
                    "build_head: pretrained LN requested on a randomly initialized backbone");
            }
            head.ln = backbone.mlm_ln;
            break;
    }
    return head;
}

RealMatrix verbalizer_reduce(const RealMatrix& token_logits, const Verbalizer& v) {
    const std::size_t C = v.num_classes();
    if (C == 0) throw VerbalizerError("verbalizer_reduce: empty verbalizer");
    RealMatrix out(token_logits.rows, C);
    for (const auto& [cls, tokens] : v.classes()) {
        if (tokens.empty()) {
            throw VerbalizerError("verbalizer_reduce: class " + std::to_string(cls) +
                                  " has no tokens");
        }
        for (int t : tokens) {
            if (t < 0 || static_cast<std::size_t>(t) >= token_logits.cols) {
                throw VerbalizerError("verbalizer_reduce: token id " + std::to_string(t) +
                                      " outside the logit matrix (" +
                                      std::to_string(token_logits.cols) + " columns)");
            }
        }
        const double inv = 1.0 / static_cast<double>(tokens.size());
        for (std::size_t i = 0; i < token_logits.rows; ++i) {
            double sum = 0.0;
            for (int t : tokens) sum += token_logits.at(i, static_cast<std::size_t>(t));
            out.at(i, static_cast<std::size_t>(cls)) = sum * inv;
        }
    }
    return out;
}

RealMatrix verbalizer_reduce_backward(const RealMatrix& dclass_logits, const Verbalizer& v,
                                      std::size_t vocab_size) {
    require_shape(dclass_logits, dclass_logits.rows, v.num_classes(),
                  "verbalizer_reduce_backward");
    RealMatrix dtok(dclass_logits.rows, vocab_size);
    for (const auto& [cls, tokens] : v.classes()) {
        const double inv = 1.0 / static_cast<double>(tokens.size());
        for (std::size_t i = 0; i < dclass_logits.rows; ++i) {
            const double g = dclass_logits.at(i, static_cast<std::size_t>(cls)) * inv;
            for (int t : tokens) dtok.at(i, static_cast<std::size_t>(t)) += g;
        }
    }
    return dtok;
}

namespace {

const RealMatrix& select_input(const HeadParams& head, const EncodedBatch& batch) {
    if (head.spec.input_repr == InputRepr::Mask) {
        if (!batch.mask_repr) {
            throw InputStructureError(
                head_scheme_name(head.spec.scheme) +
                " head consumes the [MASK] representation, but the batch has none "
                "(inputs are not prompt-rendered)");
        }
        return *batch.mask_repr;
    }
    return batch.cls_repr;
}

}  // namespace

RealMatrix head_forward_features(const HeadParams& head, const RealMatrix& input,
                                 HeadCache* cache) {
    require_shape(input, input.rows, head.dim(), "head_forward input");
    HeadCache local;
    HeadCache& c = cache ? *cache : local;
    c.input = input;

    if (head.spec.scheme == HeadScheme::Mlm) {
        if (!head.ln) throw StateError("Mlm head without LayerNorm parameters");
        c.token_logits =
            mlm_trunk_forward(head.dense, *head.ln, *head.predictor, input, &c.trunk);
        c.features = c.trunk.features;
        return verbalizer_reduce(c.token_logits, head.verbalizer);
    }

    c.t1 = linear_forward(input, head.dense.w, head.dense.b);
    RealMatrix act = activation_forward(c.t1, head.spec.activation);
    if (head.ln) {
        c.features = layer_norm_forward(act, head.ln->gamma, head.ln->beta, kLayerNormEps, &c.ln);
    } else {
        c.features = std::move(act);
    }
    return predictor_forward(c.features, *head.predictor,
                             head.has_bias() ? &head.predictor_bias : nullptr);
}

RealMatrix head_forward(const HeadParams& head, const EncodedBatch& batch, HeadCache* cache) {
    return head_forward_features(head, select_input(head, batch), cache);
}

HeadGrads head_backward(const HeadParams& head, const HeadCache& cache,
                        const RealMatrix& dlogits) {
    if (cache.input.rows == 0) throw StateError("head_backward before head_forward");
    HeadGrads g;

    if (head.spec.scheme == HeadScheme::Mlm) {
        RealMatrix dtok =
            verbalizer_reduce_backward(dlogits, head.verbalizer, head.predictor->rows);
        MlmTrunkGrads tg =
            mlm_trunk_backward(head.dense, *head.ln, *head.predictor, cache.trunk, dtok);
        g.dinput = std::move(tg.dinput);
        g.ddense_w = std::move(tg.ddense_w);
        g.ddense_b = std::move(tg.ddense_b);
        g.dgamma = std::move(tg.dgamma);
        g.dbeta = std::move(tg.dbeta);
        g.dpredictor = std::move(tg.dtable);
        return g;
    }

    PredictorGrads pg =
        predictor_backward(cache.features, *head.predictor, dlogits, head.has_bias());
    g.dpredictor = std::move(pg.dp);
    g.dbias = std::move(pg.dbias);
    RealMatrix dact;
    if (head.ln) {
        LayerNormGrads lg = layer_norm_backward(cache.ln, head.ln->gamma, pg.dh);
        g.dgamma = std::move(lg.dgamma);
        g.dbeta = std::move(lg.dbeta);
        dact = std::move(lg.dx);
    } else {
        dact = std::move(pg.dh);
    }
    RealMatrix dt1 = activation_backward(cache.t1, dact, head.spec.activation);
    LinearGrads dl = linear_backward(cache.input, head.dense.w, dt1);
    g.ddense_w = std::move(dl.dw);
    g.ddense_b = std::move(dl.db);
    g.dinput = std::move(dl.dx);
    return g;
}

RealMatrix effective_class_rows(const HeadParams& head) {
    const std::size_t d = head.dim();
    if (head.spec.scheme != HeadScheme::Mlm) {
        return *head.predictor;
    }
    RealMatrix rows(head.num_classes, d);
    for (const auto& [cls, tokens] : head.verbalizer.classes()) {
        const double inv = 1.0 / static_cast<double>(tokens.size());
        double* out = rows.row(static_cast<std::size_t>(cls));
        for (int t : tokens) {
            const double* w = head.predictor->row(static_cast<std::size_t>(t));
            for (std::size_t j = 0; j < d; ++j) out[j] += w[j] * inv;
        }
    }
    return rows;
}

}  // namespace glee
