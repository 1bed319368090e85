#pragma once

// Classifier-head variants built over the backbone: the pooled-representation
// head (dense -> Tanh/ReLU -> optional LayerNorm -> class predictor), the
// masked-token head (dense -> GELU -> LayerNorm -> vocabulary predictor ->
// verbalizer reduction), and the hybrid that runs the pooled-style head on the
// [MASK] representation. All variants expose one forward/backward interface so
// the trainer and the analyzer never branch on head internals.

#include <memory>
#include <optional>

#include "glee/backbone.hpp"
#include "glee/prompt.hpp"

namespace glee {

enum class HeadScheme { Cls, Mlm, Hybrid };
enum class InputRepr { Cls, Mask };
enum class LnMode { None, Fresh, Pretrained };

struct HeadSpec {
    HeadScheme scheme = HeadScheme::Cls;
    Activation activation = Activation::Tanh;  // Cls/Hybrid; Mlm always GELU
    LnMode ln_mode = LnMode::None;             // Cls/Hybrid; Mlm always has LN
    bool tied = true;                          // Mlm only
    InputRepr input_repr = InputRepr::Cls;

    // Throws ConfigError when the combination is internally inconsistent
    // (e.g. a Cls head reading the mask representation, or a GELU Cls head).
    void validate() const;

    static HeadSpec cls(Activation act, LnMode ln = LnMode::None);
    static HeadSpec hybrid(Activation act, LnMode ln = LnMode::None);
    static HeadSpec mlm(bool tied = true);
};

struct HeadParams {
    HeadSpec spec;
    std::size_t num_classes = 0;
    LinearParams dense;                      // [d x d]
    std::optional<LayerNormParams> ln;       // always set for Mlm
    std::shared_ptr<RealMatrix> predictor;   // [C x d] class rows, or [V x d] for Mlm
    RealMatrix predictor_bias;               // [1 x C] for Cls/Hybrid; empty for Mlm
    Verbalizer verbalizer;                   // Mlm only

    bool has_bias() const { return predictor_bias.rows != 0; }
    std::size_t dim() const { return dense.w.rows; }

    // Deep copy; a tied predictor becomes an independent matrix.
    HeadParams clone() const;
};

// Constructs head parameters for a spec. Cls/Hybrid draw dense and predictor
// weights from the seed in a fixed order, so two specs differing only in
// activation or LN mode share initializations exactly. The Mlm head copies the
// backbone's masked-token dense/LN weights and binds the predictor to the
// embedding table (aliased when tied, deep-copied when untied); `verbalizer`
// is required for Mlm and ignored otherwise.
HeadParams build_head(const HeadSpec& spec, const BackboneParams& backbone,
                      std::size_t num_classes, std::uint64_t seed,
                      const Verbalizer& verbalizer = Verbalizer());

struct HeadCache {
    RealMatrix input;         // selected representation fed to the head
    RealMatrix t1;            // dense pre-activation (Cls/Hybrid)
    LayerNormCache ln;        // Cls/Hybrid with LN
    RealMatrix features;      // pre-predictor feature vector
    RealMatrix token_logits;  // Mlm only, [n x V]
    MlmTrunkCache trunk;      // Mlm only
};

// Per-class logits [n x C]. Heads reading the mask representation throw
// InputStructureError when the batch carries none (inputs not prompt-rendered).
RealMatrix head_forward(const HeadParams& head, const EncodedBatch& batch,
                        HeadCache* cache = nullptr);

// Same computation over raw feature vectors (feature-level datasets bypass the
// backbone entirely).
RealMatrix head_forward_features(const HeadParams& head, const RealMatrix& input,
                                 HeadCache* cache = nullptr);

struct HeadGrads {
    RealMatrix dinput;
    RealMatrix ddense_w, ddense_b;
    RealMatrix dgamma, dbeta;    // only when LN present
    RealMatrix dpredictor;
    RealMatrix dbias;            // only when bias present
};

HeadGrads head_backward(const HeadParams& head, const HeadCache& cache,
                        const RealMatrix& dlogits);

// Class logit = arithmetic mean of the class's token logits (pre-softmax).
RealMatrix verbalizer_reduce(const RealMatrix& token_logits, const Verbalizer& v);
RealMatrix verbalizer_reduce_backward(const RealMatrix& dclass_logits, const Verbalizer& v,
                                      std::size_t vocab_size);

// Mean of the verbalizer-token predictor rows: the class's effective weight
// vector in a masked-token head, used for norm profiling and calibration.
RealMatrix effective_class_rows(const HeadParams& head);

std::string head_scheme_name(HeadScheme scheme);

}  // namespace glee
