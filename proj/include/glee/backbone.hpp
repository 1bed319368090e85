#pragma once

// Tiny trainable encoder: mean-pooled token embeddings pushed through a
// two-layer GELU MLP, plus a masked-token head for synthetic pretraining.
// The embedding table lives behind a shared_ptr so a vocabulary-sized
// predictor can alias it (tied weights).

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "glee/data.hpp"
#include "glee/kernels.hpp"
#include "glee/matrix.hpp"
#include "glee/vocab.hpp"

namespace glee {

struct LinearParams {
    RealMatrix w;  // [in x out]
    RealMatrix b;  // [1 x out]
};

struct LayerNormParams {
    RealMatrix gamma;  // [1 x d]
    RealMatrix beta;   // [1 x d]
};

enum class Provenance { Random, Pretrained };

struct BackboneParams {
    std::shared_ptr<RealMatrix> embedding;  // [V x d]; row kPad frozen at zero
    LinearParams enc1;                      // [d x d]
    LinearParams enc2;                      // [d x d]
    LinearParams mlm_dense;                 // [d x d]
    LayerNormParams mlm_ln;                 // [1 x d]
    Provenance provenance = Provenance::Random;

    std::size_t vocab_size() const { return embedding ? embedding->rows : 0; }
    std::size_t dim() const { return embedding ? embedding->cols : 0; }

    static BackboneParams random_init(std::size_t vocab_size, std::size_t dim,
                                      std::uint64_t seed);

    // Deep copy with its own embedding storage.
    BackboneParams clone() const;
};

// Intermediate values kept for the backward pass of one encoder run.
struct EncodePath {
    RealMatrix pooled;  // encoder input
    RealMatrix a1;      // pre-activation of layer 1
    RealMatrix h1;      // GELU(a1)
    RealMatrix repr;    // encoder output
};

struct EncodedBatch {
    RealMatrix cls_repr;                 // [n x d]
    std::optional<RealMatrix> mask_repr; // [n x d]; present iff every example carries one [MASK]
    std::vector<std::vector<int>> tokens;
    std::vector<std::size_t> non_pad;    // per-example non-[PAD] token count
    EncodePath cls_path;
    std::optional<EncodePath> mask_path;
};

// Validates ids, rejects all-[PAD] rows, and requires the batch to be uniform:
// either no example contains [MASK] (mask_repr absent) or every example
// contains exactly one (mask_repr present). Anything else is an input
// structure error.
EncodedBatch encode(const std::vector<std::vector<int>>& batch, const BackboneParams& params);

struct PoolResult {
    RealMatrix pooled;                // [n x d] mean of non-[PAD] embeddings
    std::vector<std::size_t> non_pad;
};

PoolResult pool_forward(const std::vector<std::vector<int>>& batch, const RealMatrix& embedding);

// Accumulates dpooled back into per-token embedding rows (1/m each).
void scatter_pool_gradient(const std::vector<std::vector<int>>& batch,
                           const std::vector<std::size_t>& non_pad,
                           const RealMatrix& dpooled, RealMatrix& dembedding);

EncodePath encoder_forward(const BackboneParams& params, RealMatrix pooled);

struct EncoderGrads {
    RealMatrix dw1, db1, dw2, db2;
    RealMatrix dpooled;
};

EncoderGrads encoder_backward(const BackboneParams& params, const EncodePath& path,
                              const RealMatrix& drepr);

// dense -> GELU -> LayerNorm -> scores against a table whose rows are the
// candidate vectors. Shared by masked-token pretraining and the masked-token
// classifier head (where the table may alias the embedding).
struct MlmTrunkCache {
    RealMatrix input;
    RealMatrix t1;        // dense pre-activation
    RealMatrix g;         // GELU(t1)
    LayerNormCache ln;
    RealMatrix features;  // LayerNorm output
};

RealMatrix mlm_trunk_forward(const LinearParams& dense, const LayerNormParams& ln,
                             const RealMatrix& table, const RealMatrix& input,
                             MlmTrunkCache* cache);

struct MlmTrunkGrads {
    RealMatrix dinput;
    RealMatrix ddense_w, ddense_b;
    RealMatrix dgamma, dbeta;
    RealMatrix dtable;
};

MlmTrunkGrads mlm_trunk_backward(const LinearParams& dense, const LayerNormParams& ln,
                                 const RealMatrix& table, const MlmTrunkCache& cache,
                                 const RealMatrix& dlogits);

struct PretrainConfig {
    std::size_t dim = 32;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 0;
};

struct PretrainResult {
    BackboneParams params;
    std::vector<double> epoch_losses;  // mean batch loss per epoch
    double initial_loss = 0.0;         // first batch, before any update
    double final_masked_accuracy = 0.0;
};

// Masks one random content token per sequence and trains the backbone plus
// the tied vocabulary predictor to recover it.
PretrainResult mlm_pretrain(const Corpus& corpus, const Vocabulary& vocab,
                            const PretrainConfig& cfg);

}  // namespace glee
