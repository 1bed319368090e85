#include "glee/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glee/error.hpp"
#include "glee/optim.hpp"
#include "glee/rng.hpp"

namespace glee {

BackboneParams BackboneParams::random_init(std::size_t vocab_size, std::size_t dim,
                                           std::uint64_t seed) {
    if (dim < 4) throw ConfigError("backbone dim must be >= 4");
    if (vocab_size < Vocabulary::kNumSpecials + 1 || vocab_size > Vocabulary::kMaxSize) {
        throw ConfigError("backbone vocab size out of range: " + std::to_string(vocab_size));
    }
    Rng rng(mix_seed(seed, 0xb0));
    auto normal_matrix = [&](std::size_t r, std::size_t c) {
        RealMatrix m(r, c);
        for (auto& v : m.data) v = 0.02 * normal01(rng);
        return m;
    };

    BackboneParams p;
    p.embedding = std::make_shared<RealMatrix>(normal_matrix(vocab_size, dim));
    for (std::size_t j = 0; j < dim; ++j) p.embedding->at(Vocabulary::kPad, j) = 0.0;
    p.enc1 = {normal_matrix(dim, dim), RealMatrix(1, dim)};
    p.enc2 = {normal_matrix(dim, dim), RealMatrix(1, dim)};
    p.mlm_dense = {normal_matrix(dim, dim), RealMatrix(1, dim)};
    p.mlm_ln = {RealMatrix(1, dim, 1.0), RealMatrix(1, dim, 0.0)};
    p.provenance = Provenance::Random;
    return p;
}

BackboneParams BackboneParams::clone() const {
    BackboneParams copy = *this;
    if (embedding) copy.embedding = std::make_shared<RealMatrix>(*embedding);
    return copy;
}

PoolResult pool_forward(const std::vector<std::vector<int>>& batch,
                        const RealMatrix& embedding) {
    if (batch.empty()) throw EmptyInputError("encode: empty batch");
    const std::size_t d = embedding.cols;
    PoolResult res;
    res.pooled = RealMatrix(batch.size(), d);
    res.non_pad.assign(batch.size(), 0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double* out = res.pooled.row(i);
        for (int id : batch[i]) {
            if (id < 0 || static_cast<std::size_t>(id) >= embedding.rows) {
                throw IndexError("encode: token id " + std::to_string(id) +
                                 " outside vocabulary of " + std::to_string(embedding.rows));
            }
            if (id == Vocabulary::kPad) continue;
            ++res.non_pad[i];
            const double* e = embedding.row(static_cast<std::size_t>(id));
            for (std::size_t j = 0; j < d; ++j) out[j] += e[j];
        }
        if (res.non_pad[i] == 0) {
            throw EmptyInputError("encode: example " + std::to_string(i) +
                                  " has no non-[PAD] tokens");
        }
        const double inv = 1.0 / static_cast<double>(res.non_pad[i]);
        for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
    }
    return res;
}

void scatter_pool_gradient(const std::vector<std::vector<int>>& batch,
                           const std::vector<std::size_t>& non_pad,
                           const RealMatrix& dpooled, RealMatrix& dembedding) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double inv = 1.0 / static_cast<double>(non_pad[i]);
        const double* d = dpooled.row(i);
        for (int id : batch[i]) {
            if (id == Vocabulary::kPad) continue;
            double* g = dembedding.row(static_cast<std::size_t>(id));
            for (std::size_t j = 0; j < dpooled.cols; ++j) g[j] += d[j] * inv;
        }
    }
}

EncodePath encoder_forward(const BackboneParams& params, RealMatrix pooled) {
    EncodePath path;
    path.pooled = std::move(pooled);
    path.a1 = linear_forward(path.pooled, params.enc1.w, params.enc1.b);
    path.h1 = activation_forward(path.a1, Activation::Gelu);
    path.repr = linear_forward(path.h1, params.enc2.w, params.enc2.b);
    return path;
}

EncoderGrads encoder_backward(const BackboneParams& params, const EncodePath& path,
                              const RealMatrix& drepr) {
    EncoderGrads g;
    LinearGrads l2 = linear_backward(path.h1, params.enc2.w, drepr);
    g.dw2 = std::move(l2.dw);
    g.db2 = std::move(l2.db);
    RealMatrix da1 = activation_backward(path.a1, l2.dx, Activation::Gelu);
    LinearGrads l1 = linear_backward(path.pooled, params.enc1.w, da1);
    g.dw1 = std::move(l1.dw);
    g.db1 = std::move(l1.db);
    g.dpooled = std::move(l1.dx);
    return g;
}

EncodedBatch encode(const std::vector<std::vector<int>>& batch, const BackboneParams& params) {
    PoolResult pool = pool_forward(batch, *params.embedding);

    std::size_t masked_examples = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::size_t masks = static_cast<std::size_t>(
            std::count(batch[i].begin(), batch[i].end(), Vocabulary::kMask));
        if (masks > 1) {
            throw InputStructureError("encode: example " + std::to_string(i) + " carries " +
                                      std::to_string(masks) + " [MASK] tokens, expected one");
        }
        masked_examples += masks;
    }
    if (masked_examples != 0 && masked_examples != batch.size()) {
        throw InputStructureError("encode: batch mixes masked and unmasked examples");
    }

    EncodedBatch out;
    out.tokens = batch;
    out.non_pad = pool.non_pad;
    out.cls_path = encoder_forward(params, pool.pooled);
    out.cls_repr = out.cls_path.repr;

    if (masked_examples == batch.size()) {
        RealMatrix tagged = pool.pooled;
        const double* mask_emb = params.embedding->row(Vocabulary::kMask);
        for (std::size_t i = 0; i < tagged.rows; ++i) {
            double* row = tagged.row(i);
            for (std::size_t j = 0; j < tagged.cols; ++j) row[j] += mask_emb[j];
        }
        out.mask_path = encoder_forward(params, std::move(tagged));
        out.mask_repr = out.mask_path->repr;
    }
    return out;
}

RealMatrix mlm_trunk_forward(const LinearParams& dense, const LayerNormParams& ln,
                             const RealMatrix& table, const RealMatrix& input,
                             MlmTrunkCache* cache) {
    MlmTrunkCache local;
    MlmTrunkCache& c = cache ? *cache : local;
    c.input = input;
    c.t1 = linear_forward(input, dense.w, dense.b);
    c.g = activation_forward(c.t1, Activation::Gelu);
    c.features = layer_norm_forward(c.g, ln.gamma, ln.beta, kLayerNormEps, &c.ln);
    return predictor_forward(c.features, table, nullptr);
}

MlmTrunkGrads mlm_trunk_backward(const LinearParams& dense, const LayerNormParams& ln,
                                 const RealMatrix& table, const MlmTrunkCache& cache,
                                 const RealMatrix& dlogits) {
    MlmTrunkGrads g;
    PredictorGrads pg = predictor_backward(cache.features, table, dlogits, false);
    g.dtable = std::move(pg.dp);
    LayerNormGrads lg = layer_norm_backward(cache.ln, ln.gamma, pg.dh);
    g.dgamma = std::move(lg.dgamma);
    g.dbeta = std::move(lg.dbeta);
    RealMatrix dt1 = activation_backward(cache.t1, lg.dx, Activation::Gelu);
    LinearGrads dg = linear_backward(cache.input, dense.w, dt1);
    g.ddense_w = std::move(dg.dw);
    g.ddense_b = std::move(dg.db);
    g.dinput = std::move(dg.dx);
    return g;
}

namespace {

struct MaskedBatch {
    std::vector<std::vector<int>> sequences;
    std::vector<int> targets;
};

// Replaces one random non-special token per sequence with [MASK]. Sequences
// without any content token are dropped.
MaskedBatch mask_batch(const Corpus& corpus, const std::vector<std::size_t>& indices,
                       Rng& rng) {
    MaskedBatch out;
    for (std::size_t idx : indices) {
        const auto& tokens = corpus.examples[idx].tokens;
        std::vector<std::size_t> maskable;
        for (std::size_t p = 0; p < tokens.size(); ++p) {
            if (tokens[p] >= static_cast<int>(Vocabulary::kNumSpecials)) maskable.push_back(p);
        }
        if (maskable.empty()) continue;
        std::size_t pos = maskable[static_cast<std::size_t>(uniform_below(rng, maskable.size()))];
        std::vector<int> seq = tokens;
        out.targets.push_back(seq[pos]);
        seq[pos] = Vocabulary::kMask;
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

}  // namespace

PretrainResult mlm_pretrain(const Corpus& corpus, const Vocabulary& vocab,
                            const PretrainConfig& cfg) {
    if (corpus.examples.empty()) throw ConfigError("mlm_pretrain: empty corpus");

    PretrainResult res;
    res.params = BackboneParams::random_init(vocab.size(), cfg.dim, cfg.seed);
    BackboneParams& p = res.params;
    const std::size_t d = cfg.dim;

    RealMatrix d_embedding, d_w1, d_b1, d_w2, d_b2, d_dw, d_db, d_gamma, d_beta;
    std::vector<ParamRef> refs = {
        {"backbone.embedding", p.embedding.get(), &d_embedding},
        {"backbone.enc1.w", &p.enc1.w, &d_w1},
        {"backbone.enc1.b", &p.enc1.b, &d_b1},
        {"backbone.enc2.w", &p.enc2.w, &d_w2},
        {"backbone.enc2.b", &p.enc2.b, &d_b2},
        {"backbone.mlm_dense.w", &p.mlm_dense.w, &d_dw},
        {"backbone.mlm_dense.b", &p.mlm_dense.b, &d_db},
        {"backbone.mlm_ln.gamma", &p.mlm_ln.gamma, &d_gamma},
        {"backbone.mlm_ln.beta", &p.mlm_ln.beta, &d_beta},
    };

    AdamW opt{AdamConfig{}};
    bool first_batch = true;

    std::vector<std::size_t> indices(corpus.examples.size());
    std::iota(indices.begin(), indices.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, 1000 + epoch));
        shuffle(indices, rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < indices.size(); start += cfg.batch_size) {
            std::size_t end = std::min(indices.size(), start + cfg.batch_size);
            std::vector<std::size_t> window(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                            indices.begin() + static_cast<std::ptrdiff_t>(end));
            MaskedBatch mb = mask_batch(corpus, window, rng);
            if (mb.sequences.empty()) continue;

            PoolResult pool = pool_forward(mb.sequences, *p.embedding);
            RealMatrix tagged = pool.pooled;
            for (std::size_t i = 0; i < tagged.rows; ++i) {
                const double* mask_emb = p.embedding->row(Vocabulary::kMask);
                double* row = tagged.row(i);
                for (std::size_t j = 0; j < d; ++j) row[j] += mask_emb[j];
            }
            EncodePath path = encoder_forward(p, std::move(tagged));
            MlmTrunkCache trunk;
            RealMatrix logits =
                mlm_trunk_forward(p.mlm_dense, p.mlm_ln, *p.embedding, path.repr, &trunk);
            auto ce = softmax_cross_entropy(logits, mb.targets);
            if (first_batch) {
                res.initial_loss = ce.loss;
                first_batch = false;
            }
            epoch_loss += ce.loss;
            ++batches;

            d_embedding = RealMatrix(p.embedding->rows, d);
            MlmTrunkGrads tg =
                mlm_trunk_backward(p.mlm_dense, p.mlm_ln, *p.embedding, trunk, ce.dlogits);
            for (std::size_t i = 0; i < tg.dtable.data.size(); ++i) {
                d_embedding.data[i] += tg.dtable.data[i];
            }
            EncoderGrads eg = encoder_backward(p, path, tg.dinput);
            // Mask-tag site: the [MASK] embedding was added to every pooled row.
            for (std::size_t i = 0; i < eg.dpooled.rows; ++i) {
                double* gm = d_embedding.row(Vocabulary::kMask);
                const double* row = eg.dpooled.row(i);
                for (std::size_t j = 0; j < d; ++j) gm[j] += row[j];
            }
            scatter_pool_gradient(mb.sequences, pool.non_pad, eg.dpooled, d_embedding);
            d_w1 = std::move(eg.dw1);
            d_b1 = std::move(eg.db1);
            d_w2 = std::move(eg.dw2);
            d_b2 = std::move(eg.db2);
            d_dw = std::move(tg.ddense_w);
            d_db = std::move(tg.ddense_b);
            d_gamma = std::move(tg.dgamma);
            d_beta = std::move(tg.dbeta);

            // [PAD] is frozen.
            for (std::size_t j = 0; j < d; ++j) d_embedding.at(Vocabulary::kPad, j) = 0.0;

            clip_gradients(refs, cfg.grad_clip_norm);
            opt.step(refs, cfg.learning_rate);
        }
        res.epoch_losses.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
    }

    // Held-out style probe with a fixed masking stream.
    Rng probe_rng(mix_seed(cfg.seed, 0xacc));
    std::vector<std::size_t> all(corpus.examples.size());
    std::iota(all.begin(), all.end(), 0);
    MaskedBatch probe = mask_batch(corpus, all, probe_rng);
    if (!probe.sequences.empty()) {
        PoolResult pool = pool_forward(probe.sequences, *p.embedding);
        RealMatrix tagged = pool.pooled;
        for (std::size_t i = 0; i < tagged.rows; ++i) {
            const double* mask_emb = p.embedding->row(Vocabulary::kMask);
            double* row = tagged.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] += mask_emb[j];
        }
        EncodePath path = encoder_forward(p, std::move(tagged));
        RealMatrix logits =
            mlm_trunk_forward(p.mlm_dense, p.mlm_ln, *p.embedding, path.repr, nullptr);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < logits.rows; ++i) {
            const double* z = logits.row(i);
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.cols; ++j) {
                if (z[j] > z[best]) best = j;
            }
            if (static_cast<int>(best) == probe.targets[i]) ++hits;
        }
        res.final_masked_accuracy =
            static_cast<double>(hits) / static_cast<double>(logits.rows);
    }

    p.provenance = Provenance::Pretrained;
    return res;
}

}  // namespace glee
