#include "glee/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glee/error.hpp"
#include "glee/rng.hpp"
#include "glee/serialize.hpp"

namespace glee {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
    if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
    if (patience > max_epochs) throw ConfigError("train: patience exceeds max_epochs");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("train: learning_rate must be finite and >= 0");
    }
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("train: grad_clip_norm must be positive");
}

double lr_at_step(const TrainConfig& cfg, std::uint64_t completed_steps,
                  std::uint64_t warmup_steps) {
    if (warmup_steps == 0) return cfg.learning_rate;
    const double frac =
        static_cast<double>(completed_steps) / static_cast<double>(warmup_steps);
    return cfg.learning_rate * std::min(1.0, frac);
}

TrainState train_init(Model model, const TrainConfig& cfg) {
    cfg.validate();
    TrainState st{std::move(model), Model::feature_model(HeadParams{}), AdamW{}, 0, 0,
                  -1.0, 0, 0, false, {}};
    st.best_model = st.model.clone();
    AdamConfig ac;
    ac.weight_decay = cfg.weight_decay;
    st.opt = AdamW(ac);
    return st;
}

namespace {

// The loop body is shared between token-corpus and feature-level training;
// a provider supplies batches and dev predictions.
struct TokenProvider {
    const Dataset& data;

    std::size_t n_train() const { return data.train.examples.size(); }
    std::size_t n_dev() const { return data.dev.examples.size(); }
    std::size_t num_classes() const { return data.num_classes; }

    RealMatrix forward_train(Model& model, const std::vector<std::size_t>& order,
                             std::size_t start, std::size_t end,
                             std::vector<int>& targets) const {
        std::vector<std::vector<int>> inputs;
        inputs.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            const auto& ex = data.train.examples[order[i]];
            inputs.push_back(ex.tokens);
            targets.push_back(ex.label);
        }
        return model.forward(inputs);
    }

    std::vector<int> dev_gold() const {
        std::vector<int> gold;
        for (const auto& ex : data.dev.examples) gold.push_back(ex.label);
        return gold;
    }

    std::vector<int> dev_predict(Model& model) const {
        std::vector<std::vector<int>> inputs;
        for (const auto& ex : data.dev.examples) inputs.push_back(ex.tokens);
        return predict(model, inputs);
    }
};

struct FeatureProvider {
    const FeatureSplits& data;

    std::size_t n_train() const { return data.train.size(); }
    std::size_t n_dev() const { return data.dev.size(); }
    std::size_t num_classes() const { return data.num_classes; }

    RealMatrix forward_train(Model& model, const std::vector<std::size_t>& order,
                             std::size_t start, std::size_t end,
                             std::vector<int>& targets) const {
        RealMatrix batch(end - start, data.train.features.cols);
        for (std::size_t i = start; i < end; ++i) {
            const std::size_t src = order[i];
            std::copy(data.train.features.row(src),
                      data.train.features.row(src) + batch.cols, batch.row(i - start));
            targets.push_back(data.train.labels[src]);
        }
        return model.forward_features(batch);
    }

    std::vector<int> dev_gold() const { return data.dev.labels; }

    std::vector<int> dev_predict(Model& model) const {
        return predict_features(model, data.dev.features);
    }
};

template <typename Provider>
void train_epochs_impl(TrainState& st, const Provider& prov, const TrainConfig& cfg,
                       std::size_t epochs) {
    cfg.validate();
    if (prov.n_train() == 0) throw EmptyInputError("train: empty training split");
    if (prov.n_dev() == 0) {
        throw ConfigError("train: early stopping needs a non-empty dev split");
    }
    if (st.model.num_classes() != prov.num_classes()) {
        throw DimensionError("train: head with " + std::to_string(st.model.num_classes()) +
                             " classes vs corpus with " + std::to_string(prov.num_classes()));
    }

    const std::size_t n = prov.n_train();
    const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::uint64_t warmup_steps =
        static_cast<std::uint64_t>(cfg.warmup_epochs) * steps_per_epoch;

    const std::vector<int> dev_gold = prov.dev_gold();

    std::vector<std::size_t> order(n);
    for (std::size_t done = 0; done < epochs; ++done) {
        if (st.stopped || st.next_epoch >= cfg.max_epochs) return;
        const std::size_t epoch = st.next_epoch;

        Rng rng(mix_seed(cfg.seed, epoch));
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);

        double epoch_loss = 0.0;
        double last_lr = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            std::vector<int> targets;
            targets.reserve(end - start);
            RealMatrix logits = prov.forward_train(st.model, order, start, end, targets);
            LossResult loss = loss_forward_backward(logits, targets, cfg.loss);
            if (!std::isfinite(loss.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batches));
            }
            Gradients grads = st.model.backward(loss.dlogits);
            auto refs = st.model.param_refs(grads, cfg.freeze_backbone);
            clip_gradients(refs, cfg.grad_clip_norm);
            last_lr = lr_at_step(cfg, st.global_step, warmup_steps);
            st.opt.step(refs, last_lr);
            ++st.global_step;
            epoch_loss += loss.loss;
            ++batches;
        }

        std::vector<int> dev_pred = prov.dev_predict(st.model);
        const double dev_macro = macro_f1_score(dev_gold, dev_pred, prov.num_classes());
        std::size_t correct = 0;
        for (std::size_t i = 0; i < dev_gold.size(); ++i) {
            if (dev_gold[i] == dev_pred[i]) ++correct;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = epoch_loss / static_cast<double>(batches);
        log.dev_macro_f1 = dev_macro;
        log.dev_accuracy = static_cast<double>(correct) / static_cast<double>(dev_gold.size());
        log.lr_last = last_lr;
        RealMatrix rows = effective_class_rows(st.model.head);
        for (std::size_t c = 0; c < rows.rows; ++c) {
            log.predictor_norms.push_back(l2_norm(rows.row(c), rows.cols));
        }
        st.log.push_back(std::move(log));

        if (dev_macro > st.best_dev) {
            st.best_dev = dev_macro;
            st.best_epoch = epoch;
            st.best_model = st.model.clone();
            st.stale = 0;
        } else if (++st.stale >= cfg.patience) {
            st.stopped = true;
        }
        st.next_epoch = epoch + 1;
    }
}

}  // namespace

void train_epochs(TrainState& st, const Dataset& data, const TrainConfig& cfg,
                  std::size_t epochs) {
    train_epochs_impl(st, TokenProvider{data}, cfg, epochs);
}

void train_epochs(TrainState& st, const FeatureSplits& data, const TrainConfig& cfg,
                  std::size_t epochs) {
    train_epochs_impl(st, FeatureProvider{data}, cfg, epochs);
}

TrainResult train(Model model, const Dataset& data, const TrainConfig& cfg) {
    TrainState st = train_init(std::move(model), cfg);
    train_epochs(st, data, cfg, cfg.max_epochs);
    TrainResult res{std::move(st.best_model), std::move(st.log), st.best_epoch, st.best_dev,
                    st.next_epoch};
    return res;
}

TrainResult train(Model model, const FeatureSplits& data, const TrainConfig& cfg) {
    TrainState st = train_init(std::move(model), cfg);
    train_epochs(st, data, cfg, cfg.max_epochs);
    TrainResult res{std::move(st.best_model), std::move(st.log), st.best_epoch, st.best_dev,
                    st.next_epoch};
    return res;
}

FeatureSplits split_features(const FeatureDataset& data, std::uint64_t seed) {
    if (data.size() == 0) throw EmptyInputError("split_features: empty dataset");
    const std::size_t C = data.num_classes();
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }

    Rng rng(mix_seed(seed, 0xfea7));
    std::vector<std::size_t> train_idx, dev_idx, test_idx;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        shuffle(members, rng);
        const std::size_t n = members.size();
        const std::size_t n_test = std::max<std::size_t>(1, n / 10);
        std::size_t n_dev = (n > n_test + 1) ? std::max<std::size_t>(1, n / 10) : 0;
        if (n_test + n_dev > n) n_dev = n - n_test;
        std::size_t i = 0;
        for (; i < n_test; ++i) test_idx.push_back(members[i]);
        for (; i < n_test + n_dev; ++i) dev_idx.push_back(members[i]);
        for (; i < n; ++i) train_idx.push_back(members[i]);
    }

    auto take = [&](const std::vector<std::size_t>& idx) {
        RealMatrix feats(idx.size(), data.features.cols);
        std::vector<int> labels(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::copy(data.features.row(idx[i]), data.features.row(idx[i]) + feats.cols,
                      feats.row(i));
            labels[i] = data.labels[idx[i]];
        }
        return make_feature_dataset(std::move(feats), std::move(labels), C);
    };

    FeatureSplits splits{take(train_idx), take(dev_idx), take(test_idx), C};
    return splits;
}

namespace {

void add_scalar_size(BlockFile& f, const std::string& name, std::size_t v) {
    f.add_scalar(name, static_cast<double>(v));
}

std::size_t get_size(const BlockFile& f, const std::string& name) {
    const double v = f.get_scalar(name);
    if (v < 0 || v != std::floor(v)) {
        throw FormatError("checkpoint: " + name + " is not a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

void add_model(BlockFile& f, const std::string& p, const Model& m) {
    f.add_scalar(p + "has_backbone", m.has_backbone() ? 1.0 : 0.0);
    const HeadSpec& s = m.head.spec;
    f.add_scalar(p + "head.scheme", static_cast<double>(s.scheme));
    f.add_scalar(p + "head.activation", static_cast<double>(s.activation));
    f.add_scalar(p + "head.ln_mode", static_cast<double>(s.ln_mode));
    f.add_scalar(p + "head.tied", s.tied ? 1.0 : 0.0);
    f.add_scalar(p + "head.input_repr", static_cast<double>(s.input_repr));
    add_scalar_size(f, p + "head.num_classes", m.head.num_classes);
    if (m.has_backbone()) {
        f.add_scalar(p + "backbone.provenance",
                     m.backbone.provenance == Provenance::Pretrained ? 1.0 : 0.0);
        f.add(p + "backbone.embedding", *m.backbone.embedding);
        f.add(p + "backbone.enc1.w", m.backbone.enc1.w);
        f.add(p + "backbone.enc1.b", m.backbone.enc1.b);
        f.add(p + "backbone.enc2.w", m.backbone.enc2.w);
        f.add(p + "backbone.enc2.b", m.backbone.enc2.b);
        f.add(p + "backbone.mlm_dense.w", m.backbone.mlm_dense.w);
        f.add(p + "backbone.mlm_dense.b", m.backbone.mlm_dense.b);
        f.add(p + "backbone.mlm_ln.gamma", m.backbone.mlm_ln.gamma);
        f.add(p + "backbone.mlm_ln.beta", m.backbone.mlm_ln.beta);
    }
    f.add(p + "head.dense.w", m.head.dense.w);
    f.add(p + "head.dense.b", m.head.dense.b);
    f.add_scalar(p + "head.has_ln", m.head.ln ? 1.0 : 0.0);
    if (m.head.ln) {
        f.add(p + "head.ln.gamma", m.head.ln->gamma);
        f.add(p + "head.ln.beta", m.head.ln->beta);
    }
    if (!m.tied()) f.add(p + "head.predictor", *m.head.predictor);
    f.add_scalar(p + "head.has_bias", m.head.has_bias() ? 1.0 : 0.0);
    if (m.head.has_bias()) f.add(p + "head.bias", m.head.predictor_bias);
    const auto& classes = m.head.verbalizer.classes();
    std::size_t pairs = 0;
    for (const auto& [cls, tokens] : classes) pairs += tokens.size();
    if (pairs != 0) {
        RealMatrix vm(pairs, 2);
        std::size_t i = 0;
        for (const auto& [cls, tokens] : classes) {
            for (int t : tokens) {
                vm.at(i, 0) = static_cast<double>(cls);
                vm.at(i, 1) = static_cast<double>(t);
                ++i;
            }
        }
        f.add(p + "head.verbalizer", std::move(vm));
    }
}

Model read_model(const BlockFile& f, const std::string& p) {
    const bool has_backbone = f.get_scalar(p + "has_backbone") != 0.0;
    HeadParams head;
    head.spec.scheme = static_cast<HeadScheme>(static_cast<int>(f.get_scalar(p + "head.scheme")));
    head.spec.activation =
        static_cast<Activation>(static_cast<int>(f.get_scalar(p + "head.activation")));
    head.spec.ln_mode = static_cast<LnMode>(static_cast<int>(f.get_scalar(p + "head.ln_mode")));
    head.spec.tied = f.get_scalar(p + "head.tied") != 0.0;
    head.spec.input_repr =
        static_cast<InputRepr>(static_cast<int>(f.get_scalar(p + "head.input_repr")));
    head.num_classes = get_size(f, p + "head.num_classes");
    head.dense.w = f.get(p + "head.dense.w");
    head.dense.b = f.get(p + "head.dense.b");
    if (f.get_scalar(p + "head.has_ln") != 0.0) {
        head.ln = LayerNormParams{f.get(p + "head.ln.gamma"), f.get(p + "head.ln.beta")};
    }
    if (f.get_scalar(p + "head.has_bias") != 0.0) {
        head.predictor_bias = f.get(p + "head.bias");
    }

    BackboneParams backbone;
    if (has_backbone) {
        backbone.embedding = std::make_shared<RealMatrix>(f.get(p + "backbone.embedding"));
        backbone.enc1 = {f.get(p + "backbone.enc1.w"), f.get(p + "backbone.enc1.b")};
        backbone.enc2 = {f.get(p + "backbone.enc2.w"), f.get(p + "backbone.enc2.b")};
        backbone.mlm_dense = {f.get(p + "backbone.mlm_dense.w"),
                              f.get(p + "backbone.mlm_dense.b")};
        backbone.mlm_ln = {f.get(p + "backbone.mlm_ln.gamma"), f.get(p + "backbone.mlm_ln.beta")};
        backbone.provenance = f.get_scalar(p + "backbone.provenance") != 0.0
                                  ? Provenance::Pretrained
                                  : Provenance::Random;
    }

    if (f.has(p + "head.verbalizer")) {
        const RealMatrix& vm = f.get(p + "head.verbalizer");
        std::map<int, std::vector<int>> classes;
        for (std::size_t i = 0; i < vm.rows; ++i) {
            classes[static_cast<int>(vm.at(i, 0))].push_back(static_cast<int>(vm.at(i, 1)));
        }
        const std::size_t vocab_size =
            has_backbone ? backbone.vocab_size() : Vocabulary::kMaxSize;
        head.verbalizer = Verbalizer(std::move(classes), vocab_size);
    }

    const bool tied = has_backbone && head.spec.scheme == HeadScheme::Mlm && head.spec.tied;
    if (tied) {
        head.predictor = backbone.embedding;
    } else {
        head.predictor = std::make_shared<RealMatrix>(f.get(p + "head.predictor"));
    }
    if (!has_backbone) return Model::feature_model(std::move(head));
    return Model(std::move(backbone), std::move(head));
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& st) {
    BlockFile f;
    add_scalar_size(f, "meta.next_epoch", st.next_epoch);
    f.add_scalar("meta.global_step", static_cast<double>(st.global_step));
    f.add_scalar("meta.best_dev", st.best_dev);
    add_scalar_size(f, "meta.best_epoch", st.best_epoch);
    add_scalar_size(f, "meta.stale", st.stale);
    f.add_scalar("meta.stopped", st.stopped ? 1.0 : 0.0);
    add_model(f, "cur.", st.model);
    add_model(f, "best.", st.best_model);
    f.add_scalar("opt.weight_decay", st.opt.config().weight_decay);
    f.add_scalar("opt.step_count", static_cast<double>(st.opt.step_count()));
    for (const auto& [name, mv] : st.opt.moments()) {
        f.add("opt.m." + name, mv.first);
        f.add("opt.v." + name, mv.second);
    }
    f.save(path);
}

TrainState load_checkpoint(const std::string& path) {
    BlockFile f = BlockFile::load(path);
    TrainState st{read_model(f, "cur."), read_model(f, "best."), AdamW{}, 0, 0,
                  -1.0, 0, 0, false, {}};
    st.next_epoch = get_size(f, "meta.next_epoch");
    st.global_step = static_cast<std::uint64_t>(f.get_scalar("meta.global_step"));
    st.best_dev = f.get_scalar("meta.best_dev");
    st.best_epoch = get_size(f, "meta.best_epoch");
    st.stale = get_size(f, "meta.stale");
    st.stopped = f.get_scalar("meta.stopped") != 0.0;

    AdamConfig ac;
    ac.weight_decay = f.get_scalar("opt.weight_decay");
    st.opt = AdamW(ac);

    std::map<std::string, std::pair<RealMatrix, RealMatrix>> moments;
    for (const auto& block : f.blocks()) {
        if (block.name.rfind("opt.m.", 0) == 0) {
            const std::string name = block.name.substr(6);
            moments[name] = {block.value, f.get("opt.v." + name)};
        }
    }
    st.opt.restore(std::move(moments),
                   static_cast<std::uint64_t>(f.get_scalar("opt.step_count")));
    return st;
}

}  // namespace glee
