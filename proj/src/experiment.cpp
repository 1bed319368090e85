#include "glee/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "glee/error.hpp"
#include "glee/features.hpp"
#include "glee/serialize.hpp"
#include "glee/version.hpp"
#include "json.hpp"

namespace glee {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Variant grammar

VariantSpec parse_variant(const std::string& name) {
    if (name.empty()) throw ConfigError("empty variant name");
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t plus = name.find('+', start);
        parts.push_back(name.substr(start, plus - start));
        if (plus == std::string::npos) break;
        start = plus + 1;
    }

    VariantSpec v;
    v.name = name;
    const std::string& base = parts[0];
    bool is_cls = false;
    if (base == "cls-t") {
        v.head = HeadSpec::cls(Activation::Tanh);
        is_cls = true;
    } else if (base == "cls-r") {
        v.head = HeadSpec::cls(Activation::ReLU);
        is_cls = true;
    } else if (base == "mlm") {
        v.head = HeadSpec::mlm(true);
    } else if (base == "mlm-ed") {
        v.head = HeadSpec::mlm(false);
    } else {
        throw ConfigError("unknown head variant base '" + base + "' in '" + name + "'");
    }

    std::set<std::string> seen;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const std::string& mod = parts[i];
        if (mod.empty()) throw ConfigError("empty modifier in variant '" + name + "'");
        if (!seen.insert(mod).second)
            throw ConfigError("duplicate modifier '+" + mod + "' in variant '" + name + "'");
        if (mod == "ln" || mod == "ptln") {
            if (!is_cls)
                throw ConfigError("modifier '+" + mod + "' in variant '" + name +
                                  "': masked-token heads already carry layer normalization");
            if (v.head.ln_mode != LnMode::None)
                throw ConfigError("variant '" + name + "' selects more than one layer-norm mode");
            v.head.ln_mode = mod == "ln" ? LnMode::Fresh : LnMode::Pretrained;
        } else if (mod == "prompt") {
            if (!is_cls)
                throw ConfigError("modifier '+prompt' in variant '" + name +
                                  "': the masked-token head is already prompt-based");
            v.head.scheme = HeadScheme::Hybrid;
            v.head.input_repr = InputRepr::Mask;
        } else if (mod == "focal") {
            if (v.loss_override)
                throw ConfigError("variant '" + name + "' selects more than one loss");
            v.loss_override = LossKind::Focal;
        } else if (mod == "ce") {
            if (v.loss_override)
                throw ConfigError("variant '" + name + "' selects more than one loss");
            v.loss_override = LossKind::CrossEntropy;
        } else if (mod == "etanorm") {
            v.etanorm = true;
        } else {
            throw ConfigError("unknown modifier '+" + mod + "' in variant '" + name + "'");
        }
    }
    v.head.validate();
    return v;
}

// ---------------------------------------------------------------------------
// Config parsing

static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "data.source", "data.classes", "data.exponent", "data.total", "data.seq_len",
        "data.seed", "data.verbalizer_weight", "data.topic_weight", "data.threshold",
        "data.max_len", "data.fewshot_k",
        "vocab.size", "verbalizer.tokens_per_class", "prompt.template",
        "backbone.dim", "backbone.epochs", "backbone.batch_size",
        "backbone.learning_rate", "backbone.grad_clip_norm", "backbone.seed",
        "backbone.pretrained",
        "train.batch_size", "train.learning_rate", "train.weight_decay",
        "train.grad_clip_norm", "train.max_epochs", "train.patience",
        "train.warmup_epochs", "train.freeze_backbone",
        "loss.kind", "loss.gamma",
        "calibrate.tau", "calibrate.grid",
        "variants", "seeds", "output",
    };
    return keys;
}

static std::size_t positive_size(const Config& cfg, const std::string& key,
                                 std::int64_t fallback) {
    std::int64_t v = cfg.get_int(key, fallback);
    if (v <= 0) throw ConfigError("config key '" + key + "' must be positive");
    return static_cast<std::size_t>(v);
}

static std::uint64_t parse_seed_token(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("seeds entry '" + s + "' is not a non-negative integer");
    }
    if (pos != s.size())
        throw ConfigError("seeds entry '" + s + "' is not a non-negative integer");
    return v;
}

static double parse_real_token(const std::string& s, const std::string& key) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
    }
    if (pos != s.size())
        throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
    return v;
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
    cfg.require_known(known_keys());

    ExperimentConfig ec;
    ec.source = cfg.get_string("data.source", "generate");
    if (ec.source != "generate" && !fs::exists(ec.source))
        throw ConfigError("data.source file not found: " + ec.source);

    std::int64_t classes = cfg.get_int("data.classes", 20);
    if (classes < 2) throw ConfigError("config key 'data.classes' must be at least 2");
    ec.gen.num_classes = static_cast<std::size_t>(classes);
    ec.gen.exponent = cfg.get_real("data.exponent", 1.5);
    ec.gen.total = positive_size(cfg, "data.total", 2000);
    ec.gen.seq_len = positive_size(cfg, "data.seq_len", 12);
    ec.gen.verbalizer_weight = cfg.get_real("data.verbalizer_weight", 0.3);
    ec.gen.topic_weight = cfg.get_real("data.topic_weight", 0.4);
    ec.gen.seed = cfg.get_u64("data.seed", 7);
    ec.threshold = cfg.get_real("data.threshold", 0.8);
    ec.max_len = positive_size(cfg, "data.max_len", 16);
    ec.fewshot_k = positive_size(cfg, "data.fewshot_k", 32);

    ec.vocab_words = positive_size(cfg, "vocab.size", 240);
    ec.tokens_per_class = positive_size(cfg, "verbalizer.tokens_per_class", 2);
    ec.template_pattern = cfg.get_string("prompt.template", "{x} [MASK]");

    ec.backbone.dim = positive_size(cfg, "backbone.dim", 32);
    ec.backbone.epochs = positive_size(cfg, "backbone.epochs", 30);
    ec.backbone.batch_size = positive_size(cfg, "backbone.batch_size", 32);
    ec.backbone.learning_rate = cfg.get_real("backbone.learning_rate", 1e-3);
    ec.backbone.grad_clip_norm = cfg.get_real("backbone.grad_clip_norm", 1.0);
    ec.backbone.seed = cfg.get_u64("backbone.seed", 11);
    ec.pretrain_backbone = cfg.get_bool("backbone.pretrained", true);

    ec.train.batch_size = positive_size(cfg, "train.batch_size", 32);
    ec.train.learning_rate = cfg.get_real("train.learning_rate", 1e-5);
    ec.train.weight_decay = cfg.get_real("train.weight_decay", 0.0);
    ec.train.grad_clip_norm = cfg.get_real("train.grad_clip_norm", 1.0);
    ec.train.max_epochs = positive_size(cfg, "train.max_epochs", 10);
    ec.train.patience = positive_size(cfg, "train.patience", 2);
    std::int64_t warmup = cfg.get_int("train.warmup_epochs", 1);
    if (warmup < 0) throw ConfigError("config key 'train.warmup_epochs' must be >= 0");
    ec.train.warmup_epochs = static_cast<std::size_t>(warmup);
    ec.train.freeze_backbone = cfg.get_bool("train.freeze_backbone", false);

    std::string kind = cfg.get_string("loss.kind", "ce");
    if (kind == "ce" || kind == "cross-entropy") {
        ec.train.loss.kind = LossKind::CrossEntropy;
    } else if (kind == "focal") {
        ec.train.loss.kind = LossKind::Focal;
    } else {
        throw ConfigError("loss.kind must be 'ce' or 'focal', got '" + kind + "'");
    }
    ec.train.loss.gamma = cfg.get_real("loss.gamma", 2.0);
    ec.train.validate();

    ec.calibrate_tau = cfg.get_real("calibrate.tau", 1.0);
    if (cfg.has("calibrate.grid")) {
        ec.calibrate_grid.clear();
        for (const std::string& tok : cfg.get_list("calibrate.grid"))
            ec.calibrate_grid.push_back(parse_real_token(tok, "calibrate.grid"));
        if (ec.calibrate_grid.empty())
            throw ConfigError("calibrate.grid must be a nonempty list");
    }

    for (const std::string& tok : cfg.get_list("variants"))
        ec.variants.push_back(parse_variant(tok));

    if (cfg.has("seeds")) {
        for (const std::string& tok : cfg.get_list("seeds"))
            ec.seeds.push_back(parse_seed_token(tok));
        if (ec.seeds.empty()) throw ConfigError("seeds must be a nonempty list");
    } else {
        ec.seeds = {1, 2, 3, 4, 5};
    }

    ec.output = cfg.get_string("output", "out");
    return ec;
}

static bool experiment_key(const std::string& k) {
    if (k == "variants" || k == "seeds") return true;
    static const char* prefixes[] = {"data.", "vocab.", "verbalizer.",
                                     "prompt.", "backbone.", "train.", "loss."};
    for (const char* p : prefixes)
        if (k.rfind(p, 0) == 0) return true;
    return false;
}

std::string experiment_hash_hex(const Config& cfg) {
    std::string canon;
    for (const auto& [k, v] : cfg.entries())
        if (experiment_key(k)) canon += k + "=" + v + "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));
    return buf;
}

// ---------------------------------------------------------------------------
// Lab context

static Verbalizer default_verbalizer(std::size_t num_classes, std::size_t tokens_per_class,
                                     const Vocabulary& vocab) {
    std::size_t needed = num_classes * tokens_per_class;
    std::size_t content = vocab.size() - Vocabulary::kNumSpecials;
    if (needed > content)
        throw ConfigError("vocab.size too small: " + std::to_string(needed) +
                          " verbalizer tokens needed but only " + std::to_string(content) +
                          " content entries available");
    std::map<int, std::vector<int>> classes;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::vector<int> toks;
        for (std::size_t j = 0; j < tokens_per_class; ++j)
            toks.push_back(static_cast<int>(Vocabulary::kNumSpecials + c * tokens_per_class + j));
        classes[static_cast<int>(c)] = std::move(toks);
    }
    return Verbalizer(std::move(classes), vocab.size());
}

LabContext build_context(const ExperimentConfig& ec) {
    LabContext ctx;

    std::vector<std::string> words;
    words.reserve(ec.vocab_words);
    for (std::size_t i = 0; i < ec.vocab_words; ++i)
        words.push_back("w" + std::to_string(i));
    ctx.vocab = Vocabulary(words);

    if (ec.source != "generate") {
        ctx.feature_mode = true;
        FeatureDataset all = ingest_features(ec.source);
        ctx.feats = split_features(all, ec.gen.seed);
        ctx.num_classes = ctx.feats.num_classes;
        ctx.split = compute_head_tail(ctx.feats.train.class_counts, ec.threshold);
        std::size_t dim = ctx.feats.train.features.cols;
        // dummy backbone: only its dimensions matter for head construction
        ctx.backbone = BackboneParams::random_init(Vocabulary::kNumSpecials + 4, dim, 0);
        return ctx;
    }

    ctx.verbalizer = default_verbalizer(ec.gen.num_classes, ec.tokens_per_class, ctx.vocab);
    ctx.tmpl = Template(ec.template_pattern);
    ctx.raw = generate_longtail(ec.gen, ctx.vocab, ctx.verbalizer);
    ctx.rendered = render_dataset(ctx.raw, ctx.tmpl, ctx.vocab, ec.max_len);
    ctx.split = compute_head_tail(ctx.raw.train.class_counts, ec.threshold);
    ctx.num_classes = ec.gen.num_classes;

    if (ec.pretrain_backbone) {
        ctx.pretrain = mlm_pretrain(ctx.raw.train, ctx.vocab, ec.backbone);
        ctx.backbone = ctx.pretrain.params;
    } else {
        ctx.backbone = BackboneParams::random_init(ctx.vocab.size(), ec.backbone.dim,
                                                   ec.backbone.seed);
    }
    return ctx;
}

// ---------------------------------------------------------------------------
// Cells

static bool wants_mask_input(const HeadSpec& spec) {
    return spec.scheme == HeadScheme::Mlm || spec.input_repr == InputRepr::Mask;
}

CellResult run_cell(const LabContext& ctx, const ExperimentConfig& ec,
                    const VariantSpec& variant, std::uint64_t seed,
                    const std::string& checkpoint_path, std::size_t fewshot_k) {
    TrainConfig tc = ec.train;
    tc.seed = seed;
    if (variant.loss_override) tc.loss.kind = *variant.loss_override;

    CellResult out;
    out.row.variant = variant.name;
    out.row.seed = seed;

    if (ctx.feature_mode) {
        if (variant.head.scheme == HeadScheme::Mlm)
            throw ConfigError("variant '" + variant.name +
                              "': masked-token heads need token-level inputs; "
                              "feature-level data has no embedding table to predict over");
        if (fewshot_k > 0)
            throw ConfigError("few-shot sampling requires the synthetic generator, "
                              "not a feature-level dataset");
        HeadParams head = build_head(variant.head, ctx.backbone, ctx.num_classes, seed);
        TrainState st = train_init(Model::feature_model(std::move(head)), tc);
        train_epochs(st, ctx.feats, tc, tc.max_epochs);
        if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, st);

        EvalReport rep;
        if (variant.etanorm) {
            Model cal = Model::feature_model(eta_norm_calibrate(st.best_model.head,
                                                                ec.calibrate_tau));
            rep = evaluate_features(cal, ctx.feats.test, ctx.split);
            out.profile = norm_profile(cal.head, ctx.feats.train.class_counts);
        } else {
            rep = evaluate_features(st.best_model, ctx.feats.test, ctx.split);
            out.profile = norm_profile(st.best_model.head, ctx.feats.train.class_counts);
        }
        out.row.accuracy = rep.accuracy;
        out.row.macro_f1 = rep.macro_f1;
        out.row.head_f1 = rep.head_f1;
        out.row.tail_f1 = rep.tail_f1;
        out.log = st.log;
        out.done = true;
        return out;
    }

    // token mode: pick the raw or prompt-rendered view, few-shot subsampled
    // when requested
    Dataset local;
    const Dataset* data = nullptr;
    if (fewshot_k > 0) {
        local = sample_fewshot(ctx.raw, fewshot_k, seed);
        if (wants_mask_input(variant.head))
            local = render_dataset(local, ctx.tmpl, ctx.vocab, ec.max_len);
        data = &local;
    } else {
        data = wants_mask_input(variant.head) ? &ctx.rendered : &ctx.raw;
    }

    BackboneParams bb = ctx.backbone.clone();
    HeadParams head = build_head(variant.head, bb, ctx.num_classes, seed, ctx.verbalizer);
    TrainState st = train_init(Model(std::move(bb), std::move(head)), tc);
    train_epochs(st, *data, tc, tc.max_epochs);
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, st);

    // Norm profiles are always reported against the full training
    // distribution, so few-shot rows stay comparable to full-data rows.
    const std::vector<std::size_t>& counts = ctx.raw.train.class_counts;
    EvalReport rep;
    if (variant.etanorm) {
        Model cal(st.best_model.backbone.clone(),
                  eta_norm_calibrate(st.best_model.head, ec.calibrate_tau));
        rep = evaluate(cal, data->test, ctx.split);
        out.profile = norm_profile(cal.head, counts);
    } else {
        rep = evaluate(st.best_model, data->test, ctx.split);
        out.profile = norm_profile(st.best_model.head, counts);
    }
    out.row.accuracy = rep.accuracy;
    out.row.macro_f1 = rep.macro_f1;
    out.row.head_f1 = rep.head_f1;
    out.row.tail_f1 = rep.tail_f1;
    out.log = st.log;
    out.done = true;
    return out;
}

std::size_t worker_count(std::size_t cells) {
    std::size_t n = 0;
    if (const char* env = std::getenv("GLEE_THREADS")) {
        std::string s(env);
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != s.size() || v <= 0)
            throw ConfigError("GLEE_THREADS must be a positive integer, got '" + s + "'");
        n = static_cast<std::size_t>(v);
    } else {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return std::max<std::size_t>(1, std::min(n, std::max<std::size_t>(1, cells)));
}

// ---------------------------------------------------------------------------
// Manifest

static void write_manifest(const std::string& dir, const std::string& command,
                           const std::string& hash, bool complete, std::size_t done,
                           std::size_t total, const json& extra = json::object()) {
    json j = {
        {"tool", kToolName},
        {"tool_version", kToolVersion},
        {"command", command},
        {"config_hash", hash},
        {"status", complete ? "complete" : "incomplete"},
        {"cells_done", done},
        {"cells_total", total},
    };
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write " + dir + "/manifest.json");
    out << j.dump(2) << "\n";
}

static void check_manifest(const std::string& dir, const std::string& hash) {
    std::ifstream in(dir + "/manifest.json");
    if (!in)
        throw StateError("no manifest.json in '" + dir +
                         "' — run the train command into this output directory first");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(dir + "/manifest.json: " + e.what());
    }
    std::string status = j.value("status", "");
    if (status != "complete")
        throw StateError(dir + "/manifest.json marks an incomplete run; rerun training");
    std::string recorded = j.value("config_hash", "");
    if (recorded != hash)
        throw ConfigError("config hash mismatch: outputs in '" + dir + "' were produced by " +
                          recorded + " but the current config hashes to " + hash);
}

// ---------------------------------------------------------------------------
// Matrix runner

static std::string checkpoint_path(const std::string& dir, const std::string& variant,
                                   std::uint64_t seed) {
    return dir + "/checkpoints/" + variant + "_s" + std::to_string(seed) + ".ckpt";
}

static std::string summary_flags_for(const VariantSpec& v) {
    if (v.etanorm && v.head.scheme == HeadScheme::Mlm) return "etanorm-effective-rows";
    return "";
}

static void write_train_log_csv(const std::string& path, const std::vector<CellResult>& cells) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "variant,seed,epoch,train_loss,dev_macro_f1,dev_accuracy,lr\n";
    for (const CellResult& c : cells) {
        if (!c.done) continue;
        for (const EpochLog& e : c.log) {
            out << c.row.variant << "," << c.row.seed << "," << e.epoch << ","
                << format_real(e.train_loss) << "," << format_real(e.dev_macro_f1) << ","
                << format_real(e.dev_accuracy) << "," << format_real(e.lr_last) << "\n";
        }
    }
}

static void run_matrix(const Config& cfg, const ExperimentConfig& ec,
                       const std::string& command, std::size_t fewshot_k) {
    if (ec.variants.empty()) throw ConfigError("no variants configured");
    LabContext ctx = build_context(ec);

    fs::create_directories(ec.output + "/checkpoints");

    struct Cell {
        const VariantSpec* variant;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const VariantSpec& v : ec.variants)
        for (std::uint64_t s : ec.seeds) cells.push_back({&v, s});

    std::vector<CellResult> results(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                results[i] = run_cell(ctx, ec, *cells[i].variant, cells[i].seed,
                                      checkpoint_path(ec.output, cells[i].variant->name,
                                                      cells[i].seed),
                                      fewshot_k);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t workers = worker_count(cells.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    std::vector<ResultRow> rows;
    std::size_t done = 0;
    for (const CellResult& c : results) {
        if (!c.done) continue;
        rows.push_back(c.row);
        ++done;
    }
    write_results_csv(ec.output + "/results.csv", rows);
    std::vector<SummaryRow> summary = summarize(rows);
    for (SummaryRow& s : summary)
        for (const VariantSpec& v : ec.variants)
            if (v.name == s.variant) s.flags = summary_flags_for(v);
    write_summary_csv(ec.output + "/summary.csv", summary);
    write_train_log_csv(ec.output + "/train_log.csv", results);

    bool complete = done == cells.size();
    write_manifest(ec.output, command, experiment_hash_hex(cfg), complete, done, cells.size());
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_pretrain(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    if (ec.source != "generate")
        throw ConfigError("pretraining needs the synthetic generator (data.source=generate)");
    ec.pretrain_backbone = true;
    LabContext ctx = build_context(ec);

    fs::create_directories(ec.output);
    BlockFile bf;
    bf.add("embedding", *ctx.backbone.embedding);
    bf.add("enc1.w", ctx.backbone.enc1.w);
    bf.add("enc1.b", ctx.backbone.enc1.b);
    bf.add("enc2.w", ctx.backbone.enc2.w);
    bf.add("enc2.b", ctx.backbone.enc2.b);
    bf.add("mlm_dense.w", ctx.backbone.mlm_dense.w);
    bf.add("mlm_dense.b", ctx.backbone.mlm_dense.b);
    bf.add("mlm_ln.gamma", ctx.backbone.mlm_ln.gamma);
    bf.add("mlm_ln.beta", ctx.backbone.mlm_ln.beta);
    bf.add_scalar("pretrained", 1.0);
    bf.save(ec.output + "/backbone.ckpt");

    std::ofstream curve(ec.output + "/pretrain.csv");
    if (!curve) throw IoError("cannot write " + ec.output + "/pretrain.csv");
    curve << "epoch,loss\n";
    for (std::size_t e = 0; e < ctx.pretrain.epoch_losses.size(); ++e)
        curve << e << "," << format_real(ctx.pretrain.epoch_losses[e]) << "\n";

    json extra = {{"initial_loss", ctx.pretrain.initial_loss},
                  {"final_masked_accuracy", ctx.pretrain.final_masked_accuracy}};
    write_manifest(ec.output, "pretrain", experiment_hash_hex(cfg), true, 1, 1, extra);
}

void cmd_generate(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    if (ec.source != "generate")
        throw ConfigError("generate needs the synthetic generator (data.source=generate)");
    ec.pretrain_backbone = false;  // corpus export does not need a backbone
    LabContext ctx = build_context(ec);

    fs::create_directories(ec.output);
    ctx.vocab.save(ec.output + "/vocab.txt");
    save_prompt_file(ec.output + "/prompt.txt", ctx.tmpl, ctx.verbalizer, ctx.vocab);
    save_corpus(ctx.raw.train, ctx.vocab, ec.output + "/corpus_train.txt");
    save_corpus(ctx.raw.dev, ctx.vocab, ec.output + "/corpus_dev.txt");
    save_corpus(ctx.raw.test, ctx.vocab, ec.output + "/corpus_test.txt");
    write_manifest(ec.output, "generate", experiment_hash_hex(cfg), true, 1, 1);
}

void cmd_train(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    run_matrix(cfg, ec, "train", 0);
}

void cmd_fewshot(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    run_matrix(cfg, ec, "fewshot", ec.fewshot_k);
}

void cmd_calibrate(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    if (ec.variants.empty()) throw ConfigError("no variants configured");
    check_manifest(ec.output, experiment_hash_hex(cfg));
    ec.pretrain_backbone = false;  // checkpoints carry the trained backbone
    LabContext ctx = build_context(ec);

    std::ofstream out(ec.output + "/calibration.csv");
    if (!out) throw IoError("cannot write " + ec.output + "/calibration.csv");
    out << "variant,seed,tau,accuracy,macro_f1,head_f1,tail_f1\n";
    for (const VariantSpec& v : ec.variants) {
        for (std::uint64_t seed : ec.seeds) {
            TrainState st = load_checkpoint(checkpoint_path(ec.output, v.name, seed));
            for (double tau : ec.calibrate_grid) {
                HeadParams cal = eta_norm_calibrate(st.best_model.head, tau);
                EvalReport rep;
                if (ctx.feature_mode) {
                    Model m = Model::feature_model(std::move(cal));
                    rep = evaluate_features(m, ctx.feats.test, ctx.split);
                } else {
                    Model m(st.best_model.backbone.clone(), std::move(cal));
                    const Corpus& test =
                        wants_mask_input(v.head) ? ctx.rendered.test : ctx.raw.test;
                    rep = evaluate(m, test, ctx.split);
                }
                out << v.name << "," << seed << "," << format_real(tau) << ","
                    << format_real(rep.accuracy) << "," << format_real(rep.macro_f1) << ","
                    << format_real(rep.head_f1) << "," << format_real(rep.tail_f1) << "\n";
            }
        }
    }
}

static double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

static double pop_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void cmd_analyze(const Config& cfg) {
    ExperimentConfig ec = ExperimentConfig::from_config(cfg);
    if (ec.variants.empty()) throw ConfigError("no variants configured");
    check_manifest(ec.output, experiment_hash_hex(cfg));
    ec.pretrain_backbone = false;
    LabContext ctx = build_context(ec);

    const std::vector<std::size_t>& counts =
        ctx.feature_mode ? ctx.feats.train.class_counts : ctx.raw.train.class_counts;

    std::vector<ResultRow> rows = read_results_csv(ec.output + "/results.csv");
    std::vector<std::pair<std::string, NormProfile>> mean_profiles;
    std::vector<SlopeRow> slopes;
    std::vector<CheckRow> checks;

    for (const VariantSpec& v : ec.variants) {
        std::vector<NormProfile> profiles;
        std::size_t flat_seeds = 0, decay_seeds = 0;
        std::vector<double> rhos;
        for (std::uint64_t seed : ec.seeds) {
            TrainState st = load_checkpoint(checkpoint_path(ec.output, v.name, seed));
            HeadParams head = v.etanorm ? eta_norm_calibrate(st.best_model.head, ec.calibrate_tau)
                                        : st.best_model.head.clone();
            NormProfile prof = norm_profile(head, counts);
            NormSlope slope = norm_slope(prof);
            slopes.push_back({v.name, seed, slope});
            if (slope.flat) ++flat_seeds;
            if (slope.spearman_rho <= -0.5) ++decay_seeds;
            rhos.push_back(slope.spearman_rho);
            profiles.push_back(std::move(prof));

            if (seed == ec.seeds.front() && !ctx.feature_mode) {
                const Corpus& test = wants_mask_input(v.head) ? ctx.rendered.test : ctx.raw.test;
                NormProfile order = norm_profile(st.best_model.head, counts);
                std::vector<int> picks = {static_cast<int>(order.entries.front().class_id),
                                          static_cast<int>(order.entries.back().class_id)};
                std::vector<FeatureDistribution> dists;
                for (int cls : picks) {
                    std::size_t have = 0;
                    for (const Example& ex : test.examples)
                        if (ex.label == cls) ++have;
                    if (have < 2) continue;  // a lone test example has no distribution
                    std::size_t k = std::min<std::size_t>(10, st.best_model.head.dim());
                    dists.push_back(feature_distribution(st.best_model, test, cls, k));
                }
                if (!dists.empty())
                    write_feature_csv(ec.output + "/features_" + v.name + ".csv", v.name, dists);
            }
        }

        // counts are identical across seeds, so entries align index by index
        NormProfile mean = profiles.front();
        for (std::size_t i = 0; i < mean.entries.size(); ++i) {
            double s = 0;
            for (const NormProfile& p : profiles) s += p.entries[i].norm;
            mean.entries[i].norm = s / static_cast<double>(profiles.size());
        }
        mean_profiles.emplace_back(v.name, std::move(mean));

        if (v.etanorm) {
            checks.push_back({"etanorm_flat",
                              "variant=" + v.name + ": flat profile in " +
                                  std::to_string(flat_seeds) + "/" +
                                  std::to_string(ec.seeds.size()) + " seeds",
                              flat_seeds == ec.seeds.size()});
        } else if (v.head.scheme != HeadScheme::Mlm && !v.loss_override.has_value() &&
                   ec.train.loss.kind == LossKind::CrossEntropy) {
            // cross-entropy trained classifier heads are expected to show
            // norm decay toward the tail
            char detail[160];
            std::snprintf(detail, sizeof(detail),
                          "variant=%s: spearman<=-0.5 in %zu/%zu seeds (mean rho=%.4f)",
                          v.name.c_str(), decay_seeds, ec.seeds.size(), mean_of(rhos));
            bool ok = 5 * decay_seeds >= 4 * ec.seeds.size();
            checks.push_back({"norm_decay", detail, ok});
        }
    }

    // tail-F1 ordering: each pretrained-LN variant against its base
    for (const VariantSpec& v : ec.variants) {
        std::size_t pos = v.name.rfind("+ptln");
        if (pos == std::string::npos) continue;
        std::string base = v.name.substr(0, pos) + v.name.substr(pos + 5);
        if (base.empty()) continue;
        std::vector<double> with_ln, without_ln;
        for (const ResultRow& r : rows) {
            if (r.variant == v.name) with_ln.push_back(r.tail_f1);
            if (r.variant == base) without_ln.push_back(r.tail_f1);
        }
        if (with_ln.empty() || without_ln.empty()) continue;
        double a = mean_of(with_ln), b = mean_of(without_ln);
        char detail[200];
        std::snprintf(detail, sizeof(detail),
                      "mean tail_f1: %s=%.4f (std %.4f) vs %s=%.4f (std %.4f)",
                      v.name.c_str(), a, pop_std(with_ln), base.c_str(), b,
                      pop_std(without_ln));
        checks.push_back({"tail_f1_order", detail, a >= b});
    }

    write_norm_csv(ec.output + "/norms.csv", mean_profiles);
    write_norm_svg(ec.output + "/norms.svg", mean_profiles);
    write_slopes_csv(ec.output + "/slopes.csv", slopes);
    write_checks_csv(ec.output + "/checks.csv", checks);
}

}  // namespace glee
