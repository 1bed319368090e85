// Acceptance gate. Each numbered check prints exactly one PASS/FAIL line
// with its tolerance and measured value; the exit status is the number of
// failures. The matrix checks (7, 10, 11) run the shipped canonical config,
// so the binary needs the source tree (GLEE_SOURCE_DIR) and takes about a
// minute.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glee/config.hpp"
#include "glee/data.hpp"
#include "glee/error.hpp"
#include "glee/experiment.hpp"
#include "glee/heads.hpp"
#include "glee/kernels.hpp"
#include "glee/metrics.hpp"
#include "glee/model.hpp"
#include "glee/objectives.hpp"
#include "glee/report.hpp"
#include "glee/rng.hpp"
#include "glee/trainer.hpp"

using namespace glee;
namespace fs = std::filesystem;

namespace {

struct Line {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};
std::vector<Line> g_lines;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    g_lines.push_back({id, name, pass, detail});
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. finite-difference gradient checks for every head variant and both losses

std::vector<std::vector<int>> random_batch(Rng& rng, std::size_t n, bool with_mask) {
    std::vector<std::vector<int>> batch(n);
    for (auto& seq : batch) {
        seq.push_back(Vocabulary::kCls);
        for (int j = 0; j < 5; ++j)
            seq.push_back(4 + static_cast<int>(uniform_below(rng, 12)));
        if (with_mask) seq[1 + uniform_below(rng, 5)] = Vocabulary::kMask;
    }
    return batch;
}

void check_gradients() {
    auto t0 = std::chrono::steady_clock::now();
    const double h = 1e-3;
    const std::size_t C = 3;

    BackboneParams bb = BackboneParams::random_init(16, 8, 77);
    bb.provenance = Provenance::Pretrained;  // lets the pt-LN variant build
    Verbalizer verb({{0, {4, 5}}, {1, {6}}, {2, {7, 8}}}, 16);

    const std::vector<std::string> heads = {"cls-t",        "cls-r",       "cls-t+ln",
                                            "cls-r+ptln",   "cls-t+prompt", "cls-r+prompt",
                                            "mlm",          "mlm-ed"};
    const std::vector<LossSpec> losses = {{LossKind::CrossEntropy, 2.0},
                                          {LossKind::Focal, 2.0}};

    std::size_t instances = 0, coords = 0;
    double max_rel = 0.0;
    Rng rng(mix_seed(2024, 0xfd));

    for (const std::string& name : heads) {
        VariantSpec v = parse_variant(name);
        const bool masked = v.head.scheme == HeadScheme::Mlm || v.head.input_repr == InputRepr::Mask;
        for (const LossSpec& loss : losses) {
            // build the head from the model's own backbone so tied heads alias
            // the embedding that the forward pass actually reads
            BackboneParams mb = bb.clone();
            Model model(mb, build_head(v.head, mb, C, 31, verb));
            // The shipped init keeps early activations tiny, so layer-norm
            // inputs are nearly constant across features and the loss is
            // extremely curved there; central differences at h=1e-3 would
            // measure that curvature instead of the formulas. Re-draw every
            // parameter at O(1) scale to check gradients at a generic
            // well-conditioned point.
            {
                RealMatrix l0 = model.forward(random_batch(rng, 2, masked));
                LossResult r0 = loss_forward_backward(l0, std::vector<int>{0, 1}, loss);
                Gradients tmp = model.backward(r0.dlogits);
                for (const ParamRef& ref : model.param_refs(tmp))
                    for (double& x : ref.value->data) x = 0.7 * normal01(rng);
            }
            for (int inst = 0; inst < 7; ++inst) {
                auto batch = random_batch(rng, 4, masked);
                std::vector<int> targets;
                for (int i = 0; i < 4; ++i)
                    targets.push_back(static_cast<int>(uniform_below(rng, C)));

                RealMatrix logits = model.forward(batch);
                LossResult lr = loss_forward_backward(logits, targets, loss);
                Gradients g = model.backward(lr.dlogits);
                auto refs = model.param_refs(g);

                for (const ParamRef& ref : refs) {
                    for (int k = 0; k < 3; ++k) {
                        std::size_t idx = uniform_below(rng, ref.value->size());
                        double saved = ref.value->data[idx];
                        ref.value->data[idx] = saved + h;
                        double lp = loss_forward_backward(model.forward(batch), targets, loss).loss;
                        ref.value->data[idx] = saved - h;
                        double lm = loss_forward_backward(model.forward(batch), targets, loss).loss;
                        ref.value->data[idx] = saved;
                        double fd = (lp - lm) / (2 * h);
                        double a = ref.grad->data[idx];
                        double rel = std::abs(a - fd) / std::max(1.0, std::abs(fd));
                        max_rel = std::max(max_rel, rel);
                        ++coords;
                    }
                }
                ++instances;
            }
        }
    }
    double secs = seconds_since(t0);
    bool pass = max_rel < 1e-4 && instances >= 100 && secs < 10.0;
    record(1, "gradient-correctness", pass,
           fmt("%zu instances / %zu coordinates over 8 head variants x 2 losses, "
               "max rel err %.2e (tol 1e-4, h=1e-3), %.2fs (limit 10s)",
               instances, coords, max_rel, secs));
}

// ---------------------------------------------------------------------------
// 2. focal(gamma=0) == cross-entropy; uniform-logit CE == ln C

void check_loss_identities() {
    Rng rng(mix_seed(7, 0x10ca));
    double max_diff = 0.0;
    for (int b = 0; b < 1000; ++b) {
        std::size_t n = 1 + uniform_below(rng, 8);
        std::size_t C = 2 + uniform_below(rng, 5);
        RealMatrix logits(n, C);
        for (double& x : logits.data) x = 3.0 * normal01(rng);
        std::vector<int> targets;
        for (std::size_t i = 0; i < n; ++i)
            targets.push_back(static_cast<int>(uniform_below(rng, C)));
        LossResult ce = loss_forward_backward(logits, targets, {LossKind::CrossEntropy, 2.0});
        LossResult f0 = loss_forward_backward(logits, targets, {LossKind::Focal, 0.0});
        max_diff = std::max(max_diff, std::abs(ce.loss - f0.loss));
        max_diff = std::max(max_diff, max_abs_diff(ce.dlogits, f0.dlogits));
    }

    double max_lnc = 0.0;
    for (std::size_t C = 2; C <= 10; ++C) {
        RealMatrix logits(3, C, 0.73 * static_cast<double>(C));
        std::vector<int> targets = {0, static_cast<int>(C - 1), 1};
        LossResult ce = loss_forward_backward(logits, targets, {LossKind::CrossEntropy, 2.0});
        max_lnc = std::max(max_lnc, std::abs(ce.loss - std::log(static_cast<double>(C))));
    }
    bool pass = max_diff <= 1e-12 && max_lnc <= 1e-12;
    record(2, "loss-identities", pass,
           fmt("focal(0) vs CE max diff %.2e on 1000 batches, uniform CE vs ln C "
               "max diff %.2e (tol 1e-12)",
               max_diff, max_lnc));
}

// ---------------------------------------------------------------------------
// 3. eta-norm: tau=0 bitwise identity, tau=1 equal norms + preserved directions

double cosine(const double* a, const double* b, std::size_t n) {
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += a[i] * b[i];
    return num / (l2_norm(a, n) * l2_norm(b, n));
}

void check_calibration_identities() {
    BackboneParams bb = BackboneParams::random_init(16, 8, 3);
    Verbalizer verb({{0, {4, 5}}, {1, {6}}, {2, {7, 8}}, {3, {9}}, {4, {10, 11, 12}}}, 16);
    HeadParams cls = build_head(HeadSpec::cls(Activation::Tanh), bb, 5, 21);
    for (std::size_t i = 0; i < cls.predictor->rows; ++i)
        for (std::size_t j = 0; j < cls.predictor->cols; ++j)
            cls.predictor->at(i, j) *= static_cast<double>(i + 1);  // spread the norms
    HeadParams mlm = build_head(HeadSpec::mlm(true), bb, 5, 22, verb);

    bool bitwise = true;
    double norm_spread = 0.0, cos_err = 0.0;
    for (const HeadParams* head : {&cls, &mlm}) {
        HeadParams t0 = eta_norm_calibrate(*head, 0.0);
        bitwise = bitwise && t0.predictor->data == head->predictor->data &&
                  t0.dense.w.data == head->dense.w.data;

        HeadParams t1 = eta_norm_calibrate(*head, 1.0);
        RealMatrix before = effective_class_rows(*head);
        RealMatrix after = effective_class_rows(t1);
        std::vector<double> norms;
        for (std::size_t c = 0; c < after.rows; ++c) {
            norms.push_back(l2_norm(after.row(c), after.cols));
            cos_err = std::max(cos_err,
                               std::abs(1.0 - cosine(before.row(c), after.row(c), after.cols)));
        }
        double lo = *std::min_element(norms.begin(), norms.end());
        double hi = *std::max_element(norms.begin(), norms.end());
        norm_spread = std::max(norm_spread, hi - lo);
    }
    bool pass = bitwise && norm_spread <= 1e-9 && cos_err <= 1e-12;
    record(3, "calibration-identities", pass,
           fmt("tau=0 bitwise %s, tau=1 norm spread %.2e (tol 1e-9), "
               "direction cosine err %.2e (tol 1e-12), CLS and MLM heads",
               bitwise ? "yes" : "NO", norm_spread, cos_err));
}

// ---------------------------------------------------------------------------
// 4. evaluation vs an independent per-class TP/FP/FN oracle

EvalReport oracle_report(const std::vector<int>& gold, const std::vector<int>& pred,
                         std::size_t C, const HeadTailSplit& split) {
    EvalReport r;
    r.n_test = gold.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (gold[i] == pred[i]) ++correct;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    r.per_class_f1.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            bool g = gold[i] == static_cast<int>(c);
            bool p = pred[i] == static_cast<int>(c);
            if (g && p) ++tp;
            if (!g && p) ++fp;
            if (g && !p) ++fn;
        }
        double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        r.per_class_f1[c] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    }
    double sum = 0;
    for (double v : r.per_class_f1) sum += v;
    r.macro_f1 = sum / static_cast<double>(C);
    auto mean_over = [&](const std::set<int>& s) {
        if (s.empty()) return 0.0;
        double acc = 0;
        for (int c : s) acc += r.per_class_f1[static_cast<std::size_t>(c)];
        return acc / static_cast<double>(s.size());
    };
    r.head_f1 = mean_over(split.head);
    r.tail_f1 = mean_over(split.tail);
    return r;
}

void check_metric_oracle() {
    Rng rng(mix_seed(12, 0xeba1));
    double max_diff = 0.0;
    BackboneParams dims = BackboneParams::random_init(8, 4, 1);
    for (int t = 0; t < 1000; ++t) {
        std::size_t C = 2 + uniform_below(rng, 5);
        std::size_t n = 1 + uniform_below(rng, 50);
        RealMatrix feats(n, 4);
        for (double& x : feats.data) x = normal01(rng);
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i)
            labels.push_back(static_cast<int>(uniform_below(rng, C)));
        FeatureDataset fd = make_feature_dataset(feats, labels, C);
        HeadTailSplit split = compute_head_tail(fd.class_counts, 0.5 + 0.4 * uniform01(rng));
        Model model = Model::feature_model(
            build_head(HeadSpec::cls(Activation::Tanh), dims, C, 1000 + t));
        EvalReport got = evaluate_features(model, fd, split);
        EvalReport want = oracle_report(labels, predict_features(model, fd.features), C, split);
        max_diff = std::max({max_diff, std::abs(got.accuracy - want.accuracy),
                             std::abs(got.macro_f1 - want.macro_f1),
                             std::abs(got.head_f1 - want.head_f1),
                             std::abs(got.tail_f1 - want.tail_f1)});
        for (std::size_t c = 0; c < C; ++c)
            max_diff = std::max(max_diff,
                                std::abs(got.per_class_f1[c] - want.per_class_f1[c]));
    }

    HeadTailSplit s2;
    s2.head = {0};
    s2.tail = {1, 2};
    EvalReport worked = report_from_predictions({0, 0, 1, 2}, {0, 1, 1, 2}, 3, s2);
    double worked_err = std::abs(worked.macro_f1 - 0.7778);
    bool pass = max_diff <= 1e-12 && worked_err <= 1e-4;
    record(4, "metric-oracle", pass,
           fmt("1000 random instances (<=6 classes, <=50 examples) max diff %.2e "
               "(tol 1e-12); worked macro-F1 %.6f vs 0.7778 (tol 1e-4)",
               max_diff, worked.macro_f1));
}

// ---------------------------------------------------------------------------
// 5. head/tail split vs a cumulative-sum oracle

void check_head_tail_oracle() {
    Rng rng(mix_seed(4, 0x4ead));
    std::size_t agreements = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::size_t C = 2 + uniform_below(rng, 9);
        std::vector<std::size_t> counts(C);
        std::size_t total = 0;
        for (auto& c : counts) total += (c = uniform_below(rng, 101));
        if (total == 0) counts[0] = 1;
        double threshold = 0.05 + 0.9 * uniform01(rng);

        HeadTailSplit got = compute_head_tail(counts, threshold);

        std::vector<std::size_t> order(C);
        for (std::size_t i = 0; i < C; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
        });
        total = 0;
        for (std::size_t c : counts) total += c;
        std::set<int> head;
        std::size_t cum = 0;
        for (std::size_t idx : order) {
            if (static_cast<double>(cum) >= threshold * static_cast<double>(total)) break;
            cum += counts[idx];
            head.insert(static_cast<int>(idx));
        }
        std::set<int> tail;
        for (std::size_t c = 0; c < C; ++c)
            if (!head.count(static_cast<int>(c))) tail.insert(static_cast<int>(c));
        if (got.head == head && got.tail == tail) ++agreements;
    }

    HeadTailSplit worked = compute_head_tail({50, 30, 10, 6, 4}, 0.80);
    bool worked_ok = worked.head == std::set<int>{0, 1} && worked.tail == std::set<int>{2, 3, 4};
    bool pass = agreements == trials && worked_ok;
    record(5, "head-tail-oracle", pass,
           fmt("%zu/%d random count vectors agree; worked case [50,30,10,6,4]@0.80 -> "
               "head {0,1}: %s",
               agreements, trials, worked_ok ? "yes" : "NO"));
}

// ---------------------------------------------------------------------------
// 6. verbalizer reduction = token-logit mean; constant-shift invariance

void check_verbalizer() {
    Rng rng(mix_seed(6, 0x6e2b));
    Verbalizer verb({{0, {4, 5, 6}}, {1, {7}}, {2, {8, 9}}, {3, {10, 11, 12, 13}}}, 16);
    double mean_err = 0.0, shift_err = 0.0;
    for (int t = 0; t < 200; ++t) {
        RealMatrix tok(3, 16);
        for (double& x : tok.data) x = 2.0 * normal01(rng);
        RealMatrix cls = verbalizer_reduce(tok, verb);
        for (std::size_t i = 0; i < 3; ++i) {
            for (const auto& [c, toks] : verb.classes()) {
                double s = 0;
                for (int tid : toks) s += tok.at(i, static_cast<std::size_t>(tid));
                mean_err = std::max(mean_err,
                                    std::abs(cls.at(i, static_cast<std::size_t>(c)) -
                                             s / static_cast<double>(toks.size())));
            }
        }
        RealMatrix shifted = tok;
        for (double& x : shifted.data) x += 4.25;
        RealMatrix p0 = softmax_rows(cls);
        RealMatrix p1 = softmax_rows(verbalizer_reduce(shifted, verb));
        shift_err = std::max(shift_err, max_abs_diff(p0, p1));
    }
    bool pass = mean_err <= 1e-12 && shift_err <= 1e-12;
    record(6, "verbalizer-averaging", pass,
           fmt("class logit vs token-mean max err %.2e, softmax shift-invariance "
               "max err %.2e (tol 1e-12, 200 batches)",
               mean_err, shift_err));
}

// ---------------------------------------------------------------------------
// 8. tying: one optimizer step moves embedding and predictor together;
//    untied copies diverge

void check_tying() {
    BackboneParams bb = BackboneParams::random_init(16, 8, 5);
    Verbalizer verb({{0, {4, 5}}, {1, {6}}, {2, {7, 8}}}, 16);
    Rng rng(mix_seed(8, 0x71ed));
    auto batch = random_batch(rng, 6, true);
    std::vector<int> targets = {0, 1, 2, 0, 1, 2};

    auto one_step = [&](Model& m) {
        RealMatrix logits = m.forward(batch);
        LossResult lr = loss_forward_backward(logits, targets, {LossKind::CrossEntropy, 2.0});
        Gradients g = m.backward(lr.dlogits);
        AdamW opt{AdamConfig{}};
        opt.step(m.param_refs(g), 1e-2);
    };

    BackboneParams tb = bb.clone();
    Model tied(tb, build_head(HeadSpec::mlm(true), tb, 3, 9, verb));
    RealMatrix before = *tied.backbone.embedding;
    one_step(tied);
    bool same_object = tied.head.predictor.get() == tied.backbone.embedding.get();
    double moved = max_abs_diff(before, *tied.backbone.embedding);
    double tied_diff = max_abs_diff(*tied.head.predictor, *tied.backbone.embedding);

    BackboneParams ub = bb.clone();
    Model untied(ub, build_head(HeadSpec::mlm(false), ub, 3, 9, verb));
    double start_diff = max_abs_diff(*untied.head.predictor, *untied.backbone.embedding);
    one_step(untied);
    double end_diff = max_abs_diff(*untied.head.predictor, *untied.backbone.embedding);

    bool pass = same_object && moved > 0 && tied_diff == 0.0 && start_diff == 0.0 &&
                end_diff > 0 && !untied.tied();
    record(8, "tying-semantics", pass,
           fmt("tied: same storage %s, step moved embedding by %.2e, predictor==embedding "
               "diff %.1e; untied: equal at init, diverged by %.2e after one step",
               same_object ? "yes" : "NO", moved, tied_diff, end_diff));
}

// ---------------------------------------------------------------------------
// 9. hybrid head trains on rendered inputs; masked-token head on raw inputs
//    fails with the input-structure error

void check_input_structure() {
    ExperimentConfig ec;
    ec.gen.num_classes = 4;
    ec.gen.exponent = 1.3;
    ec.gen.total = 120;
    ec.gen.seq_len = 8;
    ec.gen.seed = 5;
    ec.max_len = 12;
    ec.vocab_words = 64;
    ec.backbone.dim = 16;
    ec.backbone.epochs = 3;
    ec.train.max_epochs = 2;
    ec.train.patience = 2;
    ec.train.learning_rate = 1e-3;

    LabContext ctx = build_context(ec);
    CellResult hybrid = run_cell(ctx, ec, parse_variant("cls-t+prompt"), 1, "");
    bool hybrid_ok = hybrid.done && std::isfinite(hybrid.row.macro_f1) &&
                     std::isfinite(hybrid.row.accuracy);

    bool guarded = false;
    std::string what;
    try {
        BackboneParams b = ctx.backbone.clone();
        Model mlm(b, build_head(HeadSpec::mlm(true), b, 4, 1, ctx.verbalizer));
        std::vector<std::vector<int>> raw;
        for (int i = 0; i < 3; ++i) raw.push_back(ctx.raw.train.examples[i].tokens);
        mlm.forward(raw);
    } catch (const InputStructureError& e) {
        guarded = true;
        what = e.what();
    }
    bool pass = hybrid_ok && guarded;
    record(9, "input-structure-guard", pass,
           fmt("hybrid trained+evaluated on rendered inputs (macro-F1 %.4f); masked-token "
               "head on raw corpus -> input-structure error %s",
               hybrid.row.macro_f1, guarded ? ("raised (\"" + what + "\")").c_str() : "MISSING"));
}

// ---------------------------------------------------------------------------
// 7 / 10 / 11. the canonical matrix: determinism, norm decay, tail ordering

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct MatrixArtifacts {
    fs::path run1, run2;
    double train_secs = 0.0;
    bool ready = false;
};

MatrixArtifacts run_canonical_matrix() {
    MatrixArtifacts art;
    Config cfg = Config::parse_file(std::string(GLEE_SOURCE_DIR) + "/configs/canonical_matrix.cfg");
    fs::path base = fs::current_path() / "acceptance_out";
    fs::remove_all(base);
    art.run1 = base / "run1";
    art.run2 = base / "run2";

    auto t0 = std::chrono::steady_clock::now();
    cfg.set("output", art.run1.string());
    cmd_train(cfg);
    art.train_secs = seconds_since(t0);
    cmd_analyze(cfg);

    cfg.set("output", art.run2.string());
    cmd_train(cfg);
    cmd_analyze(cfg);
    art.ready = true;
    return art;
}

void check_determinism(const MatrixArtifacts& art) {
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(art.run1))
        if (entry.path().extension() == ".csv") names.insert(entry.path().filename().string());
    std::string bad;
    for (const std::string& f : names) {
        std::string a = slurp(art.run1 / f);
        if (a.empty() || !fs::exists(art.run2 / f) || a != slurp(art.run2 / f))
            bad += (bad.empty() ? "" : ", ") + f;
    }
    bool pass = !names.empty() && bad.empty();
    record(10, "determinism", pass,
           pass ? fmt("two invocations of the 10-variant x 5-seed matrix: all %zu CSVs "
                      "byte-identical (first run %.1fs)",
                      names.size(), art.train_secs)
                : "files differ or empty: " + (bad.empty() ? std::string("<none found>") : bad));
}

void check_norm_decay(const MatrixArtifacts& art) {
    // per-seed slopes written by the analyzer for the canonical run
    std::ifstream in(art.run1 / "slopes.csv");
    std::string line;
    std::getline(in, line);  // header
    std::size_t decay = 0, seeds = 0, flat_cal = 0, cal_rows = 0;
    double worst = 1.0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string variant, seed, pearson, spearman, flat;
        std::getline(ss, variant, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, pearson, ',');
        std::getline(ss, spearman, ',');
        std::getline(ss, flat, ',');
        if (variant == "cls-t") {
            ++seeds;
            double rho = std::stod(spearman);
            worst = std::min(worst, rho);
            if (rho <= -0.5) ++decay;
        } else if (variant == "cls-t+etanorm") {
            ++cal_rows;
            if (flat == "1") ++flat_cal;
        }
    }
    bool pass = seeds == 5 && decay >= 4 && cal_rows == 5 && flat_cal == 5 &&
                art.train_secs < 60.0;
    record(7, "decoupling-property", pass,
           fmt("cls-t spearman <= -0.5 in %zu/%zu seeds (best %.3f); eta-norm tau=1 "
               "profile flat in %zu/%zu seeds; matrix trained in %.1fs (limit 60s)",
               decay, seeds, worst, flat_cal, cal_rows, art.train_secs));
}

void check_tail_ordering(const MatrixArtifacts& art) {
    std::vector<ResultRow> rows = read_results_csv((art.run1 / "results.csv").string());
    std::vector<double> with_ln, without_ln;
    for (const ResultRow& r : rows) {
        if (r.variant == "cls-r+ptln") with_ln.push_back(r.tail_f1);
        if (r.variant == "cls-r") without_ln.push_back(r.tail_f1);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto dev = [&](const std::vector<double>& v) {
        double m = mean(v), s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size()));
    };
    double a = mean(with_ln), b = mean(without_ln);
    bool ordered = a >= b;

    // the analyzer must surface the same comparison as an ok/flagged row
    bool row_matches = false;
    std::ifstream in(art.run1 / "checks.csv");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("tail_f1_order,", 0) != 0) continue;
        if (line.find("cls-r+ptln=") == std::string::npos) continue;
        std::string status = line.substr(line.rfind(',') + 1);
        row_matches = status == (ordered ? "ok" : "flagged");
    }

    bool pass = with_ln.size() == 5 && without_ln.size() == 5 && row_matches;
    record(11, "tail-f1-ablation-report", pass,
           fmt("5-seed mean tail-F1: cls-r+ptln %.4f+-%.4f vs cls-r %.4f+-%.4f -> %s "
               "(reported as '%s'; an inverted ordering flags rather than fails)",
               a, dev(with_ln), b, dev(without_ln), ordered ? "ordered" : "NOT ordered",
               ordered ? "ok" : "flagged"));
}

}  // namespace

int main() {
    struct Section {
        int id;
        const char* name;
        void (*fn)();
    };
    const std::vector<Section> simple = {
        {1, "gradient-correctness", check_gradients},
        {2, "loss-identities", check_loss_identities},
        {3, "calibration-identities", check_calibration_identities},
        {4, "metric-oracle", check_metric_oracle},
        {5, "head-tail-oracle", check_head_tail_oracle},
        {6, "verbalizer-averaging", check_verbalizer},
        {8, "tying-semantics", check_tying},
        {9, "input-structure-guard", check_input_structure},
    };
    for (const Section& s : simple) {
        try {
            s.fn();
        } catch (const std::exception& e) {
            record(s.id, s.name, false, std::string("exception: ") + e.what());
        }
    }

    MatrixArtifacts art;
    try {
        art = run_canonical_matrix();
    } catch (const std::exception& e) {
        record(10, "determinism", false, std::string("matrix run failed: ") + e.what());
    }
    if (art.ready) {
        struct MSection {
            int id;
            const char* name;
            void (*fn)(const MatrixArtifacts&);
        };
        for (const MSection& s : std::vector<MSection>{
                 {10, "determinism", check_determinism},
                 {7, "decoupling-property", check_norm_decay},
                 {11, "tail-f1-ablation-report", check_tail_ordering}}) {
            try {
                s.fn(art);
            } catch (const std::exception& e) {
                record(s.id, s.name, false, std::string("exception: ") + e.what());
            }
        }
    } else {
        record(7, "decoupling-property", false, "canonical matrix unavailable");
        record(11, "tail-f1-ablation-report", false, "canonical matrix unavailable");
    }

    std::sort(g_lines.begin(), g_lines.end(),
              [](const Line& a, const Line& b) { return a.id < b.id; });
    int failures = 0;
    for (const Line& l : g_lines) {
        std::printf("[AC%-2d] %-26s %s — %s\n", l.id, l.name.c_str(),
                    l.pass ? "PASS" : "FAIL", l.detail.c_str());
        if (!l.pass) ++failures;
    }
    std::printf("%zu criteria, %d failed\n", g_lines.size(), failures);
    return failures;
}
