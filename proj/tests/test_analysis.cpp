#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "glee/backbone.hpp"
#include "glee/data.hpp"
#include "glee/error.hpp"
#include "glee/heads.hpp"
#include "glee/metrics.hpp"
#include "glee/model.hpp"
#include "glee/rng.hpp"
#include "glee/vocab.hpp"

using namespace glee;

TEST_CASE("confusion matrix and per-class F1") {
    std::vector<int> gold = {0, 0, 1, 2};
    std::vector<int> pred = {0, 1, 1, 2};
    auto cm = confusion_matrix(gold, pred, 3);
    CHECK(cm[0][0] == 1);
    CHECK(cm[0][1] == 1);
    CHECK(cm[1][1] == 1);
    CHECK(cm[2][2] == 1);
    std::vector<double> f1 = f1_from_confusion(cm);
    CHECK(f1[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // tp=1 fp=0 fn=1
    CHECK(f1[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // tp=1 fp=1 fn=0
    CHECK(f1[2] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(confusion_matrix({0, 3}, {0, 0}, 3), IndexError);
    CHECK_THROWS_AS(confusion_matrix({0}, {0, 0}, 3), DimensionError);

    // a class absent from gold and predictions scores zero but stays in the mean
    std::vector<double> f1b = f1_from_confusion(confusion_matrix({0, 0}, {0, 0}, 2));
    CHECK(f1b[1] == 0.0);
}

TEST_CASE("report from predictions: worked example and constant predictor") {
    HeadTailSplit split;
    split.head = {0};
    split.tail = {1, 2};
    EvalReport r = report_from_predictions({0, 0, 1, 2}, {0, 1, 1, 2}, 3, split);
    CHECK(r.accuracy == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.macro_f1 == doctest::Approx(7.0 / 9.0).epsilon(1e-12));  // ~0.7778
    CHECK(r.head_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.tail_f1 == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0).epsilon(1e-12));
    CHECK(r.n_test == 4);

    // a constant predictor on a balanced three-class set
    EvalReport c = report_from_predictions({0, 1, 2}, {0, 0, 0}, 3, split);
    CHECK(c.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(c.per_class_f1[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.per_class_f1[1] == 0.0);
    CHECK(c.macro_f1 == doctest::Approx(0.5 / 3.0).epsilon(1e-12));

    CHECK(macro_f1_score({0, 0, 1, 2}, {0, 1, 1, 2}, 3) ==
          doctest::Approx(7.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("evaluation over a model agrees with predict plus report") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 31);
    Model model(bb, build_head(HeadSpec::cls(Activation::Tanh), bb, 3, 5));
    Rng rng(mix_seed(31, 0xe));
    std::vector<Example> examples;
    for (int i = 0; i < 20; ++i) {
        Example ex;
        ex.tokens = {Vocabulary::kCls, static_cast<int>(4 + uniform_below(rng, 12)),
                     static_cast<int>(4 + uniform_below(rng, 12))};
        ex.label = static_cast<int>(uniform_below(rng, 3));
        examples.push_back(ex);
    }
    Corpus test = Corpus::from_examples(examples, 3, Split::Test);
    HeadTailSplit split = compute_head_tail(test.class_counts, 0.6);

    EvalReport direct = evaluate(model, test, split);
    std::vector<std::vector<int>> inputs;
    std::vector<int> gold;
    for (const Example& ex : test.examples) {
        inputs.push_back(ex.tokens);
        gold.push_back(ex.label);
    }
    EvalReport manual = report_from_predictions(gold, predict(model, inputs), 3, split);
    CHECK(direct.accuracy == manual.accuracy);
    CHECK(direct.macro_f1 == manual.macro_f1);
    CHECK(direct.head_f1 == manual.head_f1);
    CHECK(direct.tail_f1 == manual.tail_f1);
}

TEST_CASE("argmax prediction breaks ties toward the lowest index") {
    BackboneParams dims = BackboneParams::random_init(8, 4, 0);
    HeadParams head = build_head(HeadSpec::cls(Activation::Tanh), dims, 3, 1);
    head.dense.w.fill(0.0);
    head.predictor->fill(0.0);
    head.predictor_bias.fill(0.0);
    Model model = Model::feature_model(head);
    RealMatrix x(2, 4, 0.5);
    std::vector<int> pred = predict_features(model, x);
    CHECK(pred == std::vector<int>{0, 0});
}

TEST_CASE("norm profile orders classes by count then id") {
    BackboneParams dims = BackboneParams::random_init(8, 4, 0);
    HeadParams head = build_head(HeadSpec::cls(Activation::Tanh), dims, 4, 2);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t j = 0; j < 4; ++j)
            head.predictor->at(c, j) = (j == 0) ? static_cast<double>(c + 1) : 0.0;

    NormProfile prof = norm_profile(head, {5, 9, 9, 2});
    REQUIRE(prof.entries.size() == 4);
    CHECK(prof.entries[0].class_id == 1);  // count 9, lower id first
    CHECK(prof.entries[1].class_id == 2);
    CHECK(prof.entries[2].class_id == 0);
    CHECK(prof.entries[3].class_id == 3);
    CHECK(prof.entries[0].norm == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(prof.entries[3].norm == doctest::Approx(4.0).epsilon(1e-15));

    CHECK_THROWS_AS(norm_profile(head, {1, 2, 3}), DimensionError);
}

TEST_CASE("norm slope oracles") {
    auto make_profile = [](std::vector<double> norms) {
        NormProfile p;
        for (std::size_t i = 0; i < norms.size(); ++i)
            p.entries.push_back({i, 100 - i, norms[i]});
        return p;
    };

    NormSlope mixed = norm_slope(make_profile({3, 1, 2}));
    CHECK(mixed.spearman_rho == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_FALSE(mixed.flat);

    NormSlope mono = norm_slope(make_profile({5, 4, 3, 2, 1}));
    CHECK(mono.spearman_rho == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(mono.pearson_r == doctest::Approx(-1.0).epsilon(1e-12));

    NormSlope rising = norm_slope(make_profile({1, 2, 3, 4}));
    CHECK(rising.spearman_rho == doctest::Approx(1.0).epsilon(1e-12));

    NormSlope flat = norm_slope(make_profile({2, 2, 2, 2}));
    CHECK(flat.flat);
    CHECK(flat.pearson_r == 0.0);
    CHECK(flat.spearman_rho == 0.0);

    NormProfile tiny;
    tiny.entries.push_back({0, 5, 1.0});
    tiny.entries.push_back({1, 3, 2.0});
    CHECK_THROWS_AS(norm_slope(tiny), Error);
}

TEST_CASE("feature distribution samples bounded activations") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 33);
    Model model(bb, build_head(HeadSpec::cls(Activation::Tanh), bb, 2, 3));
    Rng rng(mix_seed(33, 0xf));
    std::vector<Example> examples;
    for (int i = 0; i < 12; ++i) {
        Example ex;
        ex.tokens = {Vocabulary::kCls, static_cast<int>(4 + uniform_below(rng, 12))};
        ex.label = i % 2;
        examples.push_back(ex);
    }
    Corpus corpus = Corpus::from_examples(examples, 2, Split::Test);

    FeatureDistribution dist = feature_distribution(model, corpus, 1, 5);
    CHECK(dist.class_id == 1);
    CHECK(dist.k == 5);
    REQUIRE(dist.values.size() == 5);
    for (const auto& feature : dist.values) {
        CHECK(feature.size() == 6);  // six class-1 examples
        for (double v : feature) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);  // Tanh features
        }
    }
    CHECK(dist.dead_features == 0);

    CHECK_THROWS_AS(feature_distribution(model, corpus, 7, 5), IndexError);
}
