#include <cmath>
#include <vector>

#include "doctest.h"
#include "glee/backbone.hpp"
#include "glee/error.hpp"
#include "glee/heads.hpp"
#include "glee/matrix.hpp"
#include "glee/rng.hpp"

using namespace glee;

namespace {

Verbalizer small_verbalizer() {
    return Verbalizer({{0, {4, 5}}, {1, {6}}, {2, {7, 8, 9}}}, 16);
}

}  // namespace

TEST_CASE("head spec validation") {
    HeadSpec bad_cls = HeadSpec::cls(Activation::Tanh);
    bad_cls.input_repr = InputRepr::Mask;
    CHECK_THROWS_AS(bad_cls.validate(), ConfigError);

    HeadSpec gelu_cls = HeadSpec::cls(Activation::Tanh);
    gelu_cls.activation = Activation::Gelu;
    CHECK_THROWS_AS(gelu_cls.validate(), ConfigError);

    HeadSpec bad_mlm = HeadSpec::mlm(true);
    bad_mlm.activation = Activation::Tanh;
    CHECK_THROWS_AS(bad_mlm.validate(), ConfigError);

    CHECK_NOTHROW(HeadSpec::cls(Activation::ReLU, LnMode::Fresh).validate());
    CHECK_NOTHROW(HeadSpec::hybrid(Activation::Tanh).validate());
    CHECK_NOTHROW(HeadSpec::mlm(false).validate());
}

TEST_CASE("cls head construction and activation-isolated initialization") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 3);
    HeadParams tanh_head = build_head(HeadSpec::cls(Activation::Tanh), bb, 5, 42);
    CHECK(tanh_head.dense.w.rows == 8);
    CHECK(tanh_head.dense.w.cols == 8);
    CHECK(tanh_head.predictor->rows == 5);
    CHECK(tanh_head.predictor->cols == 8);
    CHECK(tanh_head.has_bias());
    CHECK(tanh_head.predictor_bias.cols == 5);
    CHECK_FALSE(tanh_head.ln.has_value());

    // same seed, different activation / LN mode: identical weight draws
    HeadParams relu_head = build_head(HeadSpec::cls(Activation::ReLU), bb, 5, 42);
    CHECK(max_abs_diff(tanh_head.dense.w, relu_head.dense.w) == 0.0);
    CHECK(max_abs_diff(*tanh_head.predictor, *relu_head.predictor) == 0.0);
    HeadParams ln_head = build_head(HeadSpec::cls(Activation::Tanh, LnMode::Fresh), bb, 5, 42);
    CHECK(max_abs_diff(tanh_head.dense.w, ln_head.dense.w) == 0.0);
    CHECK(ln_head.ln.has_value());
    CHECK(ln_head.ln->gamma.at(0, 0) == 1.0);

    HeadParams other_seed = build_head(HeadSpec::cls(Activation::Tanh), bb, 5, 43);
    CHECK(max_abs_diff(tanh_head.dense.w, other_seed.dense.w) > 0.0);
}

TEST_CASE("pretrained LN requires a pretrained backbone") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 3);
    CHECK_THROWS_AS(build_head(HeadSpec::cls(Activation::ReLU, LnMode::Pretrained), bb, 3, 1),
                    ConfigError);
    bb.provenance = Provenance::Pretrained;
    bb.mlm_ln.gamma.at(0, 2) = 1.5;
    HeadParams head = build_head(HeadSpec::cls(Activation::ReLU, LnMode::Pretrained), bb, 3, 1);
    REQUIRE(head.ln.has_value());
    CHECK(head.ln->gamma.at(0, 2) == 1.5);
}

TEST_CASE("mlm head ties or copies the embedding table") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 4);
    Verbalizer verb = small_verbalizer();
    HeadParams tied = build_head(HeadSpec::mlm(true), bb, 3, 7, verb);
    CHECK(tied.predictor.get() == bb.embedding.get());
    CHECK_FALSE(tied.has_bias());
    REQUIRE(tied.ln.has_value());
    CHECK(max_abs_diff(tied.dense.w, bb.mlm_dense.w) == 0.0);

    HeadParams untied = build_head(HeadSpec::mlm(false), bb, 3, 7, verb);
    CHECK(untied.predictor.get() != bb.embedding.get());
    CHECK(max_abs_diff(*untied.predictor, *bb.embedding) == 0.0);

    // a missing verbalizer cannot drive the vocabulary reduction
    CHECK_THROWS_AS(build_head(HeadSpec::mlm(true), bb, 3, 7), ConfigError);
    // and verbalizer tokens must exist in the embedding table
    Verbalizer oob({{0, {4}}, {1, {5}}, {2, {200}}}, 256);
    CHECK_THROWS_AS(build_head(HeadSpec::mlm(true), bb, 3, 7, oob), VerbalizerError);

    // clone unties the predictor
    HeadParams copy = tied.clone();
    CHECK(copy.predictor.get() != tied.predictor.get());
    CHECK(max_abs_diff(*copy.predictor, *tied.predictor) == 0.0);
}

TEST_CASE("verbalizer reduction averages token logits") {
    Verbalizer verb = small_verbalizer();
    RealMatrix token_logits(2, 16, 0.0);
    token_logits.at(0, 4) = 1.0;
    token_logits.at(0, 5) = 3.0;
    token_logits.at(0, 6) = -2.0;
    token_logits.at(1, 7) = 0.3;
    token_logits.at(1, 8) = 0.6;
    token_logits.at(1, 9) = 0.9;
    RealMatrix cls = verbalizer_reduce(token_logits, verb);
    CHECK(cls.rows == 2);
    CHECK(cls.cols == 3);
    CHECK(cls.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cls.at(0, 1) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(cls.at(1, 2) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(cls.at(1, 0) == 0.0);
}

TEST_CASE("effective class rows: identity for cls, verbalizer mean for mlm") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 5);
    HeadParams cls = build_head(HeadSpec::cls(Activation::Tanh), bb, 3, 11);
    RealMatrix rows = effective_class_rows(cls);
    CHECK(rows.rows == 3);
    CHECK(max_abs_diff(rows, *cls.predictor) == 0.0);

    Verbalizer verb = small_verbalizer();
    HeadParams mlm = build_head(HeadSpec::mlm(true), bb, 3, 11, verb);
    RealMatrix eff = effective_class_rows(mlm);
    CHECK(eff.rows == 3);
    for (std::size_t j = 0; j < 8; ++j) {
        double want = (mlm.predictor->at(4, j) + mlm.predictor->at(5, j)) / 2.0;
        CHECK(eff.at(0, j) == doctest::Approx(want).epsilon(1e-15));
        CHECK(eff.at(1, j) == doctest::Approx(mlm.predictor->at(6, j)).epsilon(1e-15));
    }
}

TEST_CASE("mask-reading heads reject unrendered batches") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 6);
    Verbalizer verb = small_verbalizer();
    std::vector<std::vector<int>> unrendered = {{Vocabulary::kCls, 4, 5, 6}};
    EncodedBatch eb = encode(unrendered, bb);

    HeadParams hybrid = build_head(HeadSpec::hybrid(Activation::Tanh), bb, 3, 1);
    CHECK_THROWS_AS(head_forward(hybrid, eb), InputStructureError);
    HeadParams mlm = build_head(HeadSpec::mlm(true), bb, 3, 1, verb);
    CHECK_THROWS_AS(head_forward(mlm, eb), InputStructureError);

    HeadParams cls = build_head(HeadSpec::cls(Activation::Tanh), bb, 3, 1);
    CHECK_NOTHROW(head_forward(cls, eb));

    std::vector<std::vector<int>> rendered = {{Vocabulary::kCls, 4, 5, Vocabulary::kMask}};
    EncodedBatch eb2 = encode(rendered, bb);
    RealMatrix logits = head_forward(hybrid, eb2);
    CHECK(logits.rows == 1);
    CHECK(logits.cols == 3);
    CHECK(all_finite(logits));
}

TEST_CASE("head forward on features matches the batch path for cls heads") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 7);
    HeadParams cls = build_head(HeadSpec::cls(Activation::ReLU, LnMode::Fresh), bb, 4, 2);
    std::vector<std::vector<int>> batch = {{Vocabulary::kCls, 4, 5}, {Vocabulary::kCls, 6, 7}};
    EncodedBatch eb = encode(batch, bb);
    RealMatrix via_batch = head_forward(cls, eb);
    RealMatrix via_features = head_forward_features(cls, eb.cls_repr);
    CHECK(max_abs_diff(via_batch, via_features) == 0.0);
}
