#include <cmath>
#include <vector>

#include "doctest.h"
#include "glee/backbone.hpp"
#include "glee/error.hpp"
#include "glee/heads.hpp"
#include "glee/matrix.hpp"
#include "glee/objectives.hpp"
#include "glee/rng.hpp"

using namespace glee;

TEST_CASE("focal loss with gamma zero is exactly cross entropy") {
    Rng rng(mix_seed(9, 0xf0));
    for (int t = 0; t < 50; ++t) {
        RealMatrix logits(3, 4);
        for (double& v : logits.data) v = 2.0 * normal01(rng);
        std::vector<int> targets = {static_cast<int>(uniform_below(rng, 4)),
                                    static_cast<int>(uniform_below(rng, 4)),
                                    static_cast<int>(uniform_below(rng, 4))};
        LossResult ce = loss_forward_backward(logits, targets, {LossKind::CrossEntropy, 2.0});
        LossResult f0 = loss_forward_backward(logits, targets, {LossKind::Focal, 0.0});
        CHECK(ce.loss == f0.loss);  // same code path, bitwise
        CHECK(max_abs_diff(ce.dlogits, f0.dlogits) == 0.0);
    }
}

TEST_CASE("focal loss worked value") {
    // two equal logits: p_t = 0.5, gamma = 2 -> loss = 0.25 * ln 2
    RealMatrix logits(1, 2, 0.0);
    LossResult r = loss_forward_backward(logits, {0}, {LossKind::Focal, 2.0});
    CHECK(r.loss == doctest::Approx(0.17328679513998632).epsilon(1e-14));
    CHECK(r.loss == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("focal gradient matches finite differences") {
    Rng rng(mix_seed(10, 0xf1));
    RealMatrix logits(2, 5);
    for (double& v : logits.data) v = normal01(rng);
    std::vector<int> targets = {3, 1};
    LossSpec spec{LossKind::Focal, 2.0};
    LossResult r = loss_forward_backward(logits, targets, spec);
    const double h = 1e-6;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double saved = logits.data[i];
        logits.data[i] = saved + h;
        double lp = loss_forward_backward(logits, targets, spec).loss;
        logits.data[i] = saved - h;
        double lm = loss_forward_backward(logits, targets, spec).loss;
        logits.data[i] = saved;
        CHECK(r.dlogits.data[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("loss input validation") {
    RealMatrix logits(2, 3);
    CHECK_THROWS_AS(loss_forward_backward(logits, {0}, {LossKind::CrossEntropy, 2.0}),
                    DimensionError);
    CHECK_THROWS_AS(loss_forward_backward(logits, {0, 7}, {LossKind::CrossEntropy, 2.0}),
                    IndexError);
    CHECK_THROWS_AS(loss_forward_backward(logits, {0, 1}, {LossKind::Focal, -1.0}), ConfigError);
}

TEST_CASE("eta norm calibration identities on a cls head") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 12);
    HeadParams head = build_head(HeadSpec::cls(Activation::Tanh), bb, 4, 3);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t j = 0; j < 8; ++j) head.predictor->at(c, j) *= double(c + 1);
    head.predictor_bias.at(0, 2) = 0.75;

    HeadParams same = eta_norm_calibrate(head, 0.0);
    CHECK(same.predictor->data == head.predictor->data);
    CHECK(same.predictor.get() != head.predictor.get());  // still a deep copy

    HeadParams cal = eta_norm_calibrate(head, 1.0);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(l2_norm(cal.predictor->row(c), 8) == doctest::Approx(1.0).epsilon(1e-12));
        // direction preserved: calibrated row is a positive multiple
        double ratio = cal.predictor->at(c, 0) / head.predictor->at(c, 0);
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(cal.predictor->at(c, j) == doctest::Approx(ratio * head.predictor->at(c, j))
                                                 .epsilon(1e-12));
    }
    CHECK(cal.predictor_bias.at(0, 2) == 0.75);  // biases untouched

    // intermediate tau interpolates the norms
    HeadParams half = eta_norm_calibrate(head, 0.5);
    double n0 = l2_norm(head.predictor->row(3), 8);
    CHECK(l2_norm(half.predictor->row(3), 8) == doctest::Approx(std::sqrt(n0)).epsilon(1e-9));
}

TEST_CASE("eta norm on an mlm head scales whole verbalizer classes") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 13);
    Verbalizer verb({{0, {4, 5}}, {1, {6}}, {2, {7, 8, 9}}}, 16);
    HeadParams head = build_head(HeadSpec::mlm(false), bb, 3, 3, verb);

    HeadParams cal = eta_norm_calibrate(head, 1.0);
    RealMatrix before = effective_class_rows(head);
    RealMatrix after = effective_class_rows(cal);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(l2_norm(after.row(c), 8) == doctest::Approx(1.0).epsilon(1e-12));
    // both token rows of class 0 share one scale factor
    double s4 = cal.predictor->at(4, 0) / head.predictor->at(4, 0);
    double s5 = cal.predictor->at(5, 3) / head.predictor->at(5, 3);
    CHECK(s4 == doctest::Approx(s5).epsilon(1e-12));
    CHECK(s4 == doctest::Approx(1.0 / l2_norm(before.row(0), 8)).epsilon(1e-12));
    // non-verbalizer vocabulary rows stay untouched
    CHECK(cal.predictor->at(10, 0) == head.predictor->at(10, 0));
}

TEST_CASE("eta norm rejects degenerate rows") {
    BackboneParams bb = BackboneParams::random_init(16, 8, 14);
    HeadParams head = build_head(HeadSpec::cls(Activation::Tanh), bb, 3, 3);
    for (std::size_t j = 0; j < 8; ++j) head.predictor->at(1, j) = 0.0;
    CHECK_NOTHROW(eta_norm_calibrate(head, 0.0));  // identity never inspects norms
    CHECK_THROWS_AS(eta_norm_calibrate(head, 1.0), DegenerateRowError);
}

TEST_CASE("loss kind names") {
    CHECK(loss_kind_name(LossKind::CrossEntropy) == "cross_entropy");
    CHECK(loss_kind_name(LossKind::Focal) == "focal");
}
