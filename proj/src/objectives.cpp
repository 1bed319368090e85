#include "glee/objectives.hpp"

#include <cmath>
#include <set>

#include "glee/error.hpp"
#include "glee/kernels.hpp"

namespace glee {

std::string loss_kind_name(LossKind kind) {
    return kind == LossKind::CrossEntropy ? "cross_entropy" : "focal";
}

LossResult loss_forward_backward(const RealMatrix& logits, const std::vector<int>& targets,
                                 const LossSpec& spec) {
    if (spec.kind == LossKind::Focal &&
        (!std::isfinite(spec.gamma) || spec.gamma < 0.0)) {
        throw ConfigError("focal gamma must be finite and >= 0");
    }

    if (spec.kind == LossKind::CrossEntropy ||
        (spec.kind == LossKind::Focal && spec.gamma == 0.0)) {
        auto ce = softmax_cross_entropy(logits, targets);
        return {ce.loss, std::move(ce.dlogits)};
    }

    const std::size_t n = logits.rows;
    const std::size_t C = logits.cols;
    if (targets.size() != n) throw DimensionError("loss: targets/logits row mismatch");
    const double gamma = spec.gamma;

    LossResult res;
    res.dlogits = RealMatrix(n, C);
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= C) {
            throw IndexError("loss: target " + std::to_string(t) + " outside [0, " +
                             std::to_string(C) + ")");
        }
        const double* z = logits.row(i);
        double zmax = z[0];
        for (std::size_t j = 1; j < C; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < C; ++j) sum += std::exp(z[j] - zmax);
        const double lse = zmax + std::log(sum);

        const double log_pt = z[static_cast<std::size_t>(t)] - lse;  // exact, never -inf-prone
        const double pt = std::exp(log_pt);
        const double u = 1.0 - pt;
        total += -std::pow(u, gamma) * log_pt;

        // d/dz_j of -(1-pt)^g log pt  =  [g*pt*(1-pt)^(g-1)*log pt - (1-pt)^g] * (1[j=t] - p_j)
        const double pt_log_pt = pt == 0.0 ? 0.0 : pt * log_pt;
        const double factor =
            gamma * std::pow(u, gamma - 1.0) * pt_log_pt - std::pow(u, gamma);
        double* drow = res.dlogits.row(i);
        for (std::size_t j = 0; j < C; ++j) {
            const double p_j = std::exp(z[j] - lse);
            const double indicator = (static_cast<std::size_t>(t) == j) ? 1.0 : 0.0;
            drow[j] = factor * (indicator - p_j) * inv_n;
        }
    }
    res.loss = total * inv_n;
    return res;
}

HeadParams eta_norm_calibrate(const HeadParams& head, double tau) {
    if (!std::isfinite(tau) || tau < 0.0) throw ConfigError("eta-norm tau must be finite and >= 0");
    HeadParams out = head.clone();
    if (tau == 0.0) return out;  // identity, bitwise

    RealMatrix& p = *out.predictor;
    const std::size_t d = out.dim();

    if (head.spec.scheme != HeadScheme::Mlm) {
        for (std::size_t c = 0; c < out.num_classes; ++c) {
            const double norm = l2_norm(p.row(c), d);
            if (norm == 0.0) {
                throw DegenerateRowError("eta-norm: class " + std::to_string(c) +
                                         " has a zero-norm weight row");
            }
            const double scale = std::pow(norm, -tau);
            double* w = p.row(c);
            for (std::size_t j = 0; j < d; ++j) w[j] *= scale;
        }
        return out;
    }

    // Masked-token head: one scale per class, shared by all its token rows.
    // A token claimed by two classes would need two different scales.
    std::set<int> seen;
    for (const auto& [cls, tokens] : head.verbalizer.classes()) {
        for (int t : tokens) {
            if (!seen.insert(t).second) {
                throw VerbalizerError(
                    "eta-norm: token " + std::to_string(t) +
                    " is shared between classes; per-class scaling is ambiguous");
            }
        }
    }
    RealMatrix eff = effective_class_rows(head);
    for (const auto& [cls, tokens] : head.verbalizer.classes()) {
        const double norm = l2_norm(eff.row(static_cast<std::size_t>(cls)), d);
        if (norm == 0.0) {
            throw DegenerateRowError("eta-norm: class " + std::to_string(cls) +
                                     " has a zero-norm effective row");
        }
        const double scale = std::pow(norm, -tau);
        for (int t : tokens) {
            double* w = p.row(static_cast<std::size_t>(t));
            for (std::size_t j = 0; j < d; ++j) w[j] *= scale;
        }
    }
    return out;
}

}  // namespace glee
