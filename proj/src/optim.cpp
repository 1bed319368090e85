#include "glee/optim.hpp"

#include <cmath>

#include "glee/error.hpp"

namespace glee {

double clip_gradients(const std::vector<ParamRef>& params, double max_norm) {
    if (max_norm <= 0.0) throw ConfigError("clip_gradients: max_norm must be > 0");
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p.grad->data) sq += g * g;
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm) {
        double scale = max_norm / norm;
        for (const auto& p : params) {
            for (double& g : p.grad->data) g *= scale;
        }
    }
    return norm;
}

void AdamW::step(const std::vector<ParamRef>& params, double lr) {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    for (const auto& p : params) {
        auto& [m, v] = moments_[p.name];
        if (m.data.empty()) {
            m = RealMatrix(p.value->rows, p.value->cols);
            v = RealMatrix(p.value->rows, p.value->cols);
        }
        if (!m.same_shape(*p.value)) {
            throw DimensionError("AdamW: moment shape mismatch for '" + p.name + "'");
        }
        for (std::size_t i = 0; i < p.value->data.size(); ++i) {
            const double g = p.grad->data[i];
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            double& w = p.value->data[i];
            w -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w);
        }
    }
}

void AdamW::restore(std::map<std::string, std::pair<RealMatrix, RealMatrix>> moments,
                    std::uint64_t step_count) {
    moments_ = std::move(moments);
    step_count_ = step_count;
}

}  // namespace glee
