#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "glee/matrix.hpp"

namespace glee {

// A trainable parameter paired with its gradient accumulator. Tied
// parameters appear exactly once.
struct ParamRef {
    std::string name;
    RealMatrix* value = nullptr;
    RealMatrix* grad = nullptr;
};

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_gradients(const std::vector<ParamRef>& params, double max_norm);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

class AdamW {
public:
    AdamW() = default;
    explicit AdamW(AdamConfig cfg) : cfg_(cfg) {}

    void step(const std::vector<ParamRef>& params, double lr);

    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint access: moment matrices keyed by parameter name.
    const std::map<std::string, std::pair<RealMatrix, RealMatrix>>& moments() const {
        return moments_;
    }
    void restore(std::map<std::string, std::pair<RealMatrix, RealMatrix>> moments,
                 std::uint64_t step_count);

private:
    AdamConfig cfg_;
    std::map<std::string, std::pair<RealMatrix, RealMatrix>> moments_;  // m, v
    std::uint64_t step_count_ = 0;
};

}  // namespace glee
