#pragma once

#include <vector>

#include "eegrl/autodiff.hpp"

namespace eegrl {

// RMSProp-style adaptive update. weight_decay contributes an L2 term to the
// gradient; max_norm rescales each dim-0 filter slice after the update.
struct RmsPropConfig {
    double learning_rate = 2.5e-4;
    double decay = 0.95;
    double epsilon = 1e-8;
};

class RmsProp {
  public:
    explicit RmsProp(RmsPropConfig cfg = {}) : cfg_(cfg) {}

    // params order must be stable across calls; accumulators key off position
    void step(const std::vector<Parameter*>& params);

    const RmsPropConfig& config() const { return cfg_; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

  private:
    RmsPropConfig cfg_;
    std::vector<Tensor> mean_sq_;
};

// Rescales every dim-0 slice of value to L2 norm <= max_norm.
void clip_filter_norms(Tensor& value, double max_norm);

}  // namespace eegrl
