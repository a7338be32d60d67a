#pragma once

#include <vector>

#include "eegrl/preproc.hpp"

namespace eegrl {

// Discrete RT proposition grid, strictly increasing within [0.5, 8].
struct ActionSpace {
    std::vector<double> proposals;

    // 16 values: 0.5, 1.0, ..., 8.0
    static ActionSpace default_grid();

    int size() const { return static_cast<int>(proposals.size()); }
    double prt(int index) const;  // throws on out-of-range
    void validate() const;
};

struct StepResult {
    const SegmentState* next_state = nullptr;  // null once the episode ends
    double reward = 0.0;
    bool done = false;
    double traced_rt = 0.0;
};

// Session MDP: each step merges the proposed RT into the tracer,
//   tRT <- beta * tRT + (1 - beta) * proposal,
// and rewards -|measured - tRT| on covered segments, 0 elsewhere.
class SessionEnv {
  public:
    SessionEnv(const std::vector<SegmentState>& segments, ActionSpace actions,
               double beta, double initial_trt = 1.0);

    const SegmentState& reset();
    StepResult step(int action_index);

    double traced_rt() const { return trt_; }
    bool done() const { return cursor_ >= segments_->size(); }
    const ActionSpace& actions() const { return actions_; }
    size_t segment_count() const { return segments_->size(); }
    const SegmentState& current() const;

  private:
    const std::vector<SegmentState>* segments_;
    ActionSpace actions_;
    double beta_;
    double initial_trt_;
    double trt_;
    size_t cursor_ = 0;
};

}  // namespace eegrl
