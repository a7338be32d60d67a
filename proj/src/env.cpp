#include "eegrl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace eegrl {

ActionSpace ActionSpace::default_grid() {
    ActionSpace a;
    for (int i = 1; i <= 16; ++i) a.proposals.push_back(0.5 * i);
    return a;
}

double ActionSpace::prt(int index) const {
    if (index < 0 || index >= size())
        throw std::out_of_range("ActionSpace: action index " + std::to_string(index) +
                                " outside grid of " + std::to_string(size()));
    return proposals[static_cast<size_t>(index)];
}

void ActionSpace::validate() const {
    if (proposals.empty()) throw std::invalid_argument("ActionSpace: empty grid");
    for (size_t i = 0; i < proposals.size(); ++i) {
        if (proposals[i] < 0.5 || proposals[i] > 8.0)
            throw std::invalid_argument("ActionSpace: proposals must lie in [0.5, 8]");
        if (i > 0 && proposals[i] <= proposals[i - 1])
            throw std::invalid_argument("ActionSpace: proposals must be strictly increasing");
    }
}

SessionEnv::SessionEnv(const std::vector<SegmentState>& segments, ActionSpace actions,
                       double beta, double initial_trt)
    : segments_(&segments), actions_(std::move(actions)), beta_(beta),
      initial_trt_(initial_trt), trt_(initial_trt) {
    actions_.validate();
    if (segments_->empty()) throw std::invalid_argument("SessionEnv: empty session");
    if (beta_ < 0.0 || beta_ > 1.0)
        throw std::invalid_argument("SessionEnv: beta must lie in [0, 1]");
    if (initial_trt_ < actions_.proposals.front() || initial_trt_ > actions_.proposals.back())
        throw std::invalid_argument("SessionEnv: initial traced RT outside the proposal range");
}

const SegmentState& SessionEnv::reset() {
    trt_ = initial_trt_;
    cursor_ = 0;
    return (*segments_)[0];
}

const SegmentState& SessionEnv::current() const {
    if (done()) throw std::logic_error("SessionEnv: episode is done");
    return (*segments_)[cursor_];
}

StepResult SessionEnv::step(int action_index) {
    if (done()) throw std::logic_error("SessionEnv: step after episode end");
    const double prt = actions_.prt(action_index);

    trt_ = beta_ * trt_ + (1.0 - beta_) * prt;

    const SegmentState& consumed = (*segments_)[cursor_];
    StepResult r;
    r.traced_rt = trt_;
    r.reward = consumed.measured_rt ? -std::abs(*consumed.measured_rt - trt_) : 0.0;
    ++cursor_;
    r.done = cursor_ >= segments_->size();
    r.next_state = r.done ? nullptr : &(*segments_)[cursor_];
    return r;
}

}  // namespace eegrl
