#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eegrl/env.hpp"
#include "eegrl/model.hpp"
#include "eegrl/optimizer.hpp"
#include "eegrl/replay.hpp"

namespace eegrl {

struct RlTrainConfig {
    int episodes = 2000;
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.1;  // reached after half of the estimated steps
    // 0 derives the ramp from episodes * mean segment count / 2; setting it
    // explicitly makes shorter reruns reproduce a longer run's prefix
    double epsilon_decay_steps = 0.0;
    int batch_size = 32;
    int target_sync_interval = 500;  // environment steps
    double beta = 0.75;
    double learning_rate = 2.5e-4;
    uint64_t seed = 0;
    size_t replay_capacity = 20000;
    uint64_t replay_seq_modulus = uint64_t{1} << 32;
    double initial_trt = 1.0;
    int val_interval = 10;  // episodes between validation rollouts
};

struct SlTrainConfig {
    int iterations = 600;
    double learning_rate = 1e-4;
    int batch_size = 32;
    uint64_t seed = 0;
};

struct TrainLog {
    std::vector<double> episode_return;
    std::vector<double> avg_return;  // running mean of episode returns
    std::vector<double> step_loss;
};

void write_train_log_csv(const TrainLog& log, const std::string& path);
void write_train_log_summary(const TrainLog& log, const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& extra = {});

// Linear ramp from eps_start to eps_end over decay_steps, then flat.
double epsilon_schedule(double eps_start, double eps_end, double decay_steps, int64_t step);

// Eq.-(2)-style fixed target. dqn/dueling bootstrap with max over the target
// network; double decouples the argmax (online) from the evaluation (target).
double compute_td_target(const Transition& tr, const QNetwork& online,
                         const QNetwork& target, double gamma, Variant variant);

struct RlTrainResult {
    TrainLog log;
    bool has_best = false;
    int best_episode = -1;
    double best_val_correlation = 0.0;
    std::vector<Tensor> best_params;  // values in params() order
};

// epsilon-greedy acting, per-step replay learning against a periodically
// synced target network. `online` is (re)initialised from the config seed.
RlTrainResult train_rl(const std::vector<const std::vector<SegmentState>*>& train_sessions,
                       const std::vector<SegmentState>* val_session,
                       const ActionSpace& actions, const RlTrainConfig& cfg,
                       QNetwork& online);

TrainLog train_supervised(const std::vector<TrialSample>& trials, const SlTrainConfig& cfg,
                          QNetwork& net);

// Greedy (eps = 0) pass over a session; returns the traced-RT trajectory.
std::vector<double> greedy_rollout(const QNetwork& model,
                                   const std::vector<SegmentState>& segments,
                                   const ActionSpace& actions, double beta,
                                   double initial_trt);

}  // namespace eegrl
