#include "eegrl/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "eegrl/eval.hpp"

namespace eegrl {

namespace {

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_train_log_csv(const TrainLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("train log: cannot write " + path);
    f << "episode,return,avg_return\n";
    for (size_t i = 0; i < log.episode_return.size(); ++i)
        f << (i + 1) << "," << fmt_double(log.episode_return[i]) << ","
          << fmt_double(log.avg_return[i]) << "\n";
}

void write_train_log_summary(const TrainLog& log, const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("train log: cannot write " + path);
    f << "{\n  \"episodes\": " << log.episode_return.size();
    if (!log.episode_return.empty()) {
        f << ",\n  \"final_return\": " << fmt_double(log.episode_return.back());
        f << ",\n  \"final_avg_return\": " << fmt_double(log.avg_return.back());
    }
    f << ",\n  \"learn_steps\": " << log.step_loss.size();
    if (!log.step_loss.empty())
        f << ",\n  \"final_loss\": " << fmt_double(log.step_loss.back());
    for (const auto& [k, v] : extra) f << ",\n  \"" << k << "\": " << v;
    f << "\n}\n";
}

double epsilon_schedule(double eps_start, double eps_end, double decay_steps, int64_t step) {
    if (decay_steps <= 0.0) return eps_end;
    const double f = static_cast<double>(step) / decay_steps;
    if (f >= 1.0) return eps_end;
    return eps_start + f * (eps_end - eps_start);
}

double compute_td_target(const Transition& tr, const QNetwork& online,
                         const QNetwork& target, double gamma, Variant variant) {
    if (!is_rl_variant(variant))
        throw std::invalid_argument("compute_td_target: supervised variant has no TD target");
    if (tr.done) return tr.reward;
    if (gamma == 0.0) return tr.reward;
    if (!tr.next_state)
        throw std::invalid_argument("compute_td_target: non-terminal transition lacks next state");

    const auto target_q = target.q_of(tr.next_state->planes);
    double bootstrap;
    if (variant == Variant::Double) {
        const auto online_q = online.q_of(tr.next_state->planes);
        bootstrap = target_q[static_cast<size_t>(argmax(online_q))];
    } else {
        bootstrap = *std::max_element(target_q.begin(), target_q.end());
    }
    return tr.reward + gamma * bootstrap;
}

namespace {

// Thread sinks collapse into Parameter::grad elementwise; the sink order is
// fixed, so the result does not depend on which thread ran which sample.
void merge_sinks(const std::vector<GradSinks>& sinks, const std::vector<Parameter*>& params) {
    for (size_t k = 0; k < params.size(); ++k) {
        double* dst = params[k]->grad.ptr();
        const int64_t n = params[k]->grad.size();
#pragma omp parallel for simd schedule(static) if (n > 65536)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (size_t s = 0; s < sinks.size(); ++s) acc += sinks[s].grads[k][j];
            dst[j] = acc;
        }
    }
}

// Between syncs the target network is frozen, so Q_target(s') per replay slot
// can be memoised. Entries are keyed by (slot seq, sync version); values are
// exactly what recomputation would produce.
struct TdCacheEntry {
    uint64_t seq = 0;
    int64_t version = -1;
    std::vector<double> target_q;
};

// One gradient step on a sampled batch. Gradients are averaged over the
// batch; each thread accumulates into its own sink set, merged in thread
// order afterwards. Batch slots are distinct, so cache writes never race.
double learn_step(const BatchBuffer& buf, const std::vector<const Transition*>& batch,
                  QNetwork& online, const QNetwork& target, double gamma,
                  std::vector<GradSinks>& sinks, RmsProp& opt,
                  const std::vector<Parameter*>& params, std::vector<TdCacheEntry>& cache,
                  int64_t target_version) {
    const int b = static_cast<int>(batch.size());
    const Variant variant = online.config().variant;
    std::vector<double> losses(static_cast<size_t>(b));
    for (auto& s : sinks) s.zero();

    const bool outer_parallel = kernels::parallel();
#pragma omp parallel for schedule(static) if (outer_parallel)
    for (int i = 0; i < b; ++i) {
        const Transition& tr = *batch[static_cast<size_t>(i)];
        GradSinks& sink = sinks[static_cast<size_t>(omp_get_thread_num())];

        double y = tr.reward;
        if (!tr.done && gamma != 0.0) {
            const auto& entry_ref = buf.entries()[static_cast<size_t>(i)];
            TdCacheEntry& slot_cache = cache[entry_ref.slot];
            if (slot_cache.seq != entry_ref.expected_seq ||
                slot_cache.version != target_version) {
                slot_cache.target_q = target.q_of(tr.next_state->planes);
                slot_cache.seq = entry_ref.expected_seq;
                slot_cache.version = target_version;
            }
            const auto& tq = slot_cache.target_q;
            double bootstrap;
            if (variant == Variant::Double) {
                const auto online_q = online.q_of(tr.next_state->planes);
                bootstrap = tq[static_cast<size_t>(argmax(online_q))];
            } else {
                bootstrap = *std::max_element(tq.begin(), tq.end());
            }
            y += gamma * bootstrap;
        }

        Tape tape(true);
        Node* feat = online.features(tape, tr.state->planes, &sink);
        Node* q = online.action_values(tape, feat, &sink);
        Node* qa = tape.pick(q, tr.action);
        Tensor y_t({1});
        y_t[0] = y;
        Node* loss = tape.squared_error(qa, y_t);
        losses[static_cast<size_t>(i)] = loss->v()[0];
        tape.backward(loss, 1.0 / b);
    }

    merge_sinks(sinks, params);
    opt.step(params);

    double total = 0.0;
    for (double l : losses) total += l;
    return total / b;
}

}  // namespace

RlTrainResult train_rl(const std::vector<const std::vector<SegmentState>*>& train_sessions,
                       const std::vector<SegmentState>* val_session,
                       const ActionSpace& actions, const RlTrainConfig& cfg,
                       QNetwork& online) {
    if (train_sessions.empty())
        throw std::invalid_argument("train_rl: need at least one training session");
    for (const auto* s : train_sessions)
        if (!s || s->empty()) throw std::invalid_argument("train_rl: empty training session");
    if (!is_rl_variant(online.config().variant))
        throw std::invalid_argument("train_rl: network variant must be dqn, double or dueling");
    if (online.config().n_actions != actions.size())
        throw std::invalid_argument("train_rl: action grid size does not match the network head");
    if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
        throw std::invalid_argument("train_rl: gamma must lie in [0, 1]");

    Rng root(cfg.seed);
    Rng rng_init = root.fork(1);
    Rng rng_session = root.fork(2);
    Rng rng_act = root.fork(3);
    Rng rng_replay = root.fork(4);

    online.init(rng_init);
    QNetwork target(online.config());
    target.sync_from(online);

    RmsProp opt({cfg.learning_rate, 0.95, 1e-8});
    const auto params = online.params();
    ReplayQueue queue(cfg.replay_capacity, cfg.replay_seq_modulus);

    const int n_threads = std::max(1, omp_get_max_threads());
    std::vector<GradSinks> sinks;
    sinks.reserve(static_cast<size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) sinks.push_back(online.make_sinks());

    double mean_segments = 0.0;
    for (const auto* s : train_sessions) mean_segments += static_cast<double>(s->size());
    mean_segments /= static_cast<double>(train_sessions.size());
    const double decay_steps = cfg.epsilon_decay_steps > 0.0
                                   ? cfg.epsilon_decay_steps
                                   : 0.5 * cfg.episodes * mean_segments;
    const auto eps_at = [&](int64_t step) {
        return epsilon_schedule(cfg.epsilon_start, cfg.epsilon_end, decay_steps, step);
    };

    RlTrainResult result;
    TrainLog& log = result.log;
    double return_sum = 0.0;
    int64_t global_step = 0;
    int64_t target_version = 0;
    std::vector<TdCacheEntry> td_cache(queue.capacity());

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        const auto& segments =
            *train_sessions[static_cast<size_t>(rng_session.uniform_int(
                static_cast<int>(train_sessions.size())))];
        SessionEnv env(segments, actions, cfg.beta, cfg.initial_trt);
        env.reset();
        double ep_return = 0.0;

        while (!env.done()) {
            const SegmentState* state = &env.current();
            int action;
            if (rng_act.uniform() < eps_at(global_step)) {
                action = rng_act.uniform_int(actions.size());
            } else {
                action = argmax(online.q_of(state->planes));
            }
            const StepResult sr = env.step(action);
            queue.push({state, action, sr.reward, sr.done, sr.next_state});
            ep_return += sr.reward;
            ++global_step;

            if (queue.size() >= static_cast<size_t>(cfg.batch_size)) {
                BatchBuffer buf = queue.sample(static_cast<size_t>(cfg.batch_size), rng_replay);
                const auto batch = buf.resolve(queue, rng_replay);
                const double loss = learn_step(buf, batch, online, target, cfg.gamma, sinks,
                                               opt, params, td_cache, target_version);
                if (!std::isfinite(loss))
                    throw std::runtime_error("train_rl: non-finite loss at step " +
                                             std::to_string(global_step) + " (episode " +
                                             std::to_string(ep + 1) + ")");
                log.step_loss.push_back(loss);
            }
            if (global_step % cfg.target_sync_interval == 0) {
                target.sync_from(online);
                ++target_version;
            }
        }

        log.episode_return.push_back(ep_return);
        return_sum += ep_return;
        log.avg_return.push_back(return_sum / static_cast<double>(ep + 1));

        if (val_session && ((ep + 1) % cfg.val_interval == 0 || ep + 1 == cfg.episodes)) {
            const auto rollout =
                greedy_rollout(online, *val_session, actions, cfg.beta, cfg.initial_trt);
            const auto corr = rollout_spline_correlation(*val_session, rollout);
            if (corr && (!result.has_best || *corr > result.best_val_correlation)) {
                result.has_best = true;
                result.best_episode = ep + 1;
                result.best_val_correlation = *corr;
                result.best_params.clear();
                for (const Parameter* p : online.params()) result.best_params.push_back(p->value);
            }
        }
    }
    return result;
}

TrainLog train_supervised(const std::vector<TrialSample>& trials, const SlTrainConfig& cfg,
                          QNetwork& net) {
    if (net.config().variant != Variant::Supervised)
        throw std::invalid_argument("train_supervised: network variant must be supervised");
    if (trials.size() < static_cast<size_t>(cfg.batch_size))
        throw std::invalid_argument("train_supervised: " + std::to_string(trials.size()) +
                                    " trials is fewer than the batch size " +
                                    std::to_string(cfg.batch_size));

    Rng root(cfg.seed);
    Rng rng_init = root.fork(1);
    Rng rng_batch = root.fork(2);
    net.init(rng_init);

    RmsProp opt({cfg.learning_rate, 0.95, 1e-8});
    const auto params = net.params();

    const int n_threads = std::max(1, omp_get_max_threads());
    std::vector<GradSinks> sinks;
    for (int i = 0; i < n_threads; ++i) sinks.push_back(net.make_sinks());

    TrainLog log;
    const int b = cfg.batch_size;
    std::vector<int> idx(static_cast<size_t>(b));
    std::vector<double> losses(static_cast<size_t>(b));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        for (int i = 0; i < b; ++i)
            idx[static_cast<size_t>(i)] = rng_batch.uniform_int(static_cast<int>(trials.size()));
        for (auto& s : sinks) s.zero();

        const bool outer_parallel = kernels::parallel();
#pragma omp parallel for schedule(static) if (outer_parallel)
        for (int i = 0; i < b; ++i) {
            const TrialSample& trial = trials[static_cast<size_t>(idx[static_cast<size_t>(i)])];
            GradSinks& sink = sinks[static_cast<size_t>(omp_get_thread_num())];
            Tape tape(true);
            Node* feat = net.features(tape, trial.planes, &sink);
            Node* pred = net.predict_raw(tape, feat, &sink);
            Tensor label({1});
            label[0] = trial.label_rt;
            Node* loss = tape.squared_error(pred, label);
            losses[static_cast<size_t>(i)] = loss->v()[0];
            tape.backward(loss, 1.0 / b);
        }

        merge_sinks(sinks, params);
        opt.step(params);

        double total = 0.0;
        for (double l : losses) total += l;
        const double loss = total / b;
        if (!std::isfinite(loss))
            throw std::runtime_error("train_supervised: non-finite loss at iteration " +
                                     std::to_string(iter + 1));
        log.step_loss.push_back(loss);
    }
    return log;
}

std::vector<double> greedy_rollout(const QNetwork& model,
                                   const std::vector<SegmentState>& segments,
                                   const ActionSpace& actions, double beta,
                                   double initial_trt) {
    if (!is_rl_variant(model.config().variant))
        throw std::invalid_argument("greedy_rollout: network variant must be an RL head");
    SessionEnv env(segments, actions, beta, initial_trt);
    env.reset();
    std::vector<double> traced;
    traced.reserve(segments.size());
    while (!env.done()) {
        const int action = argmax(model.q_of(env.current().planes));
        traced.push_back(env.step(action).traced_rt);
    }
    return traced;
}

}  // namespace eegrl
