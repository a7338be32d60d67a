#include "eegrl/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace eegrl {

using nlohmann::json;

namespace {

class Section {
  public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object())
            throw std::invalid_argument("config: section '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument("config: bad value for " + name_ + "." + key);
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw std::invalid_argument("config: unknown key " + name_ + "." + it.key());
    }

  private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: malformed JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    RunConfig cfg;
    std::set<std::string> known{"synth", "rl", "sl", "actions", "filter", "rt_smoothing"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown top-level key '" + it.key() + "'");

    if (j.contains("synth")) {
        Section s(j["synth"], "synth");
        s.get("duration_s", cfg.synth.duration_s);
        s.get("seed", cfg.synth.seed);
        s.get("time_constant_s", cfg.synth.time_constant_s);
        s.get("latent_step", cfg.synth.latent_step);
        s.get("theta_gain", cfg.synth.theta_gain);
        s.get("alpha_gain", cfg.synth.alpha_gain);
        s.get("noise_level", cfg.synth.noise_level);
        s.get("rt_noise_s", cfg.synth.rt_noise_s);
        s.get("subject_id", cfg.synth.subject_id);
        s.finish();
    }
    if (j.contains("rl")) {
        Section s(j["rl"], "rl");
        s.get("episodes", cfg.rl.episodes);
        s.get("gamma", cfg.rl.gamma);
        s.get("epsilon_start", cfg.rl.epsilon_start);
        s.get("epsilon_end", cfg.rl.epsilon_end);
        s.get("epsilon_decay_steps", cfg.rl.epsilon_decay_steps);
        s.get("batch_size", cfg.rl.batch_size);
        s.get("target_sync_interval", cfg.rl.target_sync_interval);
        s.get("beta", cfg.rl.beta);
        s.get("learning_rate", cfg.rl.learning_rate);
        s.get("seed", cfg.rl.seed);
        s.get("replay_capacity", cfg.rl.replay_capacity);
        s.get("replay_seq_modulus", cfg.rl.replay_seq_modulus);
        s.get("initial_trt", cfg.rl.initial_trt);
        s.get("val_interval", cfg.rl.val_interval);
        s.finish();
    }
    if (j.contains("sl")) {
        Section s(j["sl"], "sl");
        s.get("iterations", cfg.sl.iterations);
        s.get("learning_rate", cfg.sl.learning_rate);
        s.get("batch_size", cfg.sl.batch_size);
        s.get("seed", cfg.sl.seed);
        s.finish();
    }
    if (j.contains("actions")) {
        Section s(j["actions"], "actions");
        s.get("proposals", cfg.actions.proposals);
        s.finish();
    }
    if (j.contains("filter")) {
        Section s(j["filter"], "filter");
        s.get("low_cut_hz", cfg.preproc.filter.low_cut_hz);
        s.get("high_cut_hz", cfg.preproc.filter.high_cut_hz);
        s.get("order", cfg.preproc.filter.order);
        s.finish();
    }
    if (j.contains("rt_smoothing")) {
        Section s(j["rt_smoothing"], "rt_smoothing");
        s.get("clip_min_s", cfg.preproc.smoothing.clip_min_s);
        s.get("clip_max_s", cfg.preproc.smoothing.clip_max_s);
        s.get("window_s", cfg.preproc.smoothing.window_s);
        s.finish();
    }

    validate_run_config(cfg);
    return cfg;
}

void validate_run_config(const RunConfig& cfg) {
    cfg.actions.validate();
    if (cfg.synth.duration_s < 60.0)
        throw std::invalid_argument("config: synth.duration_s must be >= 60");
    if (cfg.synth.time_constant_s <= 0.0)
        throw std::invalid_argument("config: synth.time_constant_s must be positive");
    if (cfg.rl.episodes < 1) throw std::invalid_argument("config: rl.episodes must be positive");
    if (cfg.rl.gamma < 0.0 || cfg.rl.gamma > 1.0)
        throw std::invalid_argument("config: rl.gamma must lie in [0, 1]");
    if (cfg.rl.epsilon_start < 0.0 || cfg.rl.epsilon_start > 1.0 ||
        cfg.rl.epsilon_end < 0.0 || cfg.rl.epsilon_end > 1.0)
        throw std::invalid_argument("config: rl epsilon bounds must lie in [0, 1]");
    if (cfg.rl.batch_size < 1) throw std::invalid_argument("config: rl.batch_size must be positive");
    if (cfg.rl.target_sync_interval < 1)
        throw std::invalid_argument("config: rl.target_sync_interval must be positive");
    if (cfg.rl.beta < 0.0 || cfg.rl.beta > 1.0)
        throw std::invalid_argument("config: rl.beta must lie in [0, 1]");
    if (cfg.rl.learning_rate <= 0.0)
        throw std::invalid_argument("config: rl.learning_rate must be positive");
    if (cfg.rl.replay_capacity == 0)
        throw std::invalid_argument("config: rl.replay_capacity must be positive");
    if (cfg.sl.iterations < 1) throw std::invalid_argument("config: sl.iterations must be positive");
    if (cfg.sl.learning_rate <= 0.0)
        throw std::invalid_argument("config: sl.learning_rate must be positive");
    if (cfg.sl.batch_size < 1) throw std::invalid_argument("config: sl.batch_size must be positive");
    const auto& fl = cfg.preproc.filter;
    if (!(0.0 < fl.low_cut_hz && fl.low_cut_hz < fl.high_cut_hz))
        throw std::invalid_argument("config: filter cutoffs must satisfy 0 < low < high");
    if (fl.order < 1) throw std::invalid_argument("config: filter.order must be positive");
    const auto& sm = cfg.preproc.smoothing;
    if (!(sm.clip_min_s < sm.clip_max_s))
        throw std::invalid_argument("config: rt_smoothing clip_min_s must be below clip_max_s");
    if (sm.window_s <= 0.0)
        throw std::invalid_argument("config: rt_smoothing.window_s must be positive");
}

}  // namespace eegrl
