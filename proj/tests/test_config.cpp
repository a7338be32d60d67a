#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "eegrl/config.hpp"
#include "testutil.hpp"

using namespace eegrl;

namespace {

std::string write_cfg(const testutil::TempDir& tmp, const std::string& body) {
    const std::string path = tmp.str("cfg.json");
    std::ofstream f(path, std::ios::trunc);
    f << body;
    return path;
}

}  // namespace

TEST_CASE("defaults survive an empty config and match the stated values") {
    testutil::TempDir tmp("cfg_default");
    RunConfig cfg = load_run_config(write_cfg(tmp, "{}"));
    CHECK(cfg.rl.episodes == 2000);
    CHECK(cfg.rl.gamma == 0.99);
    CHECK(cfg.rl.beta == 0.75);
    CHECK(cfg.rl.batch_size == 32);
    CHECK(cfg.rl.learning_rate == 2.5e-4);
    CHECK(cfg.rl.epsilon_start == 1.0);
    CHECK(cfg.rl.epsilon_end == 0.1);
    CHECK(cfg.rl.replay_capacity == 20000);
    CHECK(cfg.sl.iterations == 600);
    CHECK(cfg.sl.learning_rate == 1e-4);
    CHECK(cfg.synth.duration_s == 5400.0);
    CHECK(cfg.preproc.filter.low_cut_hz == 0.5);
    CHECK(cfg.preproc.filter.high_cut_hz == 50.0);
    CHECK(cfg.preproc.filter.order == 4);
    CHECK(cfg.preproc.smoothing.clip_min_s == 0.5);
    CHECK(cfg.preproc.smoothing.clip_max_s == 8.0);
    CHECK(cfg.preproc.smoothing.window_s == 90.0);
    CHECK(cfg.actions.size() == 16);
}

TEST_CASE("values load and unknown keys are rejected everywhere") {
    testutil::TempDir tmp("cfg_vals");
    RunConfig cfg = load_run_config(write_cfg(
        tmp, R"({"rl": {"beta": 0.6, "episodes": 12}, "actions": {"proposals": [1.0, 2.0]}})"));
    CHECK(cfg.rl.beta == 0.6);
    CHECK(cfg.rl.episodes == 12);
    CHECK(cfg.actions.size() == 2);

    CHECK_THROWS_WITH_AS(load_run_config(write_cfg(tmp, R"({"bogus": 1})")),
                         doctest::Contains("unknown top-level key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_run_config(write_cfg(tmp, R"({"rl": {"beta": 0.6, "nope": 1}})")),
                         doctest::Contains("unknown key rl.nope"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_run_config(write_cfg(tmp, R"({"synth": {"foo": 2}})")),
                         doctest::Contains("unknown key synth.foo"), std::invalid_argument);
}

TEST_CASE("loaded values are re-validated against module invariants") {
    testutil::TempDir tmp("cfg_bad");
    CHECK_THROWS_AS(load_run_config(write_cfg(tmp, R"({"rl": {"beta": 1.5}})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(write_cfg(tmp, R"({"rl": {"gamma": -0.1}})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        load_run_config(write_cfg(tmp, R"({"actions": {"proposals": [2.0, 1.0]}})")),
        std::invalid_argument);
    CHECK_THROWS_AS(
        load_run_config(write_cfg(tmp, R"({"actions": {"proposals": [0.1, 1.0]}})")),
        std::invalid_argument);
    CHECK_THROWS_AS(
        load_run_config(write_cfg(tmp, R"({"filter": {"low_cut_hz": 60, "high_cut_hz": 50}})")),
        std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(write_cfg(tmp, R"({"synth": {"duration_s": 10}})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(write_cfg(tmp, R"({"rl": {"beta": "abc"}})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(write_cfg(tmp, "not json")), std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(tmp.str("missing.json")), std::runtime_error);
}
