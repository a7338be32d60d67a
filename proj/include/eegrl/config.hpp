#pragma once

#include <string>

#include "eegrl/env.hpp"
#include "eegrl/preproc.hpp"
#include "eegrl/session.hpp"
#include "eegrl/trainer.hpp"

namespace eegrl {

// Structured run configuration; every field defaults to the module defaults.
// Unknown JSON keys are rejected and loaded values are re-validated.
struct RunConfig {
    SynthConfig synth;
    RlTrainConfig rl;
    SlTrainConfig sl;
    ActionSpace actions = ActionSpace::default_grid();
    PreprocConfig preproc;
};

RunConfig load_run_config(const std::string& path);
void validate_run_config(const RunConfig& cfg);

}  // namespace eegrl
