#pragma once

#include <map>
#include <string>
#include <vector>

#include "eegrl/autodiff.hpp"

namespace eegrl {

// Checkpoints are a pair of files: <prefix>.json manifest (names, shapes,
// byte offsets, plus free-form metadata) and <prefix>.bin, one little-endian
// f64 blob. Round trips are bit-exact.
struct CheckpointMeta {
    std::map<std::string, std::string> fields;
};

void save_checkpoint(const std::string& prefix,
                     const std::vector<const Parameter*>& params,
                     const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
    struct Entry {
        std::string name;
        Tensor value;
    };
    std::vector<Entry> params;
    CheckpointMeta meta;

    const Tensor* find(const std::string& name) const {
        for (const auto& e : params)
            if (e.name == name) return &e.value;
        return nullptr;
    }
};

LoadedCheckpoint load_checkpoint(const std::string& prefix);

}  // namespace eegrl
