#include "eegrl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts unsupported");

namespace eegrl {

using nlohmann::json;

void save_checkpoint(const std::string& prefix,
                     const std::vector<const Parameter*>& params,
                     const CheckpointMeta& meta) {
    json manifest;
    manifest["format"] = "eegrl-checkpoint-v1";
    for (const auto& [k, v] : meta.fields) manifest["meta"][k] = v;

    uint64_t offset = 0;
    json plist = json::array();
    for (const Parameter* p : params) {
        json e;
        e["name"] = p->name;
        e["shape"] = p->value.shape;
        e["offset_bytes"] = offset;
        plist.push_back(e);
        offset += static_cast<uint64_t>(p->value.size()) * sizeof(double);
    }
    manifest["params"] = plist;
    manifest["blob_bytes"] = offset;

    std::ofstream blob(prefix + ".bin", std::ios::binary | std::ios::trunc);
    if (!blob) throw std::runtime_error("checkpoint: cannot write " + prefix + ".bin");
    for (const Parameter* p : params)
        blob.write(reinterpret_cast<const char*>(p->value.ptr()),
                   static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    blob.close();
    if (!blob) throw std::runtime_error("checkpoint: short write to " + prefix + ".bin");

    std::ofstream mf(prefix + ".json", std::ios::trunc);
    if (!mf) throw std::runtime_error("checkpoint: cannot write " + prefix + ".json");
    mf << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& prefix) {
    std::ifstream mf(prefix + ".json");
    if (!mf) throw std::runtime_error("checkpoint: cannot open " + prefix + ".json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint: bad manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "eegrl-checkpoint-v1")
        throw std::runtime_error("checkpoint: unrecognised manifest format");

    std::ifstream blob(prefix + ".bin", std::ios::binary | std::ios::ate);
    if (!blob) throw std::runtime_error("checkpoint: cannot open " + prefix + ".bin");
    const uint64_t actual = static_cast<uint64_t>(blob.tellg());
    const uint64_t expected = manifest.at("blob_bytes").get<uint64_t>();
    if (actual != expected)
        throw std::runtime_error("checkpoint: blob size mismatch: expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(actual));
    blob.seekg(0);

    LoadedCheckpoint out;
    if (manifest.contains("meta"))
        for (auto it = manifest["meta"].begin(); it != manifest["meta"].end(); ++it)
            out.meta.fields[it.key()] = it.value().get<std::string>();

    for (const auto& e : manifest.at("params")) {
        LoadedCheckpoint::Entry entry;
        entry.name = e.at("name").get<std::string>();
        std::vector<int> shape = e.at("shape").get<std::vector<int>>();
        const uint64_t off = e.at("offset_bytes").get<uint64_t>();
        entry.value = Tensor(shape);
        const uint64_t bytes = static_cast<uint64_t>(entry.value.size()) * sizeof(double);
        if (off + bytes > actual)
            throw std::runtime_error("checkpoint: parameter " + entry.name +
                                     " extends past blob end");
        blob.seekg(static_cast<std::streamoff>(off));
        blob.read(reinterpret_cast<char*>(entry.value.ptr()),
                  static_cast<std::streamsize>(bytes));
        if (!blob)
            throw std::runtime_error("checkpoint: short read for parameter " + entry.name);
        out.params.push_back(std::move(entry));
    }
    return out;
}

}  // namespace eegrl
