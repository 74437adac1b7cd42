#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plad/nn/model.hpp"

namespace plad::nn {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// PLADCKPT1 container: magic line, key=value lines, a blank line, then a
/// u64 block count and per block (u64 name length, name, u64 value count,
/// little-endian f64 values).
struct Checkpoint {
    KeyValues meta;
    std::vector<std::pair<std::string, std::vector<double>>> blocks;

    /// Empty string when absent.
    std::string get(const std::string& key) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError, VersionMismatch or CorruptCheckpoint.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Extra metadata (e.g. training round) may be attached with `extra`.
void save_model(const RecognitionModel& m, const std::filesystem::path& path, const KeyValues& extra = {});
RecognitionModel load_model(const std::filesystem::path& path);
void save_model(const GenerativeModel& g, const std::filesystem::path& path, const KeyValues& extra = {});
GenerativeModel load_generative(const std::filesystem::path& path);

}  // namespace plad::nn
