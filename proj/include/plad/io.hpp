#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/errors.hpp"
#include "plad/pairs.hpp"
#include "plad/synth.hpp"

namespace plad {

/// A program file line that failed to parse. line() is 1-based.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& detail)
        : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// key=value lines; '#' starts a comment line.
Settings read_settings(const std::filesystem::path& path);
void write_settings(const std::filesystem::path& path, const Settings& kv);
/// Empty string when absent.
std::string setting(const Settings& kv, const std::string& key);

/// One detokenized program per line.
void write_programs(const std::filesystem::path& path, const Vocabulary& vocab, std::span<const Program> programs);
/// Blank lines are skipped but still counted. Throws ParseError naming the line.
std::vector<Program> read_programs(const std::filesystem::path& path, const Grammar& grammar);

/// Dataset directory layout: vocab.txt, meta.txt, programs.txt + shapes.bin,
/// and val_programs.txt + val_shapes.bin when a validation slice exists.
struct StoredDataset {
    std::shared_ptr<const Vocabulary> vocab;
    Dataset data;
    Settings meta;
};

void write_dataset(const std::filesystem::path& dir, const Vocabulary& vocab, const Dataset& data,
                   const Settings& meta);
/// Throws MissingInput when the directory or a required file is absent.
StoredDataset read_dataset(const std::filesystem::path& dir);

/// Shapes of a dataset directory (shapes.bin, or val_shapes.bin when `val`)
/// or of a single PLADGRID file.
std::vector<ShapeGrid> read_shape_set(const std::filesystem::path& path, bool val = false);

}  // namespace plad
