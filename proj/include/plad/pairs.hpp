#pragma once

#include <string_view>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/grid.hpp"

namespace plad {

enum class PairSource : std::uint8_t { ST, LEST, WS, SYNTH };

std::string_view to_string(PairSource s);

/// One (shape, program) training example.
struct Pair {
    ShapeGrid shape;
    Program program;
    PairSource source = PairSource::SYNTH;
};

using PairSet = std::vector<Pair>;

}  // namespace plad
