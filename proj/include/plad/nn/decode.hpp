#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/grid.hpp"
#include "plad/nn/model.hpp"
#include "plad/rng.hpp"

namespace plad::nn {

/// Legal-token structure driving masked decoding.
struct DecodeRules {
    int vocab_size = 0;
    int stop = 0;
    int max_len = 0;
    std::function<void(const GrammarState&, std::span<std::uint8_t>)> mask;
    std::function<GrammarState(const GrammarState&, int)> advance;

    static DecodeRules from(const Grammar& grammar);
};

struct Decoded {
    std::vector<int> tokens;  // ends with STOP
    double log_prob = 0.0;
};

/// log softmax of `logits` restricted to `mask`; masked entries get -inf.
void masked_log_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask, std::span<double> out);

/// Beam search over masked next-token distributions. Each step ranks all
/// extensions (log-prob, then lexicographic tokens); STOP extensions ranked
/// within the top `beam` finish, the best `beam` others continue. Ends once
/// `beam` sequences have finished. `scorer` must hold one empty prefix.
std::vector<Decoded> beam_search(StepScorer& scorer, const DecodeRules& rules, int beam);

/// Ancestral sampling for every row of `scorer` at once. temperature 0 picks
/// the arg max (lowest index on ties).
std::vector<Decoded> sample_rows(StepScorer& scorer, const DecodeRules& rules, Rng& rng, double temperature = 1.0);

Program to_program(const Vocabulary& vocab, const Decoded& d);

/// Per-shape beam results (each sorted best first).
std::vector<std::vector<Decoded>> beam_decode(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes,
                                              int beam, int threads = 0);
std::vector<Decoded> beam_decode(const RecognitionModel& m, const ShapeGrid& shape, int beam);
/// Beam results plus the greedy decode, deduplicated. Adding the greedy
/// sequence makes the candidate set for beam b a superset of the one for
/// beam 1.
std::vector<std::vector<Decoded>> infer_candidates(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes,
                                                   int beam, int threads = 0);
/// One program per shape.
std::vector<Decoded> sample_decode(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng,
                                   double temperature = 1.0);

}  // namespace plad::nn
