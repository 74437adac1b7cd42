#include "plad/nn/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plad/errors.hpp"
#include "plad/nn/kernels.hpp"
#include "plad/parallel.hpp"

namespace plad::nn {

DecodeRules DecodeRules::from(const Grammar& grammar) {
    DecodeRules r;
    r.vocab_size = grammar.vocab().size();
    r.stop = grammar.vocab().stop();
    r.max_len = grammar.max_len();
    r.mask = [&grammar](const GrammarState& s, std::span<std::uint8_t> m) { grammar.legal_mask(s, m); };
    r.advance = [&grammar](const GrammarState& s, int t) { return grammar.advance(s, t); };
    return r;
}

void masked_log_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask, std::span<double> out) {
    const double lse = log_sum_exp(logits, mask);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = mask[i] ? logits[i] - lse : -std::numeric_limits<double>::infinity();
    }
}

namespace {

struct Hyp {
    std::vector<int> tokens;
    double score = 0.0;
    GrammarState state;
};

// Higher score first, then lexicographically smaller tokens.
bool better(double sa, const std::vector<int>& ta, double sb, const std::vector<int>& tb) {
    if (sa != sb) return sa > sb;
    return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
}

// Candidate extension (parent, token) ordered without materializing tokens.
struct Cand {
    double score;
    int parent;
    int token;
};

}  // namespace

std::vector<Decoded> beam_search(StepScorer& scorer, const DecodeRules& rules, int beam) {
    if (beam < 1) throw UsageError("beam must be at least 1");
    if (scorer.rows() != 1) throw DimMismatch("beam_search expects a single starting prefix");
    const int v = rules.vocab_size;
    if (scorer.vocab_size() != v) throw DimMismatch("scorer and rules disagree on the vocabulary");
    std::vector<Hyp> live(1);
    std::vector<Decoded> finished;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(v));
    std::vector<double> logp(static_cast<std::size_t>(v));

    // All live prefixes have the same length, so comparing prefix then token
    // is the lexicographic order of the extended sequences.
    auto cand_better = [&live](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        const auto& pa = live[static_cast<std::size_t>(a.parent)].tokens;
        const auto& pb = live[static_cast<std::size_t>(b.parent)].tokens;
        const auto mm = std::mismatch(pa.begin(), pa.end(), pb.begin());
        if (mm.first != pa.end()) return *mm.first < *mm.second;
        return a.token < b.token;
    };

    while (!live.empty() && finished.size() < static_cast<std::size_t>(beam)) {
        const auto logits = scorer.logits();
        std::vector<Cand> cands;
        for (std::size_t h = 0; h < live.size(); ++h) {
            rules.mask(live[h].state, mask);
            if (static_cast<int>(live[h].tokens.size()) + 1 >= rules.max_len) {
                std::fill(mask.begin(), mask.end(), 0);
                mask[static_cast<std::size_t>(rules.stop)] = 1;
            }
            masked_log_softmax(logits.subspan(h * v, v), mask, logp);
            for (int t = 0; t < v; ++t) {
                if (mask[t]) cands.push_back({live[h].score + logp[t], static_cast<int>(h), t});
            }
        }
        // At most one STOP per live prefix, so 2 * beam ranked candidates
        // always contain `beam` continuations when that many exist.
        const std::size_t ranked = std::min(cands.size(), static_cast<std::size_t>(2 * beam));
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(ranked), cands.end(), cand_better);
        std::vector<Hyp> next;
        std::vector<int> parents, tokens;
        for (std::size_t r = 0; r < ranked && next.size() < static_cast<std::size_t>(beam); ++r) {
            const Cand& c = cands[r];
            const Hyp& p = live[static_cast<std::size_t>(c.parent)];
            if (c.token == rules.stop) {
                if (r < static_cast<std::size_t>(beam)) {
                    Decoded d{p.tokens, c.score};
                    d.tokens.push_back(c.token);
                    finished.push_back(std::move(d));
                }
                continue;
            }
            Hyp h{p.tokens, c.score, rules.advance(p.state, c.token)};
            h.tokens.push_back(c.token);
            next.push_back(std::move(h));
            parents.push_back(c.parent);
            tokens.push_back(c.token);
        }
        live = std::move(next);
        if (!live.empty() && finished.size() < static_cast<std::size_t>(beam)) scorer.advance(parents, tokens);
    }
    std::sort(finished.begin(), finished.end(),
              [](const Decoded& a, const Decoded& b) { return better(a.log_prob, a.tokens, b.log_prob, b.tokens); });
    if (finished.size() > static_cast<std::size_t>(beam)) finished.resize(static_cast<std::size_t>(beam));
    return finished;
}

std::vector<Decoded> sample_rows(StepScorer& scorer, const DecodeRules& rules, Rng& rng, double temperature) {
    const int v = rules.vocab_size;
    const int n = scorer.rows();
    std::vector<Decoded> out(static_cast<std::size_t>(n));
    std::vector<GrammarState> states(static_cast<std::size_t>(n));
    std::vector<int> active(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(v));
    std::vector<double> logp(static_cast<std::size_t>(v)), scaled(static_cast<std::size_t>(v));
    while (!active.empty()) {
        const auto logits = scorer.logits();
        std::vector<int> parents, tokens, still;
        for (std::size_t r = 0; r < active.size(); ++r) {
            const int row = active[r];
            auto& st = states[static_cast<std::size_t>(row)];
            rules.mask(st, mask);
            if (static_cast<int>(out[static_cast<std::size_t>(row)].tokens.size()) + 1 >= rules.max_len) {
                // Only STOP fits; the grammar budget already guarantees it is legal.
                std::fill(mask.begin(), mask.end(), 0);
                mask[static_cast<std::size_t>(rules.stop)] = 1;
            }
            const auto row_logits = logits.subspan(r * v, v);
            masked_log_softmax(row_logits, mask, logp);
            int tok = -1;
            if (temperature <= 0.0) {
                for (int t = 0; t < v; ++t) {
                    if (mask[t] && (tok < 0 || logp[t] > logp[tok])) tok = t;
                }
            } else {
                for (int t = 0; t < v; ++t) scaled[t] = row_logits[t] / temperature;
                const double lse = log_sum_exp(scaled, mask);
                double u = uniform01(rng);
                for (int t = 0; t < v; ++t) {
                    if (!mask[t]) continue;
                    tok = t;
                    u -= std::exp(scaled[t] - lse);
                    if (u < 0.0) break;
                }
            }
            auto& d = out[static_cast<std::size_t>(row)];
            d.tokens.push_back(tok);
            d.log_prob += logp[tok];
            st = rules.advance(st, tok);
            if (tok != rules.stop) {
                parents.push_back(static_cast<int>(r));
                tokens.push_back(tok);
                still.push_back(row);
            }
        }
        if (still.empty()) break;
        scorer.advance(parents, tokens);
        active = std::move(still);
    }
    return out;
}

Program to_program(const Vocabulary& vocab, const Decoded& d) { return Program{vocab.dsl(), d.tokens}; }

namespace {

constexpr std::size_t kEncodeChunk = 64;

// Context vectors for all shapes, computed in chunks.
std::vector<std::vector<double>> contexts(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes) {
    const std::size_t per = static_cast<std::size_t>(m.config().context) * m.config().width;
    std::vector<std::vector<double>> out(shapes.size());
    for (std::size_t b = 0; b < shapes.size(); b += kEncodeChunk) {
        const auto chunk = shapes.subspan(b, std::min(kEncodeChunk, shapes.size() - b));
        const auto ctx = m.context(chunk);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            out[b + i].assign(ctx.begin() + static_cast<std::ptrdiff_t>(i * per),
                              ctx.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
        }
    }
    return out;
}

}  // namespace

std::vector<std::vector<Decoded>> beam_decode(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes,
                                              int beam, int threads) {
    const auto ctx = contexts(m, shapes);
    const DecodeRules rules = DecodeRules::from(m.grammar());
    std::vector<std::vector<Decoded>> out(shapes.size());
    parallel_for(
        shapes.size(),
        [&](std::size_t i) {
            DecoderRuntime rt(m.decoder(), m.params(), ctx[i], 1);
            out[i] = beam_search(rt, rules, beam);
        },
        threads);
    return out;
}

std::vector<Decoded> beam_decode(const RecognitionModel& m, const ShapeGrid& shape, int beam) {
    const ShapeGrid* p = &shape;
    return beam_decode(m, std::span<const ShapeGrid* const>(&p, 1), beam, 1).front();
}

std::vector<std::vector<Decoded>> infer_candidates(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes,
                                                   int beam, int threads) {
    const auto ctx = contexts(m, shapes);
    const DecodeRules rules = DecodeRules::from(m.grammar());
    std::vector<std::vector<Decoded>> out(shapes.size());
    parallel_for(
        shapes.size(),
        [&](std::size_t i) {
            DecoderRuntime rt(m.decoder(), m.params(), ctx[i], 1);
            out[i] = beam_search(rt, rules, beam);
            if (beam > 1) {
                DecoderRuntime greedy_rt(m.decoder(), m.params(), ctx[i], 1);
                for (auto& d : beam_search(greedy_rt, rules, 1)) {
                    const bool seen = std::any_of(out[i].begin(), out[i].end(),
                                                  [&](const Decoded& e) { return e.tokens == d.tokens; });
                    if (!seen) out[i].push_back(std::move(d));
                }
            }
        },
        threads);
    return out;
}

std::vector<Decoded> sample_decode(const RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng,
                                   double temperature) {
    if (shapes.empty()) return {};
    const auto ctx = m.context(shapes);
    DecoderRuntime rt(m.decoder(), m.params(), ctx, static_cast<int>(shapes.size()));
    return sample_rows(rt, DecodeRules::from(m.grammar()), rng, temperature);
}

}  // namespace plad::nn
