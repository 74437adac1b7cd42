#include "plad/synth.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "plad/errors.hpp"
#include "plad/parallel.hpp"

namespace plad {

std::string_view to_string(PairSource s) {
    switch (s) {
        case PairSource::ST: return "ST";
        case PairSource::LEST: return "LEST";
        case PairSource::WS: return "WS";
        case PairSource::SYNTH: return "SYNTH";
    }
    return "?";
}

GenConfig GenConfig::defaults(DslId dsl) {
    GenConfig cfg;
    cfg.dsl = dsl;
    switch (dsl) {
        case DslId::Csg3d: cfg.k_min = 2; cfg.k_max = 12; break;
        case DslId::ShapeAssembly: cfg.k_min = 2; cfg.k_max = 8; break;
        case DslId::Csg2d: cfg.k_min = 1; cfg.k_max = 12; break;
    }
    return cfg;
}

namespace {

template <std::size_t N>
int weighted_pick(const std::array<double, N>& w, Rng& rng) {
    return std::discrete_distribution<int>(w.begin(), w.end())(rng);
}

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
    return items[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(items.size()) - 1))];
}

bool covers(const std::vector<PrimBox>& from, const std::vector<PrimBox>& into) {
    return std::all_of(from.begin(), from.end(), [&](const PrimBox& b) {
        return std::any_of(into.begin(), into.end(), [&](const PrimBox& a) { return boxes_overlap(a, b); });
    });
}

}  // namespace

PrimBox prim_box(const CsgPrimitive& p) {
    PrimBox b;
    for (std::size_t a = 0; a < 3; ++a) {
        b.center2[a] = 2 * p.params[a];
        b.extent[a] = p.params[3 + a];
    }
    return b;
}

bool boxes_overlap(const PrimBox& a, const PrimBox& b) {
    for (std::size_t k = 0; k < 3; ++k) {
        if (std::abs(a.center2[k] - b.center2[k]) >= a.extent[k] + b.extent[k]) return false;
    }
    return true;
}

std::vector<BoolOp> valid_merge_ops(const std::vector<PrimBox>& a, const std::vector<PrimBox>& b) {
    const bool b_in_a = covers(b, a);
    const bool a_in_b = covers(a, b);
    std::vector<BoolOp> ops;
    if (b_in_a && a_in_b) ops.push_back(BoolOp::Intersect);
    ops.push_back(BoolOp::Union);
    if (b_in_a) ops.push_back(BoolOp::Subtract);
    return ops;
}

BoolOp choose_merge_op(const std::vector<PrimBox>& a, const std::vector<PrimBox>& b, Rng& rng) {
    return pick(valid_merge_ops(a, b), rng);
}

Sampler::Sampler(std::shared_ptr<const Vocabulary> vocab, GenConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg), exec_(vocab_), grammar_(vocab_) {
    if (cfg_.k_min < 1 || cfg_.k_max < cfg_.k_min) throw UsageError("invalid k range");
    if (cfg_.dsl != vocab_->dsl()) throw UsageError("generator DSL does not match vocabulary");
    if (cfg_.dsl == DslId::Csg2d && 2 * cfg_.k_max > grammar_.max_len()) {
        throw UsageError("k_max too large for the program length limit");
    }
    if (cfg_.dsl == DslId::Csg3d && 8 * cfg_.k_max > grammar_.max_len()) {
        throw UsageError("k_max too large for the program length limit");
    }
    if (cfg_.dsl == DslId::ShapeAssembly && (cfg_.k_max > 10 || 3 + 10 * cfg_.k_max > grammar_.max_len())) {
        throw UsageError("k_max too large for ShapeAssembly");
    }
}

Program Sampler::sample(Rng& rng) const {
    switch (cfg_.dsl) {
        case DslId::Csg2d: return sample_csg2d(rng);
        case DslId::Csg3d: return sample_csg3d(rng);
        case DslId::ShapeAssembly: return sample_shapeassembly(rng);
    }
    throw Error("unreachable");
}

// --- 3D CSG -----------------------------------------------------------------

Program Sampler::sample_csg3d(Rng& rng) const {
    const int k = uniform_int(rng, cfg_.k_min, cfg_.k_max);
    struct Group {
        std::vector<int> tokens;
        std::vector<PrimBox> boxes;
    };
    std::vector<Group> groups;
    for (int i = 0; i < k; ++i) {
        CsgPrimitive prim;
        prim.type = uniform_int(rng, 0, 1);
        for (std::size_t a = 0; a < 3; ++a) {
            const int c = uniform_int(rng, 2, kGrid3d - 2);
            const int room = std::min(kGrid3d, 2 * std::min(c, kGrid3d - c));
            prim.params[a] = c;
            prim.params[3 + a] = uniform_int(rng, 2, room);
        }
        Group g;
        g.tokens.push_back(vocab_->token_for(TokenKind::Prim3d, prim.type));
        for (int v : prim.params) g.tokens.push_back(vocab_->token_for(TokenKind::Param3d, v));
        g.boxes.push_back(prim_box(prim));
        groups.push_back(std::move(g));
    }
    while (groups.size() > 1) {
        const int n = static_cast<int>(groups.size());
        const int i = uniform_int(rng, 0, n - 1);
        int j = uniform_int(rng, 0, n - 2);
        if (j >= i) ++j;
        Group& a = groups[static_cast<std::size_t>(i)];
        Group& b = groups[static_cast<std::size_t>(j)];
        const BoolOp op = choose_merge_op(a.boxes, b.boxes, rng);
        Group merged;
        merged.tokens = a.tokens;
        merged.tokens.insert(merged.tokens.end(), b.tokens.begin(), b.tokens.end());
        merged.tokens.push_back(vocab_->token_for(TokenKind::BoolOp, static_cast<int>(op)));
        merged.boxes = a.boxes;
        merged.boxes.insert(merged.boxes.end(), b.boxes.begin(), b.boxes.end());
        const int lo = std::min(i, j), hi = std::max(i, j);
        groups[static_cast<std::size_t>(lo)] = std::move(merged);
        groups.erase(groups.begin() + hi);
    }
    Program p{DslId::Csg3d, std::move(groups.front().tokens)};
    p.tokens.push_back(vocab_->stop());
    return p;
}

// --- ShapeAssembly ----------------------------------------------------------

SaProgram Sampler::draw_sa(Rng& rng) const {
    constexpr int kBlockHead = 4;  // Cuboid + 3 sizes
    constexpr std::array<int, 3> kAttachCost{7, 14, 6};
    constexpr std::array<int, 3> kSymCost{2, 4, 0};
    constexpr int kMinBlock = kBlockHead + 6;

    SaProgram prog;
    prog.bbox_height = uniform_int(rng, cfg_.sa_bbox_min, 32);
    const int k = uniform_int(rng, cfg_.k_min, cfg_.k_max);
    int used = 2;
    auto rand_face = [&] { return static_cast<Face>(uniform_int(rng, 0, 5)); };
    auto rand_uv = [&] { return uniform_int(rng, 1, 10); };
    for (int b = 0; b < k; ++b) {
        const int budget = grammar_.max_len() - 1 - used - kMinBlock * (k - 1 - b);
        SaBlock blk;
        for (auto& d : blk.dims) d = uniform_int(rng, cfg_.sa_dim_min, cfg_.sa_dim_max);

        std::array<double, 3> aw = cfg_.sa_block_weights;
        for (std::size_t t = 0; t < 3; ++t)
            if (kBlockHead + kAttachCost[t] > budget) aw[t] = 0;
        const int kind = weighted_pick(aw, rng);
        const int declared = b + 1;  // c0 .. c_b are legal references
        if (kind == 2) {
            SaSqueeze sq;
            sq.first = uniform_int(rng, 0, declared - 1);
            sq.second = uniform_int(rng, 0, declared - 1);
            sq.face = rand_face();
            sq.uv = {rand_uv(), rand_uv()};
            blk.squeeze = sq;
        } else {
            for (int n = 0; n <= kind; ++n) {
                SaAttach at;
                at.target = uniform_int(rng, 0, declared - 1);
                at.face = rand_face();
                at.uv = {rand_uv(), rand_uv(), rand_uv(), rand_uv()};
                blk.attaches.push_back(at);
            }
        }
        const int after_attach = budget - kBlockHead - kAttachCost[static_cast<std::size_t>(kind)];
        std::array<double, 3> sw = cfg_.sa_symmetry_weights;
        for (std::size_t t = 0; t < 3; ++t)
            if (kSymCost[t] > after_attach) sw[t] = 0;
        const int sym = weighted_pick(sw, rng);
        switch (sym) {
            case 0:
                blk.symmetry.kind = SaSymmetry::Kind::Reflect;
                blk.symmetry.axis = static_cast<Axis>(uniform_int(rng, 0, 2));
                break;
            case 1:
                blk.symmetry.kind = SaSymmetry::Kind::Translate;
                blk.symmetry.axis = static_cast<Axis>(uniform_int(rng, 0, 2));
                blk.symmetry.count = uniform_int(rng, 1, 4);
                blk.symmetry.distance = uniform_int(rng, 1, 32);
                break;
            default: break;
        }
        used += kBlockHead + kAttachCost[static_cast<std::size_t>(kind)] + kSymCost[static_cast<std::size_t>(sym)];
        prog.blocks.push_back(std::move(blk));
    }
    return prog;
}

Program Sampler::sample_shapeassembly(Rng& rng) const {
    int attempts = 0;
    return sample_shapeassembly(rng, attempts);
}

Program Sampler::sample_shapeassembly(Rng& rng, int& attempts) const {
    for (attempts = 1; attempts <= cfg_.max_attempts; ++attempts) {
        const SaProgram prog = draw_sa(rng);
        if (cfg_.sa_min_unique_voxels > 0) {
            const auto counts = sa_unique_counts(sa_layout(prog));
            if (std::any_of(counts.begin(), counts.end(), [&](int c) { return c < cfg_.sa_min_unique_voxels; })) {
                continue;
            }
        }
        return encode_sa(*vocab_, prog);
    }
    throw GenerationExhausted("ShapeAssembly sampler: no acceptable program after " +
                              std::to_string(cfg_.max_attempts) + " attempts");
}

// --- 2D CSG -----------------------------------------------------------------

Program Sampler::sample_csg2d(Rng& rng) const {
    std::array<std::vector<int>, 3> by_type;
    for (int t : vocab_->tokens_of(TokenKind::Shape2d)) {
        by_type[static_cast<std::size_t>(vocab_->info(t).value)].push_back(t);
    }
    std::array<double, 3> tw = cfg_.shape_weights;
    for (std::size_t i = 0; i < 3; ++i)
        if (by_type[i].empty()) tw[i] = 0;
    auto draw_shape = [&] { return pick(by_type[static_cast<std::size_t>(weighted_pick(tw, rng))], rng); };

    for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
        const int k = uniform_int(rng, cfg_.k_min, cfg_.k_max);
        std::vector<std::vector<int>> groups;
        ShapeGrid so_far = ShapeGrid::square2d();
        for (int i = 0; i < k; ++i) {
            int tok = draw_shape();
            if (cfg_.require_overlap && i > 0) {
                for (int tries = 0; tries < 100; ++tries) {
                    const ShapeGrid g = exec_(Program{DslId::Csg2d, {tok, vocab_->stop()}});
                    if (!grid_bool(BoolOp::Intersect, g, so_far).empty()) break;
                    tok = draw_shape();
                }
            }
            if (cfg_.require_overlap) {
                grid_bool_inplace(BoolOp::Union, so_far, exec_(Program{DslId::Csg2d, {tok, vocab_->stop()}}));
            }
            groups.push_back({tok});
        }
        while (groups.size() > 1) {
            const int n = static_cast<int>(groups.size());
            const int i = uniform_int(rng, 0, n - 1);
            int j = uniform_int(rng, 0, n - 2);
            if (j >= i) ++j;
            std::vector<int> merged = groups[static_cast<std::size_t>(i)];
            const auto& right = groups[static_cast<std::size_t>(j)];
            merged.insert(merged.end(), right.begin(), right.end());
            merged.push_back(vocab_->token_for(TokenKind::BoolOp, weighted_pick(cfg_.op_weights, rng)));
            const int lo = std::min(i, j), hi = std::max(i, j);
            groups[static_cast<std::size_t>(lo)] = std::move(merged);
            groups.erase(groups.begin() + hi);
        }
        Program p{DslId::Csg2d, std::move(groups.front())};
        p.tokens.push_back(vocab_->stop());
        const ShapeGrid g = exec_(p);
        if (g.empty() || g.full()) continue;
        return p;
    }
    throw GenerationExhausted("2D CSG sampler: every candidate was empty or full");
}

// --- datasets ---------------------------------------------------------------

Dataset generate_dataset(std::shared_ptr<const Vocabulary> vocab, const GenConfig& cfg, int threads) {
    if (cfg.count < 1) throw UsageError("count must be at least 1");
    if (cfg.val_count < 0) throw UsageError("val_count must be non-negative");
    const Sampler sampler(vocab, cfg);
    const Executor& exec = sampler.executor();

    auto make = [&](std::size_t first, std::size_t n) {
        PairSet out(n);
        parallel_for(
            n,
            [&](std::size_t i) {
                Rng rng = item_rng(cfg.seed, first + i);
                Program p = sampler.sample(rng);
                out[i].shape = exec(p);
                out[i].program = std::move(p);
                out[i].source = PairSource::SYNTH;
            },
            threads);
        return out;
    };

    Dataset ds;
    ds.train = make(0, static_cast<std::size_t>(cfg.count));
    std::unordered_set<std::string> seen;
    for (const auto& pr : ds.train) seen.insert(detokenize(*vocab, pr.program));

    std::size_t next = static_cast<std::size_t>(cfg.count);
    const std::size_t limit = next + 50 * static_cast<std::size_t>(cfg.val_count) + 1000;
    while (static_cast<int>(ds.val.size()) < cfg.val_count) {
        if (next >= limit) throw GenerationExhausted("could not draw a disjoint validation slice");
        const std::size_t want = static_cast<std::size_t>(cfg.val_count) - ds.val.size();
        PairSet batch = make(next, std::min(want * 2 + 8, limit - next));
        next += batch.size();
        for (auto& pr : batch) {
            if (static_cast<int>(ds.val.size()) == cfg.val_count) break;
            if (seen.insert(detokenize(*vocab, pr.program)).second) ds.val.push_back(std::move(pr));
        }
    }
    return ds;
}

}  // namespace plad
