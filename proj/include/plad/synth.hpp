#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/executor.hpp"
#include "plad/pairs.hpp"
#include "plad/rng.hpp"

namespace plad {

struct GenConfig {
    DslId dsl = DslId::Csg3d;
    std::uint64_t seed = 0;
    int k_min = 2;
    int k_max = 12;
    int count = 1;
    int val_count = 0;
    int max_attempts = 10000;

    // ShapeAssembly
    int sa_min_unique_voxels = 8;
    std::array<double, 3> sa_symmetry_weights{3.0, 1.0, 2.0};  // reflect, translate, none
    std::array<double, 3> sa_block_weights{2.0, 1.0, 1.0};     // one attach, two attaches, squeeze
    int sa_bbox_min = 16;
    int sa_dim_min = 2;
    int sa_dim_max = 20;

    // 2D CSG
    std::array<double, 3> shape_weights{1.0, 1.0, 1.0};  // circle, square, triangle
    std::array<double, 3> op_weights{1.0, 1.0, 1.0};     // intersect, union, subtract
    bool require_overlap = false;  // every primitive must touch an earlier one

    /// Defaults per DSL: k in [2, 12] for 3D CSG, [2, 8] for ShapeAssembly,
    /// [1, 12] for 2D CSG.
    static GenConfig defaults(DslId dsl);
};

/// Integer axis-aligned bounds of a 3D primitive, in doubled voxel units so
/// half extents stay integral.
struct PrimBox {
    std::array<int, 3> center2{};
    std::array<int, 3> extent{};
};

PrimBox prim_box(const CsgPrimitive& p);
/// Interiors intersect (touching faces do not count).
bool boxes_overlap(const PrimBox& a, const PrimBox& b);
/// Operators allowed when merging group `a` (left) with group `b` (right):
/// union always; subtract if every box of b overlaps some box of a;
/// intersect if that holds in both directions. Order: intersect, union, subtract.
std::vector<BoolOp> valid_merge_ops(const std::vector<PrimBox>& a, const std::vector<PrimBox>& b);
/// Uniform choice among valid_merge_ops.
BoolOp choose_merge_op(const std::vector<PrimBox>& a, const std::vector<PrimBox>& b, Rng& rng);

class Sampler {
public:
    Sampler(std::shared_ptr<const Vocabulary> vocab, GenConfig cfg);

    const GenConfig& config() const noexcept { return cfg_; }
    const Executor& executor() const noexcept { return exec_; }
    const Grammar& grammar() const noexcept { return grammar_; }

    /// Dispatches on the vocabulary DSL. Throws GenerationExhausted.
    Program sample(Rng& rng) const;

    Program sample_csg3d(Rng& rng) const;
    Program sample_shapeassembly(Rng& rng) const;
    Program sample_csg2d(Rng& rng) const;

    /// Same as sample_shapeassembly but also reports how many candidates were
    /// drawn before acceptance.
    Program sample_shapeassembly(Rng& rng, int& attempts) const;

private:
    SaProgram draw_sa(Rng& rng) const;

    std::shared_ptr<const Vocabulary> vocab_;
    GenConfig cfg_;
    Executor exec_;
    Grammar grammar_;
};

struct Dataset {
    PairSet train;
    PairSet val;
};

/// `count` training pairs plus `val_count` validation pairs whose program
/// text never occurs in the training part. Item i uses item_rng(seed, i), so
/// the result does not depend on the thread count.
Dataset generate_dataset(std::shared_ptr<const Vocabulary> vocab, const GenConfig& cfg, int threads = 0);

}  // namespace plad
