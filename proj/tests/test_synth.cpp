#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "plad/errors.hpp"
#include "plad/synth.hpp"

using namespace plad;

namespace {

std::shared_ptr<const Vocabulary> share(Vocabulary v) { return std::make_shared<const Vocabulary>(std::move(v)); }

PrimBox box(int cx, int cy, int cz, int e) { return prim_box(CsgPrimitive{0, {cx, cy, cz, e, e, e}}); }

}  // namespace

TEST(MergeOps, DisjointPrimitivesOnlyUnion) {
    const std::vector<PrimBox> a{box(6, 6, 6, 4)}, b{box(20, 20, 20, 4)};
    EXPECT_EQ(valid_merge_ops(a, b), std::vector<BoolOp>{BoolOp::Union});
    // Touching faces are not an overlap.
    const std::vector<PrimBox> c{box(10, 6, 6, 4)};
    EXPECT_EQ(valid_merge_ops(a, c), std::vector<BoolOp>{BoolOp::Union});
    Rng rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(choose_merge_op(a, b, rng), BoolOp::Union);
}

TEST(MergeOps, OneSidedCoverAllowsSubtractOnly) {
    // b's single box overlaps a; a's second box does not overlap b.
    const std::vector<PrimBox> a{box(10, 10, 10, 6), box(28, 28, 28, 2)}, b{box(12, 10, 10, 6)};
    EXPECT_EQ(valid_merge_ops(a, b), (std::vector<BoolOp>{BoolOp::Union, BoolOp::Subtract}));
    EXPECT_EQ(valid_merge_ops(b, a), std::vector<BoolOp>{BoolOp::Union});
}

TEST(MergeOps, MutualOverlapIsUniformOverThreeOps) {
    const std::vector<PrimBox> a{box(10, 10, 10, 8)}, b{box(13, 12, 11, 8)};
    ASSERT_EQ(valid_merge_ops(a, b).size(), 3u);
    Rng rng(77);
    constexpr int n = 10000;
    std::array<int, 3> hits{};
    for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(choose_merge_op(a, b, rng))];
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (int h : hits) EXPECT_LE(std::abs(h - n / 3.0), 3 * sigma) << h;
}

TEST(SampleCsg3d, SoundAndOperatorValid) {
    const auto v = share(Vocabulary::csg3d());
    Sampler s(v, GenConfig::defaults(DslId::Csg3d));
    Rng rng(3);
    std::set<int> ks;
    for (int i = 0; i < 2000; ++i) {
        const Program p = s.sample(rng);
        ASSERT_NO_THROW(validate(s.grammar(), p));
        ASSERT_NO_THROW(s.executor()(p));
        const CsgTree tree = csg_tree(*v, p);
        ASSERT_TRUE(oracle::csg3d_ops_valid(tree));
        ks.insert(static_cast<int>(tree.prims.size()));
        for (const auto& prim : tree.prims) {
            for (int a = 0; a < 3; ++a) {
                // Inside the grid: [c - e/2, c + e/2] within [0, 32].
                ASSERT_LE(prim.params[3 + a], 2 * prim.params[a]);
                ASSERT_LE(prim.params[3 + a], 2 * (32 - prim.params[a]));
            }
        }
    }
    EXPECT_EQ(*ks.begin(), 2);
    EXPECT_EQ(*ks.rbegin(), 12);
}

TEST(SampleShapeAssembly, UniqueOccupancyAndDeclarationOrder) {
    const auto v = share(Vocabulary::shape_assembly());
    Sampler s(v, GenConfig::defaults(DslId::ShapeAssembly));
    Rng rng(4);
    std::set<int> ks;
    for (int i = 0; i < 300; ++i) {
        const Program p = s.sample(rng);
        ASSERT_NO_THROW(validate(s.grammar(), p));
        const SaProgram prog = sa_structure(*v, p);
        ks.insert(static_cast<int>(prog.blocks.size()));
        for (int c : oracle::unique_voxels(sa_layout(prog))) ASSERT_GE(c, 8);
        for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
            for (const auto& at : prog.blocks[b].attaches) ASSERT_LE(at.target, static_cast<int>(b));
        }
    }
    EXPECT_EQ(*ks.begin(), 2);
    EXPECT_EQ(*ks.rbegin(), 8);
}

TEST(SampleShapeAssembly, NoRejectionWhenThresholdIsZero) {
    const auto v = share(Vocabulary::shape_assembly());
    GenConfig cfg = GenConfig::defaults(DslId::ShapeAssembly);
    cfg.sa_min_unique_voxels = 0;
    Sampler s(v, cfg);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        int attempts = 0;
        s.sample_shapeassembly(rng, attempts);
        ASSERT_EQ(attempts, 1);
    }
}

TEST(SampleShapeAssembly, ImpossibleThresholdExhausts) {
    const auto v = share(Vocabulary::shape_assembly());
    GenConfig cfg = GenConfig::defaults(DslId::ShapeAssembly);
    cfg.sa_min_unique_voxels = 40000;
    cfg.max_attempts = 20;
    Sampler s(v, cfg);
    Rng rng(6);
    EXPECT_THROW(s.sample(rng), GenerationExhausted);
}

TEST(SampleCsg2d, LengthAndNonDegenerate) {
    const auto v = share(Vocabulary::csg2d_full());
    for (int k : {1, 2, 5, 12}) {
        GenConfig cfg = GenConfig::defaults(DslId::Csg2d);
        cfg.k_min = cfg.k_max = k;
        Sampler s(v, cfg);
        Rng rng(static_cast<std::uint64_t>(k));
        for (int i = 0; i < 200; ++i) {
            const Program p = s.sample(rng);
            ASSERT_EQ(p.size(), static_cast<std::size_t>(2 * k));
            ASSERT_NO_THROW(validate(s.grammar(), p));
            const ShapeGrid g = s.executor()(p);
            ASSERT_FALSE(g.empty());
            ASSERT_FALSE(g.full());
            if (k == 1) ASSERT_EQ(v->info(p.tokens[0]).kind, TokenKind::Shape2d);
        }
    }
}

TEST(SampleCsg2d, WeightsRestrictTypesAndOps) {
    const auto v = share(Vocabulary::csg2d_mini());
    GenConfig cfg = GenConfig::defaults(DslId::Csg2d);
    cfg.shape_weights = {0, 1, 0};
    cfg.op_weights = {0, 1, 0};
    cfg.require_overlap = true;
    Sampler s(v, cfg);
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        for (int t : s.sample(rng).tokens) {
            const auto& info = v->info(t);
            if (info.kind == TokenKind::Shape2d) ASSERT_EQ(info.value, 1);
            if (info.kind == TokenKind::BoolOp) ASSERT_EQ(info.value, static_cast<int>(BoolOp::Union));
        }
    }
}

TEST(Dataset, DeterministicDisjointAndThreadIndependent) {
    const auto v = share(Vocabulary::csg3d());
    GenConfig cfg = GenConfig::defaults(DslId::Csg3d);
    cfg.seed = 7;
    cfg.count = 1000;
    cfg.val_count = 100;
    const Dataset a = generate_dataset(v, cfg, 1);
    const Dataset b = generate_dataset(v, cfg, 3);
    ASSERT_EQ(a.train.size(), 1000u);
    ASSERT_EQ(a.val.size(), 100u);
    std::set<std::string> train_text;
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        ASSERT_EQ(a.train[i].program, b.train[i].program);
        ASSERT_EQ(a.train[i].shape, b.train[i].shape);
        train_text.insert(detokenize(*v, a.train[i].program));
    }
    for (std::size_t i = 0; i < a.val.size(); ++i) {
        ASSERT_EQ(a.val[i].program, b.val[i].program);
        ASSERT_EQ(train_text.count(detokenize(*v, a.val[i].program)), 0u);
    }
    cfg.seed = 8;
    cfg.val_count = 0;
    const Dataset c = generate_dataset(v, cfg, 1);
    EXPECT_NE(c.train.front().program, a.train.front().program);
    cfg.count = 0;
    EXPECT_THROW(generate_dataset(v, cfg), UsageError);
}
