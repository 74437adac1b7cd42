#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "plad/dsl.hpp"
#include "plad/errors.hpp"

using namespace plad;

namespace {

std::shared_ptr<const Vocabulary> share(Vocabulary v) { return std::make_shared<const Vocabulary>(std::move(v)); }

// Independent enumeration by token name, not by TokenKind.
std::set<int> names_matching(const Vocabulary& v, bool shapes, bool ops, bool stop) {
    std::set<int> out;
    for (int t = 0; t < v.size(); ++t) {
        const std::string& n = v.name(t);
        const bool is_op = n == "union" || n == "intersect" || n == "subtract";
        const bool is_stop = n == "STOP";
        const bool is_shape = n.find('_') != std::string::npos;
        if ((shapes && is_shape) || (ops && is_op) || (stop && is_stop)) out.insert(t);
    }
    return out;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Program random_walk(const Grammar& g, std::mt19937_64& rng) {
    Program p{g.dsl(), {}};
    GrammarState s = g.start();
    while (!s.done) {
        auto legal = g.legal_next(s);
        EXPECT_FALSE(legal.empty());
        std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
        const int t = legal[pick(rng)];
        p.tokens.push_back(t);
        s = g.advance(s, t);
    }
    return p;
}

}  // namespace

TEST(Vocabulary, TokenCounts) {
    EXPECT_EQ(Vocabulary::csg2d_full().shape_token_count(), 1029);
    EXPECT_EQ(Vocabulary::csg2d_full().size(), 1033);
    EXPECT_EQ(Vocabulary::csg2d_mini().shape_token_count(), 81);
    const auto v3 = Vocabulary::csg3d();
    EXPECT_EQ(v3.size(), 2 + 3 + 32 + 1);
    EXPECT_EQ(v3.tokens_of(TokenKind::Param3d).size(), 32u);
    const auto sa = Vocabulary::shape_assembly();
    EXPECT_EQ(sa.tokens_of(TokenKind::SaSize).size(), 32u);
    EXPECT_EQ(sa.tokens_of(TokenKind::SaUv).size(), 10u);
    EXPECT_EQ(sa.tokens_of(TokenKind::SaRef).size(), 11u);
    EXPECT_EQ(sa.tokens_of(TokenKind::SaCount).size(), 4u);
    EXPECT_EQ(sa.tokens_of(TokenKind::SaFace).size(), 6u);
    EXPECT_EQ(sa.tokens_of(TokenKind::SaAxis).size(), 3u);
}

TEST(Vocabulary, NamesAreUniqueAndStartIsOutOfRange) {
    for (auto dsl : {DslId::Csg2d, DslId::Csg3d, DslId::ShapeAssembly}) {
        const auto v = Vocabulary::standard(dsl);
        std::set<std::string> names(v.names().begin(), v.names().end());
        EXPECT_EQ(names.size(), v.names().size());
        EXPECT_EQ(v.start(), v.size());
        EXPECT_EQ(v.name(v.stop()), "STOP");
    }
    EXPECT_THROW(Vocabulary::from_names(DslId::Csg3d, {"1", "1", "STOP"}), Error);
}

TEST(Vocabulary, FileRoundTripAndCsgnet400Count) {
    const auto dir = std::filesystem::temp_directory_path() / "plad_vocab_test";
    std::filesystem::create_directories(dir);
    const auto full = Vocabulary::csg2d_full();
    full.save(dir / "full.txt");
    EXPECT_EQ(Vocabulary::from_file(DslId::Csg2d, dir / "full.txt"), full);

    auto write_list = [&](int shapes) {
        std::ofstream out(dir / "list.txt");
        for (int i = 0; i < shapes; ++i) out << full.name(i) << '\n';
        out << "intersect\nunion\nsubtract\nSTOP\n";
    };
    write_list(400);
    const auto v400 = Vocabulary::csg2d_csgnet400(dir / "list.txt");
    EXPECT_EQ(v400.shape_token_count(), 400);
    EXPECT_EQ(v400.size(), 404);
    write_list(399);
    EXPECT_THROW(Vocabulary::csg2d_csgnet400(dir / "list.txt"), Error);
    std::filesystem::remove_all(dir);
}

TEST(Parse, TwoPrimitiveUnionBuildsThreeNodeTree) {
    Grammar g(share(Vocabulary::csg2d_full()));
    const Program p = parse(g, "circle_32_32_16 square_16_16_8 union STOP");
    ASSERT_EQ(p.size(), 4u);
    const CsgTree tree = csg_tree(g.vocab(), p);
    ASSERT_EQ(tree.nodes.size(), 3u);
    const CsgNode& root = tree.nodes[static_cast<std::size_t>(tree.root)];
    EXPECT_TRUE(root.is_op);
    EXPECT_EQ(root.op, BoolOp::Union);
    EXPECT_EQ(tree.prims[0].type, static_cast<int>(Shape2dType::Circle));
    EXPECT_EQ(tree.prims[1].type, static_cast<int>(Shape2dType::Square));
    EXPECT_EQ(tree.prims[1].params[2], 8);
    EXPECT_EQ(encode_csg(g.vocab(), tree), p);
}

TEST(Parse, OperatorWithEmptyStackFailsAtZero) {
    Grammar g(share(Vocabulary::csg2d_full()));
    try {
        parse(g, "union STOP");
        FAIL() << "expected GrammarViolation";
    } catch (const GrammarViolation& e) {
        EXPECT_EQ(e.position(), 0);
        EXPECT_EQ(e.expected().size(), 1029u);
    }
}

TEST(Parse, UnknownTokenAndMissingStop) {
    Grammar g(share(Vocabulary::csg2d_full()));
    EXPECT_THROW(parse(g, "circle_32_32_15 STOP"), UnknownToken);
    EXPECT_THROW(parse(g, "circle_32_32_16"), GrammarViolation);
    EXPECT_THROW(parse(g, "circle_32_32_16 STOP STOP"), GrammarViolation);
}

TEST(Parse, ShapeAssemblyForwardReferenceIsSemantic) {
    Grammar g(share(Vocabulary::shape_assembly()));
    const std::string ok =
        "bbox x20 Cuboid x8 x8 x8 attach c0 bot uv5 uv5 uv5 uv5 "
        "Cuboid x4 x4 x4 attach c1 top uv5 uv5 uv5 uv5 STOP";
    EXPECT_NO_THROW(parse(g, ok));
    const std::string bad =
        "bbox x20 Cuboid x8 x8 x8 attach c0 bot uv5 uv5 uv5 uv5 "
        "Cuboid x4 x4 x4 attach c5 top uv5 uv5 uv5 uv5 STOP";
    try {
        parse(g, bad);
        FAIL() << "expected SemanticViolation";
    } catch (const SemanticViolation& e) {
        EXPECT_EQ(e.position(), 18);
    }
    // A cuboid may not reference itself either.
    EXPECT_THROW(parse(g, "bbox x20 Cuboid x8 x8 x8 attach c1 bot uv5 uv5 uv5 uv5 STOP"), SemanticViolation);
    // At least one block is required.
    EXPECT_THROW(parse(g, "bbox x20 STOP"), GrammarViolation);
}

TEST(Parse, ShapeAssemblyBlockShapes) {
    Grammar g(share(Vocabulary::shape_assembly()));
    const std::string text =
        "bbox x20 Cuboid x8 x4 x8 attach c0 bot uv5 uv1 uv5 uv5 reflect X "
        "Cuboid x4 x4 x4 squeeze c0 c1 top uv5 uv5 "
        "Cuboid x2 x2 x2 attach c1 top uv5 uv5 uv5 uv5 attach c2 bot uv5 uv5 uv5 uv5 translate Z m3 x10 STOP";
    const Program p = parse(g, text);
    const SaProgram s = sa_structure(g.vocab(), p);
    ASSERT_EQ(s.blocks.size(), 3u);
    EXPECT_EQ(s.bbox_height, 20);
    EXPECT_EQ(s.blocks[0].symmetry.kind, SaSymmetry::Kind::Reflect);
    EXPECT_TRUE(s.blocks[1].squeeze.has_value());
    EXPECT_EQ(s.blocks[2].attaches.size(), 2u);
    EXPECT_EQ(s.blocks[2].symmetry.count, 3);
    EXPECT_EQ(encode_sa(g.vocab(), s), p);
    EXPECT_EQ(detokenize(g.vocab(), p), text);
    // Squeeze blocks may carry symmetry; a third attach is not allowed.
    EXPECT_NO_THROW(parse(g, "bbox x20 Cuboid x8 x4 x8 squeeze c0 c0 top uv5 uv5 reflect X STOP"));
    EXPECT_THROW(parse(g, "bbox x20 Cuboid x8 x4 x8 squeeze c0 c0 top uv5 uv5 attach c0 top uv5 uv5 uv5 uv5 STOP"),
                 GrammarViolation);
    EXPECT_THROW(parse(g,
                       "bbox x20 Cuboid x8 x4 x8 attach c0 bot uv5 uv5 uv5 uv5 attach c0 top uv5 uv5 uv5 uv5 "
                       "attach c0 left uv5 uv5 uv5 uv5 STOP"),
                 GrammarViolation);
}

TEST(LegalNext, Csg2dStackDepths) {
    const auto v = share(Vocabulary::csg2d_full());
    Grammar g(v);
    const auto shapes = names_matching(*v, true, false, false);
    EXPECT_EQ(shapes.size(), 1029u);
    GrammarState s = g.start();
    EXPECT_EQ(as_set(g.legal_next(s)), shapes);
    s = g.advance(s, v->index("circle_32_32_16"));
    EXPECT_EQ(as_set(g.legal_next(s)), names_matching(*v, true, false, true));
    s = g.advance(s, v->index("square_16_16_8"));
    EXPECT_EQ(as_set(g.legal_next(s)), names_matching(*v, true, true, false));
}

TEST(LegalNext, BudgetForcesClosure) {
    const auto v = share(Vocabulary::csg2d_mini());
    Grammar g(v, 6);
    const int c = v->index("circle_32_32_16");
    const int u = v->index("union");
    GrammarState s = g.start();
    s = g.advance(s, c);
    s = g.advance(s, c);
    s = g.advance(s, c);
    // depth 3 at length 3: one more shape would need 3 ops + STOP = 8 > 6.
    EXPECT_EQ(g.check(s, c), Grammar::Verdict::Budget);
    s = g.advance(s, u);
    s = g.advance(s, u);
    EXPECT_EQ(as_set(g.legal_next(s)), std::set<int>{v->stop()});
}

TEST(LegalNext, MaskMatchesList) {
    std::mt19937_64 rng(3);
    for (auto dsl : {DslId::Csg2d, DslId::Csg3d, DslId::ShapeAssembly}) {
        const auto v = share(dsl == DslId::Csg2d ? Vocabulary::csg2d_mini() : Vocabulary::standard(dsl));
        Grammar g(v);
        for (int walk = 0; walk < 50; ++walk) {
            GrammarState s = g.start();
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(v->size()));
            while (!s.done) {
                g.legal_mask(s, mask);
                const auto legal = g.legal_next(s);
                std::vector<int> from_mask;
                for (int t = 0; t < v->size(); ++t)
                    if (mask[static_cast<std::size_t>(t)]) from_mask.push_back(t);
                ASSERT_EQ(from_mask, legal);
                std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
                s = g.advance(s, legal[pick(rng)]);
            }
        }
    }
}

class RandomWalks : public ::testing::TestWithParam<DslId> {};

TEST_P(RandomWalks, EveryWalkParsesAndRoundTrips) {
    const DslId dsl = GetParam();
    const auto v = share(dsl == DslId::Csg2d ? Vocabulary::csg2d_mini() : Vocabulary::standard(dsl));
    Grammar g(v);
    std::mt19937_64 rng(11 + static_cast<int>(dsl));
    for (int i = 0; i < 10000; ++i) {
        const Program p = random_walk(g, rng);
        ASSERT_LE(static_cast<int>(p.size()), g.max_len());
        const std::string text = detokenize(*v, p);
        const Program q = parse(g, text);
        ASSERT_EQ(q, p) << text;
        if (dsl == DslId::ShapeAssembly) {
            const SaProgram s = sa_structure(*v, p);
            ASSERT_EQ(encode_sa(*v, s), p);
            int reflects = 0, blocks_with_reflect = 0;
            for (int t : p.tokens) reflects += v->name(t) == "reflect";
            for (const auto& b : s.blocks) blocks_with_reflect += b.symmetry.kind == SaSymmetry::Kind::Reflect;
            ASSERT_EQ(reflects, blocks_with_reflect);
        } else {
            ASSERT_EQ(encode_csg(*v, csg_tree(*v, p)), p);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(AllDsls, RandomWalks,
                         ::testing::Values(DslId::Csg2d, DslId::Csg3d, DslId::ShapeAssembly),
                         [](const auto& info) { return std::string(to_string(info.param)); });
