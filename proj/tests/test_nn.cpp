#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "nn_checks.hpp"
#include "plad/errors.hpp"
#include "plad/nn/checkpoint.hpp"
#include "plad/nn/decode.hpp"
#include "plad/nn/train.hpp"
#include "plad/synth.hpp"

using namespace plad;
using namespace plad::nn;

namespace {

std::shared_ptr<const Vocabulary> mini_vocab() {
    static const auto v = std::make_shared<const Vocabulary>(Vocabulary::csg2d_mini());
    return v;
}

PairSet mini_pairs(int n, std::uint64_t seed, int k_max = 2) {
    GenConfig cfg = GenConfig::defaults(DslId::Csg2d);
    cfg.k_min = 1;
    cfg.k_max = k_max;
    cfg.count = n;
    cfg.seed = seed;
    return generate_dataset(mini_vocab(), cfg, 1).train;
}

PairSet pairs_for(std::shared_ptr<const Vocabulary> v, int n, std::uint64_t seed) {
    GenConfig cfg = GenConfig::defaults(v->dsl());
    cfg.count = n;
    cfg.seed = seed;
    if (v->dsl() == DslId::Csg3d) cfg.k_max = 3;
    if (v->dsl() == DslId::ShapeAssembly) cfg.k_max = 3;
    return generate_dataset(v, cfg, 1).train;
}

std::vector<const Pair*> ptrs(const PairSet& s) {
    std::vector<const Pair*> out;
    for (const auto& p : s) out.push_back(&p);
    return out;
}

std::vector<const ShapeGrid*> shape_ptrs(const PairSet& s) {
    std::vector<const ShapeGrid*> out;
    for (const auto& p : s) out.push_back(&p.shape);
    return out;
}

void zero_head(RecognitionModel& m) {
    for (auto& p : m.params()) {
        if (p.name.rfind("decoder.head2.", 0) == 0) std::fill(p.value.begin(), p.value.end(), 0.0);
    }
}

// Fixed logits per prefix over {a, b, STOP}; used as a hand-set scorer.
class TableScorer final : public StepScorer {
public:
    using Table = std::map<std::vector<int>, std::vector<double>>;
    explicit TableScorer(Table t) : table_(std::move(t)), prefixes_(1) { refresh(); }
    int rows() const override { return static_cast<int>(prefixes_.size()); }
    int vocab_size() const override { return 3; }
    std::span<const double> logits() const override { return logits_; }
    void advance(std::span<const int> parents, std::span<const int> tokens) override {
        std::vector<std::vector<int>> next;
        for (std::size_t i = 0; i < parents.size(); ++i) {
            next.push_back(prefixes_[static_cast<std::size_t>(parents[i])]);
            next.back().push_back(tokens[i]);
        }
        prefixes_ = std::move(next);
        refresh();
    }

private:
    void refresh() {
        logits_.clear();
        for (const auto& p : prefixes_) {
            const auto& row = table_.at(p);
            logits_.insert(logits_.end(), row.begin(), row.end());
        }
    }
    Table table_;
    std::vector<std::vector<int>> prefixes_;
    std::vector<double> logits_;
};

// Any token at any position; max_len bounds the length (STOP included).
DecodeRules toy_rules(int max_len) {
    DecodeRules r;
    r.vocab_size = 3;
    r.stop = 2;
    r.max_len = max_len;
    r.mask = [](const GrammarState&, std::span<std::uint8_t> m) { std::fill(m.begin(), m.end(), 1); };
    r.advance = [](const GrammarState& s, int) {
        GrammarState n = s;
        ++n.length;
        return n;
    };
    return r;
}

// Every legal toy sequence with its log-prob, best first.
std::vector<Decoded> enumerate(const TableScorer::Table& table, int max_len) {
    std::vector<Decoded> out;
    std::function<void(std::vector<int>, double)> walk = [&](std::vector<int> prefix, double lp) {
        const auto& row = table.at(prefix);
        const double lse = std::log(std::exp(row[0]) + std::exp(row[1]) + std::exp(row[2]));
        const bool must_stop = static_cast<int>(prefix.size()) + 1 >= max_len;
        const double z = must_stop ? row[2] : lse;
        for (int t = 0; t < 3; ++t) {
            if (must_stop && t != 2) continue;
            auto next = prefix;
            next.push_back(t);
            if (t == 2) {
                out.push_back({next, lp + row[t] - z});
            } else {
                walk(next, lp + row[t] - z);
            }
        }
    };
    walk({}, 0.0);
    std::sort(out.begin(), out.end(), [](const Decoded& a, const Decoded& b) {
        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
        return a.tokens < b.tokens;
    });
    return out;
}

TableScorer::Table full_table(Rng& rng, int max_len) {
    TableScorer::Table t;
    std::normal_distribution<double> n(0.0, 1.5);
    std::function<void(std::vector<int>)> fill = [&](std::vector<int> prefix) {
        t[prefix] = {n(rng), n(rng), n(rng)};
        if (static_cast<int>(prefix.size()) + 1 >= max_len) return;
        for (int tok = 0; tok < 2; ++tok) {
            auto next = prefix;
            next.push_back(tok);
            fill(next);
        }
    };
    fill({});
    return t;
}

}  // namespace

TEST(Autodiff, GradientMatchesFiniteDifferencesOnTinyModel) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 11);
    oracle::jitter(m.params(), 0.05, 12);
    const PairSet data = mini_pairs(1, 13, 3);
    const auto batch = ptrs(data);
    const auto r = oracle::grad_check(
        m.params(), [&] { m.params().zero_grad(); nll_loss(m, batch); }, [&] { return eval_nll(m, batch); });
    EXPECT_EQ(r.blocks, static_cast<int>(m.params().blocks()));
    EXPECT_LT(r.max_rel, 1e-3) << r.worst;
}

TEST(Autodiff, GradientMatchesFiniteDifferencesOnTiny3dEncoder) {
    const auto v = std::make_shared<const Vocabulary>(Vocabulary::csg3d());
    RecognitionModel m(v, ModelConfig::tiny(DslId::Csg3d), 21);
    oracle::jitter(m.params(), 0.05, 22);
    const PairSet data = pairs_for(v, 1, 23);
    const auto batch = ptrs(data);
    const auto r = oracle::grad_check(
        m.params(), [&] { m.params().zero_grad(); nll_loss(m, batch); }, [&] { return eval_nll(m, batch); }, 1e-4, 8);
    EXPECT_LT(r.max_rel, 1e-3) << r.worst;
}

TEST(Autodiff, GradientMatchesFiniteDifferencesOnVaeLoss) {
    GenerativeModel g(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 31);
    oracle::jitter(g.params(), 0.05, 32);
    const PairSet data = mini_pairs(2, 33, 2);
    const auto batch = ptrs(data);
    auto loss = [&](bool grad) {
        Rng rng(99);
        return vae_loss(g, batch, rng, grad).total();
    };
    const auto r = oracle::grad_check(
        g.params(), [&] { g.params().zero_grad(); loss(true); }, [&] { return loss(false); }, 1e-4, 12);
    EXPECT_LT(r.max_rel, 1e-3) << r.worst;
}

TEST(Autodiff, MaskedWeightedNllGradient) {
    ParamSet ps;
    const int id = ps.add("logits", 3, 4);
    oracle::jitter(ps, 1.0, 5);
    const std::vector<int> targets{1, 3, 0};
    const std::vector<double> weights{0.5, -1.25, 2.0};
    const std::vector<unsigned char> mask{1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1};
    auto run = [&](bool grad) {
        Graph g(grad);
        Var x = grad ? g.param(ps[id]) : g.param(static_cast<const Param&>(ps[id]));
        Var l = g.nll(x, targets, weights, mask);
        if (grad) g.backward(l);
        return g.scalar(l);
    };
    const auto r = oracle::grad_check(ps, [&] { ps.zero_grad(); run(true); }, [&] { return run(false); });
    EXPECT_LT(r.max_rel, 1e-6);
}

TEST(NllLoss, UniformLogitsGiveLogVocabularySize) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 1);
    zero_head(m);
    const PairSet data = mini_pairs(5, 2, 3);
    EXPECT_NEAR(eval_nll(m, ptrs(data)), std::log(static_cast<double>(mini_vocab()->size())), 1e-12);
}

TEST(NllLoss, DuplicatingTheBatchLeavesTheMeanUnchanged) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 3);
    const PairSet data = mini_pairs(3, 4, 3);
    auto b = ptrs(data);
    const double once = eval_nll(m, b);
    auto twice = b;
    twice.insert(twice.end(), b.begin(), b.end());
    EXPECT_NEAR(eval_nll(m, twice), once, 1e-12);
    const std::vector<const Pair*> single{b[0]}, doubled{b[0], b[0]};
    EXPECT_NEAR(eval_nll(m, doubled), eval_nll(m, single), 1e-12);
}

TEST(NllLoss, OverLengthProgramThrows) {
    ModelConfig cfg = ModelConfig::tiny(DslId::Csg2d);
    cfg.max_len = 4;
    RecognitionModel m(mini_vocab(), cfg, 3);
    const PairSet data = mini_pairs(20, 4, 4);
    const Pair* longest = &*std::max_element(data.begin(), data.end(),
                                             [](const Pair& a, const Pair& b) { return a.program.size() < b.program.size(); });
    ASSERT_GT(longest->program.size(), 4u);
    const std::vector<const Pair*> b{longest};
    EXPECT_THROW(eval_nll(m, b), LengthExceeded);
}

TEST(TrainStep, ZeroLearningRateLeavesParamsUnchanged) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 5);
    const auto before = m.params().snapshot();
    const PairSet data = mini_pairs(4, 6);
    Adam opt(0.0);
    Rng rng(1);
    for (int i = 0; i < 3; ++i) train_step_mle(m, ptrs(data), opt, rng);
    EXPECT_EQ(m.params().snapshot(), before);
}

TEST(TrainStep, MemorizesTenPairsWithin200Steps) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 7);
    const PairSet data = mini_pairs(10, 8, 2);
    const auto batch = ptrs(data);
    Adam opt(1e-2);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) train_step_mle(m, batch, opt, rng);
    EXPECT_LT(eval_nll(m, batch), 0.1);
}

TEST(TrainStep, IdenticalSeedsGiveBitIdenticalParams) {
    ModelConfig cfg = ModelConfig::tiny(DslId::Csg2d);
    cfg.dropout = 0.2;
    const PairSet data = mini_pairs(6, 9);
    auto run = [&] {
        RecognitionModel m(mini_vocab(), cfg, 10);
        Adam opt(1e-3);
        Rng rng(3);
        for (int i = 0; i < 5; ++i) train_step_mle(m, ptrs(data), opt, rng);
        return m.params().snapshot();
    };
    EXPECT_EQ(run(), run());
}

TEST(DecoderRuntime, MatchesGraphForward) {
    for (DslId dsl : {DslId::Csg2d, DslId::Csg3d, DslId::ShapeAssembly}) {
        const auto v = dsl == DslId::Csg2d ? mini_vocab() : std::make_shared<const Vocabulary>(Vocabulary::standard(dsl));
        ModelConfig cfg = ModelConfig::tiny(dsl);
        RecognitionModel m(v, cfg, 41);
        oracle::jitter(m.params(), 0.1, 42);
        const PairSet data = pairs_for(v, 3, 43);
        const auto shapes = shape_ptrs(data);
        const auto ctx = m.context(shapes);
        Graph g(false);
        Binder bind(g, static_cast<const ParamSet&>(m.params()));
        std::vector<const std::vector<int>*> progs;
        for (const auto& p : data) progs.push_back(&p.program.tokens);
        const auto tf = teacher_forcing(progs, cfg.max_len, m.decoder().start_token());
        Var c = g.input(static_cast<int>(data.size()) * cfg.context, cfg.width, ctx);
        const auto& full = g.value(m.decoder().forward(bind, c, tf.inputs, tf.steps, 0.0, nullptr));
        const int vs = v->size();
        for (std::size_t b = 0; b < data.size(); ++b) {
            const std::size_t per = static_cast<std::size_t>(cfg.context) * cfg.width;
            DecoderRuntime rt(m.decoder(), m.params(), std::span<const double>(ctx).subspan(b * per, per), 1);
            const auto& toks = data[b].program.tokens;
            for (std::size_t t = 0; t < toks.size(); ++t) {
                const auto l = rt.logits();
                for (int j = 0; j < vs; ++j) {
                    ASSERT_NEAR(l[j], full[(b * tf.steps + t) * vs + j], 1e-10) << to_string(dsl) << " step " << t;
                }
                const int parent = 0;
                if (t + 1 < toks.size()) rt.advance(std::span<const int>(&parent, 1), std::span<const int>(&toks[t], 1));
            }
        }
    }
}

TEST(BeamSearch, TopTwoMatchesExhaustiveEnumerationOnHandSetLogits) {
    // a=0, b=1, STOP=2
    TableScorer::Table t;
    t[{}] = {std::log(0.6), std::log(0.3), std::log(0.1)};
    t[{0}] = {std::log(0.7), std::log(0.2), std::log(0.1)};
    t[{1}] = {std::log(0.1), std::log(0.8), std::log(0.1)};
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) t[{a, b}] = {0.0, 0.0, 0.0};
    }
    const auto all = enumerate(t, 3);
    ASSERT_EQ(all.size(), 7u);
    TableScorer s(t);
    const auto top = beam_search(s, toy_rules(3), 2);
    ASSERT_EQ(top.size(), 2u);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(top[i].tokens, all[i].tokens);
        EXPECT_NEAR(top[i].log_prob, all[i].log_prob, 1e-12);
    }
    EXPECT_EQ(top[0].tokens, (std::vector<int>{0, 0, 2}));
    EXPECT_EQ(top[1].tokens, (std::vector<int>{1, 1, 2}));
}

TEST(BeamSearch, WideBeamRecoversTheFullRanking) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = full_table(rng, 3);
        const auto all = enumerate(t, 3);
        TableScorer s(t);
        const auto got = beam_search(s, toy_rules(3), 7);
        ASSERT_EQ(got.size(), all.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            EXPECT_EQ(got[i].tokens, all[i].tokens);
            EXPECT_NEAR(got[i].log_prob, all[i].log_prob, 1e-12);
        }
    }
}

TEST(BeamSearch, TiesBreakLexicographically) {
    TableScorer::Table t;
    t[{}] = {0.0, 0.0, -50.0};
    for (int a = 0; a < 2; ++a) {
        t[{a}] = {0.0, 0.0, -50.0};
        for (int b = 0; b < 2; ++b) t[{a, b}] = {0.0, 0.0, 0.0};
    }
    TableScorer s(t);
    const auto got = beam_search(s, toy_rules(3), 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].tokens, (std::vector<int>{0, 0, 2}));
    EXPECT_EQ(got[1].tokens, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(got[2].tokens, (std::vector<int>{1, 0, 2}));
}

TEST(BeamSearch, BeamOneEqualsGreedyAndZeroTemperatureSampling) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 51);
    oracle::jitter(m.params(), 0.3, 52);
    const PairSet data = mini_pairs(30, 53, 4);
    const auto shapes = shape_ptrs(data);
    const auto beams = beam_decode(m, shapes, 1, 1);
    Rng rng(1);
    const auto greedy = sample_decode(m, shapes, rng, 0.0);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        ASSERT_EQ(beams[i].size(), 1u);
        EXPECT_EQ(beams[i][0].tokens, greedy[i].tokens);
        EXPECT_NEAR(beams[i][0].log_prob, greedy[i].log_prob, 1e-9);
    }
}

TEST(BeamSearch, OutputsParseOnAThousandShapes) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 61);
    oracle::jitter(m.params(), 0.5, 62);
    const PairSet data = mini_pairs(1000, 63, 4);
    const auto beams = beam_decode(m, shape_ptrs(data), 3, 1);
    for (const auto& list : beams) {
        ASSERT_FALSE(list.empty());
        for (std::size_t i = 0; i < list.size(); ++i) {
            ASSERT_NO_THROW(validate(m.grammar(), to_program(m.vocab(), list[i])));
            if (i > 0) ASSERT_LE(list[i].log_prob, list[i - 1].log_prob);
        }
    }
}

TEST(BeamSearch, CandidatesForWiderBeamContainTheBeamOneResult) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 65);
    oracle::jitter(m.params(), 0.5, 66);
    const PairSet data = mini_pairs(40, 67, 4);
    const auto shapes = shape_ptrs(data);
    const auto one = infer_candidates(m, shapes, 1, 1);
    const auto five = infer_candidates(m, shapes, 5, 1);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        for (const auto& d : one[i]) {
            EXPECT_TRUE(std::any_of(five[i].begin(), five[i].end(), [&](const Decoded& e) { return e.tokens == d.tokens; }));
        }
    }
}

TEST(BeamSearch, ThreeDimensionalDslsParse) {
    for (DslId dsl : {DslId::Csg3d, DslId::ShapeAssembly}) {
        const auto v = std::make_shared<const Vocabulary>(Vocabulary::standard(dsl));
        RecognitionModel m(v, ModelConfig::tiny(dsl), 71);
        oracle::jitter(m.params(), 0.5, 72);
        const PairSet data = pairs_for(v, 20, 73);
        const auto shapes = shape_ptrs(data);
        for (const auto& list : beam_decode(m, shapes, 2, 1)) {
            for (const auto& d : list) ASSERT_NO_THROW(validate(m.grammar(), to_program(*v, d)));
        }
        Rng rng(4);
        for (const auto& d : sample_decode(m, shapes, rng)) ASSERT_NO_THROW(validate(m.grammar(), to_program(*v, d)));
    }
}

TEST(Sampling, MaskedDistributionSumsToOne) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 81);
    oracle::jitter(m.params(), 0.5, 82);
    const PairSet data = mini_pairs(5, 83);
    const auto ctx = m.context(shape_ptrs(data));
    DecoderRuntime rt(m.decoder(), m.params(), ctx, 5);
    const DecodeRules rules = DecodeRules::from(m.grammar());
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rules.vocab_size));
    std::vector<double> lp(mask.size());
    GrammarState st;
    for (int r = 0; r < 5; ++r) {
        rules.mask(st, mask);
        masked_log_softmax(rt.logits().subspan(static_cast<std::size_t>(r) * rules.vocab_size, mask.size()), mask, lp);
        double total = 0.0;
        for (double x : lp) total += std::exp(x);
        EXPECT_NEAR(total, 1.0, 1e-6);
    }
}

TEST(Sampling, FirstTokenOfUniformModelIsMaskedUniform) {
    // Chi-square goodness of fit over the 81 legal first tokens.
    class ZeroScorer final : public StepScorer {
    public:
        ZeroScorer(int rows, int v) : rows_(rows), v_(v), logits_(static_cast<std::size_t>(rows) * v, 0.0) {}
        int rows() const override { return rows_; }
        int vocab_size() const override { return v_; }
        std::span<const double> logits() const override { return logits_; }
        void advance(std::span<const int> parents, std::span<const int>) override {
            rows_ = static_cast<int>(parents.size());
            logits_.assign(static_cast<std::size_t>(rows_) * v_, 0.0);
        }

    private:
        int rows_, v_;
        std::vector<double> logits_;
    };
    const Grammar grammar(mini_vocab());
    const DecodeRules rules = DecodeRules::from(grammar);
    constexpr int n = 10000;
    ZeroScorer scorer(n, rules.vocab_size);
    Rng rng(91);
    const auto samples = sample_rows(scorer, rules, rng);
    const auto legal = grammar.legal_next(grammar.start());
    std::map<int, int> counts;
    for (const auto& s : samples) {
        ++counts[s.tokens.front()];
        ASSERT_NO_THROW(validate(grammar, Program{DslId::Csg2d, s.tokens}));
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / static_cast<double>(legal.size());
    for (int t : legal) chi2 += std::pow(counts[t] - expected, 2) / expected;
    EXPECT_EQ(counts.size(), legal.size());
    const boost::math::chi_squared dist(static_cast<double>(legal.size() - 1));
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001) << chi2;
}

TEST(Sampling, UniformModelSamplesParse) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 95);
    zero_head(m);
    const PairSet data = mini_pairs(200, 96);
    Rng rng(7);
    for (const auto& d : sample_decode(m, shape_ptrs(data), rng)) {
        ASSERT_NO_THROW(validate(m.grammar(), to_program(m.vocab(), d)));
    }
}

TEST(Reinforce, ZeroAdvantageLeavesParamsUnchanged) {
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 101);
    const PairSet data = mini_pairs(8, 102);
    const auto before = m.params().snapshot();
    RewardBaseline baseline{0.5, true};
    Rng rng(1);
    const RewardFn constant = [](const ShapeGrid&, const Program&) { return 0.5; };
    reinforce_step(m, shape_ptrs(data), rng, Sgd(0.01), baseline, constant);
    EXPECT_EQ(m.params().snapshot(), before);
    EXPECT_DOUBLE_EQ(baseline.value, 0.5);
}

TEST(Reinforce, BaselineIsAnExponentialMovingAverage) {
    RewardBaseline b;
    b.update(1.0);
    EXPECT_DOUBLE_EQ(b.value, 1.0);
    b.update(0.0);
    EXPECT_DOUBLE_EQ(b.value, 0.99);
}

TEST(Reinforce, BanditConvergesToTheRewardedArm) {
    oracle::Bandit bandit;
    Sgd opt(0.1);
    RewardBaseline baseline;
    Rng rng(111);
    int steps = 0;
    while (bandit.p0() <= 0.95 && steps < 500) {
        std::vector<int> actions(16);
        double mean = 0.0;
        for (int& a : actions) {
            a = bandit.pull(rng);
            mean += oracle::Bandit::payoff(a) / 16.0;
        }
        const double b = baseline.ready ? baseline.value : mean;
        bandit.params.zero_grad();
        bandit.accumulate(actions, b);
        opt.step(bandit.params);
        baseline.update(mean);
        ++steps;
    }
    EXPECT_GT(bandit.p0(), 0.95) << "after " << steps << " steps";
}

TEST(Reinforce, EstimatorIsUnbiasedOnTheBandit) {
    oracle::Bandit bandit(0.3, -0.2);
    const double p0 = bandit.p0();
    // d E[r] / d theta for E[r] = p0.
    const double exact0 = p0 * (1 - p0), exact1 = -p0 * (1 - p0);
    constexpr int n = 10000;
    Rng rng(121);
    double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
    for (int i = 0; i < n; ++i) {
        bandit.params.zero_grad();
        bandit.accumulate({bandit.pull(rng)}, 0.4);
        // accumulate() stores the gradient of the loss; ascent direction is its negative.
        const double g0 = -bandit.params[bandit.theta].grad[0], g1 = -bandit.params[bandit.theta].grad[1];
        s0 += g0, s1 += g1, q0 += g0 * g0, q1 += g1 * g1;
    }
    const double m0 = s0 / n, m1 = s1 / n;
    const double se0 = std::sqrt((q0 / n - m0 * m0) / n), se1 = std::sqrt((q1 / n - m1 * m1) / n);
    EXPECT_LE(std::abs(m0 - exact0), 3 * se0);
    EXPECT_LE(std::abs(m1 - exact1), 3 * se1);
}

TEST(Vae, GaussianKlClosedForms) {
    Graph g(false);
    Var zero = g.input(1, 128, std::vector<double>(128, 0.0));
    Var one = g.input(1, 128, std::vector<double>(128, 1.0));
    EXPECT_DOUBLE_EQ(g.scalar(g.gaussian_kl(zero, zero)), 0.0);
    EXPECT_DOUBLE_EQ(g.scalar(g.gaussian_kl(one, zero)), 64.0);
}

TEST(Vae, LatentIs128AndLossDecreases) {
    ModelConfig cfg = ModelConfig::tiny(DslId::Csg2d);
    EXPECT_EQ(cfg.latent, 128);
    GenerativeModel g(mini_vocab(), cfg, 131);
    const PairSet data = mini_pairs(10, 132, 2);
    VaeConfig vc;
    vc.lr = 1e-2;
    vc.max_epochs = 40;
    Rng rng(5);
    const auto history = vae_train(g, data, vc, rng);
    ASSERT_GE(history.size(), 2u);
    EXPECT_LT(*std::min_element(history.begin() + 1, history.end()), history.front());
}

TEST(Vae, SamplesParseAndAreDeterministic) {
    GenerativeModel g(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 141);
    oracle::jitter(g.params(), 0.3, 142);
    Rng a(9), b(9);
    const auto x = vae_sample(g, 50, a);
    const auto y = vae_sample(g, 50, b);
    ASSERT_EQ(x.size(), 50u);
    EXPECT_EQ(x, y);
    for (const auto& p : x) ASSERT_NO_THROW(validate(g.grammar(), p));
    EXPECT_THROW(vae_sample(g, 0, a), UsageError);
}

TEST(Checkpoint, RoundTripsFreshAndTrainedModels) {
    const auto dir = std::filesystem::temp_directory_path() / "plad_ckpt_test";
    std::filesystem::create_directories(dir);
    ModelConfig cfg = ModelConfig::tiny(DslId::Csg2d);
    cfg.dropout = 0.125;
    RecognitionModel m(mini_vocab(), cfg, 151);
    save_model(m, dir / "fresh.pladckpt");
    RecognitionModel f = load_model(dir / "fresh.pladckpt");
    EXPECT_EQ(f.config(), m.config());
    EXPECT_EQ(f.vocab(), m.vocab());
    EXPECT_EQ(f.params().snapshot(), m.params().snapshot());

    const PairSet data = mini_pairs(8, 152);
    Adam opt(1e-3);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) train_step_mle(m, ptrs(data), opt, rng);
    save_model(m, dir / "trained.pladckpt", {{"round", "4"}});
    RecognitionModel t = load_model(dir / "trained.pladckpt");
    EXPECT_EQ(t.params().snapshot(), m.params().snapshot());
    EXPECT_EQ(read_checkpoint(dir / "trained.pladckpt").get("round"), "4");

    GenerativeModel g(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 153);
    save_model(g, dir / "vae.pladckpt");
    EXPECT_EQ(load_generative(dir / "vae.pladckpt").params().snapshot(), g.params().snapshot());
    EXPECT_THROW(load_model(dir / "vae.pladckpt"), CorruptCheckpoint);
}

TEST(Checkpoint, TruncationAndVersionErrors) {
    const auto dir = std::filesystem::temp_directory_path() / "plad_ckpt_test";
    std::filesystem::create_directories(dir);
    RecognitionModel m(mini_vocab(), ModelConfig::tiny(DslId::Csg2d), 161);
    const auto path = dir / "m.pladckpt";
    save_model(m, path);
    std::string bytes;
    {
        std::ifstream f(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    auto write = [&](const std::string& s) {
        std::ofstream f(dir / "bad.pladckpt", std::ios::binary | std::ios::trunc);
        f << s;
    };
    for (std::size_t cut : {bytes.size() - 1, bytes.size() - 8, bytes.size() / 2, std::size_t{20}, std::size_t{5}}) {
        write(bytes.substr(0, cut));
        EXPECT_THROW(load_model(dir / "bad.pladckpt"), CorruptCheckpoint) << cut;
    }
    write(bytes + "x");
    EXPECT_THROW(load_model(dir / "bad.pladckpt"), CorruptCheckpoint);
    std::string v2 = bytes;
    v2[8] = '2';
    write(v2);
    EXPECT_THROW(load_model(dir / "bad.pladckpt"), VersionMismatch);
    EXPECT_THROW(load_model(dir / "missing.pladckpt"), IoError);
}
