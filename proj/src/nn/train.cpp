#include "plad/nn/train.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "plad/errors.hpp"
#include "plad/metrics.hpp"

namespace plad::nn {

TeacherForcing teacher_forcing(std::span<const std::vector<int>* const> programs, int max_len, int start_token) {
    TeacherForcing tf;
    const int batch = static_cast<int>(programs.size());
    for (const auto* p : programs) {
        if (static_cast<int>(p->size()) > max_len) throw LengthExceeded("program longer than max_len");
        if (p->empty()) throw InvalidProgram("empty program in batch");
        tf.steps = std::max(tf.steps, static_cast<int>(p->size()));
    }
    tf.targets.assign(static_cast<std::size_t>(batch) * tf.steps, 0);
    tf.weights.assign(tf.targets.size(), 0.0);
    for (int b = 0; b < batch; ++b) {
        const auto& toks = *programs[static_cast<std::size_t>(b)];
        std::vector<int> in{start_token};
        in.insert(in.end(), toks.begin(), toks.end() - 1);
        tf.inputs.push_back(std::move(in));
        const double w = 1.0 / (static_cast<double>(toks.size()) * batch);
        for (std::size_t t = 0; t < toks.size(); ++t) {
            tf.targets[static_cast<std::size_t>(b) * tf.steps + t] = toks[t];
            tf.weights[static_cast<std::size_t>(b) * tf.steps + t] = w;
        }
    }
    return tf;
}

namespace {

std::vector<const ShapeGrid*> shapes_of(Batch batch) {
    std::vector<const ShapeGrid*> out;
    out.reserve(batch.size());
    for (const Pair* p : batch) out.push_back(&p->shape);
    return out;
}

std::vector<const std::vector<int>*> programs_of(Batch batch) {
    std::vector<const std::vector<int>*> out;
    out.reserve(batch.size());
    for (const Pair* p : batch) out.push_back(&p->program.tokens);
    return out;
}

template <class Model>
double forward_nll(Model& m, Graph& g, Batch batch, Rng* rng) {
    if (batch.empty()) throw UsageError("empty batch");
    Binder bind(g, m.params());
    const auto shapes = shapes_of(batch);
    const auto tf = teacher_forcing(programs_of(batch), m.config().max_len, m.decoder().start_token());
    Var ctx = m.encode(bind, shapes, rng);
    Var logits = m.decoder().forward(bind, ctx, tf.inputs, tf.steps, m.config().dropout, rng);
    Var loss = g.nll(logits, tf.targets, tf.weights);
    if (g.training()) g.backward(loss);
    return g.scalar(loss);
}

}  // namespace

double nll_loss(RecognitionModel& m, Batch batch, Rng* dropout_rng) {
    Graph g(true);
    return forward_nll(m, g, batch, dropout_rng);
}

double eval_nll(const RecognitionModel& m, Batch batch) {
    Graph g(false);
    return forward_nll(m, g, batch, nullptr);
}

double train_step_mle(RecognitionModel& m, Batch batch, Adam& opt, Rng& dropout_rng) {
    m.params().zero_grad();
    const double loss = nll_loss(m, batch, &dropout_rng);
    opt.step(m.params());
    return loss;
}

void RewardBaseline::update(double batch_mean) {
    if (!ready) {
        value = batch_mean;
        ready = true;
        return;
    }
    value = decay * value + (1.0 - decay) * batch_mean;
}

RewardFn default_reward(const Executor& exec) {
    return [&exec](const ShapeGrid& target, const Program& program) {
        try {
            return reward(program.dsl, target, exec(program));
        } catch (const InvalidProgram&) {
            return 0.0;
        }
    };
}

RolloutStats reinforce_accumulate(RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng,
                                  RewardBaseline& baseline, const RewardFn& reward_fn, double scale) {
    RolloutStats stats;
    if (shapes.empty()) return stats;
    const auto samples = sample_decode(m, shapes, rng);
    const std::size_t n = shapes.size();
    std::vector<double> rewards(n);
    for (std::size_t i = 0; i < n; ++i) rewards[i] = reward_fn(*shapes[i], to_program(m.vocab(), samples[i]));
    stats.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(n);
    stats.baseline = baseline.ready ? baseline.value : stats.mean_reward;
    baseline.update(stats.mean_reward);

    std::vector<const std::vector<int>*> programs;
    for (const auto& s : samples) programs.push_back(&s.tokens);
    auto tf = teacher_forcing(programs, m.config().max_len, m.decoder().start_token());
    // Replay the sampler's masks so the gradient is that of the masked policy.
    const DecodeRules rules = DecodeRules::from(m.grammar());
    const int v = rules.vocab_size;
    std::vector<std::uint8_t> mask(tf.targets.size() * static_cast<std::size_t>(v), 1);
    bool any = false;
    for (std::size_t b = 0; b < n; ++b) {
        const double adv = rewards[b] - stats.baseline;
        GrammarState st;
        const auto& toks = samples[b].tokens;
        for (std::size_t t = 0; t < toks.size(); ++t) {
            const std::size_t row = b * static_cast<std::size_t>(tf.steps) + t;
            auto mrow = std::span<std::uint8_t>(mask).subspan(row * v, static_cast<std::size_t>(v));
            rules.mask(st, mrow);
            if (static_cast<int>(t) + 1 >= rules.max_len) {
                std::fill(mrow.begin(), mrow.end(), 0);
                mrow[static_cast<std::size_t>(rules.stop)] = 1;
            }
            st = rules.advance(st, toks[t]);
            tf.weights[row] = scale * adv / static_cast<double>(n);
            any = any || adv != 0.0;
        }
    }
    if (!any) return stats;
    Graph g(true);
    Binder bind(g, m.params());
    Var ctx = m.encode(bind, shapes, nullptr);
    Var logits = m.decoder().forward(bind, ctx, tf.inputs, tf.steps, 0.0, nullptr);
    g.backward(g.nll(logits, tf.targets, tf.weights, mask));
    return stats;
}

RolloutStats reinforce_step(RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng, const Sgd& opt,
                            RewardBaseline& baseline, const RewardFn& reward) {
    m.params().zero_grad();
    const RolloutStats s = reinforce_accumulate(m, shapes, rng, baseline, reward);
    opt.step(m.params());
    return s;
}

VaeLoss vae_loss(GenerativeModel& gm, Batch batch, Rng& rng, bool accumulate) {
    if (batch.empty()) throw UsageError("empty batch");
    Graph g(accumulate);
    Binder bind(g, gm.params());
    const auto shapes = shapes_of(batch);
    auto tf = teacher_forcing(programs_of(batch), gm.config().max_len, gm.decoder().start_token());
    // Summed (not averaged) token cross-entropy per program.
    const double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < tf.weights.size(); ++i) tf.weights[i] = tf.weights[i] > 0.0 ? 1.0 / n : 0.0;
    Rng* drop = accumulate ? &rng : nullptr;
    const auto post = gm.encode(bind, shapes, drop);
    std::vector<double> noise(static_cast<std::size_t>(g.rows(post.mean)) * gm.latent());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& e : noise) e = normal(rng);
    Var z = g.reparameterize(post.mean, post.log_std, noise);
    Var logits = gm.decoder().forward(bind, gm.lift(bind, z), tf.inputs, tf.steps, gm.config().dropout, drop);
    Var rec = g.nll(logits, tf.targets, tf.weights);
    Var kl = g.gaussian_kl(post.mean, post.log_std);
    Var total = g.add(rec, kl);
    if (accumulate) g.backward(total);
    return {g.scalar(rec), g.scalar(kl)};
}

std::vector<double> vae_train(GenerativeModel& gm, const PairSet& pairs, const VaeConfig& cfg, Rng& rng) {
    if (pairs.empty()) throw UsageError("vae_train needs at least one pair");
    std::vector<const Pair*> order;
    for (const auto& p : pairs) order.push_back(&p);
    auto epoch_loss = [&]() {
        double total = 0.0;
        Rng eval_rng(mix_seed(0x5eedULL));
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const auto chunk = std::span<const Pair* const>(order).subspan(
                b, std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - b));
            total += vae_loss(gm, chunk, eval_rng, false).total() * static_cast<double>(chunk.size());
        }
        return total / static_cast<double>(order.size());
    };
    Adam opt(cfg.lr);
    std::vector<double> history{epoch_loss()};
    double best = history.front();
    auto best_params = gm.params().snapshot();
    int stale = 0;
    for (int epoch = 0; epoch < cfg.max_epochs && stale < cfg.patience; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const auto chunk = std::span<const Pair* const>(order).subspan(
                b, std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - b));
            gm.params().zero_grad();
            vae_loss(gm, chunk, rng, true);
            opt.step(gm.params());
        }
        const double loss = epoch_loss();
        history.push_back(loss);
        if (loss < best - cfg.min_delta * std::abs(best)) {
            best = loss;
            best_params = gm.params().snapshot();
            stale = 0;
        } else {
            ++stale;
        }
    }
    gm.params().restore(best_params);
    return history;
}

std::vector<Program> vae_sample(const GenerativeModel& gm, int n, Rng& rng) {
    if (n < 1) throw UsageError("vae_sample needs n >= 1");
    std::vector<double> z(static_cast<std::size_t>(n) * gm.latent());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& e : z) e = normal(rng);
    const auto ctx = gm.context_from_latent(z, n);
    DecoderRuntime rt(gm.decoder(), gm.params(), ctx, n);
    const auto decoded = sample_rows(rt, DecodeRules::from(gm.grammar()), rng);
    std::vector<Program> out;
    out.reserve(decoded.size());
    for (const auto& d : decoded) out.push_back(to_program(gm.vocab(), d));
    return out;
}

}  // namespace plad::nn
