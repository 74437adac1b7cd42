#include "plad/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "plad/errors.hpp"
#include "plad/nn/checkpoint.hpp"
#include "plad/nn/decode.hpp"
#include "plad/parallel.hpp"

namespace plad {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<const ShapeGrid*> pointers(std::span<const ShapeGrid> shapes) {
    std::vector<const ShapeGrid*> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(&s);
    return out;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

Similarity worst_similarity(DslId dsl) {
    const SimilarityKind kind = similarity_kind(dsl);
    if (kind == SimilarityKind::IoU) return {kind, 0.0};
    return {kind, -chamfer_sentinel(ShapeGrid::for_dsl(dsl))};
}

struct Scored {
    Program program;
    Similarity sim;
};

// Best executable candidate per shape, or nullopt.
std::vector<std::optional<Scored>> score_candidates(const nn::RecognitionModel& m, std::span<const ShapeGrid> shapes,
                                                    int beam, const Executor& exec, int threads, int* executed) {
    const auto ptrs = pointers(shapes);
    const auto cands = nn::infer_candidates(m, ptrs, beam, threads);
    std::vector<std::optional<Scored>> best(shapes.size());
    std::vector<int> counts(shapes.size(), 0);
    parallel_for(
        shapes.size(),
        [&](std::size_t i) {
            for (const auto& d : cands[i]) {
                Program p;
                ShapeGrid g;
                try {
                    p = nn::to_program(m.vocab(), d);
                    g = exec(p);
                } catch (const Error&) {
                    continue;
                }
                ++counts[i];
                const Similarity s = similarity(m.vocab().dsl(), shapes[i], g);
                if (!best[i] || preferred(p, s, best[i]->program, best[i]->sim)) best[i] = Scored{std::move(p), s};
            }
        },
        threads);
    if (executed) *executed = std::accumulate(counts.begin(), counts.end(), 0);
    return best;
}

void check_finite(double loss, const char* what) {
    if (!std::isfinite(loss)) throw NumericFailure(std::string("non-finite loss during ") + what);
}

// Cycles through a pair set in shuffled order, one batch at a time.
class BatchStream {
public:
    BatchStream(const PairSet& set, std::size_t batch) : set_(&set), batch_(std::min(batch, set.size())) {
        order_.resize(set.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        cursor_ = order_.size();
    }

    std::vector<const Pair*> next(Rng& rng) {
        if (cursor_ + batch_ > order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng);
            cursor_ = 0;
        }
        std::vector<const Pair*> out;
        out.reserve(batch_);
        for (std::size_t i = 0; i < batch_; ++i) out.push_back(&(*set_)[order_[cursor_ + i]]);
        cursor_ += batch_;
        return out;
    }

private:
    const PairSet* set_;
    std::size_t batch_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

void save_round(const nn::RecognitionModel& m, const std::filesystem::path& dir, int round, double val) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir / "ckpt");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", val);
    nn::save_model(m, dir / "ckpt" / ("round_" + std::to_string(round) + ".pladckpt"),
                   {{"round", std::to_string(round)}, {"val_similarity", buf}});
}

bool over_time(const TraceLog& log, double max_seconds) { return max_seconds > 0.0 && log.elapsed() >= max_seconds; }

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::ST: return "st";
        case Method::LEST: return "lest";
        case Method::WS: return "ws";
    }
    return "?";
}

std::string_view to_string(PBestMode m) { return m == PBestMode::AllTime ? "alltime" : "perround"; }
std::string_view to_string(Mixing m) { return m == Mixing::Uniform ? "uniform" : "proportional"; }

Method parse_method(std::string_view s) {
    const std::string l = lower(s);
    if (l == "st") return Method::ST;
    if (l == "lest") return Method::LEST;
    if (l == "ws") return Method::WS;
    throw UsageError("unknown method '" + std::string(s) + "' (expected st, lest or ws)");
}

PBestMode parse_pbest_mode(std::string_view s) {
    const std::string l = lower(s);
    if (l == "alltime" || l == "all-time") return PBestMode::AllTime;
    if (l == "perround" || l == "per-round") return PBestMode::PerRound;
    throw UsageError("unknown pbest mode '" + std::string(s) + "' (expected alltime or perround)");
}

Mixing parse_mixing(std::string_view s) {
    const std::string l = lower(s);
    if (l == "uniform") return Mixing::Uniform;
    if (l == "proportional") return Mixing::Proportional;
    throw UsageError("unknown mixing '" + std::string(s) + "' (expected uniform or proportional)");
}

PairSource source_of(Method m) {
    switch (m) {
        case Method::ST: return PairSource::ST;
        case Method::LEST: return PairSource::LEST;
        case Method::WS: return PairSource::WS;
    }
    return PairSource::SYNTH;
}

bool preferred(const Program& a, Similarity sa, const Program& b, Similarity sb) {
    if (sa.value != sb.value) return sa.value > sb.value;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
    return a.tokens < b.tokens;
}

// --- PBestStore ----------------------------------------------------------------

PBestStore::PBestStore(std::size_t shapes, PBestMode mode) : entries_(shapes), mode_(mode) {}

void PBestStore::begin_round() {
    if (mode_ == PBestMode::PerRound) std::fill(entries_.begin(), entries_.end(), PBestEntry{});
}

bool PBestStore::offer(std::size_t i, const Program& program, Similarity sim, int round) {
    auto& e = entries_.at(i);
    if (mode_ == PBestMode::AllTime && e.program && !(sim.value > e.similarity.value)) return false;
    const bool changed = !e.program || *e.program != program || e.similarity.value != sim.value;
    e.program = program;
    e.similarity = sim;
    if (changed) e.round = round;
    return changed;
}

std::size_t PBestStore::filled() const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const PBestEntry& e) { return e.program.has_value(); }));
}

double PBestStore::mean_similarity() const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (!e.program) continue;
        total += e.similarity.value;
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

PBestUpdate update_pbest(const nn::RecognitionModel& m, std::span<const ShapeGrid> sstar, PBestStore& store,
                         int beam, const Executor& exec, int round, int threads) {
    if (store.size() != sstar.size()) throw UsageError("P_BEST store does not match the target shape count");
    if (beam < 1) throw UsageError("beam must be >= 1");
    store.begin_round();
    PBestUpdate u;
    const auto best = score_candidates(m, sstar, beam, exec, threads, &u.candidates);
    for (std::size_t i = 0; i < best.size(); ++i) {
        if (best[i] && store.offer(i, best[i]->program, best[i]->sim, round)) ++u.improved;
    }
    return u;
}

PairSet build_pairs(Method method, const PBestStore& store, std::span<const ShapeGrid> sstar, const Executor& exec,
                    const nn::GenerativeModel* gen, Rng& rng, int threads) {
    PairSet out;
    if (method == Method::WS) {
        if (gen == nullptr) throw MissingGenerativeModel("wake-sleep pairs need a trained generative model");
        const auto programs = nn::vae_sample(*gen, static_cast<int>(sstar.size()), rng);
        std::vector<std::optional<ShapeGrid>> shapes(programs.size());
        parallel_for(
            programs.size(),
            [&](std::size_t i) {
                try {
                    shapes[i] = exec(programs[i]);
                } catch (const Error&) {
                }
            },
            threads);
        for (std::size_t i = 0; i < programs.size(); ++i) {
            if (shapes[i]) out.push_back({std::move(*shapes[i]), programs[i], PairSource::WS});
        }
        return out;
    }
    if (store.size() != sstar.size()) throw UsageError("P_BEST store does not match the target shape count");
    std::vector<std::optional<Pair>> pairs(store.size());
    parallel_for(
        store.size(),
        [&](std::size_t i) {
            const auto& e = store[i];
            if (!e.program) return;
            if (method == Method::ST) {
                pairs[i] = Pair{sstar[i], *e.program, PairSource::ST};
            } else {
                pairs[i] = Pair{exec(*e.program), *e.program, PairSource::LEST};
            }
        },
        threads);
    for (auto& p : pairs) {
        if (p) out.push_back(std::move(*p));
    }
    return out;
}

// --- evaluation ------------------------------------------------------------------

double EvalReport::mean_similarity() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.best.value;
    return s / static_cast<double>(rows.size());
}

double EvalReport::median_similarity() const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.best.value);
    return median_of(std::move(v));
}

double EvalReport::mean_metric() const {
    return similarity_kind(dsl) == SimilarityKind::ChamferNeg ? -mean_similarity() : mean_similarity();
}

double EvalReport::median_metric() const {
    return similarity_kind(dsl) == SimilarityKind::ChamferNeg ? -median_similarity() : median_similarity();
}

EvalReport evaluate(const nn::RecognitionModel& m, std::span<const ShapeGrid> test, int beam, const Executor& exec,
                    int threads) {
    if (beam < 1) throw UsageError("beam must be >= 1");
    EvalReport report;
    report.dsl = m.vocab().dsl();
    const auto best = score_candidates(m, test, beam, exec, threads, nullptr);
    for (std::size_t i = 0; i < best.size(); ++i) {
        EvalRow row;
        row.shape_id = i;
        row.beam = beam;
        if (best[i]) {
            row.best = best[i]->sim;
            row.program = best[i]->program;
        } else {
            row.best = worst_similarity(report.dsl);
            row.program.dsl = report.dsl;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_report(const std::filesystem::path& path, const EvalReport& report, const Vocabulary& vocab) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << "shape_id,best_similarity,best_program,beam\n";
    char buf[40];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.best.value);
        f << r.shape_id << ',' << buf << ',' << (r.program.tokens.empty() ? "" : detokenize(vocab, r.program)) << ','
          << r.beam << '\n';
    }
    if (!f) throw IoError("write failed for " + path.string());
}

// --- trace ---------------------------------------------------------------------------

TraceLog::TraceLog(const std::filesystem::path& dir, bool record_wallclock) : clock_(record_wallclock) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    out_.open(dir / "trace.csv", std::ios::trunc);
    if (!out_) throw IoError("cannot write " + (dir / "trace.csv").string());
    out_ << "round,epoch,phase,mean_sim,median_sim,best_val_sim,wallclock_s\n";
    out_.flush();
}

double TraceLog::elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void TraceLog::add(TraceRow row) {
    row.wallclock_s = clock_ ? elapsed() : 0.0;
    if (out_.is_open()) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.10g,%.10g,%.10g,%.3f\n", row.round, row.epoch, row.phase.c_str(),
                      row.mean_sim, row.median_sim, row.best_val_sim, row.wallclock_s);
        out_ << buf;
        out_.flush();
    }
    rows_.push_back(std::move(row));
}

std::optional<double> time_to_reach(std::span<const TraceRow> rows, std::string_view phase, double target) {
    for (const auto& r : rows) {
        if (r.phase == phase && r.median_sim >= target) return r.wallclock_s;
    }
    return std::nullopt;
}

// --- configs -------------------------------------------------------------------------

TrainConfig TrainConfig::defaults(DslId dsl) {
    TrainConfig c;
    if (dsl != DslId::Csg2d) {
        c.outer_patience = 100;
        c.patience_threshold = 0.001;
        c.lr = 5e-4;
    }
    return c;
}

void TrainConfig::check() const {
    if (methods.empty()) throw UsageError("at least one fine-tuning method is required");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            if (methods[i] == methods[j]) throw UsageError("method listed twice: " + std::string(to_string(methods[i])));
        }
    }
    if (beam_inner < 1 || beam_val_inround < 1 || beam_val_between < 1 || beam_final < 1) {
        throw UsageError("beam sizes must be >= 1");
    }
    if (batch_size < 1 || rl_batch < 1 || rl_update_every < 1) throw UsageError("batch sizes must be >= 1");
    if (round_patience < 1 || outer_patience < 1 || max_rounds < 1 || max_round_epochs < 1 || rl_max_epochs < 1) {
        throw UsageError("patience and epoch limits must be >= 1");
    }
    if (!(lr >= 0.0) || !(rl_lr >= 0.0)) throw UsageError("learning rates must be >= 0");
}

MethodMixer::MethodMixer(Mixing mode, std::vector<std::size_t> sizes) : mode_(mode), sizes_(std::move(sizes)) {
    if (std::all_of(sizes_.begin(), sizes_.end(), [](std::size_t s) { return s == 0; })) {
        throw UsageError("no training pairs to mix");
    }
}

std::size_t MethodMixer::draw(Rng& rng) const {
    if (mode_ == Mixing::Uniform) {
        std::vector<std::size_t> live;
        for (std::size_t i = 0; i < sizes_.size(); ++i) {
            if (sizes_[i] > 0) live.push_back(i);
        }
        return live[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(live.size()) - 1))];
    }
    const double total = static_cast<double>(std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0}));
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        u -= static_cast<double>(sizes_[i]);
        if (u < 0.0 && sizes_[i] > 0) return i;
    }
    for (std::size_t i = sizes_.size(); i-- > 0;) {
        if (sizes_[i] > 0) return i;
    }
    return 0;
}

// --- loops ---------------------------------------------------------------------------

TrainResult pretrain(nn::RecognitionModel m, const PairSet& synth, std::span<const ShapeGrid> val,
                     const PretrainConfig& cfg, const Executor& exec) {
    if (synth.empty()) throw UsageError("pretraining needs synthetic pairs");
    if (val.empty()) throw UsageError("pretraining needs validation shapes");
    if (cfg.batch_size < 1 || cfg.beam_val < 1 || cfg.max_epochs < 0 || cfg.patience < 1) {
        throw UsageError("invalid pretraining configuration");
    }
    TraceLog log(cfg.out_dir, cfg.record_wallclock);
    Rng shuffle_rng(item_rng(cfg.seed, 1));
    Rng dropout_rng(item_rng(cfg.seed, 2));
    nn::Adam opt(cfg.lr);
    std::vector<const Pair*> order;
    for (const auto& p : synth) order.push_back(&p);

    auto report = evaluate(m, val, cfg.beam_val, exec, cfg.threads);
    double best = report.mean_similarity();
    double anchor = best;
    TrainResult r{m, best, {}, std::nullopt, 0, {}};
    log.add({0, 0, "pretrain", best, report.median_similarity(), best, 0.0});
    int stale = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs && stale < cfg.patience; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const auto batch = std::span<const Pair* const>(order).subspan(
                b, std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - b));
            check_finite(nn::train_step_mle(m, batch, opt, dropout_rng), "pretraining");
        }
        report = evaluate(m, val, cfg.beam_val, exec, cfg.threads);
        const double score = report.mean_similarity();
        if (score > best) {
            best = score;
            r.model = m;
        }
        if (score >= anchor + cfg.threshold) {
            anchor = score;
            stale = 0;
        } else {
            ++stale;
        }
        log.add({0, epoch, "pretrain", score, report.median_similarity(), best, 0.0});
    }
    r.best_val = best;
    r.trace = log.rows();
    return r;
}

TrainResult fine_tune(nn::RecognitionModel m, std::span<const ShapeGrid> sstar, std::span<const ShapeGrid> val,
                      const TrainConfig& cfg, const Executor& exec) {
    cfg.check();
    if (sstar.empty()) throw UsageError("fine-tuning needs target shapes");
    if (val.empty()) throw UsageError("fine-tuning needs validation shapes");
    const bool use_ws = std::find(cfg.methods.begin(), cfg.methods.end(), Method::WS) != cfg.methods.end();

    TraceLog log(cfg.out_dir, cfg.record_wallclock);
    Rng mix_rng(item_rng(cfg.seed, 11));
    Rng dropout_rng(item_rng(cfg.seed, 12));
    Rng vae_rng(item_rng(cfg.seed, 13));
    Rng ws_rng(item_rng(cfg.seed, 14));

    PBestStore store(sstar.size(), cfg.pbest_mode);
    std::optional<nn::GenerativeModel> gen;

    const auto initial = evaluate(m, val, cfg.beam_val_between, exec, cfg.threads);
    double best_val = initial.mean_similarity();
    double anchor = best_val;
    TrainResult result{m, best_val, {}, std::nullopt, 0, std::vector<double>(cfg.methods.size(), 0.0)};
    log.add({0, 0, "init", best_val, initial.median_similarity(), best_val, 0.0});
    int outer_stale = 0;
    int rounds = 0;

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        rounds = round;
        update_pbest(m, sstar, store, cfg.beam_inner, exec, round, cfg.threads);
        if (use_ws) {
            if (!gen || cfg.vae_fresh) gen.emplace(m.vocab_ptr(), m.config(), mix_seed(cfg.seed ^ 0x7ae5ULL) + round);
            const PairSet lest = build_pairs(Method::LEST, store, sstar, exec, nullptr, vae_rng, cfg.threads);
            if (!lest.empty()) nn::vae_train(*gen, lest, cfg.vae, vae_rng);
        }
        std::vector<PairSet> sets;
        std::vector<std::size_t> sizes;
        for (Method method : cfg.methods) {
            sets.push_back(build_pairs(method, store, sstar, exec, gen ? &*gen : nullptr, ws_rng, cfg.threads));
            sizes.push_back(sets.back().size());
        }
        if (cfg.on_round) cfg.on_round(RoundView{round, &store, cfg.methods, sets});
        const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        if (total == 0) break;

        const MethodMixer mixer(cfg.mixing, sizes);
        std::vector<BatchStream> streams;
        for (const auto& s : sets) streams.emplace_back(s, static_cast<std::size_t>(cfg.batch_size));
        const std::size_t batches = (total + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                    static_cast<std::size_t>(cfg.batch_size);

        nn::Adam opt(cfg.lr);
        double round_best = evaluate(m, val, cfg.beam_val_inround, exec, cfg.threads).mean_similarity();
        double round_anchor = round_best;
        nn::RecognitionModel round_model = m;
        int stale = 0;
        int epochs = 0;
        for (int epoch = 1; epoch <= cfg.max_round_epochs && stale < cfg.round_patience; ++epoch) {
            for (std::size_t b = 0; b < batches; ++b) {
                const std::size_t which = mixer.draw(mix_rng);
                result.mixing_counts[which] += 1.0;
                const auto batch = streams[which].next(mix_rng);
                check_finite(nn::train_step_mle(m, batch, opt, dropout_rng), "fine-tuning");
            }
            ++epochs;
            const auto rep = evaluate(m, val, cfg.beam_val_inround, exec, cfg.threads);
            const double score = rep.mean_similarity();
            if (score > round_best) {
                round_best = score;
                round_model = m;
            }
            if (score >= round_anchor + cfg.patience_threshold) {
                round_anchor = score;
                stale = 0;
            } else {
                ++stale;
            }
            log.add({round, epoch, "round", score, rep.median_similarity(), best_val, 0.0});
            if (over_time(log, cfg.max_seconds)) break;
        }
        m = std::move(round_model);

        const auto between = evaluate(m, val, cfg.beam_val_between, exec, cfg.threads);
        const double score = between.mean_similarity();
        if (score > best_val) {
            best_val = score;
            result.model = m;
        }
        if (score >= anchor + cfg.patience_threshold) {
            anchor = score;
            outer_stale = 0;
        } else {
            outer_stale += epochs;
        }
        log.add({round, epochs, "between", score, between.median_similarity(), best_val, 0.0});
        save_round(m, cfg.out_dir, round, score);
        if (outer_stale >= cfg.outer_patience || over_time(log, cfg.max_seconds)) break;
    }
    result.best_val = best_val;
    result.trace = log.rows();
    result.store = std::move(store);
    result.rounds = rounds;
    return result;
}

TrainResult fine_tune_rl(nn::RecognitionModel m, std::span<const ShapeGrid> sstar, std::span<const ShapeGrid> val,
                         const TrainConfig& cfg, const Executor& exec) {
    if (sstar.empty()) throw UsageError("fine-tuning needs target shapes");
    if (val.empty()) throw UsageError("fine-tuning needs validation shapes");
    if (cfg.rl_batch < 1 || cfg.rl_update_every < 1 || cfg.rl_max_epochs < 1 || cfg.outer_patience < 1 ||
        cfg.beam_val_inround < 1 || cfg.beam_val_between < 1 || !(cfg.rl_lr >= 0.0)) {
        throw UsageError("invalid RL configuration");
    }
    TraceLog log(cfg.out_dir, cfg.record_wallclock);
    Rng order_rng(item_rng(cfg.seed, 21));
    Rng sample_rng(item_rng(cfg.seed, 22));
    const nn::Sgd opt(cfg.rl_lr);
    nn::RewardBaseline baseline;
    const nn::RewardFn reward = nn::default_reward(exec);

    const auto initial = evaluate(m, val, cfg.beam_val_between, exec, cfg.threads);
    double best_val = initial.mean_similarity();
    TrainResult result{m, best_val, {}, std::nullopt, 0, {}};
    log.add({0, 0, "init", best_val, initial.median_similarity(), best_val, 0.0});
    double best_epoch = evaluate(m, val, cfg.beam_val_inround, exec, cfg.threads).mean_similarity();
    double anchor = best_epoch;
    nn::RecognitionModel best_model = m;

    std::vector<std::size_t> order(sstar.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double scale = 1.0 / static_cast<double>(cfg.rl_update_every);
    int pending = 0;
    int stale = 0;
    m.params().zero_grad();
    for (int epoch = 1; epoch <= cfg.rl_max_epochs && stale < cfg.outer_patience; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.rl_batch)) {
            std::vector<const ShapeGrid*> batch;
            for (std::size_t i = b; i < std::min(order.size(), b + static_cast<std::size_t>(cfg.rl_batch)); ++i) {
                batch.push_back(&sstar[order[i]]);
            }
            nn::reinforce_accumulate(m, batch, sample_rng, baseline, reward, scale);
            if (++pending == cfg.rl_update_every) {
                opt.step(m.params());
                m.params().zero_grad();
                pending = 0;
            }
        }
        for (const auto& p : m.params()) {
            for (double v : p.value) check_finite(v, "RL fine-tuning");
        }
        const auto rep = evaluate(m, val, cfg.beam_val_inround, exec, cfg.threads);
        const double score = rep.mean_similarity();
        if (score > best_epoch) {
            best_epoch = score;
            best_model = m;
        }
        if (score >= anchor + cfg.patience_threshold) {
            anchor = score;
            stale = 0;
        } else {
            ++stale;
        }
        log.add({0, epoch, "rl", score, rep.median_similarity(), std::max(best_val, best_epoch), 0.0});
        if (over_time(log, cfg.max_seconds)) break;
    }
    const auto final_rep = evaluate(best_model, val, cfg.beam_val_between, exec, cfg.threads);
    if (final_rep.mean_similarity() > best_val) {
        best_val = final_rep.mean_similarity();
        result.model = std::move(best_model);
    }
    log.add({0, 0, "final", final_rep.mean_similarity(), final_rep.median_similarity(), best_val, 0.0});
    save_round(result.model, cfg.out_dir, 0, best_val);
    result.best_val = best_val;
    result.trace = log.rows();
    return result;
}

}  // namespace plad
