#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plad/executor.hpp"
#include "plad/metrics.hpp"
#include "plad/nn/model.hpp"
#include "plad/nn/train.hpp"
#include "plad/pairs.hpp"

namespace plad {

enum class Method : std::uint8_t { ST, LEST, WS };
enum class PBestMode : std::uint8_t { AllTime, PerRound };
enum class Mixing : std::uint8_t { Uniform, Proportional };

std::string_view to_string(Method m);
std::string_view to_string(PBestMode m);
std::string_view to_string(Mixing m);
/// Case-insensitive; throws UsageError.
Method parse_method(std::string_view s);
PBestMode parse_pbest_mode(std::string_view s);
Mixing parse_mixing(std::string_view s);
PairSource source_of(Method m);

/// Ranking of two scored programs: higher similarity, then fewer tokens,
/// then lexicographically smaller tokens.
bool preferred(const Program& a, Similarity sa, const Program& b, Similarity sb);

struct PBestEntry {
    std::optional<Program> program;
    Similarity similarity;
    int round = -1;  // round in which the program was stored
};

/// Best program found so far for every target shape.
class PBestStore {
public:
    PBestStore(std::size_t shapes, PBestMode mode);

    PBestMode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const PBestEntry& operator[](std::size_t i) const { return entries_.at(i); }

    /// PerRound mode forgets every entry; AllTime keeps them.
    void begin_round();
    /// Offers the best candidate of the current round for shape i. AllTime
    /// replaces only on strictly higher similarity; PerRound always replaces.
    /// Returns whether the entry changed.
    bool offer(std::size_t i, const Program& program, Similarity sim, int round);

    std::size_t filled() const;
    /// Over filled entries; 0 when none.
    double mean_similarity() const;

private:
    std::vector<PBestEntry> entries_;
    PBestMode mode_;
};

struct PBestUpdate {
    int improved = 0;   // entries that changed
    int candidates = 0; // programs executed
};

/// Decodes candidates for every shape (beam plus greedy), executes them and
/// offers each shape's best to the store. Starts a new store round first.
PBestUpdate update_pbest(const nn::RecognitionModel& m, std::span<const ShapeGrid> sstar, PBestStore& store,
                         int beam, const Executor& exec, int round, int threads = 0);

/// Training pairs for one method. Empty store entries are skipped. WS draws
/// |S*| programs from `gen` with `rng`; throws MissingGenerativeModel if
/// gen is null.
PairSet build_pairs(Method method, const PBestStore& store, std::span<const ShapeGrid> sstar, const Executor& exec,
                    const nn::GenerativeModel* gen, Rng& rng, int threads = 0);

// --- evaluation --------------------------------------------------------------

struct EvalRow {
    std::size_t shape_id = 0;
    Similarity best;
    Program program;
    int beam = 0;
};

struct EvalReport {
    DslId dsl = DslId::Csg2d;
    std::vector<EvalRow> rows;

    double mean_similarity() const;
    double median_similarity() const;
    /// Chamfer distance for 2D (positive, lower is better), IoU for 3D.
    double mean_metric() const;
    double median_metric() const;
};

/// Best-of-beam similarity per shape (beam plus greedy candidates).
/// Candidates that fail to execute are ignored; a shape with no valid
/// candidate scores the worst possible similarity.
EvalReport evaluate(const nn::RecognitionModel& m, std::span<const ShapeGrid> test, int beam, const Executor& exec,
                    int threads = 0);

/// shape_id,best_similarity,best_program,beam
void write_report(const std::filesystem::path& path, const EvalReport& report, const Vocabulary& vocab);

// --- training loops ----------------------------------------------------------

struct TraceRow {
    int round = 0;
    int epoch = 0;
    std::string phase;
    double mean_sim = 0.0;
    double median_sim = 0.0;
    double best_val_sim = 0.0;
    double wallclock_s = 0.0;
};

/// Collects trace rows and mirrors them to `<dir>/trace.csv` when a
/// directory is given.
class TraceLog {
public:
    TraceLog() = default;
    explicit TraceLog(const std::filesystem::path& dir, bool record_wallclock = true);

    void add(TraceRow row);
    double elapsed() const;
    const std::vector<TraceRow>& rows() const noexcept { return rows_; }

private:
    std::vector<TraceRow> rows_;
    std::ofstream out_;
    bool clock_ = true;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// First wall-clock time at which a row of `phase` reached `median_sim >=
/// target`; nullopt if never.
std::optional<double> time_to_reach(std::span<const TraceRow> rows, std::string_view phase, double target);

struct PretrainConfig {
    int batch_size = 100;
    double lr = 1e-3;
    int max_epochs = 100;
    int patience = 10;
    double threshold = 0.005;
    int beam_val = 3;
    std::uint64_t seed = 0;
    int threads = 0;
    std::filesystem::path out_dir;
    bool record_wallclock = true;
};

/// State visible to observers after the pair sets of a round are built.
struct RoundView {
    int round = 0;
    const PBestStore* store = nullptr;
    std::span<const Method> methods;
    std::span<const PairSet> pairs;  // parallel to methods
};

struct TrainConfig {
    std::vector<Method> methods{Method::LEST, Method::ST};
    PBestMode pbest_mode = PBestMode::AllTime;
    Mixing mixing = Mixing::Uniform;
    int beam_inner = 10;
    int beam_val_inround = 3;
    int beam_val_between = 5;
    int beam_final = 10;
    int batch_size = 100;
    double lr = 1e-3;
    int round_patience = 10;
    int max_round_epochs = 100;
    int outer_patience = 1000;   // epochs without between-round improvement
    double patience_threshold = 0.005;
    int max_rounds = 50;
    int rl_batch = 16;
    int rl_update_every = 10;
    double rl_lr = 0.01;
    int rl_max_epochs = 1000;
    nn::VaeConfig vae;
    bool vae_fresh = false;  // re-initialize the VAE every round
    double max_seconds = 0.0;  // wall-clock cap, 0 disables
    std::uint64_t seed = 0;
    int threads = 0;
    std::filesystem::path out_dir;  // trace.csv and ckpt/ when set
    bool record_wallclock = true;
    std::function<void(const RoundView&)> on_round;

    /// 2D: outer patience 1000, threshold 0.005 CD. 3D: 100, 0.001 IoU,
    /// learning rate 5e-4.
    static TrainConfig defaults(DslId dsl);
    /// Throws UsageError on an empty method list, duplicates or beams < 1.
    void check() const;
};

struct TrainResult {
    nn::RecognitionModel model;  // best validation checkpoint
    double best_val = 0.0;       // mean similarity at beam_val_between
    std::vector<TraceRow> trace;
    std::optional<PBestStore> store;
    int rounds = 0;
    std::vector<double> mixing_counts;  // batches drawn per method
};

/// Supervised training on synthetic pairs with early stopping on validation
/// reconstruction (mean best-of-beam similarity).
TrainResult pretrain(nn::RecognitionModel m, const PairSet& synth, std::span<const ShapeGrid> val,
                     const PretrainConfig& cfg, const Executor& exec);

/// PLAD outer loop: P_BEST update, optional VAE training, one PairSet per
/// method, mixed-batch MLE epochs with per-round and outer early stopping.
TrainResult fine_tune(nn::RecognitionModel m, std::span<const ShapeGrid> sstar, std::span<const ShapeGrid> val,
                      const TrainConfig& cfg, const Executor& exec);

/// REINFORCE over S* minibatches; the gradients of rl_update_every batches
/// are averaged into one SGD update. Early stopping uses outer_patience
/// epochs on the per-epoch validation score.
TrainResult fine_tune_rl(nn::RecognitionModel m, std::span<const ShapeGrid> sstar, std::span<const ShapeGrid> val,
                         const TrainConfig& cfg, const Executor& exec);

/// Draws method indices for mixed batches: uniform over methods, or
/// proportional to the given sizes.
class MethodMixer {
public:
    MethodMixer(Mixing mode, std::vector<std::size_t> sizes);
    std::size_t draw(Rng& rng) const;

private:
    Mixing mode_;
    std::vector<std::size_t> sizes_;
};

}  // namespace plad
