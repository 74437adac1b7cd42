#pragma once

#include <functional>
#include <span>
#include <vector>

#include "plad/executor.hpp"
#include "plad/nn/decode.hpp"
#include "plad/nn/model.hpp"
#include "plad/nn/optim.hpp"
#include "plad/pairs.hpp"

namespace plad::nn {

using Batch = std::span<const Pair* const>;

/// Teacher-forcing layout of a batch: decoder inputs (START-prefixed),
/// flattened targets and per-row weights (zero on padding).
struct TeacherForcing {
    std::vector<std::vector<int>> inputs;
    std::vector<int> targets;
    std::vector<double> weights;
    int steps = 0;
};

/// Row weights make the loss the batch mean of each program's mean per-token
/// NLL. Throws LengthExceeded if a program is longer than max_len.
TeacherForcing teacher_forcing(std::span<const std::vector<int>* const> programs, int max_len, int start_token);

/// Mean per-token NLL; gradients are added to m.params().grad. Pass an rng
/// to enable dropout.
double nll_loss(RecognitionModel& m, Batch batch, Rng* dropout_rng = nullptr);
/// Same loss without gradients or dropout.
double eval_nll(const RecognitionModel& m, Batch batch);
/// zero_grad, nll_loss with dropout, one Adam update. Returns the loss.
double train_step_mle(RecognitionModel& m, Batch batch, Adam& opt, Rng& dropout_rng);

/// Exponential moving average of batch mean rewards. The first batch
/// initializes it.
struct RewardBaseline {
    double value = 0.0;
    bool ready = false;
    double decay = 0.99;
    void update(double batch_mean);
};

using RewardFn = std::function<double(const ShapeGrid& target, const Program& program)>;
/// Similarity-based reward: 2D max(0, 1 - CD/16), 3D IoU. Invalid programs
/// score 0.
RewardFn default_reward(const Executor& exec);

struct RolloutStats {
    double mean_reward = 0.0;
    double baseline = 0.0;  // value used for the advantages
};

/// Samples one program per shape, scores it and adds the gradient of
/// -mean((r - b) log p(z|x)) times `scale` to m.params().grad. The baseline
/// is updated afterwards.
RolloutStats reinforce_accumulate(RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng,
                                  RewardBaseline& baseline, const RewardFn& reward, double scale = 1.0);
/// zero_grad, reinforce_accumulate, one SGD update.
RolloutStats reinforce_step(RecognitionModel& m, std::span<const ShapeGrid* const> shapes, Rng& rng, const Sgd& opt,
                            RewardBaseline& baseline, const RewardFn& reward);

struct VaeLoss {
    double reconstruction = 0.0;  // batch mean of summed token cross-entropy
    double kl = 0.0;              // batch mean KL to N(0, I)
    double total() const { return reconstruction + kl; }
};

/// One forward pass with the reparameterization trick; gradients are added
/// when `accumulate` is set.
VaeLoss vae_loss(GenerativeModel& g, Batch batch, Rng& rng, bool accumulate);

struct VaeConfig {
    double lr = 1e-3;
    int max_epochs = 100;
    int patience = 10;
    int batch_size = 100;
    double min_delta = 1e-4;  // relative improvement that resets patience
};

/// Trains on CE + KL with early stopping on the epoch loss; the best epoch's
/// weights are restored. Returns the loss of every epoch (entry 0 is the
/// loss before training).
std::vector<double> vae_train(GenerativeModel& g, const PairSet& pairs, const VaeConfig& cfg, Rng& rng);
/// z ~ N(0, I), decoded with the grammar mask.
std::vector<Program> vae_sample(const GenerativeModel& g, int n, Rng& rng);

}  // namespace plad::nn
