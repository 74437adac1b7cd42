#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/grid.hpp"
#include "plad/nn/autodiff.hpp"
#include "plad/rng.hpp"

namespace plad::nn {

struct ConvSpec {
    int kernel = 2;
    int stride = 2;
    int channels = 16;
    friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct ModelConfig {
    DslId dsl = DslId::Csg2d;
    int width = 64;
    int layers = 2;
    int heads = 4;
    int ffn = 128;
    int context = 8;  // context vectors produced by the encoder
    int max_len = 40;
    double dropout = 0.2;
    std::vector<ConvSpec> convs{{4, 4, 16}, {2, 2, 32}, {2, 2, 64}};
    int latent = 128;  // generative model only

    /// Desk-scale reference: width 64 for 2D, 128 for the 3D DSLs.
    static ModelConfig defaults(DslId dsl);
    /// Width 8, two layers, small encoder, dropout off. For gradient checks
    /// and memorization tests.
    static ModelConfig tiny(DslId dsl);
    /// Width 32, two heads; the scale of the mini 2D experiment.
    static ModelConfig mini(DslId dsl);
    /// "default", "mini" or "tiny"; throws UsageError.
    static ModelConfig preset(std::string_view name, DslId dsl);

    std::vector<std::pair<std::string, std::string>> to_pairs() const;
    /// Keys not present keep their defaults(dsl) value; unknown keys throw.
    static ModelConfig from_pairs(const std::vector<std::pair<std::string, std::string>>& kv);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Binds parameter blocks into one graph, once each. A const set yields
/// constant nodes (no gradients).
class Binder {
public:
    Binder(Graph& graph, ParamSet& params) : g(graph), mut_(&params), ro_(&params) {}
    Binder(Graph& graph, const ParamSet& params) : g(graph), ro_(&params) {}
    Var operator()(int id);

    Graph& g;

private:
    ParamSet* mut_ = nullptr;
    const ParamSet* ro_;
    std::vector<Var> bound_;
};

/// One-hot occupancy as a (batch * cells) x 1 matrix.
std::vector<double> grid_rows(std::span<const ShapeGrid* const> shapes);

/// Strided convolution stack followed by flattening.
class ShapeEncoder {
public:
    ShapeEncoder() = default;
    ShapeEncoder(ParamSet& ps, const std::string& prefix, const ModelConfig& cfg);
    /// batch x feature_size()
    Var forward(Binder& bind, std::span<const ShapeGrid* const> shapes, double dropout, Rng* rng) const;
    int feature_size() const noexcept { return features_; }

private:
    struct Layer {
        PatchGeometry geom;
        int weight = -1;
        int bias = -1;
    };
    std::vector<Layer> layers_;
    std::array<int, 3> in_{1, 1, 1};
    int features_ = 0;
};

/// Pre-norm transformer decoder. The sequence is [context..., START,
/// tokens...] with learned positions; context positions attend to each other
/// in both directions, token positions causally to everything before them.
class TokenDecoder {
public:
    TokenDecoder() = default;
    TokenDecoder(ParamSet& ps, const std::string& prefix, const ModelConfig& cfg, int vocab_size);

    /// ctx: (batch * context) x width. inputs[b] starts with START. Returns
    /// logits (batch * steps) x vocab for positions context .. context+steps-1.
    Var forward(Binder& bind, Var ctx, std::span<const std::vector<int>> inputs, int steps, double dropout,
                Rng* rng) const;

    int vocab_size() const noexcept { return vocab_; }
    int start_token() const noexcept { return vocab_; }
    int width() const noexcept { return width_; }
    int context() const noexcept { return context_; }
    int positions() const noexcept { return positions_; }

private:
    friend class DecoderRuntime;
    struct Block {
        int ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b, ln2_g, ln2_b, ff1_w, ff1_b, ff2_w, ff2_b;
    };
    int vocab_ = 0;
    int width_ = 0;
    int heads_ = 1;
    int context_ = 0;
    int positions_ = 0;
    int token_embed_ = -1;
    int pos_embed_ = -1;
    std::vector<Block> blocks_;
    int lnf_g_ = -1, lnf_b_ = -1, head1_w_ = -1, head1_b_ = -1, head2_w_ = -1, head2_b_ = -1;
};

/// Next-token scores for a set of growing prefixes.
class StepScorer {
public:
    virtual ~StepScorer() = default;
    virtual int rows() const = 0;
    virtual int vocab_size() const = 0;
    /// rows() x vocab_size() logits for the next token of every prefix.
    virtual std::span<const double> logits() const = 0;
    /// New prefix r is prefix parents[r] extended by tokens[r].
    virtual void advance(std::span<const int> parents, std::span<const int> tokens) = 0;
};

/// Incremental decoder with cached keys and values. Produces the same
/// logits as TokenDecoder::forward on the same prefix.
class DecoderRuntime final : public StepScorer {
public:
    /// ctx holds `rows` blocks of context x width values.
    DecoderRuntime(const TokenDecoder& dec, const ParamSet& ps, std::span<const double> ctx, int rows);

    int rows() const override { return rows_; }
    int vocab_size() const override { return dec_->vocab_size(); }
    std::span<const double> logits() const override { return logits_; }
    void advance(std::span<const int> parents, std::span<const int> tokens) override;

private:
    // Runs `count` positions starting at `pos0` for every row; x is
    // (rows * count) x width and is consumed.
    void run(std::vector<double> x, int pos0, int count);
    void embed_and_run(std::span<const int> tokens);

    const TokenDecoder* dec_;
    const ParamSet* ps_;
    int rows_;
    int length_ = 0;  // positions filled
    std::vector<std::vector<double>> keys_, values_;  // per block: rows x positions x width
    std::vector<double> last_;  // hidden state of the newest position
    std::vector<double> logits_;
};

class RecognitionModel {
public:
    RecognitionModel(std::shared_ptr<const Vocabulary> vocab, ModelConfig cfg, std::uint64_t seed = 0);

    const ModelConfig& config() const noexcept { return cfg_; }
    const Vocabulary& vocab() const noexcept { return *vocab_; }
    std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
    const Grammar& grammar() const noexcept { return grammar_; }
    ParamSet& params() noexcept { return params_; }
    const ParamSet& params() const noexcept { return params_; }
    const TokenDecoder& decoder() const noexcept { return decoder_; }

    /// (batch * context) x width
    Var encode(Binder& bind, std::span<const ShapeGrid* const> shapes, Rng* rng) const;
    /// Context vectors for inference, batch x context x width flattened.
    std::vector<double> context(std::span<const ShapeGrid* const> shapes) const;

private:
    std::shared_ptr<const Vocabulary> vocab_;
    ModelConfig cfg_;
    Grammar grammar_;
    ParamSet params_;
    ShapeEncoder encoder_;
    int ctx_w_ = -1, ctx_b_ = -1;
    TokenDecoder decoder_;
};

/// VAE over programs: shape encoder -> Gaussian latent -> lifted context ->
/// token decoder.
class GenerativeModel {
public:
    GenerativeModel(std::shared_ptr<const Vocabulary> vocab, ModelConfig cfg, std::uint64_t seed = 0);

    const ModelConfig& config() const noexcept { return cfg_; }
    const Vocabulary& vocab() const noexcept { return *vocab_; }
    std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
    const Grammar& grammar() const noexcept { return grammar_; }
    ParamSet& params() noexcept { return params_; }
    const ParamSet& params() const noexcept { return params_; }
    const TokenDecoder& decoder() const noexcept { return decoder_; }
    int latent() const noexcept { return cfg_.latent; }

    struct Posterior {
        Var mean;
        Var log_std;
    };
    Posterior encode(Binder& bind, std::span<const ShapeGrid* const> shapes, Rng* rng) const;
    /// z: batch x latent -> (batch * context) x width
    Var lift(Binder& bind, Var z) const;
    /// Context for inference from raw latent rows.
    std::vector<double> context_from_latent(std::span<const double> z, int batch) const;

private:
    std::shared_ptr<const Vocabulary> vocab_;
    ModelConfig cfg_;
    Grammar grammar_;
    ParamSet params_;
    ShapeEncoder encoder_;
    int post1_w_ = -1, post1_b_ = -1, post2_w_ = -1, post2_b_ = -1;
    int lift1_w_ = -1, lift1_b_ = -1, lift2_w_ = -1, lift2_b_ = -1;
    TokenDecoder decoder_;
};

/// Fills every block with N(0, 1/fan_in) weights; biases and layer-norm
/// shifts zero, layer-norm gains one, embeddings N(0, 0.1^2).
void init_params(ParamSet& ps, std::uint64_t seed);

}  // namespace plad::nn
