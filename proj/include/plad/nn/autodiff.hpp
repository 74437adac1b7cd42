#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plad/rng.hpp"

namespace plad::nn {

/// Dense row-major parameter block and its gradient accumulator.
struct Param {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;

    std::size_t size() const noexcept { return value.size(); }
};

/// Ordered collection of named blocks. Blocks are addressed by index so a
/// copied set stays self-consistent.
class ParamSet {
public:
    int add(std::string name, int rows, int cols);
    Param& operator[](int id) { return params_[static_cast<std::size_t>(id)]; }
    const Param& operator[](int id) const { return params_[static_cast<std::size_t>(id)]; }
    /// -1 when absent.
    int find(std::string_view name) const;

    std::size_t blocks() const noexcept { return params_.size(); }
    std::size_t scalar_count() const;
    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    /// Values of every block, in order.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);

private:
    std::vector<Param> params_;
};

struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
};

/// Input layout for conv_patches: `batch` images stored as rows of a
/// (batch * cells) x channels matrix, x varying fastest. Patches do not pad.
struct PatchGeometry {
    int rank = 2;
    std::array<int, 3> in{1, 1, 1};
    int channels = 1;
    int kernel = 1;
    int stride = 1;

    std::array<int, 3> out() const;
    int in_cells() const { return in[0] * in[1] * in[2]; }
    int out_cells() const;
    int patch_size() const;
};

/// Reverse-mode tape. Values are computed eagerly; backward() replays the
/// recorded closures in reverse. A graph built with training=false records
/// nothing and disables dropout.
class Graph {
public:
    explicit Graph(bool training = false) : training_(training) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool training() const noexcept { return training_; }

    Var input(int rows, int cols, std::vector<double> data);
    /// Binds a parameter block; gradients flow into p.grad on backward().
    Var param(Param& p);
    Var param(const Param& p);

    Var matmul(Var a, Var b);
    /// x w + b (bias is a 1 x n row; pass an invalid Var to omit it)
    Var linear(Var x, Var w, Var bias);
    Var add(Var a, Var b);
    Var scale(Var a, double s);
    Var gelu(Var x);
    Var layer_norm(Var x, Var gamma, Var beta);
    Var dropout(Var x, double p, Rng& rng);
    Var reshape(Var x, int rows, int cols);
    Var slice_cols(Var x, int begin, int count);
    /// Output row r is row rows[r].second of sources[rows[r].first].
    Var gather_rows(std::vector<Var> sources, std::vector<std::pair<int, int>> rows);
    /// im2col: (batch * in_cells) x channels -> (batch * out_cells) x patch_size
    Var conv_patches(Var x, const PatchGeometry& geom, int batch);
    /// Multi-head self attention over `batch` sequences of length `seq`.
    /// qkv rows are [q | k | v], each `width` wide. Query i sees key j iff
    /// j <= i or j < prefix.
    Var attention(Var qkv, int batch, int seq, int heads, int prefix);
    /// sum_i weights[i] * -log softmax(logits_i)[targets[i]]. With a mask
    /// (rows x cols bytes) the softmax runs over the set entries only.
    Var nll(Var logits, std::span<const int> targets, std::span<const double> weights,
            std::span<const unsigned char> mask = {});
    /// mean over rows of KL(N(mean, exp(log_std)^2) || N(0, 1))
    Var gaussian_kl(Var mean, Var log_std);
    /// mean + exp(log_std) * noise
    Var reparameterize(Var mean, Var log_std, std::span<const double> noise);

    const std::vector<double>& value(Var v) const { return nodes_[idx(v)].value; }
    const std::vector<double>& grad(Var v) const { return nodes_[idx(v)].grad; }
    int rows(Var v) const { return nodes_[idx(v)].rows; }
    int cols(Var v) const { return nodes_[idx(v)].cols; }
    double scalar(Var v) const { return nodes_[idx(v)].value.at(0); }

    /// Seeds d(loss) = 1 on a 1 x 1 node and accumulates parameter gradients.
    void backward(Var loss);

private:
    struct Node {
        int rows = 0;
        int cols = 0;
        std::vector<double> value;
        std::vector<double> grad;
        bool needs_grad = false;
        Param* param = nullptr;
        std::function<void(Graph&)> back;
    };

    static std::size_t idx(Var v) { return static_cast<std::size_t>(v.id); }
    Node& node(Var v) { return nodes_[idx(v)]; }
    Var push(int rows, int cols, std::vector<double> value, bool needs_grad);
    bool needs(Var v) const { return nodes_[idx(v)].needs_grad; }
    bool record(std::initializer_list<Var> inputs) const;
    std::vector<double>& g(Var v) { return nodes_[idx(v)].grad; }

    bool training_;
    std::vector<Node> nodes_;
};

}  // namespace plad::nn
