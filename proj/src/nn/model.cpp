#include "plad/nn/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "plad/errors.hpp"
#include "plad/nn/kernels.hpp"

namespace plad::nn {

namespace {

int parse_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) throw UsageError("bad integer for " + key + ": " + v);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("bad number for " + key + ": " + v);
    }
}

std::string format_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::array<int, 3> grid_dims(DslId dsl) {
    return grid_rank(dsl) == 2 ? std::array<int, 3>{kGrid2d, kGrid2d, 1} : std::array<int, 3>{kGrid3d, kGrid3d, kGrid3d};
}

void check_config(const ModelConfig& c) {
    if (c.width < 1 || c.layers < 0 || c.heads < 1 || c.width % c.heads != 0 || c.ffn < 1 || c.context < 1 ||
        c.max_len < 2 || c.latent < 1 || c.dropout < 0.0 || c.dropout >= 1.0) {
        throw UsageError("invalid model configuration");
    }
}

}  // namespace

ModelConfig ModelConfig::defaults(DslId dsl) {
    ModelConfig c;
    c.dsl = dsl;
    c.max_len = Grammar::default_max_len(dsl);
    if (grid_rank(dsl) == 3) {
        c.width = 128;
        c.ffn = 256;
        c.dropout = 0.1;
    }
    return c;
}

ModelConfig ModelConfig::tiny(DslId dsl) {
    ModelConfig c = defaults(dsl);
    c.width = 8;
    c.layers = 2;
    c.heads = 2;
    c.ffn = 16;
    c.dropout = 0.0;
    c.convs = {{4, 4, 2}, {4, 4, 4}};
    return c;
}

ModelConfig ModelConfig::mini(DslId dsl) {
    ModelConfig c = defaults(dsl);
    c.width = 32;
    c.heads = 2;
    c.ffn = 64;
    c.dropout = 0.1;
    return c;
}

ModelConfig ModelConfig::preset(std::string_view name, DslId dsl) {
    if (name == "default") return defaults(dsl);
    if (name == "mini") return mini(dsl);
    if (name == "tiny") return tiny(dsl);
    throw UsageError("unknown model preset '" + std::string(name) + "' (expected default, mini or tiny)");
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_pairs() const {
    std::string convs_text;
    for (const auto& cv : convs) {
        if (!convs_text.empty()) convs_text += ',';
        convs_text += "k" + std::to_string(cv.kernel) + "s" + std::to_string(cv.stride) + "c" + std::to_string(cv.channels);
    }
    return {{"dsl", std::string(to_string(dsl))},
            {"width", std::to_string(width)},
            {"layers", std::to_string(layers)},
            {"heads", std::to_string(heads)},
            {"ffn", std::to_string(ffn)},
            {"context", std::to_string(context)},
            {"max_len", std::to_string(max_len)},
            {"dropout", format_double(dropout)},
            {"convs", convs_text},
            {"latent", std::to_string(latent)}};
}

ModelConfig ModelConfig::from_pairs(const std::vector<std::pair<std::string, std::string>>& kv) {
    DslId dsl = DslId::Csg2d;
    for (const auto& [k, v] : kv) {
        if (k == "dsl") dsl = parse_dsl(v);
    }
    ModelConfig c = defaults(dsl);
    for (const auto& [k, v] : kv) {
        if (k == "dsl") continue;
        if (k == "width") c.width = parse_int(k, v);
        else if (k == "layers") c.layers = parse_int(k, v);
        else if (k == "heads") c.heads = parse_int(k, v);
        else if (k == "ffn") c.ffn = parse_int(k, v);
        else if (k == "context") c.context = parse_int(k, v);
        else if (k == "max_len") c.max_len = parse_int(k, v);
        else if (k == "dropout") c.dropout = parse_double(k, v);
        else if (k == "latent") c.latent = parse_int(k, v);
        else if (k == "convs") {
            c.convs.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                ConvSpec cv;
                if (std::sscanf(item.c_str(), "k%ds%dc%d", &cv.kernel, &cv.stride, &cv.channels) != 3 || cv.kernel < 1 ||
                    cv.stride < 1 || cv.channels < 1) {
                    throw UsageError("bad conv spec: " + item);
                }
                c.convs.push_back(cv);
            }
        } else {
            throw UsageError("unknown model key: " + k);
        }
    }
    check_config(c);
    return c;
}

Var Binder::operator()(int id) {
    if (bound_.size() <= static_cast<std::size_t>(id)) bound_.resize(static_cast<std::size_t>(id) + 1);
    Var& v = bound_[static_cast<std::size_t>(id)];
    if (!v.valid()) v = (mut_ && g.training()) ? g.param((*mut_)[id]) : g.param((*ro_)[id]);
    return v;
}

std::vector<double> grid_rows(std::span<const ShapeGrid* const> shapes) {
    if (shapes.empty()) return {};
    const std::size_t cells = shapes.front()->cell_count();
    std::vector<double> out(cells * shapes.size(), 0.0);
    for (std::size_t b = 0; b < shapes.size(); ++b) {
        if (shapes[b]->cell_count() != cells) throw DimMismatch("shapes of different sizes in one batch");
        for (std::size_t i = 0; i < cells; ++i) {
            if (shapes[b]->test(i)) out[b * cells + i] = 1.0;
        }
    }
    return out;
}

ShapeEncoder::ShapeEncoder(ParamSet& ps, const std::string& prefix, const ModelConfig& cfg) {
    in_ = grid_dims(cfg.dsl);
    const int rank = grid_rank(cfg.dsl);
    std::array<int, 3> dims = in_;
    int channels = 1;
    for (std::size_t i = 0; i < cfg.convs.size(); ++i) {
        const auto& cv = cfg.convs[i];
        Layer l;
        l.geom.rank = rank;
        l.geom.in = dims;
        l.geom.channels = channels;
        l.geom.kernel = cv.kernel;
        l.geom.stride = cv.stride;
        for (int a = 0; a < rank; ++a) {
            if (dims[a] < cv.kernel) throw UsageError("conv stack shrinks the grid below the kernel size");
        }
        const std::string name = prefix + "conv" + std::to_string(i);
        l.weight = ps.add(name + ".w", l.geom.patch_size(), cv.channels);
        l.bias = ps.add(name + ".b", 1, cv.channels);
        dims = l.geom.out();
        channels = cv.channels;
        layers_.push_back(l);
    }
    features_ = dims[0] * dims[1] * dims[2] * channels;
}

Var ShapeEncoder::forward(Binder& bind, std::span<const ShapeGrid* const> shapes, double dropout, Rng* rng) const {
    Graph& g = bind.g;
    const int batch = static_cast<int>(shapes.size());
    for (const ShapeGrid* s : shapes) {
        if (s->dims() != in_) throw DimMismatch("shape grid does not match the encoder input");
    }
    Var x = g.input(batch * in_[0] * in_[1] * in_[2], 1, grid_rows(shapes));
    for (const auto& l : layers_) {
        Var p = g.conv_patches(x, l.geom, batch);
        x = g.gelu(g.linear(p, bind(l.weight), bind(l.bias)));
    }
    x = g.reshape(x, batch, features_);
    if (rng) x = g.dropout(x, dropout, *rng);
    return x;
}

TokenDecoder::TokenDecoder(ParamSet& ps, const std::string& prefix, const ModelConfig& cfg, int vocab_size)
    : vocab_(vocab_size), width_(cfg.width), heads_(cfg.heads), context_(cfg.context),
      positions_(cfg.context + cfg.max_len) {
    const int w = width_;
    token_embed_ = ps.add(prefix + "token.embed", vocab_ + 1, w);
    pos_embed_ = ps.add(prefix + "position.embed", positions_, w);
    for (int i = 0; i < cfg.layers; ++i) {
        const std::string p = prefix + "block" + std::to_string(i) + ".";
        Block b{};
        b.ln1_g = ps.add(p + "ln1.g", 1, w);
        b.ln1_b = ps.add(p + "ln1.b", 1, w);
        b.qkv_w = ps.add(p + "qkv.w", w, 3 * w);
        b.qkv_b = ps.add(p + "qkv.b", 1, 3 * w);
        b.out_w = ps.add(p + "attn_out.w", w, w);
        b.out_b = ps.add(p + "attn_out.b", 1, w);
        b.ln2_g = ps.add(p + "ln2.g", 1, w);
        b.ln2_b = ps.add(p + "ln2.b", 1, w);
        b.ff1_w = ps.add(p + "ff1.w", w, cfg.ffn);
        b.ff1_b = ps.add(p + "ff1.b", 1, cfg.ffn);
        b.ff2_w = ps.add(p + "ff2.w", cfg.ffn, w);
        b.ff2_b = ps.add(p + "ff2.b", 1, w);
        blocks_.push_back(b);
    }
    lnf_g_ = ps.add(prefix + "final_ln.g", 1, w);
    lnf_b_ = ps.add(prefix + "final_ln.b", 1, w);
    head1_w_ = ps.add(prefix + "head1.w", w, w);
    head1_b_ = ps.add(prefix + "head1.b", 1, w);
    head2_w_ = ps.add(prefix + "head2.w", w, vocab_);
    head2_b_ = ps.add(prefix + "head2.b", 1, vocab_);
}

Var TokenDecoder::forward(Binder& bind, Var ctx, std::span<const std::vector<int>> inputs, int steps, double dropout,
                          Rng* rng) const {
    Graph& g = bind.g;
    const int batch = static_cast<int>(inputs.size());
    const int seq = context_ + steps;
    if (seq > positions_) throw LengthExceeded("decoder sequence longer than the position table");
    if (g.rows(ctx) != batch * context_ || g.cols(ctx) != width_) throw DimMismatch("decoder context shape");
    std::vector<std::pair<int, int>> rows, pos;
    rows.reserve(static_cast<std::size_t>(batch) * seq);
    pos.reserve(rows.capacity());
    for (int b = 0; b < batch; ++b) {
        const auto& in = inputs[static_cast<std::size_t>(b)];
        for (int i = 0; i < context_; ++i) rows.emplace_back(0, b * context_ + i);
        for (int t = 0; t < steps; ++t) {
            const int tok = t < static_cast<int>(in.size()) ? in[static_cast<std::size_t>(t)] : start_token();
            if (tok < 0 || tok > vocab_) throw DimMismatch("decoder input token out of range");
            rows.emplace_back(1, tok);
        }
        for (int i = 0; i < seq; ++i) pos.emplace_back(0, i);
    }
    Var x = g.add(g.gather_rows({ctx, bind(token_embed_)}, std::move(rows)), g.gather_rows({bind(pos_embed_)}, std::move(pos)));
    const bool drop = rng != nullptr && dropout > 0.0;
    if (drop) x = g.dropout(x, dropout, *rng);
    for (const auto& b : blocks_) {
        Var a = g.layer_norm(x, bind(b.ln1_g), bind(b.ln1_b));
        Var att = g.attention(g.linear(a, bind(b.qkv_w), bind(b.qkv_b)), batch, seq, heads_, context_);
        Var o = g.linear(att, bind(b.out_w), bind(b.out_b));
        if (drop) o = g.dropout(o, dropout, *rng);
        x = g.add(x, o);
        Var a2 = g.layer_norm(x, bind(b.ln2_g), bind(b.ln2_b));
        Var f = g.linear(g.gelu(g.linear(a2, bind(b.ff1_w), bind(b.ff1_b))), bind(b.ff2_w), bind(b.ff2_b));
        if (drop) f = g.dropout(f, dropout, *rng);
        x = g.add(x, f);
    }
    std::vector<std::pair<int, int>> out_rows;
    out_rows.reserve(static_cast<std::size_t>(batch) * steps);
    for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < steps; ++t) out_rows.emplace_back(0, b * seq + context_ + t);
    }
    Var h = g.layer_norm(g.gather_rows({x}, std::move(out_rows)), bind(lnf_g_), bind(lnf_b_));
    h = g.gelu(g.linear(h, bind(head1_w_), bind(head1_b_)));
    if (drop) h = g.dropout(h, dropout, *rng);
    return g.linear(h, bind(head2_w_), bind(head2_b_));
}

namespace {

// y = x W + b for n rows.
std::vector<double> affine(const std::vector<double>& x, int n, const Param& w, const Param& b) {
    std::vector<double> y(static_cast<std::size_t>(n) * w.cols);
    for (int i = 0; i < n; ++i) std::copy(b.value.begin(), b.value.end(), y.begin() + static_cast<std::ptrdiff_t>(i) * w.cols);
    gemm_nn(n, w.rows, w.cols, x.data(), w.value.data(), y.data());
    return y;
}

std::vector<double> norm(const std::vector<double>& x, int n, const Param& gamma, const Param& beta) {
    std::vector<double> y(x.size());
    layer_norm_rows(n, gamma.cols, x.data(), gamma.value.data(), beta.value.data(), y.data(), nullptr, nullptr);
    return y;
}

}  // namespace

DecoderRuntime::DecoderRuntime(const TokenDecoder& dec, const ParamSet& ps, std::span<const double> ctx, int rows)
    : dec_(&dec), ps_(&ps), rows_(rows) {
    const int w = dec.width_, c = dec.context_;
    if (ctx.size() != static_cast<std::size_t>(rows) * c * w) throw DimMismatch("runtime context size");
    const std::size_t cache = static_cast<std::size_t>(rows) * dec.positions_ * w;
    keys_.assign(dec.blocks_.size(), std::vector<double>(cache, 0.0));
    values_ = keys_;
    std::vector<double> x(ctx.begin(), ctx.end());
    const auto& pos = ps[dec.pos_embed_].value;
    for (int r = 0; r < rows; ++r) {
        for (int i = 0; i < c; ++i) {
            for (int j = 0; j < w; ++j) x[(static_cast<std::size_t>(r) * c + i) * w + j] += pos[static_cast<std::size_t>(i) * w + j];
        }
    }
    run(std::move(x), 0, c);
    embed_and_run(std::vector<int>(static_cast<std::size_t>(rows), dec.start_token()));
}

void DecoderRuntime::advance(std::span<const int> parents, std::span<const int> tokens) {
    if (parents.size() != tokens.size()) throw DimMismatch("advance: parents/tokens length");
    const int n = static_cast<int>(parents.size());
    const std::size_t w = static_cast<std::size_t>(dec_->width_);
    const std::size_t stride = static_cast<std::size_t>(dec_->positions_) * w;
    const std::size_t used = static_cast<std::size_t>(length_) * w;
    for (std::size_t l = 0; l < keys_.size(); ++l) {
        std::vector<double> k(static_cast<std::size_t>(n) * stride, 0.0), v(k.size(), 0.0);
        for (int r = 0; r < n; ++r) {
            const int p = parents[static_cast<std::size_t>(r)];
            if (p < 0 || p >= rows_) throw DimMismatch("advance: parent out of range");
            std::copy_n(keys_[l].begin() + static_cast<std::ptrdiff_t>(p * stride), used, k.begin() + static_cast<std::ptrdiff_t>(r * stride));
            std::copy_n(values_[l].begin() + static_cast<std::ptrdiff_t>(p * stride), used, v.begin() + static_cast<std::ptrdiff_t>(r * stride));
        }
        keys_[l] = std::move(k);
        values_[l] = std::move(v);
    }
    rows_ = n;
    if (n == 0) {
        logits_.clear();
        return;
    }
    embed_and_run(tokens);
}

void DecoderRuntime::embed_and_run(std::span<const int> tokens) {
    const int w = dec_->width_;
    if (length_ >= dec_->positions_) throw LengthExceeded("decoder ran past its position table");
    const auto& emb = (*ps_)[dec_->token_embed_].value;
    const auto& pos = (*ps_)[dec_->pos_embed_].value;
    std::vector<double> x(static_cast<std::size_t>(rows_) * w);
    for (int r = 0; r < rows_; ++r) {
        const int t = tokens[static_cast<std::size_t>(r)];
        if (t < 0 || t > dec_->vocab_) throw DimMismatch("advance: token out of range");
        for (int j = 0; j < w; ++j) {
            x[static_cast<std::size_t>(r) * w + j] = emb[static_cast<std::size_t>(t) * w + j] + pos[static_cast<std::size_t>(length_) * w + j];
        }
    }
    run(std::move(x), length_, 1);
    const ParamSet& ps = *ps_;
    std::vector<double> h = norm(last_, rows_, ps[dec_->lnf_g_], ps[dec_->lnf_b_]);
    h = affine(h, rows_, ps[dec_->head1_w_], ps[dec_->head1_b_]);
    for (double& v : h) v = gelu(v);
    logits_ = affine(h, rows_, ps[dec_->head2_w_], ps[dec_->head2_b_]);
}

void DecoderRuntime::run(std::vector<double> x, int pos0, int count) {
    const ParamSet& ps = *ps_;
    const int w = dec_->width_, heads = dec_->heads_, dh = w / heads, n = rows_ * count;
    const std::size_t stride = static_cast<std::size_t>(dec_->positions_) * w;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> scores(static_cast<std::size_t>(pos0 + count));
    for (std::size_t l = 0; l < dec_->blocks_.size(); ++l) {
        const auto& b = dec_->blocks_[l];
        std::vector<double> qkv = affine(norm(x, n, ps[b.ln1_g], ps[b.ln1_b]), n, ps[b.qkv_w], ps[b.qkv_b]);
        auto& kc = keys_[l];
        auto& vc = values_[l];
        for (int r = 0; r < rows_; ++r) {
            for (int c = 0; c < count; ++c) {
                const double* src = qkv.data() + static_cast<std::ptrdiff_t>(r * count + c) * 3 * w;
                const std::size_t dst = r * stride + static_cast<std::size_t>(pos0 + c) * w;
                std::copy_n(src + w, w, kc.begin() + static_cast<std::ptrdiff_t>(dst));
                std::copy_n(src + 2 * w, w, vc.begin() + static_cast<std::ptrdiff_t>(dst));
            }
        }
        std::vector<double> att(static_cast<std::size_t>(n) * w, 0.0);
        for (int r = 0; r < rows_; ++r) {
            for (int c = 0; c < count; ++c) {
                const int p = pos0 + c;
                const int nk = std::min(std::max(p + 1, dec_->context_), pos0 + count);
                const double* q = qkv.data() + static_cast<std::ptrdiff_t>(r * count + c) * 3 * w;
                double* orow = att.data() + static_cast<std::ptrdiff_t>(r * count + c) * w;
                for (int h = 0; h < heads; ++h) {
                    double hi = -std::numeric_limits<double>::infinity();
                    for (int j = 0; j < nk; ++j) {
                        const double* k = kc.data() + r * stride + static_cast<std::size_t>(j) * w + h * dh;
                        double s = 0.0;
                        for (int d = 0; d < dh; ++d) s += q[h * dh + d] * k[d];
                        scores[j] = s * scale;
                        hi = std::max(hi, scores[j]);
                    }
                    double z = 0.0;
                    for (int j = 0; j < nk; ++j) {
                        scores[j] = std::exp(scores[j] - hi);
                        z += scores[j];
                    }
                    for (int j = 0; j < nk; ++j) {
                        const double pj = scores[j] / z;
                        const double* v = vc.data() + r * stride + static_cast<std::size_t>(j) * w + h * dh;
                        for (int d = 0; d < dh; ++d) orow[h * dh + d] += pj * v[d];
                    }
                }
            }
        }
        std::vector<double> o = affine(att, n, ps[b.out_w], ps[b.out_b]);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];
        std::vector<double> f = affine(norm(x, n, ps[b.ln2_g], ps[b.ln2_b]), n, ps[b.ff1_w], ps[b.ff1_b]);
        for (double& v : f) v = gelu(v);
        f = affine(f, n, ps[b.ff2_w], ps[b.ff2_b]);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += f[i];
    }
    length_ = pos0 + count;
    last_ = std::move(x);
}

RecognitionModel::RecognitionModel(std::shared_ptr<const Vocabulary> vocab, ModelConfig cfg, std::uint64_t seed)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)), grammar_(vocab_, cfg_.max_len) {
    check_config(cfg_);
    if (vocab_->dsl() != cfg_.dsl) throw UsageError("vocabulary and model configuration disagree on the DSL");
    encoder_ = ShapeEncoder(params_, "encoder.", cfg_);
    ctx_w_ = params_.add("context.w", encoder_.feature_size(), cfg_.context * cfg_.width);
    ctx_b_ = params_.add("context.b", 1, cfg_.context * cfg_.width);
    decoder_ = TokenDecoder(params_, "decoder.", cfg_, vocab_->size());
    init_params(params_, seed);
}

Var RecognitionModel::encode(Binder& bind, std::span<const ShapeGrid* const> shapes, Rng* rng) const {
    Graph& g = bind.g;
    Var f = encoder_.forward(bind, shapes, cfg_.dropout, rng);
    Var c = g.linear(f, bind(ctx_w_), bind(ctx_b_));
    return g.reshape(c, static_cast<int>(shapes.size()) * cfg_.context, cfg_.width);
}

std::vector<double> RecognitionModel::context(std::span<const ShapeGrid* const> shapes) const {
    Graph g(false);
    Binder bind(g, params_);
    return g.value(encode(bind, shapes, nullptr));
}

GenerativeModel::GenerativeModel(std::shared_ptr<const Vocabulary> vocab, ModelConfig cfg, std::uint64_t seed)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)), grammar_(vocab_, cfg_.max_len) {
    check_config(cfg_);
    if (vocab_->dsl() != cfg_.dsl) throw UsageError("vocabulary and model configuration disagree on the DSL");
    encoder_ = ShapeEncoder(params_, "encoder.", cfg_);
    const int w = cfg_.width;
    post1_w_ = params_.add("posterior1.w", encoder_.feature_size(), w);
    post1_b_ = params_.add("posterior1.b", 1, w);
    post2_w_ = params_.add("posterior2.w", w, 2 * cfg_.latent);
    post2_b_ = params_.add("posterior2.b", 1, 2 * cfg_.latent);
    lift1_w_ = params_.add("lift1.w", cfg_.latent, w);
    lift1_b_ = params_.add("lift1.b", 1, w);
    lift2_w_ = params_.add("lift2.w", w, cfg_.context * w);
    lift2_b_ = params_.add("lift2.b", 1, cfg_.context * w);
    decoder_ = TokenDecoder(params_, "decoder.", cfg_, vocab_->size());
    init_params(params_, seed);
}

GenerativeModel::Posterior GenerativeModel::encode(Binder& bind, std::span<const ShapeGrid* const> shapes,
                                                   Rng* rng) const {
    Graph& g = bind.g;
    Var f = encoder_.forward(bind, shapes, cfg_.dropout, rng);
    Var h = g.gelu(g.linear(f, bind(post1_w_), bind(post1_b_)));
    Var p = g.linear(h, bind(post2_w_), bind(post2_b_));
    return {g.slice_cols(p, 0, cfg_.latent), g.slice_cols(p, cfg_.latent, cfg_.latent)};
}

Var GenerativeModel::lift(Binder& bind, Var z) const {
    Graph& g = bind.g;
    Var h = g.gelu(g.linear(z, bind(lift1_w_), bind(lift1_b_)));
    Var c = g.linear(h, bind(lift2_w_), bind(lift2_b_));
    return g.reshape(c, g.rows(z) * cfg_.context, cfg_.width);
}

std::vector<double> GenerativeModel::context_from_latent(std::span<const double> z, int batch) const {
    Graph g(false);
    Binder bind(g, params_);
    Var zv = g.input(batch, cfg_.latent, std::vector<double>(z.begin(), z.end()));
    return g.value(lift(bind, zv));
}

void init_params(ParamSet& ps, std::uint64_t seed) {
    Rng rng(mix_seed(seed));
    auto ends_with = [](const std::string& s, std::string_view suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (auto& p : ps) {
        if (ends_with(p.name, ".w")) {
            std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(p.rows)));
            for (double& v : p.value) v = n(rng);
        } else if (ends_with(p.name, ".embed")) {
            std::normal_distribution<double> n(0.0, 0.1);
            for (double& v : p.value) v = n(rng);
        } else if (ends_with(p.name, ".g")) {
            std::fill(p.value.begin(), p.value.end(), 1.0);
        } else {
            std::fill(p.value.begin(), p.value.end(), 0.0);
        }
    }
}

}  // namespace plad::nn
