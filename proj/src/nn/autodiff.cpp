#include "plad/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plad/errors.hpp"
#include "plad/nn/kernels.hpp"

namespace plad::nn {

int ParamSet::add(std::string name, int rows, int cols) {
    if (find(name) >= 0) throw std::invalid_argument("duplicate parameter block " + name);
    Param p;
    p.name = std::move(name);
    p.rows = rows;
    p.cols = cols;
    p.value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    p.grad.assign(p.value.size(), 0.0);
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
}

int ParamSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::vector<std::vector<double>> ParamSet::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

void ParamSet::restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != params_.size()) throw std::invalid_argument("snapshot block count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (values[i].size() != params_[i].size()) throw std::invalid_argument("snapshot block size mismatch");
        params_[i].value = values[i];
    }
}

std::array<int, 3> PatchGeometry::out() const {
    std::array<int, 3> o{1, 1, 1};
    for (int a = 0; a < rank; ++a) o[a] = (in[a] - kernel) / stride + 1;
    return o;
}

int PatchGeometry::out_cells() const {
    const auto o = out();
    return o[0] * o[1] * o[2];
}

int PatchGeometry::patch_size() const {
    int n = channels;
    for (int a = 0; a < rank; ++a) n *= kernel;
    return n;
}

Var Graph::push(int rows, int cols, std::vector<double> value, bool needs_grad) {
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.value = std::move(value);
    n.needs_grad = needs_grad && training_;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Graph::record(std::initializer_list<Var> inputs) const {
    if (!training_) return false;
    for (Var v : inputs) {
        if (v.valid() && needs(v)) return true;
    }
    return false;
}

Var Graph::input(int rows, int cols, std::vector<double> data) {
    if (data.size() != static_cast<std::size_t>(rows) * cols) throw DimMismatch("input data size");
    return push(rows, cols, std::move(data), false);
}

Var Graph::param(Param& p) {
    Var v = push(p.rows, p.cols, p.value, true);
    if (training_) node(v).param = &p;
    return v;
}

Var Graph::param(const Param& p) { return push(p.rows, p.cols, p.value, false); }

Var Graph::matmul(Var a, Var b) { return linear(a, b, Var{}); }

Var Graph::linear(Var x, Var w, Var bias) {
    const int n = rows(x), k = cols(x), m = cols(w);
    if (rows(w) != k) throw DimMismatch("linear: inner dimensions differ");
    if (bias.valid() && (rows(bias) != 1 || cols(bias) != m)) throw DimMismatch("linear: bias shape");
    std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
    if (bias.valid()) {
        const auto& bv = value(bias);
        for (int i = 0; i < n; ++i) std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * m);
    }
    gemm_nn(n, k, m, value(x).data(), value(w).data(), out.data());
    const bool rec = record({x, w, bias});
    Var o = push(n, m, std::move(out), rec);
    if (rec) {
        node(o).back = [x, w, bias, o, n, k, m](Graph& gr) {
            const double* go = gr.g(o).data();
            if (gr.needs(x)) gemm_nt(n, m, k, go, gr.value(w).data(), gr.g(x).data());
            if (gr.needs(w)) gemm_tn(n, k, m, gr.value(x).data(), go, gr.g(w).data());
            if (bias.valid() && gr.needs(bias)) {
                double* gb = gr.g(bias).data();
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < m; ++j) gb[j] += go[static_cast<std::ptrdiff_t>(i) * m + j];
                }
            }
        };
    }
    return o;
}

Var Graph::add(Var a, Var b) {
    if (rows(a) != rows(b) || cols(a) != cols(b)) throw DimMismatch("add: shapes differ");
    std::vector<double> out = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const bool rec = record({a, b});
    Var o = push(rows(a), cols(a), std::move(out), rec);
    if (rec) {
        node(o).back = [a, b, o](Graph& gr) {
            const auto& go = gr.g(o);
            for (Var v : {a, b}) {
                if (!gr.needs(v)) continue;
                auto& gv = gr.g(v);
                for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i];
            }
        };
    }
    return o;
}

Var Graph::scale(Var a, double s) {
    std::vector<double> out = value(a);
    for (double& x : out) x *= s;
    const bool rec = record({a});
    Var o = push(rows(a), cols(a), std::move(out), rec);
    if (rec) {
        node(o).back = [a, o, s](Graph& gr) {
            const auto& go = gr.g(o);
            auto& ga = gr.g(a);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += s * go[i];
        };
    }
    return o;
}

Var Graph::gelu(Var x) {
    const auto& xv = value(x);
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = nn::gelu(xv[i]);
    const bool rec = record({x});
    Var o = push(rows(x), cols(x), std::move(out), rec);
    if (rec) {
        node(o).back = [x, o](Graph& gr) {
            const auto& go = gr.g(o);
            const auto& xv2 = gr.value(x);
            auto& gx = gr.g(x);
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * gelu_grad(xv2[i]);
        };
    }
    return o;
}

Var Graph::layer_norm(Var x, Var gamma, Var beta) {
    const int n = rows(x), m = cols(x);
    if (cols(gamma) != m || cols(beta) != m) throw DimMismatch("layer_norm: affine width");
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    const bool rec = record({x, gamma, beta});
    std::vector<double> xhat(rec ? out.size() : 0), inv_std(rec ? static_cast<std::size_t>(n) : 0);
    layer_norm_rows(n, m, value(x).data(), value(gamma).data(), value(beta).data(), out.data(),
                    rec ? xhat.data() : nullptr, rec ? inv_std.data() : nullptr);
    Var o = push(n, m, std::move(out), rec);
    if (rec) {
        node(o).back = [x, gamma, beta, o, n, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& gr) {
            const auto& go = gr.g(o);
            const auto& gam = gr.value(gamma);
            std::vector<double> dxh(static_cast<std::size_t>(m));
            for (int r = 0; r < n; ++r) {
                const std::size_t base = static_cast<std::size_t>(r) * m;
                double s1 = 0.0, s2 = 0.0;
                for (int j = 0; j < m; ++j) {
                    dxh[j] = go[base + j] * gam[j];
                    s1 += dxh[j];
                    s2 += dxh[j] * xhat[base + j];
                }
                if (gr.needs(gamma)) {
                    auto& gg = gr.g(gamma);
                    for (int j = 0; j < m; ++j) gg[j] += go[base + j] * xhat[base + j];
                }
                if (gr.needs(beta)) {
                    auto& gb = gr.g(beta);
                    for (int j = 0; j < m; ++j) gb[j] += go[base + j];
                }
                if (gr.needs(x)) {
                    auto& gx = gr.g(x);
                    const double is = inv_std[r] / m;
                    for (int j = 0; j < m; ++j) gx[base + j] += is * (m * dxh[j] - s1 - xhat[base + j] * s2);
                }
            }
        };
    }
    return o;
}

Var Graph::dropout(Var x, double p, Rng& rng) {
    if (!training_ || p <= 0.0) return x;
    const auto& xv = value(x);
    std::vector<double> keep(xv.size());
    std::vector<double> out(xv.size());
    const double s = 1.0 / (1.0 - p);
    std::bernoulli_distribution drop(p);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        keep[i] = drop(rng) ? 0.0 : s;
        out[i] = xv[i] * keep[i];
    }
    const bool rec = record({x});
    Var o = push(rows(x), cols(x), std::move(out), rec);
    if (rec) {
        node(o).back = [x, o, keep = std::move(keep)](Graph& gr) {
            const auto& go = gr.g(o);
            auto& gx = gr.g(x);
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * keep[i];
        };
    }
    return o;
}

Var Graph::reshape(Var x, int r, int c) {
    if (static_cast<std::size_t>(r) * c != value(x).size()) throw DimMismatch("reshape: element count");
    const bool rec = record({x});
    Var o = push(r, c, value(x), rec);
    if (rec) {
        node(o).back = [x, o](Graph& gr) {
            const auto& go = gr.g(o);
            auto& gx = gr.g(x);
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        };
    }
    return o;
}

Var Graph::slice_cols(Var x, int begin, int count) {
    const int n = rows(x), m = cols(x);
    if (begin < 0 || count < 0 || begin + count > m) throw DimMismatch("slice_cols: range");
    std::vector<double> out(static_cast<std::size_t>(n) * count);
    const auto& xv = value(x);
    for (int i = 0; i < n; ++i) {
        std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(i) * m + begin, count,
                    out.begin() + static_cast<std::ptrdiff_t>(i) * count);
    }
    const bool rec = record({x});
    Var o = push(n, count, std::move(out), rec);
    if (rec) {
        node(o).back = [x, o, n, m, begin, count](Graph& gr) {
            const auto& go = gr.g(o);
            auto& gx = gr.g(x);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < count; ++j) {
                    gx[static_cast<std::size_t>(i) * m + begin + j] += go[static_cast<std::size_t>(i) * count + j];
                }
            }
        };
    }
    return o;
}

Var Graph::gather_rows(std::vector<Var> sources, std::vector<std::pair<int, int>> map) {
    if (sources.empty()) throw DimMismatch("gather_rows: no sources");
    const int m = cols(sources.front());
    for (Var s : sources) {
        if (cols(s) != m) throw DimMismatch("gather_rows: widths differ");
    }
    const int n = static_cast<int>(map.size());
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    for (int r = 0; r < n; ++r) {
        const auto [s, row] = map[static_cast<std::size_t>(r)];
        if (s < 0 || s >= static_cast<int>(sources.size()) || row < 0 || row >= rows(sources[s])) {
            throw DimMismatch("gather_rows: index out of range");
        }
        const auto& sv = value(sources[s]);
        std::copy_n(sv.begin() + static_cast<std::ptrdiff_t>(row) * m, m, out.begin() + static_cast<std::ptrdiff_t>(r) * m);
    }
    bool rec = false;
    for (Var s : sources) rec = rec || record({s});
    Var o = push(n, m, std::move(out), rec);
    if (rec) {
        node(o).back = [sources = std::move(sources), map = std::move(map), o, m](Graph& gr) {
            const auto& go = gr.g(o);
            for (std::size_t r = 0; r < map.size(); ++r) {
                const Var s = sources[static_cast<std::size_t>(map[r].first)];
                if (!gr.needs(s)) continue;
                double* dst = gr.g(s).data() + static_cast<std::ptrdiff_t>(map[r].second) * m;
                const double* src = go.data() + static_cast<std::ptrdiff_t>(r) * m;
                for (int j = 0; j < m; ++j) dst[j] += src[j];
            }
        };
    }
    return o;
}

namespace {

// For each output element of the patch matrix, the flat input index it reads.
std::vector<int> patch_index(const PatchGeometry& geom, int batch) {
    const auto o = geom.out();
    const int oc = geom.out_cells(), ps = geom.patch_size(), c = geom.channels;
    const int kz = geom.rank == 3 ? geom.kernel : 1, ky = geom.rank >= 2 ? geom.kernel : 1, kx = geom.kernel;
    std::vector<int> index(static_cast<std::size_t>(batch) * oc * ps);
    std::size_t w = 0;
    for (int b = 0; b < batch; ++b) {
        for (int z = 0; z < o[2]; ++z) {
            for (int y = 0; y < o[1]; ++y) {
                for (int x = 0; x < o[0]; ++x) {
                    for (int dz = 0; dz < kz; ++dz) {
                        for (int dy = 0; dy < ky; ++dy) {
                            for (int dx = 0; dx < kx; ++dx) {
                                const int ix = x * geom.stride + dx, iy = y * geom.stride + dy,
                                          iz = z * geom.stride + dz;
                                const int cell = ix + geom.in[0] * (iy + geom.in[1] * iz);
                                const int row = b * geom.in_cells() + cell;
                                for (int ch = 0; ch < c; ++ch) index[w++] = row * c + ch;
                            }
                        }
                    }
                }
            }
        }
    }
    return index;
}

}  // namespace

Var Graph::conv_patches(Var x, const PatchGeometry& geom, int batch) {
    if (rows(x) != batch * geom.in_cells() || cols(x) != geom.channels) throw DimMismatch("conv_patches: input shape");
    for (int a = 0; a < geom.rank; ++a) {
        if (geom.in[a] < geom.kernel) throw DimMismatch("conv_patches: kernel larger than input");
    }
    std::vector<int> index = patch_index(geom, batch);
    const auto& xv = value(x);
    std::vector<double> out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) out[i] = xv[static_cast<std::size_t>(index[i])];
    const bool rec = record({x});
    Var o = push(batch * geom.out_cells(), geom.patch_size(), std::move(out), rec);
    if (rec) {
        node(o).back = [x, o, index = std::move(index)](Graph& gr) {
            const auto& go = gr.g(o);
            auto& gx = gr.g(x);
            for (std::size_t i = 0; i < index.size(); ++i) gx[static_cast<std::size_t>(index[i])] += go[i];
        };
    }
    return o;
}

Var Graph::attention(Var qkv, int batch, int seq, int heads, int prefix) {
    const int w3 = cols(qkv);
    if (w3 % 3 != 0 || rows(qkv) != batch * seq) throw DimMismatch("attention: qkv shape");
    const int width = w3 / 3;
    if (heads < 1 || width % heads != 0) throw DimMismatch("attention: heads must divide width");
    const int dh = width / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto& in = value(qkv);
    std::vector<double> out(static_cast<std::size_t>(batch) * seq * width, 0.0);
    const bool rec = record({qkv});
    // Probabilities, [batch][head][i][j]; kept for the backward pass.
    std::vector<double> probs(static_cast<std::size_t>(batch) * heads * seq * seq, 0.0);
    auto visible = [prefix](int i) { return std::max(i + 1, prefix); };
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            for (int i = 0; i < seq; ++i) {
                const double* q = in.data() + static_cast<std::ptrdiff_t>(b * seq + i) * w3 + h * dh;
                double* p = probs.data() + ((static_cast<std::ptrdiff_t>(b) * heads + h) * seq + i) * seq;
                const int nk = std::min(visible(i), seq);
                double hi = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < nk; ++j) {
                    const double* k = in.data() + static_cast<std::ptrdiff_t>(b * seq + j) * w3 + width + h * dh;
                    double s = 0.0;
                    for (int d = 0; d < dh; ++d) s += q[d] * k[d];
                    p[j] = s * scale;
                    hi = std::max(hi, p[j]);
                }
                double z = 0.0;
                for (int j = 0; j < nk; ++j) {
                    p[j] = std::exp(p[j] - hi);
                    z += p[j];
                }
                double* orow = out.data() + static_cast<std::ptrdiff_t>(b * seq + i) * width + h * dh;
                for (int j = 0; j < nk; ++j) {
                    p[j] /= z;
                    const double* v = in.data() + static_cast<std::ptrdiff_t>(b * seq + j) * w3 + 2 * width + h * dh;
                    for (int d = 0; d < dh; ++d) orow[d] += p[j] * v[d];
                }
            }
        }
    }
    Var o = push(batch * seq, width, std::move(out), rec);
    if (rec) {
        node(o).back = [qkv, o, batch, seq, heads, prefix, width, dh, w3, scale, probs = std::move(probs)](Graph& gr) {
            const auto& go = gr.g(o);
            const auto& iv = gr.value(qkv);
            auto& gi = gr.g(qkv);
            std::vector<double> dp(static_cast<std::size_t>(seq));
            for (int b = 0; b < batch; ++b) {
                for (int h = 0; h < heads; ++h) {
                    for (int i = 0; i < seq; ++i) {
                        const int nk = std::min(std::max(i + 1, prefix), seq);
                        const double* p = probs.data() + ((static_cast<std::ptrdiff_t>(b) * heads + h) * seq + i) * seq;
                        const double* gorow = go.data() + static_cast<std::ptrdiff_t>(b * seq + i) * width + h * dh;
                        double dot = 0.0;
                        for (int j = 0; j < nk; ++j) {
                            const std::ptrdiff_t vrow = static_cast<std::ptrdiff_t>(b * seq + j) * w3 + 2 * width + h * dh;
                            double s = 0.0;
                            for (int d = 0; d < dh; ++d) {
                                s += gorow[d] * iv[vrow + d];
                                gi[vrow + d] += p[j] * gorow[d];
                            }
                            dp[j] = s;
                            dot += s * p[j];
                        }
                        const std::ptrdiff_t qrow = static_cast<std::ptrdiff_t>(b * seq + i) * w3 + h * dh;
                        for (int j = 0; j < nk; ++j) {
                            const double ds = p[j] * (dp[j] - dot) * scale;
                            if (ds == 0.0) continue;
                            const std::ptrdiff_t krow = static_cast<std::ptrdiff_t>(b * seq + j) * w3 + width + h * dh;
                            for (int d = 0; d < dh; ++d) {
                                gi[qrow + d] += ds * iv[krow + d];
                                gi[krow + d] += ds * iv[qrow + d];
                            }
                        }
                    }
                }
            }
        };
    }
    return o;
}

Var Graph::nll(Var logits, std::span<const int> targets, std::span<const double> weights,
               std::span<const unsigned char> mask) {
    const int n = rows(logits), v = cols(logits);
    if (targets.size() != static_cast<std::size_t>(n) || weights.size() != targets.size()) {
        throw DimMismatch("nll: targets/weights length");
    }
    if (!mask.empty() && mask.size() != static_cast<std::size_t>(n) * v) throw DimMismatch("nll: mask shape");
    const auto& lv = value(logits);
    double total = 0.0;
    std::vector<double> lse(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (weights[i] == 0.0) continue;
        const int t = targets[i];
        if (t < 0 || t >= v) throw DimMismatch("nll: target out of range");
        const auto row = std::span<const double>(lv).subspan(static_cast<std::size_t>(i) * v, v);
        const auto mrow = mask.empty() ? std::span<const unsigned char>{} : mask.subspan(static_cast<std::size_t>(i) * v, v);
        if (!mrow.empty() && !mrow[t]) throw DimMismatch("nll: target is masked out");
        lse[i] = log_sum_exp(row, mrow);
        total += weights[i] * (lse[i] - row[t]);
    }
    const bool rec = record({logits});
    Var o = push(1, 1, {total}, rec);
    if (rec) {
        node(o).back = [logits, o, n, v, lse = std::move(lse), tg = std::vector<int>(targets.begin(), targets.end()),
                        wt = std::vector<double>(weights.begin(), weights.end()),
                        mk = std::vector<unsigned char>(mask.begin(), mask.end())](Graph& gr) {
            const double go = gr.g(o)[0];
            const auto& lv2 = gr.value(logits);
            auto& gl = gr.g(logits);
            for (int i = 0; i < n; ++i) {
                if (wt[i] == 0.0) continue;
                const std::size_t base = static_cast<std::size_t>(i) * v;
                const double s = go * wt[i];
                for (int j = 0; j < v; ++j) {
                    if (!mk.empty() && !mk[base + j]) continue;
                    gl[base + j] += s * std::exp(lv2[base + j] - lse[i]);
                }
                gl[base + tg[i]] -= s;
            }
        };
    }
    return o;
}

Var Graph::gaussian_kl(Var mean, Var log_std) {
    if (rows(mean) != rows(log_std) || cols(mean) != cols(log_std)) throw DimMismatch("gaussian_kl: shapes differ");
    const auto& mu = value(mean);
    const auto& ls = value(log_std);
    const double inv_rows = 1.0 / rows(mean);
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) total += 0.5 * (mu[i] * mu[i] + std::exp(2 * ls[i]) - 1.0 - 2 * ls[i]);
    const bool rec = record({mean, log_std});
    Var o = push(1, 1, {total * inv_rows}, rec);
    if (rec) {
        node(o).back = [mean, log_std, o, inv_rows](Graph& gr) {
            const double go = gr.g(o)[0] * inv_rows;
            const auto& mu2 = gr.value(mean);
            const auto& ls2 = gr.value(log_std);
            if (gr.needs(mean)) {
                auto& gm = gr.g(mean);
                for (std::size_t i = 0; i < mu2.size(); ++i) gm[i] += go * mu2[i];
            }
            if (gr.needs(log_std)) {
                auto& gs = gr.g(log_std);
                for (std::size_t i = 0; i < ls2.size(); ++i) gs[i] += go * (std::exp(2 * ls2[i]) - 1.0);
            }
        };
    }
    return o;
}

Var Graph::reparameterize(Var mean, Var log_std, std::span<const double> noise) {
    const auto& mu = value(mean);
    const auto& ls = value(log_std);
    if (mu.size() != ls.size() || noise.size() != mu.size()) throw DimMismatch("reparameterize: shapes differ");
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) out[i] = mu[i] + std::exp(ls[i]) * noise[i];
    const bool rec = record({mean, log_std});
    Var o = push(rows(mean), cols(mean), std::move(out), rec);
    if (rec) {
        node(o).back = [mean, log_std, o, eps = std::vector<double>(noise.begin(), noise.end())](Graph& gr) {
            const auto& go = gr.g(o);
            if (gr.needs(mean)) {
                auto& gm = gr.g(mean);
                for (std::size_t i = 0; i < go.size(); ++i) gm[i] += go[i];
            }
            if (gr.needs(log_std)) {
                const auto& ls2 = gr.value(log_std);
                auto& gs = gr.g(log_std);
                for (std::size_t i = 0; i < go.size(); ++i) gs[i] += go[i] * std::exp(ls2[i]) * eps[i];
            }
        };
    }
    return o;
}

void Graph::backward(Var loss) {
    if (!training_) throw std::logic_error("backward on an inference graph");
    if (rows(loss) != 1 || cols(loss) != 1) throw DimMismatch("backward: loss must be 1 x 1");
    for (auto& n : nodes_) {
        if (n.needs_grad) n.grad.assign(n.value.size(), 0.0);
    }
    if (!needs(loss)) return;
    node(loss).grad[0] = 1.0;
    for (std::size_t i = idx(loss) + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back) n.back(*this);
    }
    for (auto& n : nodes_) {
        if (!n.param) continue;
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
    }
}

}  // namespace plad::nn
