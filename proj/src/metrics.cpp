#include "plad/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "plad/errors.hpp"

namespace plad {

namespace {

void require_same(const ShapeGrid& a, const ShapeGrid& b) {
    if (!a.same_shape(b)) throw DimMismatch("metric: grids differ in shape");
}

void require_2d(const ShapeGrid& g) {
    if (g.rank() != 2) throw DimMismatch("chamfer needs 2D grids");
}

// Lower envelope of parabolas rooted at the finite entries of f[0..n).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    auto meet = [&](int q, int p) {
        return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    std::size_t k = 0;
    bool any = false;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (!any) {
            any = true;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s = meet(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = meet(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (!any) {
        std::fill(d, d + n, inf);
        return;
    }
    std::size_t j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const int p = v[j];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

// Squared distance from every pixel to the nearest source pixel.
std::vector<double> squared_distance_to(const std::vector<std::array<int, 2>>& sources, int w, int h) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(static_cast<std::size_t>(w) * h, inf);
    for (const auto& p : sources) grid[static_cast<std::size_t>(p[1]) * w + p[0]] = 0.0;
    const int n = std::max(w, h);
    std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(f.data(), d.data(), h, v, z);
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        double* row = grid.data() + static_cast<std::size_t>(y) * w;
        std::copy(row, row + w, f.begin());
        edt_1d(f.data(), row, w, v, z);
    }
    return grid;
}

double directed(const std::vector<std::array<int, 2>>& from, const std::vector<double>& dist_sq, int w) {
    double total = 0;
    for (const auto& p : from) total += std::sqrt(dist_sq[static_cast<std::size_t>(p[1]) * w + p[0]]);
    return total / static_cast<double>(from.size());
}

}  // namespace

SimilarityKind similarity_kind(DslId dsl) {
    return dsl == DslId::Csg2d ? SimilarityKind::ChamferNeg : SimilarityKind::IoU;
}

double iou(const ShapeGrid& a, const ShapeGrid& b) {
    require_same(a, b);
    const auto aw = a.words();
    const auto bw = b.words();
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < aw.size(); ++i) {
        inter += static_cast<std::size_t>(std::popcount(aw[i] & bw[i]));
        uni += static_cast<std::size_t>(std::popcount(aw[i] | bw[i]));
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::array<int, 2>> boundary_pixels(const ShapeGrid& g) {
    require_2d(g);
    const int w = g.dim(0), h = g.dim(1);
    std::vector<std::array<int, 2>> out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!g.at(x, y)) continue;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1 || !g.at(x - 1, y) || !g.at(x + 1, y) ||
                !g.at(x, y - 1) || !g.at(x, y + 1)) {
                out.push_back({x, y});
            }
        }
    }
    return out;
}

double chamfer_sentinel(const ShapeGrid& g) { return std::hypot(double(g.dim(0)), double(g.dim(1))); }

double chamfer(const ShapeGrid& a, const ShapeGrid& b) {
    require_2d(a);
    require_same(a, b);
    const auto ea = boundary_pixels(a);
    const auto eb = boundary_pixels(b);
    if (ea.empty() && eb.empty()) return 0.0;
    if (ea.empty() || eb.empty()) return chamfer_sentinel(a);
    if (a == b) return 0.0;
    const int w = a.dim(0), h = a.dim(1);
    const double ab = directed(ea, squared_distance_to(eb, w, h), w);
    const double ba = directed(eb, squared_distance_to(ea, w, h), w);
    return 0.5 * (ab + ba);
}

Similarity similarity(DslId dsl, const ShapeGrid& target, const ShapeGrid& candidate) {
    const SimilarityKind kind = similarity_kind(dsl);
    if (kind == SimilarityKind::ChamferNeg) return {kind, -chamfer(target, candidate)};
    return {kind, iou(target, candidate)};
}

double reward(DslId dsl, const ShapeGrid& target, const ShapeGrid& candidate, double chamfer_scale) {
    if (dsl == DslId::Csg2d) return std::max(0.0, 1.0 - chamfer(target, candidate) / chamfer_scale);
    return iou(target, candidate);
}

}  // namespace plad
