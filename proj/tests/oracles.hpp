#pragma once
// Brute-force reference implementations used by the unit and acceptance
// suites. Deliberately written without sharing code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/rational.hpp>

#include "plad/dsl.hpp"
#include "plad/executor.hpp"
#include "plad/grid.hpp"

namespace oracle {

// Every cell of the canvas tested against the primitive; triangle via edge
// functions on explicit vertices.
inline plad::ShapeGrid shape2d(plad::Shape2dType type, int cx, int cy, int r, int side = 64) {
    plad::ShapeGrid g = plad::ShapeGrid::square2d(side);
    const double s3 = std::sqrt(3.0);
    const double ax = cx, ay = cy - r;
    const double bx = cx - r * s3 / 2, by = cy + r / 2.0;
    const double qx = cx + r * s3 / 2, qy = cy + r / 2.0;
    auto edge = [](double x0, double y0, double x1, double y1, double px, double py) {
        return (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0);
    };
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            const double px = i + 0.5, py = j + 0.5;
            bool in = false;
            if (type == plad::Shape2dType::Circle) {
                in = std::hypot(px - cx, py - cy) <= r;
            } else if (type == plad::Shape2dType::Square) {
                in = px >= cx - r && px <= cx + r && py >= cy - r && py <= cy + r;
            } else {
                const double e1 = edge(ax, ay, bx, by, px, py);
                const double e2 = edge(bx, by, qx, qy, px, py);
                const double e3 = edge(qx, qy, ax, ay, px, py);
                in = (e1 <= 0 && e2 <= 0 && e3 <= 0) || (e1 >= 0 && e2 >= 0 && e3 >= 0);
            }
            if (in) g.set(i, j, 0, true);
        }
    }
    return g;
}

// Exact rational inside tests over all 32^3 cells.
inline plad::ShapeGrid prim3d(plad::Prim3dType type, const std::array<int, 6>& p, int side = 32) {
    using Q = boost::rational<std::int64_t>;
    plad::ShapeGrid g = plad::ShapeGrid::cube3d(side);
    for (int z = 0; z < side; ++z) {
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const std::array<int, 3> c{x, y, z};
                bool in = true;
                Q sum = 0;
                for (int a = 0; a < 3; ++a) {
                    const Q d = Q(2 * c[a] + 1, 2) - p[a];
                    const Q half = Q(p[3 + a], 2);
                    if (p[3 + a] <= 0) {
                        in = false;
                        break;
                    }
                    if (type == plad::Prim3dType::Cuboid) {
                        in = in && (d <= half && -d <= half);
                    } else {
                        sum += (d / half) * (d / half);
                    }
                }
                if (type == plad::Prim3dType::Ellipsoid) in = in && sum <= 1;
                if (in) g.set(x, y, z, true);
            }
        }
    }
    return g;
}

// Cell centers tested against the box bounds, one cell at a time.
inline plad::ShapeGrid cuboid(const plad::SaBox& box, int side = 32) {
    plad::ShapeGrid g = plad::ShapeGrid::cube3d(side);
    for (int z = 0; z < side; ++z) {
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const std::array<int, 3> c{x, y, z};
                bool in = true;
                for (int a = 0; a < 3; ++a) {
                    const double w = (c[a] + 0.5) / side - 0.5;
                    in = in && box.lo(a) <= w && w <= box.hi(a);
                }
                if (in) g.set(x, y, z, true);
            }
        }
    }
    return g;
}

// O(|A| |B|) Chamfer distance over 4-connected boundary pixels.
inline double chamfer(const plad::ShapeGrid& a, const plad::ShapeGrid& b) {
    auto boundary = [](const plad::ShapeGrid& g) {
        std::vector<std::array<int, 2>> pts;
        const int w = g.dim(0), h = g.dim(1);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!g.at(x, y)) continue;
                const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !g.at(x - 1, y) ||
                                  !g.at(x + 1, y) || !g.at(x, y - 1) || !g.at(x, y + 1);
                if (edge) pts.push_back({x, y});
            }
        }
        return pts;
    };
    const auto pa = boundary(a), pb = boundary(b);
    if (pa.empty() && pb.empty()) return 0.0;
    if (pa.empty() || pb.empty()) return std::hypot(double(a.dim(0)), double(a.dim(1)));
    auto directed = [](const auto& from, const auto& to) {
        double total = 0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                best = std::min(best, std::hypot(double(p[0] - q[0]), double(p[1] - q[1])));
            }
            total += best;
        }
        return total / static_cast<double>(from.size());
    };
    return 0.5 * (directed(pa, pb) + directed(pb, pa));
}

inline double iou(const plad::ShapeGrid& a, const plad::ShapeGrid& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.cell_count(); ++i) {
        inter += a.test(i) && b.test(i);
        uni += a.test(i) || b.test(i);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Re-derives the operator validity rules of the 3D sampler on a parsed tree.
inline bool csg3d_ops_valid(const plad::CsgTree& tree) {
    auto overlap = [](const plad::CsgPrimitive& a, const plad::CsgPrimitive& b) {
        for (int k = 0; k < 3; ++k) {
            const double gap = std::abs(double(a.params[k]) - double(b.params[k]));
            if (gap >= 0.5 * (a.params[3 + k] + b.params[3 + k])) return false;
        }
        return true;
    };
    auto every_overlaps = [&](const std::vector<int>& from, const std::vector<int>& into) {
        for (int i : from) {
            bool hit = false;
            for (int j : into) hit = hit || overlap(tree.prims[i], tree.prims[j]);
            if (!hit) return false;
        }
        return true;
    };
    std::vector<std::vector<int>> prims(tree.nodes.size());
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
        const auto& node = tree.nodes[n];
        if (!node.is_op) {
            prims[n] = {node.prim};
            continue;
        }
        const auto& a = prims[node.left];
        const auto& b = prims[node.right];
        if (node.op == plad::BoolOp::Subtract && !every_overlaps(b, a)) return false;
        if (node.op == plad::BoolOp::Intersect && !(every_overlaps(b, a) && every_overlaps(a, b))) return false;
        prims[n] = a;
        prims[n].insert(prims[n].end(), b.begin(), b.end());
    }
    return true;
}

// Per-part unique occupancy by explicit cell ownership counting.
inline std::vector<int> unique_voxels(const plad::SaLayout& layout) {
    std::vector<plad::ShapeGrid> parts;
    std::vector<int> owners(32 * 32 * 32, 0);
    for (const auto& p : layout.parts) {
        parts.push_back(plad::voxelize(p));
        for (std::size_t i = 0; i < owners.size(); ++i) owners[i] += parts.back().test(i);
    }
    std::vector<int> out;
    for (const auto& g : parts) {
        int n = 0;
        for (std::size_t i = 0; i < owners.size(); ++i) n += g.test(i) && owners[i] == 1;
        out.push_back(n);
    }
    return out;
}

}  // namespace oracle
