#include "plad/executor.hpp"

#include <algorithm>
#include <cmath>

#include "plad/errors.hpp"

namespace plad {

namespace {

constexpr double kMinExtent = 1e-9;

// Inclusive cell range [first, last] whose centers fall in [lo, hi] along
// one axis, given a predicate on the center coordinate.
template <class Inside>
std::pair<int, int> cell_span(int side, Inside inside) {
    int first = side, last = -1;
    for (int i = 0; i < side; ++i) {
        if (inside(i)) {
            first = std::min(first, i);
            last = i;
        }
    }
    return {first, last};
}

}  // namespace

ShapeGrid raster_shape2d(Shape2dType type, int cx, int cy, int r, int side) {
    ShapeGrid g(2, {side, side, 1});
    if (r <= 0) return g;
    const int x0 = std::max(0, cx - r - 1), x1 = std::min(side - 1, cx + r + 1);
    const int y0 = std::max(0, cy - r - 1), y1 = std::min(side - 1, cy + r + 1);
    const double rr = static_cast<double>(r) * r;
    for (int j = y0; j <= y1; ++j) {
        const double py = j + 0.5 - cy;
        int first = -1, last = -2;
        for (int i = x0; i <= x1; ++i) {
            const double px = i + 0.5 - cx;
            bool in = false;
            switch (type) {
                case Shape2dType::Circle: in = px * px + py * py <= rr; break;
                case Shape2dType::Square: in = std::abs(px) <= r && std::abs(py) <= r; break;
                case Shape2dType::Triangle: {
                    // Depth below the apex; half-width grows as depth / sqrt(3).
                    const double depth = py + r;
                    in = depth >= 0 && py <= 0.5 * r && 3.0 * px * px <= depth * depth;
                    break;
                }
            }
            if (in) {
                if (first < 0) first = i;
                last = i;
            }
        }
        if (first >= 0) g.fill_row(first, last + 1, j);
    }
    return g;
}

ShapeGrid raster_prim3d(Prim3dType type, const std::array<int, 6>& p, int side) {
    ShapeGrid g(3, {side, side, side});
    const std::int64_t ex = p[3], ey = p[4], ez = p[5];
    if (ex <= 0 || ey <= 0 || ez <= 0) return g;
    // Work in doubled coordinates: offset d = 2i + 1 - 2c is an exact integer.
    auto offset = [](int i, int c) { return std::int64_t{2} * i + 1 - std::int64_t{2} * c; };
    auto span = [&](int c, std::int64_t e) {
        return cell_span(side, [&](int i) { return std::abs(offset(i, c)) <= e; });
    };
    const auto [x0, x1] = span(p[0], ex);
    const auto [y0, y1] = span(p[1], ey);
    const auto [z0, z1] = span(p[2], ez);
    if (type == Prim3dType::Cuboid) {
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y) g.fill_row(x0, x1 + 1, y, z);
        return g;
    }
    // sum (d_k / e_k)^2 <= 1, cleared of denominators.
    const std::int64_t wx = ey * ey * ez * ez, wy = ex * ex * ez * ez, wz = ex * ex * ey * ey;
    const std::int64_t bound = ex * ex * ey * ey * ez * ez;
    for (int z = z0; z <= z1; ++z) {
        const std::int64_t dz = offset(z, p[2]);
        for (int y = y0; y <= y1; ++y) {
            const std::int64_t dy = offset(y, p[1]);
            const std::int64_t rest = dy * dy * wy + dz * dz * wz;
            if (rest > bound) continue;
            int first = -1, last = -2;
            for (int x = x0; x <= x1; ++x) {
                const std::int64_t dx = offset(x, p[0]);
                if (dx * dx * wx + rest <= bound) {
                    if (first < 0) first = x;
                    last = x;
                }
            }
            if (first >= 0) g.fill_row(first, last + 1, y, z);
        }
    }
    return g;
}

// --- ShapeAssembly ----------------------------------------------------------

namespace {

int face_axis(Face f) { return static_cast<int>(f) / 2; }
double face_sign(Face f) { return static_cast<int>(f) % 2 == 0 ? 1.0 : -1.0; }
Face opposite(Face f) { return static_cast<Face>(static_cast<int>(f) ^ 1); }
std::array<int, 2> tangents(int axis) {
    if (axis == 0) return {1, 2};
    if (axis == 1) return {0, 2};
    return {0, 1};
}
double size_value(int bin) { return bin / 32.0; }
double uv_value(int bin) { return bin / 10.0; }

std::array<double, 3> face_point(const SaBox& b, Face f, double u, double v) {
    const int a = face_axis(f);
    const auto t = tangents(a);
    std::array<double, 3> p = b.center;
    p[static_cast<std::size_t>(a)] += face_sign(f) * 0.5 * b.extent[static_cast<std::size_t>(a)];
    p[static_cast<std::size_t>(t[0])] += (u - 0.5) * b.extent[static_cast<std::size_t>(t[0])];
    p[static_cast<std::size_t>(t[1])] += (v - 0.5) * b.extent[static_cast<std::size_t>(t[1])];
    return p;
}

// Face of `target` that a part's face `f` rests against: the bbox is entered
// from inside, so the same face; any other cuboid is met from outside.
Face contact_face(int target, Face f) { return target == 0 ? f : opposite(f); }

void set_span(SaBox& b, int a, double lo, double hi) {
    const auto k = static_cast<std::size_t>(a);
    b.center[k] = 0.5 * (lo + hi);
    b.extent[k] = hi - lo;
}

void clip_to(SaBox& b, const SaBox& bbox) {
    for (int a = 0; a < 3; ++a) {
        double lo = std::max(b.lo(a), bbox.lo(a));
        double hi = std::min(b.hi(a), bbox.hi(a));
        if (hi - lo < kMinExtent) {
            lo = std::clamp(lo, bbox.lo(a), bbox.hi(a) - kMinExtent);
            hi = lo + kMinExtent;
        }
        set_span(b, a, lo, hi);
    }
}

void apply_attach(SaBox& cur, const SaBox& target, int target_id, const SaAttach& at) {
    const Face tf = contact_face(target_id, at.face);
    const auto q = face_point(target, tf, uv_value(at.uv[2]), uv_value(at.uv[3]));
    const auto p = face_point(cur, at.face, uv_value(at.uv[0]), uv_value(at.uv[1]));
    for (std::size_t k = 0; k < 3; ++k) cur.center[k] += q[k] - p[k];
}

// Second attach: move the attaching face onto the target plane, keeping the
// opposite face (and so the first attach point) in place.
void apply_stretch(SaBox& cur, const SaBox& target, int target_id, const SaAttach& at, Face first_face) {
    const int a = face_axis(at.face);
    if (first_face == at.face) return;
    const Face tf = contact_face(target_id, at.face);
    const double plane = face_point(target, tf, uv_value(at.uv[2]), uv_value(at.uv[3]))[static_cast<std::size_t>(a)];
    double lo = cur.lo(a), hi = cur.hi(a);
    if (face_sign(at.face) > 0) {
        hi = plane;
    } else {
        lo = plane;
    }
    if (hi - lo <= kMinExtent) return;
    set_span(cur, a, lo, hi);
}

void apply_squeeze(SaBox& cur, const std::vector<SaBox>& refs, const SaSqueeze& sq) {
    const int a = face_axis(sq.face);
    const auto ak = static_cast<std::size_t>(a);
    const Face f1 = contact_face(sq.first, sq.face);
    const Face f2 = sq.second == 0 ? opposite(sq.face) : sq.face;
    const SaBox& ca = refs[static_cast<std::size_t>(sq.first)];
    const SaBox& cb = refs[static_cast<std::size_t>(sq.second)];
    const auto anchor = face_point(ca, f1, uv_value(sq.uv[0]), uv_value(sq.uv[1]));
    const double plane2 = face_point(cb, f2, 0.5, 0.5)[ak];
    double lo = std::min(anchor[ak], plane2), hi = std::max(anchor[ak], plane2);
    if (hi - lo < kMinExtent) hi = lo + kMinExtent;
    set_span(cur, a, lo, hi);
    for (int t : tangents(a)) cur.center[static_cast<std::size_t>(t)] = anchor[static_cast<std::size_t>(t)];
}

}  // namespace

SaLayout sa_layout(const SaProgram& program) {
    SaLayout out;
    out.bbox.center = {0.0, 0.0, 0.0};
    out.bbox.extent = {1.0, size_value(program.bbox_height), 1.0};
    std::vector<SaBox> refs{out.bbox};

    for (std::size_t k = 0; k < program.blocks.size(); ++k) {
        const SaBlock& blk = program.blocks[k];
        SaBox cur;
        cur.block = static_cast<int>(k);
        for (std::size_t a = 0; a < 3; ++a) cur.extent[a] = size_value(blk.dims[a]);

        auto ref = [&](int id) -> const SaBox& {
            if (id < 0 || static_cast<std::size_t>(id) >= refs.size()) {
                throw InvalidProgram("ShapeAssembly reference c" + std::to_string(id) + " is not declared");
            }
            return refs[static_cast<std::size_t>(id)];
        };
        if (blk.squeeze) {
            ref(blk.squeeze->first);
            ref(blk.squeeze->second);
            apply_squeeze(cur, refs, *blk.squeeze);
        } else {
            if (blk.attaches.empty()) throw InvalidProgram("ShapeAssembly block without attachment");
            apply_attach(cur, ref(blk.attaches[0].target), blk.attaches[0].target, blk.attaches[0]);
            if (blk.attaches.size() > 1) {
                apply_stretch(cur, ref(blk.attaches[1].target), blk.attaches[1].target, blk.attaches[1],
                              blk.attaches[0].face);
            }
        }
        clip_to(cur, out.bbox);
        refs.push_back(cur);
        out.parts.push_back(cur);

        const int a = static_cast<int>(blk.symmetry.axis);
        const auto ak = static_cast<std::size_t>(a);
        switch (blk.symmetry.kind) {
            case SaSymmetry::Kind::Reflect: {
                SaBox m = cur;
                m.copy = true;
                m.center[ak] = -m.center[ak];
                clip_to(m, out.bbox);
                out.parts.push_back(m);
                break;
            }
            case SaSymmetry::Kind::Translate: {
                const double reach = size_value(blk.symmetry.distance) * out.bbox.extent[ak];
                for (int c = 1; c <= blk.symmetry.count; ++c) {
                    SaBox m = cur;
                    m.copy = true;
                    m.center[ak] += reach * c / blk.symmetry.count;
                    clip_to(m, out.bbox);
                    out.parts.push_back(m);
                }
                break;
            }
            case SaSymmetry::Kind::None: break;
        }
    }
    return out;
}

ShapeGrid voxelize(const SaBox& box, int side) {
    ShapeGrid g(3, {side, side, side});
    std::array<std::pair<int, int>, 3> span;
    for (int a = 0; a < 3; ++a) {
        const double lo = box.lo(a), hi = box.hi(a);
        span[static_cast<std::size_t>(a)] = cell_span(side, [&](int i) {
            const double w = (i + 0.5) / side - 0.5;
            return lo <= w && w <= hi;
        });
    }
    for (int z = span[2].first; z <= span[2].second; ++z)
        for (int y = span[1].first; y <= span[1].second; ++y) g.fill_row(span[0].first, span[0].second + 1, y, z);
    return g;
}

std::vector<int> sa_unique_counts(const SaLayout& layout, int side) {
    std::vector<ShapeGrid> grids;
    grids.reserve(layout.parts.size());
    ShapeGrid once = ShapeGrid::cube3d(side), twice = ShapeGrid::cube3d(side);
    for (const auto& part : layout.parts) {
        grids.push_back(voxelize(part, side));
        auto g = grids.back().words();
        auto o = once.words();
        auto t = twice.words();
        for (std::size_t w = 0; w < g.size(); ++w) {
            t[w] |= o[w] & g[w];
            o[w] = (o[w] | g[w]) & ~t[w];
        }
    }
    std::vector<int> out;
    out.reserve(grids.size());
    for (const auto& g : grids) {
        out.push_back(static_cast<int>(grid_bool(BoolOp::Intersect, g, once).count()));
    }
    return out;
}

// --- Executor ---------------------------------------------------------------

Executor::Executor(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
    if (!vocab_) throw Error("executor requires a vocabulary");
    if (vocab_->dsl() == DslId::Csg2d) {
        shape_cache_.resize(static_cast<std::size_t>(vocab_->size()));
        for (int t : vocab_->tokens_of(TokenKind::Shape2d)) {
            const TokenInfo& info = vocab_->info(t);
            shape_cache_[static_cast<std::size_t>(t)] =
                raster_shape2d(static_cast<Shape2dType>(info.value), info.x, info.y, info.r);
        }
    }
}

ShapeGrid Executor::operator()(const Program& program) const {
    if (program.dsl != vocab_->dsl()) throw InvalidProgram("program DSL does not match executor");
    switch (program.dsl) {
        case DslId::Csg2d: return exec_csg2d(program);
        case DslId::Csg3d: return exec_csg3d(program);
        case DslId::ShapeAssembly: return exec_shapeassembly(program);
    }
    throw InvalidProgram("unknown DSL");
}

ShapeGrid Executor::exec_csg2d(const Program& program) const { return exec_csg(program); }
ShapeGrid Executor::exec_csg3d(const Program& program) const { return exec_csg(program); }

ShapeGrid Executor::exec_csg(const Program& program) const {
    std::vector<ShapeGrid> stack;
    const auto& toks = program.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const int t = toks[i];
        if (t < 0 || t >= vocab_->size()) throw InvalidProgram("token index out of range");
        const TokenInfo& info = vocab_->info(t);
        switch (info.kind) {
            case TokenKind::Shape2d: stack.push_back(shape_cache_[static_cast<std::size_t>(t)]); break;
            case TokenKind::Prim3d: {
                if (i + 6 >= toks.size()) throw InvalidProgram("truncated 3D primitive");
                std::array<int, 6> params{};
                for (std::size_t k = 0; k < 6; ++k) {
                    const TokenInfo& pi = vocab_->info(toks[i + 1 + k]);
                    if (pi.kind != TokenKind::Param3d) throw InvalidProgram("3D primitive expects 6 parameters");
                    params[k] = pi.value;
                }
                i += 6;
                stack.push_back(raster_prim3d(static_cast<Prim3dType>(info.value), params));
                break;
            }
            case TokenKind::BoolOp: {
                if (stack.size() < 2) throw InvalidProgram("operator without two operands");
                ShapeGrid rhs = std::move(stack.back());
                stack.pop_back();
                grid_bool_inplace(static_cast<BoolOp>(info.value), stack.back(), rhs);
                break;
            }
            case TokenKind::Stop:
                if (i + 1 != toks.size()) throw InvalidProgram("tokens after STOP");
                break;
            default: throw InvalidProgram("'" + vocab_->name(t) + "' is not a CSG token");
        }
    }
    if (stack.size() != 1) throw InvalidProgram("CSG program does not reduce to one shape");
    return std::move(stack.back());
}

ShapeGrid Executor::exec_shapeassembly(const Program& program) const {
    const SaLayout layout = sa_layout(sa_structure(*vocab_, program));
    ShapeGrid g = ShapeGrid::cube3d();
    for (const auto& part : layout.parts) grid_bool_inplace(BoolOp::Union, g, voxelize(part));
    return g;
}

}  // namespace plad
