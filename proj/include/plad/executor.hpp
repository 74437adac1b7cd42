#pragma once

#include <array>
#include <memory>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/grid.hpp"

namespace plad {

/// 2D primitive on the 64x64 canvas: cell (i, j) is set iff (i+0.5, j+0.5)
/// lies inside. Squares have half-side r; triangles are equilateral, apex
/// toward row 0, inscribed in the radius-r circle.
ShapeGrid raster_shape2d(Shape2dType type, int cx, int cy, int r, int side = kGrid2d);

/// 3D primitive on the 32^3 grid. params = cx, cy, cz, ex, ey, ez in voxel
/// units; extents are full lengths. Values outside 1..32 are accepted.
ShapeGrid raster_prim3d(Prim3dType type, const std::array<int, 6>& params, int side = kGrid3d);

// --- ShapeAssembly ----------------------------------------------------------

/// Axis-aligned cuboid in bbox-normalized world space, where the unit cube
/// [-0.5, 0.5]^3 maps onto the voxel grid.
struct SaBox {
    std::array<double, 3> center{};
    std::array<double, 3> extent{};
    int block = -1;  // declaring block, -1 for the bbox
    bool copy = false;

    double lo(int a) const { return center[static_cast<std::size_t>(a)] - 0.5 * extent[static_cast<std::size_t>(a)]; }
    double hi(int a) const { return center[static_cast<std::size_t>(a)] + 0.5 * extent[static_cast<std::size_t>(a)]; }
};

struct SaLayout {
    SaBox bbox;
    std::vector<SaBox> parts;  // declared cuboids and their symmetry copies, in emission order
};

/// Resolves attach / squeeze / symmetry commands into placed cuboids.
SaLayout sa_layout(const SaProgram& program);
ShapeGrid voxelize(const SaBox& box, int side = kGrid3d);
/// Cells covered by exactly one part, per part.
std::vector<int> sa_unique_counts(const SaLayout& layout, int side = kGrid3d);

/// Deterministic program executor. Immutable after construction and safe to
/// share across threads. 2D shape tokens are rasterized once up front.
class Executor {
public:
    explicit Executor(std::shared_ptr<const Vocabulary> vocab);

    const Vocabulary& vocab() const noexcept { return *vocab_; }
    ShapeGrid operator()(const Program& program) const;

    ShapeGrid exec_csg2d(const Program& program) const;
    ShapeGrid exec_csg3d(const Program& program) const;
    ShapeGrid exec_shapeassembly(const Program& program) const;

private:
    ShapeGrid exec_csg(const Program& program) const;

    std::shared_ptr<const Vocabulary> vocab_;
    std::vector<ShapeGrid> shape_cache_;  // indexed by token, 2D only
};

}  // namespace plad
