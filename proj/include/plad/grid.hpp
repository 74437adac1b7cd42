#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "plad/dsl.hpp"

namespace plad {

inline constexpr int kGrid2d = 64;
inline constexpr int kGrid3d = 32;

/// Binary occupancy over a 2D (W x H) or 3D (D x D x D) lattice. Cells are
/// addressed row-major with x fastest and stored as packed 64-bit words.
class ShapeGrid {
public:
    ShapeGrid() = default;
    ShapeGrid(int rank, std::array<int, 3> dims);

    static ShapeGrid square2d(int side = kGrid2d) { return ShapeGrid(2, {side, side, 1}); }
    static ShapeGrid cube3d(int side = kGrid3d) { return ShapeGrid(3, {side, side, side}); }
    /// Empty grid with the fixed dimensions used by `dsl`.
    static ShapeGrid for_dsl(DslId dsl);

    int rank() const noexcept { return rank_; }
    const std::array<int, 3>& dims() const noexcept { return dims_; }
    int dim(int axis) const noexcept { return dims_[static_cast<std::size_t>(axis)]; }
    std::size_t cell_count() const noexcept { return cells_; }
    bool same_shape(const ShapeGrid& o) const noexcept { return rank_ == o.rank_ && dims_ == o.dims_; }

    std::size_t index(int x, int y, int z = 0) const noexcept {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(z));
    }

    bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    bool at(int x, int y, int z = 0) const noexcept { return test(index(x, y, z)); }
    void set(std::size_t i, bool on = true) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        words_[i >> 6] = on ? (words_[i >> 6] | bit) : (words_[i >> 6] & ~bit);
    }
    void set(int x, int y, int z, bool on) noexcept { set(index(x, y, z), on); }
    /// Sets x in [x0, x1) on row (y, z).
    void fill_row(int x0, int x1, int y, int z = 0) noexcept;
    void fill(bool on) noexcept;

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    bool full() const noexcept { return count() == cells_; }

    std::span<std::uint64_t> words() noexcept { return words_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    friend bool operator==(const ShapeGrid&, const ShapeGrid&) = default;

private:
    void clear_padding() noexcept;

    int rank_ = 0;
    std::array<int, 3> dims_{0, 0, 0};
    std::size_t cells_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Cellwise OR / AND / AND-NOT. Throws DimMismatch.
ShapeGrid grid_bool(BoolOp op, const ShapeGrid& a, const ShapeGrid& b);
void grid_bool_inplace(BoolOp op, ShapeGrid& a, const ShapeGrid& b);
ShapeGrid complement(const ShapeGrid& a);

// --- PLADGRID container ---------------------------------------------------
// Header "PLADGRID <rank> <d0> <d1> [<d2>]\n" followed by the cells packed
// 8 per byte, row-major, least significant bit first, zero padded.

void write_grid(std::ostream& out, const ShapeGrid& g);
/// Throws IoError on a malformed record.
ShapeGrid read_grid(std::istream& in);
std::vector<ShapeGrid> read_grids(const std::filesystem::path& path);
void write_grids(const std::filesystem::path& path, std::span<const ShapeGrid> grids);

/// Binary PGM (P5, maxval 255); occupied cells are black.
void write_pgm(const std::filesystem::path& path, const ShapeGrid& g2d);
/// Max-projection of a 3D grid along `axis`, as a 2D grid.
ShapeGrid project(const ShapeGrid& g3d, int axis);

}  // namespace plad
