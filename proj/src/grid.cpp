#include "plad/grid.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "plad/errors.hpp"

namespace plad {

ShapeGrid::ShapeGrid(int rank, std::array<int, 3> dims) : rank_(rank), dims_(dims) {
    if (rank != 2 && rank != 3) {
        throw DimMismatch("grid rank must be 2 or 3");
    }
    if (rank == 2) {
        dims_[2] = 1;
    }
    for (int d : dims_) {
        if (d <= 0) throw DimMismatch("grid dimensions must be positive");
    }
    cells_ = static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) *
             static_cast<std::size_t>(dims_[2]);
    words_.assign((cells_ + 63) / 64, 0);
}

ShapeGrid ShapeGrid::for_dsl(DslId dsl) { return dsl == DslId::Csg2d ? square2d() : cube3d(); }

void ShapeGrid::fill_row(int x0, int x1, int y, int z) noexcept {
    if (x1 <= x0) return;
    std::size_t lo = index(x0, y, z);
    const std::size_t hi = index(x1 - 1, y, z) + 1;
    while (lo < hi) {
        const std::size_t w = lo >> 6;
        const std::size_t bit = lo & 63;
        const std::size_t n = std::min<std::size_t>(64 - bit, hi - lo);
        const std::uint64_t mask = (n == 64) ? ~std::uint64_t{0} : (((std::uint64_t{1} << n) - 1) << bit);
        words_[w] |= mask;
        lo += n;
    }
}

void ShapeGrid::fill(bool on) noexcept {
    for (auto& w : words_) w = on ? ~std::uint64_t{0} : 0;
    clear_padding();
}

void ShapeGrid::clear_padding() noexcept {
    const std::size_t tail = cells_ & 63;
    if (tail && !words_.empty()) {
        words_.back() &= (std::uint64_t{1} << tail) - 1;
    }
}

std::size_t ShapeGrid::count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

void grid_bool_inplace(BoolOp op, ShapeGrid& a, const ShapeGrid& b) {
    if (!a.same_shape(b)) {
        throw DimMismatch("grid_bool: dimension mismatch");
    }
    auto aw = a.words();
    auto bw = b.words();
    switch (op) {
        case BoolOp::Union:
            for (std::size_t i = 0; i < aw.size(); ++i) aw[i] |= bw[i];
            break;
        case BoolOp::Intersect:
            for (std::size_t i = 0; i < aw.size(); ++i) aw[i] &= bw[i];
            break;
        case BoolOp::Subtract:
            for (std::size_t i = 0; i < aw.size(); ++i) aw[i] &= ~bw[i];
            break;
    }
}

ShapeGrid grid_bool(BoolOp op, const ShapeGrid& a, const ShapeGrid& b) {
    ShapeGrid out = a;
    grid_bool_inplace(op, out, b);
    return out;
}

ShapeGrid complement(const ShapeGrid& a) {
    ShapeGrid full = a;
    full.fill(true);
    return grid_bool(BoolOp::Subtract, full, a);
}

void write_grid(std::ostream& out, const ShapeGrid& g) {
    out << "PLADGRID " << g.rank() << ' ' << g.dim(0) << ' ' << g.dim(1);
    if (g.rank() == 3) out << ' ' << g.dim(2);
    out << '\n';
    std::string bytes((g.cell_count() + 7) / 8, '\0');
    const auto words = g.words();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<char>((words[i / 8] >> (8 * (i % 8))) & 0xFFu);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ShapeGrid read_grid(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("PLADGRID: unexpected end of input");
    }
    std::istringstream hdr(line);
    std::string magic;
    int rank = 0;
    std::array<int, 3> dims{1, 1, 1};
    hdr >> magic >> rank >> dims[0] >> dims[1];
    if (rank == 3) hdr >> dims[2];
    if (!hdr || magic != "PLADGRID" || (rank != 2 && rank != 3) || dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0 ||
        dims[0] > 4096 || dims[1] > 4096 || dims[2] > 4096) {
        throw IoError("PLADGRID: malformed header '" + line + "'");
    }
    ShapeGrid g(rank, dims);
    std::string bytes((g.cell_count() + 7) / 8, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw IoError("PLADGRID: truncated cell data");
    }
    auto words = g.words();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        words[i / 8] |= std::uint64_t{static_cast<unsigned char>(bytes[i])} << (8 * (i % 8));
    }
    return g;
}

std::vector<ShapeGrid> read_grids(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<ShapeGrid> out;
    while (in.peek() != std::char_traits<char>::eof()) {
        out.push_back(read_grid(in));
    }
    return out;
}

void write_grids(const std::filesystem::path& path, std::span<const ShapeGrid> grids) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto& g : grids) write_grid(out, g);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void write_pgm(const std::filesystem::path& path, const ShapeGrid& g) {
    if (g.rank() != 2) {
        throw DimMismatch("PGM export needs a 2D grid");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "P5\n" << g.dim(0) << ' ' << g.dim(1) << "\n255\n";
    std::string row(static_cast<std::size_t>(g.dim(0)), '\0');
    for (int y = 0; y < g.dim(1); ++y) {
        for (int x = 0; x < g.dim(0); ++x) {
            row[static_cast<std::size_t>(x)] = g.at(x, y) ? '\0' : static_cast<char>(255);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

ShapeGrid project(const ShapeGrid& g, int axis) {
    if (g.rank() != 3 || axis < 0 || axis > 2) {
        throw DimMismatch("projection needs a 3D grid and axis 0..2");
    }
    // Remaining axes in increasing order become the image (x, y).
    const int a = axis == 0 ? 1 : 0;
    const int b = axis == 2 ? 1 : 2;
    ShapeGrid out(2, {g.dim(a), g.dim(b), 1});
    for (int z = 0; z < g.dim(2); ++z) {
        for (int y = 0; y < g.dim(1); ++y) {
            for (int x = 0; x < g.dim(0); ++x) {
                if (!g.at(x, y, z)) continue;
                const std::array<int, 3> p{x, y, z};
                out.set(p[static_cast<std::size_t>(a)], p[static_cast<std::size_t>(b)], 0, true);
            }
        }
    }
    return out;
}

}  // namespace plad
