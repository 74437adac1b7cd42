#pragma once

#include <array>
#include <compare>
#include <vector>

#include "plad/dsl.hpp"
#include "plad/grid.hpp"

namespace plad {

enum class SimilarityKind : std::uint8_t { ChamferNeg, IoU };

/// Higher is better for both kinds: IoU in [0, 1], ChamferNeg = -CD <= 0.
struct Similarity {
    SimilarityKind kind = SimilarityKind::IoU;
    double value = 0.0;

    friend bool operator==(const Similarity& a, const Similarity& b) { return a.value == b.value; }
    friend auto operator<=>(const Similarity& a, const Similarity& b) { return a.value <=> b.value; }
};

SimilarityKind similarity_kind(DslId dsl);

/// |a & b| / |a | b|; 1.0 when both are empty. Throws DimMismatch.
double iou(const ShapeGrid& a, const ShapeGrid& b);

/// Occupied cells with an unoccupied 4-neighbour or lying on the grid border.
std::vector<std::array<int, 2>> boundary_pixels(const ShapeGrid& g2d);

/// Diagonal of the canvas, returned when exactly one boundary set is empty.
double chamfer_sentinel(const ShapeGrid& g2d);

/// Symmetric mean nearest-boundary distance in pixels, computed through an
/// exact squared Euclidean distance transform. Throws DimMismatch.
double chamfer(const ShapeGrid& a, const ShapeGrid& b);

Similarity similarity(DslId dsl, const ShapeGrid& target, const ShapeGrid& candidate);

/// RL reward in [0, 1]: IoU for 3D, max(0, 1 - CD / chamfer_scale) for 2D.
double reward(DslId dsl, const ShapeGrid& target, const ShapeGrid& candidate, double chamfer_scale = 16.0);

}  // namespace plad
