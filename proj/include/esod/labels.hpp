#pragma once

// Objectness pseudo-labels: Gaussian masks from boxes, optionally modulated by
// an external segmentation mask.

#include "esod/box.hpp"
#include "esod/grid.hpp"

#include <filesystem>
#include <span>

namespace esod {

struct GaussianSpec {
    double tau = 0.5;

    void validate() const;
};

enum class MaskProvenance { Gaussian, External, Hybrid };

struct PseudoMask {
    Grid2D grid;
    MaskProvenance provenance = MaskProvenance::Gaussian;
};

enum class HybridMode { PerImage, PerBox };

/// Values below this are flushed to zero in generated masks.
inline constexpr double kMaskFlushThreshold = 1e-4;

/// Evaluates exp(0.5 * (dx^2/(w/2)^2 + dy^2/(h/2)^2) * log(tau)) at every cell
/// centre (integer coordinates) for each box and keeps the elementwise max.
/// Boxes are in mask-cell units. Throws AnnotationError on non-positive extents.
PseudoMask gaussian_mask(std::span<const BoundingBox> boxes, int height, int width,
                         const GaussianSpec& spec = {});

/// Cell range [col0, col1] x [row0, row1] (inclusive) covered by a box,
/// clipped to the grid. Empty when col0 > col1 or row0 > row1.
struct Footprint {
    int col0;
    int row0;
    int col1;
    int row1;

    bool empty() const noexcept { return col0 > col1 || row0 > row1; }
};

Footprint box_footprint(const BoundingBox& box, int height, int width);

/// PerImage: product with the external mask if it has any mass, else the
/// Gaussian unchanged. PerBox: the same rule evaluated inside each box
/// footprint; cells outside every footprint are zero.
PseudoMask hybrid_mask(const PseudoMask& gaussian, const PseudoMask& external, HybridMode mode,
                       std::span<const BoundingBox> boxes);

PseudoMask load_mask_pgm(const std::filesystem::path& path);
void save_mask_pgm(const Grid2D& mask, const std::filesystem::path& path, int maxval = 255);

}  // namespace esod
