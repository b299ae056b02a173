#pragma once

// Turns an objectness mask into fixed-size patch boxes.
//
// Coordinates are mask cells: x is the column, y the row. Every tie (plateau
// maxima, equal size estimates, overlapping candidates) is broken in
// row-major order so plans are reproducible.

#include "esod/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace esod {

inline constexpr double kDefaultActivationThreshold = 0.5;
inline constexpr int kCenterWindow = 3;
inline constexpr int kSizeWindow = 9;

struct Center {
    int x = 0;
    int y = 0;
    double score = 0.0;

    friend bool operator==(const Center&, const Center&) = default;
};

using CenterSet = std::vector<Center>;
using SizeEstimates = std::vector<double>;

/// Half-open box [x1, x2) x [y1, y2).
struct PatchBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    int width() const noexcept { return x2 - x1; }
    int height() const noexcept { return y2 - y1; }
    bool contains(int x, int y) const noexcept { return x >= x1 && x < x2 && y >= y1 && y < y2; }
    bool contains(const PatchBox& o) const noexcept {
        return o.x1 >= x1 && o.x2 <= x2 && o.y1 >= y1 && o.y2 <= y2;
    }

    friend bool operator==(const PatchBox&, const PatchBox&) = default;
};

struct PatchSize {
    int width = 1;
    int height = 1;

    friend bool operator==(const PatchSize&, const PatchSize&) = default;
};

enum class SliceStrategy { Uniform, Greedy, Parallel };

std::string_view to_string(SliceStrategy strategy);
SliceStrategy parse_strategy(std::string_view name);

struct PatchPlan {
    SliceStrategy strategy = SliceStrategy::Greedy;
    int k = 1;
    PatchSize patch;
    std::vector<PatchBox> boxes;

    friend bool operator==(const PatchPlan&, const PatchPlan&) = default;
};

struct Token {
    int x = 0;
    int y = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

using TokenSet = std::vector<Token>;

/// Bit set iff value >= threshold.
BitGrid activation(const Grid2D& mask, double threshold = kDefaultActivationThreshold);

/// Activated cells equal to their 3x3 neighbourhood max. Within a group of
/// tied neighbouring maxima only the first in row-major order survives.
CenterSet local_maxima(const Grid2D& mask, const BitGrid& act);

/// Activated-cell count in the 9x9 window around each centre, over 81.
SizeEstimates estimate_sizes(const BitGrid& act, const CenterSet& centers);

/// (ceil(W/k), ceil(H/k)) for a grid of height x width cells.
PatchSize patch_size_for(int grid_height, int grid_width, int k);

/// Translates (never shrinks) a box so that it lies inside the grid.
PatchBox clamp_box(PatchBox box, int grid_height, int grid_width);

/// Fixed-size box whose top-left is (x - W/2, y - H/2), clamped in-bounds.
PatchBox box_centered_at(int x, int y, PatchSize size, int grid_height, int grid_width);

/// Shifts the box so its top-left meets the smallest activated column and row
/// inside it, then clamps. Boxes with no activated cell are returned as is.
PatchBox adjust_patch(const PatchBox& box, const BitGrid& act);

/// k x k uniform cells that contain at least one centre, as full-size boxes.
PatchPlan slice_uniform(const BitGrid& act, const CenterSet& centers, int k);

/// Greedy adaptive slicing: repeatedly centre a patch on the largest
/// remaining object, adjust it, and drop every centre it covers.
PatchPlan slice_greedy(const Grid2D& mask, int k, double threshold = kDefaultActivationThreshold);

/// Single-round variant: adjust every non-empty uniform cell at once, then
/// drop duplicates and contained boxes.
PatchPlan slice_parallel(const Grid2D& mask, int k, double threshold = kDefaultActivationThreshold);

PatchPlan slice(const Grid2D& mask, SliceStrategy strategy, int k,
                double threshold = kDefaultActivationThreshold);

TokenSet select_tokens(const Grid2D& mask, double threshold = kDefaultActivationThreshold);

/// One C x H_p x W_p stack per plan box. Throws ShapeError for boxes that are
/// outside the feature map.
std::vector<FeatureStack> extract_patches(const FeatureStack& features, const PatchPlan& plan);

/// "strategy k W_p H_p" header, then one "x1 y1 x2 y2" line per box.
std::string format_plan(const PatchPlan& plan);
PatchPlan parse_plan(const std::string& text);
void write_plan(const PatchPlan& plan, const std::filesystem::path& path);
PatchPlan read_plan(const std::filesystem::path& path);

}  // namespace esod
