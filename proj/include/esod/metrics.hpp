#pragma once

// Recall upper bounds, mask quality, dataset sparsity statistics and the
// multiply-accumulate cost model.

#include "esod/grid.hpp"
#include "esod/network.hpp"
#include "esod/scene.hpp"
#include "esod/slicer.hpp"
#include "esod/sparse_head.hpp"

#include <cstdint>
#include <vector>

namespace esod {

/// Ratio of hit objects. An empty scene reports 1.0 with `vacuous` set.
struct Recall {
    double ratio = 1.0;
    std::vector<bool> hits;
    bool vacuous = false;
};

/// An object counts when some single patch encloses more than half of its
/// area. Geometry is real-valued in mask units: the box spans
/// [left/stride, right/stride] and a patch [x1, x2).
Recall bpr_box(const SceneAnnotation& scene, const PatchPlan& plan, double stride = kStemStride);

/// An object counts when its centre's nearest mask cell is in the centre set.
Recall bpr_ctr(const SceneAnnotation& scene, const CenterSet& centers, double stride = kStemStride);

struct BprResult {
    Recall box;
    Recall ctr;
};

struct MaskPR {
    double precision = 1.0;
    double recall = 1.0;
    bool precision_vacuous = false;
    bool recall_vacuous = false;
};

/// Both masks binarised at `threshold`; an empty denominator yields 1.0.
MaskPR mask_pr(const Grid2D& pred, const Grid2D& label, double threshold = kDefaultActivationThreshold);

using Macs = std::uint64_t;

Macs conv_cost(const ConvSpec& spec, int out_h, int out_w);
Macs depthwise_cost(int kernel, int channels, int out_h, int out_w);

/// Multiply-accumulates per output position of a same-padded layer chain.
Macs per_position_cost(const std::vector<ConvSpec>& layers);

struct StageCost {
    Macs stem = 0;
    Macs seeker = 0;
    Macs neck = 0;
    Macs head = 0;

    Macs total() const noexcept { return stem + seeker + neck + head; }
    Macs neck_head() const noexcept { return neck + head; }
};

struct CostReport {
    StageCost dense;
    StageCost sliced;
    /// Fraction of grid cells covered by at least one patch.
    double preserved_patch_ratio = 0.0;
    /// Summed patch area over grid area; exceeds 1 when patches overlap.
    double patch_area_ratio = 0.0;
    /// Set when the plan's area reaches the grid's and the neck runs densely.
    bool dense_neck = false;
};

/// Assigns each sample to the first plan box containing it, in patch-local
/// coordinates. Samples outside every box are dropped.
std::vector<std::vector<Point>> assign_to_patches(const PatchPlan& plan, const std::vector<Point>& samples);

/// True when running the neck per patch would cost at least as much as one
/// dense pass.
bool plan_needs_dense_neck(const PatchPlan& plan, int grid_h, int grid_w);

/// Stem and seeker at full resolution; neck per preserved patch; head at the
/// receptive-field expansion of the samples inside each patch. Falls back to
/// a dense neck (head still sparse, on the full grid) when the plan covers
/// at least the grid's area.
CostReport pipeline_cost(const Network& net, int image_h, int image_w, const PatchPlan& plan,
                         const std::vector<Point>& samples);

/// Fraction of the k x k image cells that no box overlaps with positive area.
double patch_emptiness(const SceneAnnotation& scene, int k);

/// Union area of the boxes (clipped to the image) over image area.
double pixel_occupancy(const SceneAnnotation& scene);

}  // namespace esod
