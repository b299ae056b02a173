#pragma once

// Conversions between netpbm images and feature stacks, and the diagnostic
// overlay renderer.

#include "esod/grid.hpp"
#include "esod/pnm.hpp"
#include "esod/slicer.hpp"
#include "esod/sparse_head.hpp"

#include <filesystem>
#include <vector>

namespace esod {

/// 3 x H x W in [0, 1]; greymaps are replicated into all three channels.
FeatureStack image_to_features(const pnm::Image& image);

/// 8-bit P6 of image_w x image_h pixels. The background is the luminance of
/// `image` (mid grey when absent), the mask brightens the red channel over
/// each stride x stride cell, patches are outlined in green and detections
/// in blue. Outlines are one pixel wide and drawn inside the box.
pnm::Image render_overlay(int image_w, int image_h, const FeatureStack* image, const Grid2D& mask,
                          const PatchPlan& plan, const std::vector<Detection>& detections, int stride = 8);

void write_overlay(const std::filesystem::path& path, int image_w, int image_h, const FeatureStack* image,
                   const Grid2D& mask, const PatchPlan& plan, const std::vector<Detection>& detections,
                   int stride = 8);

}  // namespace esod
