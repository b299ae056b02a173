#pragma once

#include "esod/box.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace esod {

/// Ground truth for one image. Boxes are in image pixels, centre form.
struct SceneAnnotation {
    std::string name;
    int image_w = 1;
    int image_h = 1;
    std::vector<BoundingBox> boxes;
};

/// VisDrone detection annotations: one
/// "left,top,width,height,score,category,truncation,occlusion" line per
/// object, integers, optional trailing comma. Ignored regions (category 0)
/// and zero-extent boxes are dropped; the rest are clipped to the image.
/// Throws ParseError naming the offending line.
SceneAnnotation parse_visdrone(const std::string& text, int image_w, int image_h);
SceneAnnotation read_visdrone(const std::filesystem::path& path, int image_w, int image_h);

/// Inverse of parse_visdrone for integral boxes (score 1, truncation and
/// occlusion 0).
std::string format_visdrone(const SceneAnnotation& scene);

}  // namespace esod
