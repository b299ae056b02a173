#pragma once

// Deterministic synthetic scenes with drone-imagery-like sparsity: a few
// clusters of small, mutually separated objects on a large empty canvas.

#include "esod/grid.hpp"
#include "esod/scene.hpp"

#include <cstdint>
#include <vector>

namespace esod {

struct SynthParams {
    std::uint64_t seed = 0;
    int image_w = 1024;
    int image_h = 768;
    double cluster_count_mean = 4.0;
    double objects_per_cluster_mean = 4.0;
    int object_size_min = 40;  // pixels, inclusive
    int object_size_max = 88;
    double cluster_spread = 50.0;  // std-dev of object offsets from the cluster centre
    int min_gap = 8;               // pixels kept free between any two boxes
    int num_categories = 10;

    void validate() const;
};

/// Scene i depends only on (seed, i) and the parameters.
std::vector<SceneAnnotation> synth_scenes(const SynthParams& params, int n);
SceneAnnotation synth_scene(const SynthParams& params, int index);

/// 3 x H x W image in [0, 1]: noisy grey background with objects drawn as
/// bright, category-tinted rectangles.
FeatureStack render_scene(const SceneAnnotation& scene, std::uint64_t seed);

}  // namespace esod
