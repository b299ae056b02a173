#include "esod/synth.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace esod {

namespace {

constexpr int kPlacementAttempts = 32;

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

bool separated(const BoundingBox& a, const BoundingBox& b, int gap) {
    return a.right() + gap <= b.left() || b.right() + gap <= a.left() || a.bottom() + gap <= b.top() ||
           b.bottom() + gap <= a.top();
}

}  // namespace

void SynthParams::validate() const {
    if (image_w <= 0 || image_h <= 0) {
        throw ParameterError("synth: image dimensions must be positive");
    }
    if (object_size_min <= 0 || object_size_max < object_size_min) {
        throw ParameterError("synth: object size range must be positive and ordered");
    }
    if (object_size_max > image_w || object_size_max > image_h) {
        throw ParameterError("synth: objects larger than the image");
    }
    if (!(cluster_count_mean > 0.0) || !(objects_per_cluster_mean > 0.0) || cluster_spread < 0.0 || min_gap < 0) {
        throw ParameterError("synth: cluster parameters must be positive");
    }
    if (num_categories < 1) {
        throw ParameterError("synth: num_categories must be >= 1");
    }
}

SceneAnnotation synth_scene(const SynthParams& params, int index) {
    params.validate();
    auto rng = stream_for(params.seed, static_cast<std::uint64_t>(index), 0x5CE);
    std::poisson_distribution<int> cluster_count(params.cluster_count_mean);
    std::poisson_distribution<int> cluster_size(params.objects_per_cluster_mean);
    std::uniform_real_distribution<double> ux(0.0, params.image_w);
    std::uniform_real_distribution<double> uy(0.0, params.image_h);
    std::normal_distribution<double> offset(0.0, params.cluster_spread);
    std::uniform_int_distribution<int> size(params.object_size_min, params.object_size_max);
    std::uniform_int_distribution<int> category(1, params.num_categories);

    SceneAnnotation scene;
    scene.name = "synth_" + std::to_string(index);
    scene.image_w = params.image_w;
    scene.image_h = params.image_h;

    const int clusters = cluster_count(rng);
    for (int c = 0; c < clusters; ++c) {
        const double cx = ux(rng);
        const double cy = uy(rng);
        const int objects = cluster_size(rng);
        for (int o = 0; o < objects; ++o) {
            const int w = size(rng);
            const int h = size(rng);
            const int cat = category(rng);
            for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
                const double ox = cx + offset(rng);
                const double oy = cy + offset(rng);
                const int left = std::clamp(static_cast<int>(std::lround(ox - w / 2.0)), 0, params.image_w - w);
                const int top = std::clamp(static_cast<int>(std::lround(oy - h / 2.0)), 0, params.image_h - h);
                const BoundingBox box = BoundingBox::from_tlwh(left, top, w, h, cat);
                const bool free = std::all_of(scene.boxes.begin(), scene.boxes.end(), [&](const BoundingBox& other) {
                    return separated(box, other, params.min_gap);
                });
                if (free) {
                    scene.boxes.push_back(box);
                    break;
                }
            }
        }
    }
    return scene;
}

std::vector<SceneAnnotation> synth_scenes(const SynthParams& params, int n) {
    if (n < 1) {
        throw ParameterError("synth: scene count must be >= 1");
    }
    std::vector<SceneAnnotation> scenes;
    scenes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        scenes.push_back(synth_scene(params, i));
    }
    return scenes;
}

FeatureStack render_scene(const SceneAnnotation& scene, std::uint64_t seed) {
    auto rng = stream_for(seed, fnv1a(scene.name), 0x1A6E);
    std::uniform_real_distribution<double> noise(-0.06, 0.06);
    FeatureStack image(3, scene.image_h, scene.image_w);
    for (double& v : image.values()) {
        v = 0.35 + noise(rng);
    }
    for (const BoundingBox& b : scene.boxes) {
        const int x0 = std::max(0, static_cast<int>(std::floor(b.left())));
        const int x1 = std::min(scene.image_w, static_cast<int>(std::ceil(b.right())));
        const int y0 = std::max(0, static_cast<int>(std::floor(b.top())));
        const int y1 = std::min(scene.image_h, static_cast<int>(std::ceil(b.bottom())));
        const double tint = 0.15 * static_cast<double>(b.category % 3);
        for (int c = 0; c < 3; ++c) {
            const double level = 0.8 + (c == b.category % 3 ? tint : -tint / 2.0);
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    image(c, y, x) = std::clamp(level + noise(rng), 0.0, 1.0);
                }
            }
        }
    }
    return image;
}

}  // namespace esod
