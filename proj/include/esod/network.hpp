#pragma once

#include "esod/grid.hpp"
#include "esod/seeker.hpp"

#include <cstdint>
#include <vector>

namespace esod {

inline constexpr int kStemStride = 8;

/// Stem -> (seeker) -> neck -> head. Stem and neck layers are followed by a
/// ReLU; head layers by a ReLU except the last.
struct Network {
    std::vector<ConvSpec> stem;
    SeekerParams seeker;
    std::vector<ConvSpec> neck;
    std::vector<ConvSpec> head;
    int num_categories = 10;

    /// Three stride-2 3x3 stem layers (3->8->16->32), two 3x3 neck layers at
    /// 32 channels, and a 3x3 + 1x1 head ending in 5 + num_categories
    /// channels. Weights are He-initialised from the seed.
    static Network toy(int num_categories, std::uint64_t seed);

    void validate() const;
    int stem_stride() const;
    int feature_channels() const;

    FeatureStack run_stem(const FeatureStack& image) const;
    FeatureStack run_neck(const FeatureStack& features) const;
};

}  // namespace esod
