#pragma once

// Detection head evaluated only where it is needed. A chain of stride-1,
// same-padded convolutions (ReLU between layers, none after the last) is run
// at the requested output positions; each earlier layer is computed on the
// receptive-field back-expansion of the later layer's positions, so results
// match the dense head exactly.

#include "esod/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace esod {

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct SparseSampleSet {
    std::vector<Point> coordinates;
    int dilation_radius = 0;
};

/// One row of `channels` values per coordinate, in coordinate order.
struct SparseOutput {
    std::vector<Point> coordinates;
    int channels = 0;
    std::vector<double> values;

    std::span<const double> at(std::size_t i) const {
        return std::span<const double>(values).subspan(i * static_cast<std::size_t>(channels),
                                                       static_cast<std::size_t>(channels));
    }
    std::size_t size() const noexcept { return coordinates.size(); }
};

/// Sample coordinates after Chebyshev dilation, clipping and de-duplication,
/// in first-seen order. Throws ParameterError for out-of-bounds samples.
std::vector<Point> expand_samples(const SparseSampleSet& samples, int height, int width);

/// Values a dense conv2d would produce at the sampled positions.
SparseOutput sparse_conv_at(const FeatureStack& features, const ConvSpec& spec, const SparseSampleSet& samples);

FeatureStack head_forward_dense(const FeatureStack& features, std::span<const ConvSpec> head);
SparseOutput head_forward_sparse(const FeatureStack& features, std::span<const ConvSpec> head,
                                 const SparseSampleSet& samples);

/// Number of positions each head layer evaluates on the sparse path.
std::vector<std::size_t> sparse_layer_positions(int height, int width, std::span<const ConvSpec> head,
                                                const SparseSampleSet& samples);

struct Detection {
    double xc = 0.0;
    double yc = 0.0;
    double w = 1.0;
    double h = 1.0;
    double score = 0.0;
    int category = 0;
};

/// Channel layout: objectness logit, dw, dh, dx, dy, then one logit per
/// category. Centre = (x + 0.5 + tanh(dx), y + 0.5 + tanh(dy)) * stride,
/// extent = exp(clamp(d, -4, 4)) * stride.
std::vector<Detection> decode_detections(const SparseOutput& out, int num_categories, double stride = 8.0,
                                         double score_threshold = 0.5);

/// One "xc yc w h score category" line per detection.
std::string format_detections(std::span<const Detection> detections);

}  // namespace esod
