#include "esod/sparse_head.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace esod {

namespace {

void require_same_padded(std::span<const ConvSpec> head) {
    for (const ConvSpec& layer : head) {
        layer.validate();
        if (!layer.is_same_padded()) {
            throw ParameterError("sparse head layers must be stride-1, square and same-padded");
        }
    }
    for (std::size_t i = 1; i < head.size(); ++i) {
        if (head[i].in_channels != head[i - 1].out_channels) {
            throw ShapeError("head layer " + std::to_string(i) + " input channels do not match previous layer");
        }
    }
}

// Accumulation order matches conv2d (input channel, ky, kx) so results are
// bit-identical to the dense path.
void conv_at(const FeatureStack& in, const ConvSpec& spec, int y, int x, double* out) {
    const int p = spec.padding;
    for (int o = 0; o < spec.out_channels; ++o) {
        double acc = spec.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < spec.in_channels; ++i) {
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
                const int iy = y - p + ky;
                if (iy < 0 || iy >= in.height()) {
                    continue;
                }
                for (int kx = 0; kx < spec.kernel_w; ++kx) {
                    const int ix = x - p + kx;
                    const double w = spec.weight(o, i, ky, kx);
                    if (w == 0.0 || ix < 0 || ix >= in.width()) {
                        continue;
                    }
                    acc += w * in(i, iy, ix);
                }
            }
        }
        out[o] = acc;
    }
}

BitGrid dilate(const BitGrid& marks, int radius) {
    if (radius == 0) {
        return marks;
    }
    BitGrid out(marks.height(), marks.width());
    for (int y = 0; y < marks.height(); ++y) {
        for (int x = 0; x < marks.width(); ++x) {
            if (!marks.test(y, x)) {
                continue;
            }
            for (int yy = std::max(0, y - radius); yy <= std::min(marks.height() - 1, y + radius); ++yy) {
                for (int xx = std::max(0, x - radius); xx <= std::min(marks.width() - 1, x + radius); ++xx) {
                    out.set(yy, xx);
                }
            }
        }
    }
    return out;
}

// Positions each layer must evaluate, last layer first mapped back to front.
std::vector<BitGrid> layer_masks(int h, int w, std::span<const ConvSpec> head, const std::vector<Point>& outputs) {
    std::vector<BitGrid> masks(head.size(), BitGrid(h, w));
    if (head.empty()) {
        return masks;
    }
    for (const Point& pt : outputs) {
        masks.back().set(pt.y, pt.x);
    }
    for (std::size_t i = head.size() - 1; i > 0; --i) {
        masks[i - 1] = dilate(masks[i], head[i].padding);
    }
    return masks;
}

}  // namespace

std::vector<Point> expand_samples(const SparseSampleSet& samples, int height, int width) {
    if (samples.dilation_radius < 0) {
        throw ParameterError("dilation radius must be non-negative");
    }
    BitGrid seen(height, width);
    std::vector<Point> out;
    const int r = samples.dilation_radius;
    for (const Point& pt : samples.coordinates) {
        if (!seen.contains(pt.y, pt.x)) {
            throw ParameterError("sample (" + std::to_string(pt.x) + ", " + std::to_string(pt.y) +
                                 ") is outside the " + std::to_string(width) + "x" + std::to_string(height) +
                                 " feature map");
        }
        for (int y = std::max(0, pt.y - r); y <= std::min(height - 1, pt.y + r); ++y) {
            for (int x = std::max(0, pt.x - r); x <= std::min(width - 1, pt.x + r); ++x) {
                if (!seen.test(y, x)) {
                    seen.set(y, x);
                    out.push_back(Point{x, y});
                }
            }
        }
    }
    return out;
}

SparseOutput sparse_conv_at(const FeatureStack& features, const ConvSpec& spec, const SparseSampleSet& samples) {
    spec.validate();
    if (!spec.is_same_padded()) {
        throw ParameterError("sparse_conv_at requires a stride-1 same-padded layer");
    }
    if (spec.in_channels != features.channels()) {
        throw ShapeError("sparse_conv_at: channel mismatch");
    }
    SparseOutput out;
    out.coordinates = expand_samples(samples, features.height(), features.width());
    out.channels = spec.out_channels;
    out.values.resize(out.coordinates.size() * static_cast<std::size_t>(spec.out_channels));
    for (std::size_t i = 0; i < out.coordinates.size(); ++i) {
        conv_at(features, spec, out.coordinates[i].y, out.coordinates[i].x,
                out.values.data() + i * static_cast<std::size_t>(spec.out_channels));
    }
    return out;
}

FeatureStack head_forward_dense(const FeatureStack& features, std::span<const ConvSpec> head) {
    require_same_padded(head);
    FeatureStack x = features;
    for (std::size_t i = 0; i < head.size(); ++i) {
        x = conv2d(x, head[i]);
        if (i + 1 < head.size()) {
            x = pointwise(std::move(x), Pointwise::Relu);
        }
    }
    return x;
}

SparseOutput head_forward_sparse(const FeatureStack& features, std::span<const ConvSpec> head,
                                 const SparseSampleSet& samples) {
    require_same_padded(head);
    if (head.empty()) {
        throw ParameterError("head must have at least one layer");
    }
    if (head.front().in_channels != features.channels()) {
        throw ShapeError("head input channels do not match features");
    }
    const int h = features.height();
    const int w = features.width();
    const std::vector<Point> outputs = expand_samples(samples, h, w);
    const std::vector<BitGrid> masks = layer_masks(h, w, head, outputs);

    // Dense-sized buffers, sparse compute: only marked positions are written,
    // and every in-bounds position a later layer reads is marked.
    FeatureStack current = features;
    for (std::size_t li = 0; li + 1 < head.size(); ++li) {
        const ConvSpec& layer = head[li];
        FeatureStack next(layer.out_channels, h, w);
        std::vector<double> buf(static_cast<std::size_t>(layer.out_channels));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!masks[li].test(y, x)) {
                    continue;
                }
                conv_at(current, layer, y, x, buf.data());
                for (int o = 0; o < layer.out_channels; ++o) {
                    const double v = buf[static_cast<std::size_t>(o)];
                    next(o, y, x) = v > 0.0 ? v : 0.0;
                }
            }
        }
        current = std::move(next);
    }

    const ConvSpec& last = head.back();
    SparseOutput out;
    out.coordinates = outputs;
    out.channels = last.out_channels;
    out.values.resize(outputs.size() * static_cast<std::size_t>(last.out_channels));
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        conv_at(current, last, outputs[i].y, outputs[i].x,
                out.values.data() + i * static_cast<std::size_t>(last.out_channels));
    }
    return out;
}

std::vector<std::size_t> sparse_layer_positions(int height, int width, std::span<const ConvSpec> head,
                                                const SparseSampleSet& samples) {
    require_same_padded(head);
    const std::vector<BitGrid> masks = layer_masks(height, width, head, expand_samples(samples, height, width));
    std::vector<std::size_t> counts;
    counts.reserve(masks.size());
    for (const BitGrid& m : masks) {
        counts.push_back(m.count());
    }
    return counts;
}

std::vector<Detection> decode_detections(const SparseOutput& out, int num_categories, double stride,
                                         double score_threshold) {
    if (num_categories < 1) {
        throw ParameterError("decode_detections needs at least one category");
    }
    if (out.channels != 5 + num_categories) {
        throw ShapeError("head output has " + std::to_string(out.channels) + " channels, expected " +
                         std::to_string(5 + num_categories));
    }
    std::vector<Detection> detections;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto v = out.at(i);
        const double score = sigmoid(v[0]);
        if (score < score_threshold) {
            continue;
        }
        const Point pt = out.coordinates[i];
        Detection d;
        d.xc = (pt.x + 0.5 + std::tanh(v[3])) * stride;
        d.yc = (pt.y + 0.5 + std::tanh(v[4])) * stride;
        d.w = std::exp(std::clamp(v[1], -4.0, 4.0)) * stride;
        d.h = std::exp(std::clamp(v[2], -4.0, 4.0)) * stride;
        d.score = score;
        d.category = static_cast<int>(std::max_element(v.begin() + 5, v.end()) - (v.begin() + 5));
        detections.push_back(d);
    }
    return detections;
}

std::string format_detections(std::span<const Detection> detections) {
    std::string out;
    char line[160];
    for (const Detection& d : detections) {
        std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f %.6f %d\n", d.xc, d.yc, d.w, d.h, d.score,
                      d.category);
        out += line;
    }
    return out;
}

}  // namespace esod
