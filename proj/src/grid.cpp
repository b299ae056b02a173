#include "esod/grid.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace esod {

namespace {

void require_positive(int value, const char* what) {
    if (value <= 0) {
        throw ShapeError(std::string(what) + " must be positive, got " + std::to_string(value));
    }
}

int floor_div(int a, int b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

int ceil_div(int a, int b) {
    return -floor_div(-a, b);
}

void require_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ParameterError("grid values must be finite");
        }
    }
}

}  // namespace

Grid2D::Grid2D(int height, int width, double fill) : height_(height), width_(width) {
    require_positive(height, "grid height");
    require_positive(width, "grid width");
    values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Grid2D::Grid2D(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    require_positive(height, "grid height");
    require_positive(width, "grid width");
    if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw ParameterError("grid value count does not match " + std::to_string(height) + "x" +
                             std::to_string(width));
    }
    require_finite(values_);
}

double Grid2D::sum() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

FeatureStack::FeatureStack(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
    require_positive(channels, "channel count");
    require_positive(height, "feature height");
    require_positive(width, "feature width");
    values_.assign(static_cast<std::size_t>(channels) * plane_size(), fill);
}

FeatureStack::FeatureStack(int channels, int height, int width, std::vector<double> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
    require_positive(channels, "channel count");
    require_positive(height, "feature height");
    require_positive(width, "feature width");
    if (values_.size() != static_cast<std::size_t>(channels) * plane_size()) {
        throw ParameterError("feature value count does not match shape");
    }
    require_finite(values_);
}

Grid2D FeatureStack::channel_grid(int channel) const {
    if (channel < 0 || channel >= channels_) {
        throw ShapeError("channel index out of range");
    }
    auto p = plane(channel);
    return Grid2D(height_, width_, std::vector<double>(p.begin(), p.end()));
}

FeatureStack FeatureStack::from_grid(const Grid2D& grid) {
    auto v = grid.values();
    return FeatureStack(1, grid.height(), grid.width(), std::vector<double>(v.begin(), v.end()));
}

BitGrid::BitGrid(int height, int width, bool fill) : height_(height), width_(width) {
    require_positive(height, "bit grid height");
    require_positive(width, "bit grid width");
    bits_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill ? 1 : 0);
}

std::size_t BitGrid::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Grid2D BitGrid::to_grid() const {
    Grid2D out(height_, width_);
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            out(r, c) = test(r, c) ? 1.0 : 0.0;
        }
    }
    return out;
}

ConvSpec ConvSpec::zeros(int in_channels, int out_channels, int kernel, int stride) {
    ConvSpec spec;
    spec.in_channels = in_channels;
    spec.out_channels = out_channels;
    spec.kernel_h = kernel;
    spec.kernel_w = kernel;
    spec.stride = stride;
    spec.padding = (kernel - 1) / 2;
    spec.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, 0.0);
    spec.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    return spec;
}

void ConvSpec::validate() const {
    if (in_channels <= 0 || out_channels <= 0) {
        throw ParameterError("conv channel counts must be positive");
    }
    if (kernel_h <= 0 || kernel_w <= 0 || kernel_h % 2 == 0 || kernel_w % 2 == 0) {
        throw ParameterError("conv kernel dimensions must be odd and positive");
    }
    if (stride <= 0 || padding < 0) {
        throw ParameterError("conv stride must be positive and padding non-negative");
    }
    const std::size_t expected = static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
    if (weights.size() != expected) {
        throw ParameterError("conv weight count " + std::to_string(weights.size()) + " != " +
                             std::to_string(expected));
    }
    if (bias.size() != static_cast<std::size_t>(out_channels)) {
        throw ParameterError("conv bias count does not match out_channels");
    }
}

int ConvSpec::output_extent(int input, int kernel) const {
    const int span = input + 2 * padding - kernel;
    if (span < 0) {
        throw ShapeError("convolution window larger than padded input");
    }
    if (span % stride != 0 && !floor_output) {
        throw ShapeError("convolution output size (" + std::to_string(input) + " + 2*" +
                         std::to_string(padding) + " - " + std::to_string(kernel) + ")/" +
                         std::to_string(stride) + " + 1 is not an integer");
    }
    return span / stride + 1;
}

FeatureStack conv2d(const FeatureStack& input, const ConvSpec& spec) {
    spec.validate();
    if (spec.in_channels != input.channels()) {
        throw ShapeError("conv2d expects " + std::to_string(spec.in_channels) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    const int in_h = input.height();
    const int in_w = input.width();
    const int out_h = spec.output_extent(in_h, spec.kernel_h);
    const int out_w = spec.output_extent(in_w, spec.kernel_w);
    const int s = spec.stride;
    const int p = spec.padding;

    FeatureStack out(spec.out_channels, out_h, out_w);
    for (int o = 0; o < spec.out_channels; ++o) {
        auto dst = out.plane(o);
        std::fill(dst.begin(), dst.end(), spec.bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < spec.in_channels; ++i) {
            auto src = input.plane(i);
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
                for (int kx = 0; kx < spec.kernel_w; ++kx) {
                    const double w = spec.weight(o, i, ky, kx);
                    if (w == 0.0) {
                        continue;
                    }
                    // ox range whose input column ox*s - p + kx lies in [0, in_w)
                    const int ox_lo = std::max(0, ceil_div(p - kx, s));
                    const int ox_hi = std::min(out_w - 1, floor_div(in_w - 1 + p - kx, s));
                    for (int oy = 0; oy < out_h; ++oy) {
                        const int iy = oy * s - p + ky;
                        if (iy < 0 || iy >= in_h) {
                            continue;
                        }
                        const double* row = src.data() + static_cast<std::size_t>(iy) * in_w;
                        double* orow = dst.data() + static_cast<std::size_t>(oy) * out_w;
                        for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                            orow[ox] += w * row[ox * s - p + kx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

FeatureStack depthwise_conv(const FeatureStack& input, int kernel_size,
                            std::span<const double> weights, std::span<const double> bias) {
    if (kernel_size <= 0 || kernel_size % 2 == 0) {
        throw ParameterError("depthwise kernel size must be odd, got " + std::to_string(kernel_size));
    }
    const int channels = input.channels();
    const std::size_t taps = static_cast<std::size_t>(kernel_size) * kernel_size;
    if (weights.size() != taps * static_cast<std::size_t>(channels)) {
        throw ParameterError("depthwise weight count does not match channels*k*k");
    }
    if (bias.size() != static_cast<std::size_t>(channels)) {
        throw ParameterError("depthwise bias count does not match channels");
    }
    const int h = input.height();
    const int w = input.width();
    const int pad = (kernel_size - 1) / 2;

    FeatureStack out(channels, h, w);
    for (int c = 0; c < channels; ++c) {
        auto src = input.plane(c);
        auto dst = out.plane(c);
        std::fill(dst.begin(), dst.end(), bias[static_cast<std::size_t>(c)]);
        const double* kernel = weights.data() + static_cast<std::size_t>(c) * taps;
        for (int ky = 0; ky < kernel_size; ++ky) {
            const int dy = ky - pad;
            const int y_lo = std::max(0, -dy);
            const int y_hi = std::min(h, h - dy);
            for (int kx = 0; kx < kernel_size; ++kx) {
                const double k = kernel[ky * kernel_size + kx];
                if (k == 0.0) {
                    continue;
                }
                const int dx = kx - pad;
                const int x_lo = std::max(0, -dx);
                const int x_hi = std::min(w, w - dx);
                for (int y = y_lo; y < y_hi; ++y) {
                    const double* row = src.data() + static_cast<std::size_t>(y + dy) * w + dx;
                    double* orow = dst.data() + static_cast<std::size_t>(y) * w;
                    for (int x = x_lo; x < x_hi; ++x) {
                        orow[x] += k * row[x];
                    }
                }
            }
        }
    }
    return out;
}

Grid2D maxpool_same(const Grid2D& grid, int window) {
    if (window <= 0 || window % 2 == 0) {
        throw ParameterError("pooling window must be odd");
    }
    const int r = window / 2;
    Grid2D out(grid.height(), grid.width());
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (int yy = std::max(0, y - r); yy <= std::min(grid.height() - 1, y + r); ++yy) {
                for (int xx = std::max(0, x - r); xx <= std::min(grid.width() - 1, x + r); ++xx) {
                    best = std::max(best, grid(yy, xx));
                }
            }
            out(y, x) = best;
        }
    }
    return out;
}

Grid2D avgpool_same(const Grid2D& grid, int window) {
    if (window <= 0 || window % 2 == 0) {
        throw ParameterError("pooling window must be odd");
    }
    const int r = window / 2;
    const double divisor = static_cast<double>(window) * window;
    const int h = grid.height();
    const int w = grid.width();

    // Summed-area table keeps this linear in the grid size.
    std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    auto at = [&](int y, int x) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            at(y + 1, x + 1) = grid(y, x) + at(y, x + 1) + at(y + 1, x) - at(y, x);
        }
    }
    Grid2D out(h, w);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h, y + r + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w, x + r + 1);
            out(y, x) = (at(y1, x1) - at(y0, x1) - at(y1, x0) + at(y0, x0)) / divisor;
        }
    }
    return out;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

void apply_pointwise(std::span<double> values, Pointwise kind) {
    switch (kind) {
    case Pointwise::Relu:
        for (double& v : values) {
            v = v > 0.0 ? v : 0.0;
        }
        break;
    case Pointwise::Sigmoid:
        for (double& v : values) {
            v = sigmoid(v);
        }
        break;
    }
}

}  // namespace

Grid2D pointwise(Grid2D grid, Pointwise kind) {
    apply_pointwise(grid.values(), kind);
    return grid;
}

FeatureStack pointwise(FeatureStack stack, Pointwise kind) {
    apply_pointwise(stack.values(), kind);
    return stack;
}

BatchNorm BatchNorm::identity(int channels) {
    const auto n = static_cast<std::size_t>(channels);
    return BatchNorm{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0),
                     std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), 0.0};
}

void BatchNorm::validate(int channels) const {
    const auto n = static_cast<std::size_t>(channels);
    if (mean.size() != n || var.size() != n || gamma.size() != n || beta.size() != n) {
        throw ParameterError("batchnorm parameter arrays must have one entry per channel");
    }
    if (eps < 0.0) {
        throw ParameterError("batchnorm eps must be non-negative");
    }
    for (double v : var) {
        if (v < 0.0) {
            throw ParameterError("batchnorm variance must be non-negative");
        }
        if (v + eps <= 0.0) {
            throw ParameterError("batchnorm var + eps must be positive");
        }
    }
}

FeatureStack batchnorm_apply(const FeatureStack& stack, const BatchNorm& bn) {
    bn.validate(stack.channels());
    FeatureStack out = stack;
    for (int c = 0; c < stack.channels(); ++c) {
        const auto i = static_cast<std::size_t>(c);
        const double scale = bn.gamma[i] / std::sqrt(bn.var[i] + bn.eps);
        const double shift = bn.beta[i] - bn.mean[i] * scale;
        for (double& v : out.plane(c)) {
            v = v * scale + shift;
        }
    }
    return out;
}

}  // namespace esod
