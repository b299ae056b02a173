#pragma once

// Dense numeric carriers and the handful of layers everything else is built
// from. Convolution is cross-correlation (no kernel flip); conv and average
// pooling pad with zeros, max pooling pads with -inf.

#include <cstddef>
#include <span>
#include <vector>

namespace esod {

class Grid2D {
public:
    Grid2D() : Grid2D(1, 1) {}
    Grid2D(int height, int width, double fill = 0.0);
    /// Throws ParameterError on a length mismatch or a non-finite value.
    Grid2D(int height, int width, std::vector<double> values);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(int row, int col) const { return values_[index(row, col)]; }
    double& operator()(int row, int col) { return values_[index(row, col)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool same_shape(const Grid2D& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool contains(int row, int col) const noexcept {
        return row >= 0 && row < height_ && col >= 0 && col < width_;
    }
    double sum() const noexcept;

    friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

class FeatureStack {
public:
    FeatureStack() : FeatureStack(1, 1, 1) {}
    FeatureStack(int channels, int height, int width, double fill = 0.0);
    FeatureStack(int channels, int height, int width, std::vector<double> values);

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }

    double operator()(int channel, int row, int col) const { return values_[index(channel, row, col)]; }
    double& operator()(int channel, int row, int col) { return values_[index(channel, row, col)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> plane(int channel) const noexcept {
        return std::span<const double>(values_).subspan(static_cast<std::size_t>(channel) * plane_size(), plane_size());
    }
    std::span<double> plane(int channel) noexcept {
        return std::span<double>(values_).subspan(static_cast<std::size_t>(channel) * plane_size(), plane_size());
    }

    Grid2D channel_grid(int channel) const;
    static FeatureStack from_grid(const Grid2D& grid);

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

private:
    std::size_t index(int channel, int row, int col) const noexcept {
        return (static_cast<std::size_t>(channel) * static_cast<std::size_t>(height_) +
                static_cast<std::size_t>(row)) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

class BitGrid {
public:
    BitGrid() : BitGrid(1, 1) {}
    BitGrid(int height, int width, bool fill = false);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }

    bool test(int row, int col) const { return bits_[index(row, col)] != 0; }
    void set(int row, int col, bool value = true) { bits_[index(row, col)] = value ? 1 : 0; }
    bool contains(int row, int col) const noexcept {
        return row >= 0 && row < height_ && col >= 0 && col < width_;
    }
    std::size_t count() const noexcept;
    bool all() const noexcept { return count() == bits_.size(); }
    Grid2D to_grid() const;

    friend bool operator==(const BitGrid&, const BitGrid&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<unsigned char> bits_;
};

/// Parameters of one convolutional layer. Weights are laid out
/// [out][in][kh][kw]. With floor_output set, a non-integral output extent
/// rounds down the way deep-learning frameworks do; otherwise it is an error.
struct ConvSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;
    std::vector<double> weights = {1.0};
    std::vector<double> bias = {0.0};
    bool floor_output = false;

    /// Zero-initialised layer with same padding.
    static ConvSpec zeros(int in_channels, int out_channels, int kernel, int stride = 1);

    void validate() const;
    bool operator==(const ConvSpec&) const = default;
    bool is_same_padded() const noexcept {
        return stride == 1 && padding == (kernel_h - 1) / 2 && kernel_h == kernel_w;
    }
    double& weight(int out, int in, int ky, int kx) {
        return weights[((static_cast<std::size_t>(out) * in_channels + in) * kernel_h + ky) * kernel_w + kx];
    }
    double weight(int out, int in, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(out) * in_channels + in) * kernel_h + ky) * kernel_w + kx];
    }

    /// Output extent for an input extent along one axis; throws ShapeError.
    int output_extent(int input, int kernel) const;
};

FeatureStack conv2d(const FeatureStack& input, const ConvSpec& spec);

FeatureStack depthwise_conv(const FeatureStack& input, int kernel_size,
                            std::span<const double> weights, std::span<const double> bias);

Grid2D maxpool_same(const Grid2D& grid, int window = 3);

/// Divisor is window*window everywhere, including at the borders.
Grid2D avgpool_same(const Grid2D& grid, int window = 9);

enum class Pointwise { Relu, Sigmoid };

double sigmoid(double x) noexcept;
Grid2D pointwise(Grid2D grid, Pointwise kind);
FeatureStack pointwise(FeatureStack stack, Pointwise kind);

/// Inference-mode batch normalisation parameters, one entry per channel.
struct BatchNorm {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> gamma;
    std::vector<double> beta;
    double eps = 1e-5;

    static BatchNorm identity(int channels);
    void validate(int channels) const;
    bool operator==(const BatchNorm&) const = default;
};

FeatureStack batchnorm_apply(const FeatureStack& stack, const BatchNorm& bn);

}  // namespace esod
