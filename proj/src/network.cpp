#include "esod/network.hpp"

#include "esod/error.hpp"

#include <cmath>
#include <random>

namespace esod {

namespace {

ConvSpec he_layer(int in, int out, int kernel, int stride, std::mt19937_64& rng) {
    ConvSpec spec = ConvSpec::zeros(in, out, kernel, stride);
    spec.floor_output = stride > 1;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (in * kernel * kernel)));
    for (double& w : spec.weights) {
        w = dist(rng);
    }
    return spec;
}

FeatureStack conv_relu_chain(FeatureStack x, const std::vector<ConvSpec>& layers) {
    for (const ConvSpec& layer : layers) {
        x = pointwise(conv2d(x, layer), Pointwise::Relu);
    }
    return x;
}

}  // namespace

Network Network::toy(int num_categories, std::uint64_t seed) {
    if (num_categories < 1) {
        throw ParameterError("num_categories must be >= 1");
    }
    std::mt19937_64 rng(seed);
    Network net;
    net.num_categories = num_categories;
    net.stem = {he_layer(3, 8, 3, 2, rng), he_layer(8, 16, 3, 2, rng), he_layer(16, 32, 3, 2, rng)};
    net.seeker = SeekerParams::random(32, rng);
    net.neck = {he_layer(32, 32, 3, 1, rng), he_layer(32, 32, 3, 1, rng)};
    net.head = {he_layer(32, 32, 3, 1, rng), he_layer(32, 5 + num_categories, 1, 1, rng)};
    return net;
}

int Network::stem_stride() const {
    int stride = 1;
    for (const ConvSpec& layer : stem) {
        stride *= layer.stride;
    }
    return stride;
}

int Network::feature_channels() const {
    return stem.empty() ? 0 : stem.back().out_channels;
}

void Network::validate() const {
    if (stem.empty()) {
        throw ParameterError("network needs at least one stem layer");
    }
    if (stem_stride() != kStemStride) {
        throw ParameterError("stem strides must multiply to 8, got " + std::to_string(stem_stride()));
    }
    int channels = stem.front().in_channels;
    for (const ConvSpec& layer : stem) {
        layer.validate();
        if (layer.in_channels != channels) {
            throw ShapeError("stem channel chain is inconsistent");
        }
        channels = layer.out_channels;
    }
    seeker.validate();
    if (seeker.channels != channels) {
        throw ShapeError("seeker channels do not match the stem output");
    }
    for (const auto* chain : {&neck, &head}) {
        for (const ConvSpec& layer : *chain) {
            layer.validate();
            if (!layer.is_same_padded()) {
                throw ParameterError("neck and head layers must be stride-1 and same-padded");
            }
            if (layer.in_channels != channels) {
                throw ShapeError("neck/head channel chain is inconsistent");
            }
            channels = layer.out_channels;
        }
    }
    if (head.empty() || head.back().out_channels != 5 + num_categories) {
        throw ShapeError("head must end in 5 + num_categories channels");
    }
}

FeatureStack Network::run_stem(const FeatureStack& image) const {
    return conv_relu_chain(image, stem);
}

FeatureStack Network::run_neck(const FeatureStack& features) const {
    return conv_relu_chain(features, neck);
}

}  // namespace esod
