#include "esod/overlay.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <cmath>

namespace esod {

namespace {

struct Canvas {
    int w;
    int h;
    std::vector<std::uint16_t> px;

    void put(int x, int y, int r, int g, int b) {
        if (x < 0 || y < 0 || x >= w || y >= h) {
            return;
        }
        const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3;
        px[i] = static_cast<std::uint16_t>(r);
        px[i + 1] = static_cast<std::uint16_t>(g);
        px[i + 2] = static_cast<std::uint16_t>(b);
    }

    // Inclusive pixel corners.
    void outline(int x0, int y0, int x1, int y1, int r, int g, int b) {
        for (int x = x0; x <= x1; ++x) {
            put(x, y0, r, g, b);
            put(x, y1, r, g, b);
        }
        for (int y = y0; y <= y1; ++y) {
            put(x0, y, r, g, b);
            put(x1, y, r, g, b);
        }
    }
};

}  // namespace

FeatureStack image_to_features(const pnm::Image& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw FormatError("image must have 1 or 3 channels");
    }
    FeatureStack out(3, image.height, image.width);
    const double scale = 1.0 / static_cast<double>(image.maxval);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::size_t base =
                (static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) + static_cast<std::size_t>(x)) *
                static_cast<std::size_t>(image.channels);
            for (int c = 0; c < 3; ++c) {
                out(c, y, x) = image.samples[base + static_cast<std::size_t>(image.channels == 3 ? c : 0)] * scale;
            }
        }
    }
    return out;
}

pnm::Image render_overlay(int image_w, int image_h, const FeatureStack* image, const Grid2D& mask,
                          const PatchPlan& plan, const std::vector<Detection>& detections, int stride) {
    if (image_w <= 0 || image_h <= 0 || stride <= 0) {
        throw ShapeError("overlay: dimensions and stride must be positive");
    }
    if (image != nullptr && (image->width() != image_w || image->height() != image_h || image->channels() != 3)) {
        throw ShapeError("overlay: image does not match the canvas");
    }
    Canvas canvas{image_w, image_h, std::vector<std::uint16_t>(static_cast<std::size_t>(image_w) * image_h * 3)};
    for (int y = 0; y < image_h; ++y) {
        for (int x = 0; x < image_w; ++x) {
            double grey = 0.5;
            if (image != nullptr) {
                grey = 0.299 * (*image)(0, y, x) + 0.587 * (*image)(1, y, x) + 0.114 * (*image)(2, y, x);
            }
            const int my = y / stride;
            const int mx = x / stride;
            const double m = (my < mask.height() && mx < mask.width()) ? std::clamp(mask(my, mx), 0.0, 1.0) : 0.0;
            const double base = 0.6 * std::clamp(grey, 0.0, 1.0);
            const auto level = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
            canvas.put(x, y, level(base + 0.4 * m), level(base), level(base));
        }
    }
    for (const PatchBox& b : plan.boxes) {
        canvas.outline(b.x1 * stride, b.y1 * stride, b.x2 * stride - 1, b.y2 * stride - 1, 0, 255, 0);
    }
    for (const Detection& d : detections) {
        const int x0 = static_cast<int>(std::floor(d.xc - d.w / 2.0));
        const int y0 = static_cast<int>(std::floor(d.yc - d.h / 2.0));
        const int x1 = static_cast<int>(std::ceil(d.xc + d.w / 2.0)) - 1;
        const int y1 = static_cast<int>(std::ceil(d.yc + d.h / 2.0)) - 1;
        canvas.outline(x0, y0, x1, y1, 0, 64, 255);
    }
    pnm::Image out;
    out.width = image_w;
    out.height = image_h;
    out.channels = 3;
    out.maxval = 255;
    out.samples = std::move(canvas.px);
    return out;
}

void write_overlay(const std::filesystem::path& path, int image_w, int image_h, const FeatureStack* image,
                   const Grid2D& mask, const PatchPlan& plan, const std::vector<Detection>& detections,
                   int stride) {
    pnm::write(path, render_overlay(image_w, image_h, image, mask, plan, detections, stride));
}

}  // namespace esod
