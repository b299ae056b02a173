#include "esod/labels.hpp"

#include "esod/error.hpp"
#include "esod/pnm.hpp"

#include <algorithm>
#include <cmath>

namespace esod {

void GaussianSpec::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw ParameterError("gaussian tau must lie in (0, 1)");
    }
}

PseudoMask gaussian_mask(std::span<const BoundingBox> boxes, int height, int width, const GaussianSpec& spec) {
    spec.validate();
    Grid2D grid(height, width);
    const double log_tau = std::log(spec.tau);
    // Beyond this normalised radius every value is below the flush threshold.
    const double reach = std::sqrt(2.0 * std::log(kMaskFlushThreshold) / log_tau);

    for (const BoundingBox& box : boxes) {
        if (!(box.w > 0.0) || !(box.h > 0.0)) {
            throw AnnotationError("box extents must be positive");
        }
        const double hw = box.w / 2.0;
        const double hh = box.h / 2.0;
        const int c0 = std::max(0, static_cast<int>(std::floor(box.xc - reach * hw)));
        const int c1 = std::min(width - 1, static_cast<int>(std::ceil(box.xc + reach * hw)));
        const int r0 = std::max(0, static_cast<int>(std::floor(box.yc - reach * hh)));
        const int r1 = std::min(height - 1, static_cast<int>(std::ceil(box.yc + reach * hh)));
        for (int r = r0; r <= r1; ++r) {
            const double dy = (r - box.yc) / hh;
            for (int c = c0; c <= c1; ++c) {
                const double dx = (c - box.xc) / hw;
                const double v = std::exp(0.5 * (dx * dx + dy * dy) * log_tau);
                grid(r, c) = std::max(grid(r, c), v);
            }
        }
    }
    for (double& v : grid.values()) {
        v = v < kMaskFlushThreshold ? 0.0 : std::min(v, 1.0);
    }
    return PseudoMask{std::move(grid), MaskProvenance::Gaussian};
}

Footprint box_footprint(const BoundingBox& box, int height, int width) {
    return Footprint{std::max(0, nearest_cell(box.left())), std::max(0, nearest_cell(box.top())),
                     std::min(width - 1, nearest_cell(box.right())),
                     std::min(height - 1, nearest_cell(box.bottom()))};
}

PseudoMask hybrid_mask(const PseudoMask& gaussian, const PseudoMask& external, HybridMode mode,
                       std::span<const BoundingBox> boxes) {
    const Grid2D& g = gaussian.grid;
    const Grid2D& s = external.grid;
    if (!g.same_shape(s)) {
        throw ShapeError("hybrid_mask: gaussian and external masks differ in shape");
    }

    if (mode == HybridMode::PerImage) {
        double mass = 0.0;
        for (double v : s.values()) {
            mass += std::abs(v);
        }
        if (!(mass > 0.0)) {
            return PseudoMask{g, MaskProvenance::Gaussian};
        }
        Grid2D out = g;
        auto ov = out.values();
        auto sv = s.values();
        for (std::size_t i = 0; i < ov.size(); ++i) {
            ov[i] *= sv[i];
        }
        return PseudoMask{std::move(out), MaskProvenance::Hybrid};
    }

    // Overlapping footprints keep the larger of their per-box results.
    Grid2D out(g.height(), g.width());
    for (const BoundingBox& box : boxes) {
        const Footprint fp = box_footprint(box, g.height(), g.width());
        if (fp.empty()) {
            continue;
        }
        double mass = 0.0;
        for (int r = fp.row0; r <= fp.row1; ++r) {
            for (int c = fp.col0; c <= fp.col1; ++c) {
                mass += std::abs(s(r, c));
            }
        }
        const bool use_product = mass > 0.0;
        for (int r = fp.row0; r <= fp.row1; ++r) {
            for (int c = fp.col0; c <= fp.col1; ++c) {
                const double v = use_product ? g(r, c) * s(r, c) : g(r, c);
                out(r, c) = std::max(out(r, c), v);
            }
        }
    }
    return PseudoMask{std::move(out), MaskProvenance::Hybrid};
}

PseudoMask load_mask_pgm(const std::filesystem::path& path) {
    const pnm::Image image = pnm::read(path);
    if (image.channels != 1) {
        throw FormatError("mask file must be a greymap (P2/P5): " + path.string());
    }
    Grid2D grid(image.height, image.width);
    auto values = grid.values();
    const double scale = 1.0 / image.maxval;
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = image.samples[i] * scale;
    }
    return PseudoMask{std::move(grid), MaskProvenance::External};
}

void save_mask_pgm(const Grid2D& mask, const std::filesystem::path& path, int maxval) {
    if (maxval <= 0 || maxval > 65535) {
        throw ParameterError("maxval must be in [1, 65535]");
    }
    pnm::Image image;
    image.width = mask.width();
    image.height = mask.height();
    image.channels = 1;
    image.maxval = maxval;
    image.samples.reserve(mask.size());
    for (double v : mask.values()) {
        const double clipped = std::clamp(v, 0.0, 1.0);
        image.samples.push_back(static_cast<std::uint16_t>(std::lround(clipped * maxval)));
    }
    pnm::write(path, image);
}

}  // namespace esod
