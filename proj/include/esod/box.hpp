#pragma once

#include <cmath>

namespace esod {

/// Axis-aligned box in centre form. Units depend on context: image pixels for
/// annotations, mask cells once mapped through to_mask_frame().
struct BoundingBox {
    double xc = 0.0;
    double yc = 0.0;
    double w = 1.0;
    double h = 1.0;
    int category = 0;

    double left() const noexcept { return xc - w / 2.0; }
    double right() const noexcept { return xc + w / 2.0; }
    double top() const noexcept { return yc - h / 2.0; }
    double bottom() const noexcept { return yc + h / 2.0; }
    double area() const noexcept { return w * h; }

    static BoundingBox from_tlwh(double left, double top, double w, double h, int category = 0) {
        return BoundingBox{left + w / 2.0, top + h / 2.0, w, h, category};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Maps an image-pixel box onto a stride-s mask grid whose cell (i, j)
/// covers pixels [s*j, s*j + s) x [s*i, s*i + s) and is sampled at its
/// centre, i.e. at integer mask coordinates.
inline BoundingBox to_mask_frame(const BoundingBox& box, double stride) {
    return BoundingBox{box.xc / stride - 0.5, box.yc / stride - 0.5, box.w / stride, box.h / stride,
                       box.category};
}

/// Nearest integer cell; exact half-way points go to the lower index so they
/// agree with row-major tie breaking.
inline int nearest_cell(double coordinate) {
    return static_cast<int>(std::ceil(coordinate - 0.5));
}

}  // namespace esod
