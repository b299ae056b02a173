#include "esod/metrics.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <numeric>

namespace esod {

namespace {

Recall finish(std::vector<bool> hits) {
    Recall r;
    if (hits.empty()) {
        r.vacuous = true;
        r.ratio = 1.0;
        return r;
    }
    const auto n = static_cast<double>(std::count(hits.begin(), hits.end(), true));
    r.ratio = n / static_cast<double>(hits.size());
    r.hits = std::move(hits);
    return r;
}

double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

Recall bpr_box(const SceneAnnotation& scene, const PatchPlan& plan, double stride) {
    std::vector<bool> hits;
    hits.reserve(scene.boxes.size());
    for (const BoundingBox& b : scene.boxes) {
        const double l = b.left() / stride;
        const double r = b.right() / stride;
        const double t = b.top() / stride;
        const double d = b.bottom() / stride;
        const double area = (r - l) * (d - t);
        double best = 0.0;
        for (const PatchBox& p : plan.boxes) {
            const double inter = overlap(l, r, p.x1, p.x2) * overlap(t, d, p.y1, p.y2);
            best = std::max(best, inter / area);
        }
        hits.push_back(best > 0.5);
    }
    return finish(std::move(hits));
}

Recall bpr_ctr(const SceneAnnotation& scene, const CenterSet& centers, double stride) {
    std::vector<bool> hits;
    hits.reserve(scene.boxes.size());
    for (const BoundingBox& b : scene.boxes) {
        const BoundingBox m = to_mask_frame(b, stride);
        const int cx = std::max(0, nearest_cell(m.xc));
        const int cy = std::max(0, nearest_cell(m.yc));
        hits.push_back(std::any_of(centers.begin(), centers.end(),
                                   [&](const Center& c) { return c.x == cx && c.y == cy; }));
    }
    return finish(std::move(hits));
}

MaskPR mask_pr(const Grid2D& pred, const Grid2D& label, double threshold) {
    if (!pred.same_shape(label)) {
        throw ShapeError("mask_pr: prediction and label differ in shape");
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    auto p = pred.values();
    auto y = label.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool pp = p[i] >= threshold;
        const bool yy = y[i] >= threshold;
        tp += (pp && yy) ? 1 : 0;
        fp += (pp && !yy) ? 1 : 0;
        fn += (!pp && yy) ? 1 : 0;
    }
    MaskPR out;
    if (tp + fp == 0) {
        out.precision_vacuous = true;
    } else {
        out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        out.recall_vacuous = true;
    } else {
        out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    return out;
}

Macs conv_cost(const ConvSpec& spec, int out_h, int out_w) {
    return static_cast<Macs>(spec.kernel_h) * spec.kernel_w * spec.in_channels * spec.out_channels *
           static_cast<Macs>(out_h) * static_cast<Macs>(out_w);
}

Macs depthwise_cost(int kernel, int channels, int out_h, int out_w) {
    return static_cast<Macs>(kernel) * kernel * channels * static_cast<Macs>(out_h) * static_cast<Macs>(out_w);
}

Macs per_position_cost(const std::vector<ConvSpec>& layers) {
    Macs sum = 0;
    for (const ConvSpec& layer : layers) {
        sum += conv_cost(layer, 1, 1);
    }
    return sum;
}

std::vector<std::vector<Point>> assign_to_patches(const PatchPlan& plan, const std::vector<Point>& samples) {
    std::vector<std::vector<Point>> out(plan.boxes.size());
    for (const Point& s : samples) {
        for (std::size_t i = 0; i < plan.boxes.size(); ++i) {
            const PatchBox& b = plan.boxes[i];
            if (b.contains(s.x, s.y)) {
                out[i].push_back(Point{s.x - b.x1, s.y - b.y1});
                break;
            }
        }
    }
    return out;
}

bool plan_needs_dense_neck(const PatchPlan& plan, int grid_h, int grid_w) {
    Macs area = 0;
    for (const PatchBox& b : plan.boxes) {
        area += static_cast<Macs>(b.width()) * static_cast<Macs>(b.height());
    }
    return area >= static_cast<Macs>(grid_h) * static_cast<Macs>(grid_w);
}

CostReport pipeline_cost(const Network& net, int image_h, int image_w, const PatchPlan& plan,
                         const std::vector<Point>& samples) {
    CostReport report;
    int h = image_h;
    int w = image_w;
    for (const ConvSpec& layer : net.stem) {
        h = layer.output_extent(h, layer.kernel_h);
        w = layer.output_extent(w, layer.kernel_w);
        report.dense.stem += conv_cost(layer, h, w);
    }
    report.dense.seeker = depthwise_cost(kSeekerKernel, net.seeker.channels, h, w) + conv_cost(net.seeker.pw, h, w);
    const Macs positions = static_cast<Macs>(h) * static_cast<Macs>(w);
    report.dense.neck = per_position_cost(net.neck) * positions;
    report.dense.head = per_position_cost(net.head) * positions;

    report.sliced.stem = report.dense.stem;
    report.sliced.seeker = report.dense.seeker;

    Macs area = 0;
    for (const PatchBox& b : plan.boxes) {
        area += static_cast<Macs>(b.width()) * static_cast<Macs>(b.height());
    }
    BitGrid covered(h, w);
    for (const PatchBox& b : plan.boxes) {
        for (int y = std::max(0, b.y1); y < std::min(h, b.y2); ++y) {
            for (int x = std::max(0, b.x1); x < std::min(w, b.x2); ++x) {
                covered.set(y, x);
            }
        }
    }
    report.preserved_patch_ratio = static_cast<double>(covered.count()) / static_cast<double>(positions);
    report.patch_area_ratio = static_cast<double>(area) / static_cast<double>(positions);
    report.dense_neck = plan_needs_dense_neck(plan, h, w);

    auto head_cost = [&](int ph, int pw, const std::vector<Point>& pts) {
        const std::vector<std::size_t> counts =
            sparse_layer_positions(ph, pw, net.head, SparseSampleSet{pts, 0});
        Macs cost = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            cost += conv_cost(net.head[i], 1, 1) * static_cast<Macs>(counts[i]);
        }
        return cost;
    };

    if (report.dense_neck) {
        report.sliced.neck = report.dense.neck;
        report.sliced.head = head_cost(h, w, samples);
    } else {
        report.sliced.neck = per_position_cost(net.neck) * area;
        const auto local = assign_to_patches(plan, samples);
        for (std::size_t i = 0; i < plan.boxes.size(); ++i) {
            report.sliced.head += head_cost(plan.boxes[i].height(), plan.boxes[i].width(), local[i]);
        }
    }
    return report;
}

double patch_emptiness(const SceneAnnotation& scene, int k) {
    if (k < 1) {
        throw ParameterError("patch_emptiness: k must be >= 1");
    }
    const double cw = static_cast<double>(scene.image_w) / k;
    const double ch = static_cast<double>(scene.image_h) / k;
    std::size_t empty = 0;
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
            const double x0 = i * cw;
            const double x1 = (i + 1) * cw;
            const double y0 = j * ch;
            const double y1 = (j + 1) * ch;
            const bool hit = std::any_of(scene.boxes.begin(), scene.boxes.end(), [&](const BoundingBox& b) {
                return overlap(b.left(), b.right(), x0, x1) > 0.0 && overlap(b.top(), b.bottom(), y0, y1) > 0.0;
            });
            empty += hit ? 0 : 1;
        }
    }
    return static_cast<double>(empty) / (static_cast<double>(k) * k);
}

double pixel_occupancy(const SceneAnnotation& scene) {
    // Exact union area on the grid of distinct box edges.
    std::vector<double> xs{0.0, static_cast<double>(scene.image_w)};
    std::vector<double> ys{0.0, static_cast<double>(scene.image_h)};
    for (const BoundingBox& b : scene.boxes) {
        xs.push_back(std::clamp(b.left(), 0.0, static_cast<double>(scene.image_w)));
        xs.push_back(std::clamp(b.right(), 0.0, static_cast<double>(scene.image_w)));
        ys.push_back(std::clamp(b.top(), 0.0, static_cast<double>(scene.image_h)));
        ys.push_back(std::clamp(b.bottom(), 0.0, static_cast<double>(scene.image_h)));
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    const std::size_t nx = xs.size();
    const std::size_t ny = ys.size();
    // 2-D difference array over compressed cells.
    std::vector<int> diff((nx + 1) * (ny + 1), 0);
    auto at = [&](std::size_t y, std::size_t x) -> int& { return diff[y * (nx + 1) + x]; };
    auto index_of = [](const std::vector<double>& v, double value) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), value) - v.begin());
    };
    for (const BoundingBox& b : scene.boxes) {
        const std::size_t x0 = index_of(xs, std::clamp(b.left(), 0.0, static_cast<double>(scene.image_w)));
        const std::size_t x1 = index_of(xs, std::clamp(b.right(), 0.0, static_cast<double>(scene.image_w)));
        const std::size_t y0 = index_of(ys, std::clamp(b.top(), 0.0, static_cast<double>(scene.image_h)));
        const std::size_t y1 = index_of(ys, std::clamp(b.bottom(), 0.0, static_cast<double>(scene.image_h)));
        if (x0 >= x1 || y0 >= y1) {
            continue;
        }
        at(y0, x0) += 1;
        at(y0, x1) -= 1;
        at(y1, x0) -= 1;
        at(y1, x1) += 1;
    }
    double covered = 0.0;
    std::vector<int> row(nx + 1, 0);
    for (std::size_t y = 0; y + 1 < ny; ++y) {
        int running = 0;
        for (std::size_t x = 0; x + 1 < nx; ++x) {
            running += at(y, x);
            row[x] += running;
            if (row[x] > 0) {
                covered += (xs[x + 1] - xs[x]) * (ys[y + 1] - ys[y]);
            }
        }
    }
    return covered / (static_cast<double>(scene.image_w) * scene.image_h);
}

}  // namespace esod
