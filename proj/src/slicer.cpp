#include "esod/slicer.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

namespace esod {

std::string_view to_string(SliceStrategy strategy) {
    switch (strategy) {
    case SliceStrategy::Uniform: return "uniform";
    case SliceStrategy::Greedy: return "greedy";
    case SliceStrategy::Parallel: return "parallel";
    }
    return "unknown";
}

SliceStrategy parse_strategy(std::string_view name) {
    if (name == "uniform") return SliceStrategy::Uniform;
    if (name == "greedy") return SliceStrategy::Greedy;
    if (name == "parallel") return SliceStrategy::Parallel;
    throw ParameterError("unknown slicing strategy '" + std::string(name) + "'");
}

BitGrid activation(const Grid2D& mask, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ParameterError("activation threshold must lie in (0, 1)");
    }
    BitGrid act(mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask(y, x) >= threshold) {
                act.set(y, x);
            }
        }
    }
    return act;
}

CenterSet local_maxima(const Grid2D& mask, const BitGrid& act) {
    if (mask.height() != act.height() || mask.width() != act.width()) {
        throw ShapeError("local_maxima: mask and activation differ in shape");
    }
    const Grid2D pooled = maxpool_same(mask, kCenterWindow);
    const int h = mask.height();
    const int w = mask.width();
    auto is_peak = [&](int y, int x) { return act.test(y, x) && mask(y, x) == pooled(y, x); };

    CenterSet centers;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!is_peak(y, x)) {
                continue;
            }
            // Suppressed by an equal-valued peak that precedes it in row-major order.
            bool suppressed = false;
            for (int dy = -1; dy <= 0 && !suppressed; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx >= 0) {
                        break;
                    }
                    const int yy = y + dy;
                    const int xx = x + dx;
                    if (mask.contains(yy, xx) && mask(yy, xx) == mask(y, x) && is_peak(yy, xx)) {
                        suppressed = true;
                        break;
                    }
                }
            }
            if (!suppressed) {
                centers.push_back(Center{x, y, mask(y, x)});
            }
        }
    }
    return centers;
}

SizeEstimates estimate_sizes(const BitGrid& act, const CenterSet& centers) {
    const Grid2D pooled = avgpool_same(act.to_grid(), kSizeWindow);
    SizeEstimates sizes;
    sizes.reserve(centers.size());
    for (const Center& c : centers) {
        if (!act.contains(c.y, c.x)) {
            throw ParameterError("estimate_sizes: centre out of bounds");
        }
        sizes.push_back(pooled(c.y, c.x));
    }
    return sizes;
}

PatchSize patch_size_for(int grid_height, int grid_width, int k) {
    if (k < 1) {
        throw ParameterError("patch divisor k must be >= 1");
    }
    if (k > grid_height || k > grid_width) {
        throw ParameterError("patch divisor k=" + std::to_string(k) + " exceeds grid " +
                             std::to_string(grid_width) + "x" + std::to_string(grid_height));
    }
    return PatchSize{(grid_width + k - 1) / k, (grid_height + k - 1) / k};
}

PatchBox clamp_box(PatchBox box, int grid_height, int grid_width) {
    const int bw = box.width();
    const int bh = box.height();
    box.x1 = std::clamp(box.x1, 0, std::max(0, grid_width - bw));
    box.y1 = std::clamp(box.y1, 0, std::max(0, grid_height - bh));
    box.x2 = box.x1 + bw;
    box.y2 = box.y1 + bh;
    return box;
}

PatchBox box_centered_at(int x, int y, PatchSize size, int grid_height, int grid_width) {
    const int x1 = x - size.width / 2;
    const int y1 = y - size.height / 2;
    return clamp_box(PatchBox{x1, y1, x1 + size.width, y1 + size.height}, grid_height, grid_width);
}

PatchBox adjust_patch(const PatchBox& box, const BitGrid& act) {
    int min_x = box.x2;
    int min_y = box.y2;
    for (int y = std::max(0, box.y1); y < std::min(act.height(), box.y2); ++y) {
        for (int x = std::max(0, box.x1); x < std::min(act.width(), box.x2); ++x) {
            if (act.test(y, x)) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
            }
        }
    }
    if (min_x == box.x2) {
        return box;
    }
    const int dx = min_x - box.x1;
    const int dy = min_y - box.y1;
    return clamp_box(PatchBox{box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy}, act.height(), act.width());
}

namespace {

// Row-major uniform cells holding at least one centre, as full-size boxes.
std::vector<PatchBox> uniform_candidates(int h, int w, const CenterSet& centers, PatchSize size, int k) {
    std::vector<PatchBox> out;
    for (int j = 0; j < k; ++j) {
        const int y1 = j * size.height;
        if (y1 >= h) {
            break;
        }
        for (int i = 0; i < k; ++i) {
            const int x1 = i * size.width;
            if (x1 >= w) {
                break;
            }
            const PatchBox cell{x1, y1, std::min(x1 + size.width, w), std::min(y1 + size.height, h)};
            const bool occupied = std::any_of(centers.begin(), centers.end(),
                                              [&](const Center& c) { return cell.contains(c.x, c.y); });
            if (occupied) {
                out.push_back(clamp_box(PatchBox{x1, y1, x1 + size.width, y1 + size.height}, h, w));
            }
        }
    }
    return out;
}

}  // namespace

PatchPlan slice_uniform(const BitGrid& act, const CenterSet& centers, int k) {
    const PatchSize size = patch_size_for(act.height(), act.width(), k);
    return PatchPlan{SliceStrategy::Uniform, k, size,
                     uniform_candidates(act.height(), act.width(), centers, size, k)};
}

PatchPlan slice_greedy(const Grid2D& mask, int k, double threshold) {
    const int h = mask.height();
    const int w = mask.width();
    const PatchSize size = patch_size_for(h, w, k);
    const BitGrid act = activation(mask, threshold);
    CenterSet centers = local_maxima(mask, act);
    SizeEstimates sizes = estimate_sizes(act, centers);

    PatchPlan plan{SliceStrategy::Greedy, k, size, {}};
    while (!centers.empty()) {
        // First maximum wins, and centres are stored in row-major order.
        const auto best = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        const Center c = centers[best];
        const PatchBox box = adjust_patch(box_centered_at(c.x, c.y, size, h, w), act);
        plan.boxes.push_back(box);

        std::size_t keep = 0;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            if (!box.contains(centers[i].x, centers[i].y)) {
                centers[keep] = centers[i];
                sizes[keep] = sizes[i];
                ++keep;
            }
        }
        centers.resize(keep);
        sizes.resize(keep);
    }
    return plan;
}

PatchPlan slice_parallel(const Grid2D& mask, int k, double threshold) {
    const int h = mask.height();
    const int w = mask.width();
    const PatchSize size = patch_size_for(h, w, k);
    const BitGrid act = activation(mask, threshold);
    const CenterSet centers = local_maxima(mask, act);

    std::vector<PatchBox> candidates = uniform_candidates(h, w, centers, size, k);
    for (PatchBox& box : candidates) {
        box = adjust_patch(box, act);
    }
    PatchPlan plan{SliceStrategy::Parallel, k, size, {}};
    for (const PatchBox& box : candidates) {
        const bool redundant = std::any_of(plan.boxes.begin(), plan.boxes.end(),
                                           [&](const PatchBox& kept) { return kept.contains(box); });
        if (!redundant) {
            plan.boxes.push_back(box);
        }
    }
    return plan;
}

PatchPlan slice(const Grid2D& mask, SliceStrategy strategy, int k, double threshold) {
    switch (strategy) {
    case SliceStrategy::Uniform: {
        const BitGrid act = activation(mask, threshold);
        return slice_uniform(act, local_maxima(mask, act), k);
    }
    case SliceStrategy::Greedy: return slice_greedy(mask, k, threshold);
    case SliceStrategy::Parallel: return slice_parallel(mask, k, threshold);
    }
    throw ParameterError("unknown slicing strategy");
}

TokenSet select_tokens(const Grid2D& mask, double threshold) {
    const BitGrid act = activation(mask, threshold);
    TokenSet tokens;
    for (int y = 0; y < act.height(); ++y) {
        for (int x = 0; x < act.width(); ++x) {
            if (act.test(y, x)) {
                tokens.push_back(Token{x, y});
            }
        }
    }
    return tokens;
}

std::vector<FeatureStack> extract_patches(const FeatureStack& features, const PatchPlan& plan) {
    std::vector<FeatureStack> patches;
    patches.reserve(plan.boxes.size());
    for (const PatchBox& box : plan.boxes) {
        if (box.x1 < 0 || box.y1 < 0 || box.x2 > features.width() || box.y2 > features.height() ||
            box.width() <= 0 || box.height() <= 0) {
            throw ShapeError("extract_patches: box outside the feature map");
        }
        FeatureStack patch(features.channels(), box.height(), box.width());
        for (int c = 0; c < features.channels(); ++c) {
            for (int y = 0; y < box.height(); ++y) {
                for (int x = 0; x < box.width(); ++x) {
                    patch(c, y, x) = features(c, box.y1 + y, box.x1 + x);
                }
            }
        }
        patches.push_back(std::move(patch));
    }
    return patches;
}

std::string format_plan(const PatchPlan& plan) {
    std::ostringstream out;
    out << to_string(plan.strategy) << ' ' << plan.k << ' ' << plan.patch.width << ' ' << plan.patch.height << '\n';
    for (const PatchBox& b : plan.boxes) {
        out << b.x1 << ' ' << b.y1 << ' ' << b.x2 << ' ' << b.y2 << '\n';
    }
    return out.str();
}

PatchPlan parse_plan(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    PatchPlan plan;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        if (!have_header) {
            std::string strategy;
            if (!(fields >> strategy >> plan.k >> plan.patch.width >> plan.patch.height)) {
                throw ParseError("plan header must be 'strategy k W_p H_p'", line_no);
            }
            try {
                plan.strategy = parse_strategy(strategy);
            } catch (const ParameterError& e) {
                throw ParseError(e.what(), line_no);
            }
            have_header = true;
            continue;
        }
        PatchBox box;
        if (!(fields >> box.x1 >> box.y1 >> box.x2 >> box.y2)) {
            throw ParseError("plan box must be 'x1 y1 x2 y2'", line_no);
        }
        std::string extra;
        if (fields >> extra) {
            throw ParseError("unexpected trailing field in plan box", line_no);
        }
        plan.boxes.push_back(box);
    }
    if (!have_header) {
        throw ParseError("empty plan", line_no);
    }
    return plan;
}

void write_plan(const PatchPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << format_plan(plan);
}

PatchPlan read_plan(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return parse_plan(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

}  // namespace esod
