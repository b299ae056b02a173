#include "esod/pipeline.hpp"

#include "esod/error.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace esod {

std::string_view to_string(MaskSource source) {
    return source == MaskSource::Oracle ? "oracle" : "predicted";
}

MaskSource parse_mask_source(std::string_view name) {
    if (name == "predicted") return MaskSource::Predicted;
    if (name == "oracle") return MaskSource::Oracle;
    throw ParameterError("unknown mask source '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
    network.validate();
    if (k < 1) {
        throw ParameterError("k must be >= 1");
    }
    if (!(activation_threshold > 0.0 && activation_threshold < 1.0) || !(tau > 0.0 && tau < 1.0) ||
        !(score_threshold > 0.0 && score_threshold < 1.0)) {
        throw ParameterError("thresholds must lie in (0, 1)");
    }
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

long long to_integer(std::string_view key, std::string_view value) {
    const std::string v(value);
    char* end = nullptr;
    errno = 0;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || errno != 0 || end != v.c_str() + v.size()) {
        throw ParameterError("setting '" + std::string(key) + "' expects an integer, got '" + v + "'");
    }
    return out;
}

int to_int(std::string_view key, std::string_view value) {
    const long long v = to_integer(key, value);
    if (v < -2147483647LL || v > 2147483647LL) {
        throw ParameterError("setting '" + std::string(key) + "' is out of range");
    }
    return static_cast<int>(v);
}

double to_double(std::string_view key, std::string_view value) {
    const std::string v(value);
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || errno != 0 || end != v.c_str() + v.size()) {
        throw ParameterError("setting '" + std::string(key) + "' expects a number, got '" + v + "'");
    }
    return out;
}

std::string number(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

void apply_setting(RunSettings& s, std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    if (key == "k") s.k = to_int(key, value);
    else if (key == "threshold") s.threshold = to_double(key, value);
    else if (key == "tau") s.tau = to_double(key, value);
    else if (key == "score_threshold") s.score_threshold = to_double(key, value);
    else if (key == "strategy") s.strategy = parse_strategy(value);
    else if (key == "mask_source") s.mask_source = parse_mask_source(value);
    else if (key == "seed") {
        const long long v = to_integer(key, value);
        if (v < 0) {
            throw ParameterError("seed must be non-negative");
        }
        s.seed = static_cast<std::uint64_t>(v);
    }
    else if (key == "num_categories") s.num_categories = to_int(key, value);
    else if (key == "seeker_params") s.seeker_params = value;
    else if (key == "scenes") s.scenes = to_int(key, value);
    else if (key == "synth.image_w") s.synth.image_w = to_int(key, value);
    else if (key == "synth.image_h") s.synth.image_h = to_int(key, value);
    else if (key == "synth.clusters") s.synth.cluster_count_mean = to_double(key, value);
    else if (key == "synth.objects_per_cluster") s.synth.objects_per_cluster_mean = to_double(key, value);
    else if (key == "synth.size_min") s.synth.object_size_min = to_int(key, value);
    else if (key == "synth.size_max") s.synth.object_size_max = to_int(key, value);
    else if (key == "synth.spread") s.synth.cluster_spread = to_double(key, value);
    else if (key == "synth.gap") s.synth.min_gap = to_int(key, value);
    else throw ParameterError("unknown setting '" + std::string(key) + "'");
}

void apply_settings_text(RunSettings& settings, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        try {
            apply_setting(settings, trim(std::string_view(line).substr(0, eq)),
                          std::string_view(line).substr(eq + 1));
        } catch (const ParameterError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

void apply_settings_file(RunSettings& settings, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    apply_settings_text(settings, std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

namespace {

std::map<std::string, std::string> settings_entries(const RunSettings& s) {
    return {
        {"k", std::to_string(s.k)},
        {"threshold", number(s.threshold)},
        {"tau", number(s.tau)},
        {"score_threshold", number(s.score_threshold)},
        {"strategy", std::string(to_string(s.strategy))},
        {"mask_source", std::string(to_string(s.mask_source))},
        {"seed", std::to_string(s.seed)},
        {"num_categories", std::to_string(s.num_categories)},
        {"seeker_params", s.seeker_params},
        {"scenes", std::to_string(s.scenes)},
        {"synth.image_w", std::to_string(s.synth.image_w)},
        {"synth.image_h", std::to_string(s.synth.image_h)},
        {"synth.clusters", number(s.synth.cluster_count_mean)},
        {"synth.objects_per_cluster", number(s.synth.objects_per_cluster_mean)},
        {"synth.size_min", std::to_string(s.synth.object_size_min)},
        {"synth.size_max", std::to_string(s.synth.object_size_max)},
        {"synth.spread", number(s.synth.cluster_spread)},
        {"synth.gap", std::to_string(s.synth.min_gap)},
    };
}

}  // namespace

std::string setting_value(const RunSettings& settings, std::string_view key) {
    const auto entries = settings_entries(settings);
    const auto it = entries.find(std::string(key));
    if (it == entries.end()) {
        throw ParameterError("unknown setting '" + std::string(key) + "'");
    }
    return it->second;
}

std::string format_settings(const RunSettings& settings) {
    std::string out;
    for (const auto& [key, value] : settings_entries(settings)) {
        out += key + " = " + value + "\n";
    }
    return out;
}

PipelineConfig make_pipeline_config(const RunSettings& s) {
    PipelineConfig config;
    config.network = Network::toy(s.num_categories, s.seed);
    if (!s.seeker_params.empty()) {
        config.network.seeker = load_seeker_params(s.seeker_params);
    }
    config.k = s.k;
    config.activation_threshold = s.threshold;
    config.tau = s.tau;
    config.strategy = s.strategy;
    config.mask_source = s.mask_source;
    config.score_threshold = s.score_threshold;
    config.validate();
    return config;
}

PseudoMask scene_label(const SceneAnnotation& scene, int grid_h, int grid_w, double tau) {
    std::vector<BoundingBox> boxes;
    boxes.reserve(scene.boxes.size());
    for (const BoundingBox& b : scene.boxes) {
        boxes.push_back(to_mask_frame(b, kStemStride));
    }
    return gaussian_mask(boxes, grid_h, grid_w, GaussianSpec{tau});
}

MaskSlicing slice_mask(const Grid2D& mask, const PipelineConfig& config) {
    const BitGrid act = activation(mask, config.activation_threshold);
    MaskSlicing out;
    out.centers = local_maxima(mask, act);
    if (act.all()) {
        CenterSet every;
        for (int y = 0; y < mask.height(); ++y) {
            for (int x = 0; x < mask.width(); ++x) {
                every.push_back(Center{x, y, mask(y, x)});
                out.samples.push_back(Point{x, y});
            }
        }
        out.plan = slice_uniform(act, every, config.k);
        out.saturated = true;
    } else {
        out.plan = slice(mask, config.strategy, config.k, config.activation_threshold);
        out.samples.reserve(out.centers.size());
        for (const Center& c : out.centers) {
            out.samples.push_back(Point{c.x, c.y});
        }
    }
    return out;
}

PipelineResult run_pipeline(const FeatureStack& image, const PipelineConfig& config, const SceneAnnotation* scene) {
    config.validate();
    const Network& net = config.network;
    if (config.mask_source == MaskSource::Oracle && scene == nullptr) {
        throw ParameterError("oracle mask source requires an annotated scene");
    }
    if (scene != nullptr && (scene->image_w != image.width() || scene->image_h != image.height())) {
        throw ShapeError("scene annotation dimensions do not match the image");
    }

    const FeatureStack features = net.run_stem(image);
    const int gh = features.height();
    const int gw = features.width();

    std::optional<PseudoMask> label;
    if (scene != nullptr) {
        label = scene_label(*scene, gh, gw, config.tau);
    }
    Grid2D mask = config.mask_source == MaskSource::Oracle ? label->grid : seek(features, net.seeker).grid;

    MaskSlicing sliced = slice_mask(mask, config);
    CenterSet& centers = sliced.centers;
    PatchPlan& plan = sliced.plan;
    const std::vector<Point>& samples = sliced.samples;

    std::vector<Detection> detections;
    auto emit = [&](SparseOutput out, int ox, int oy) {
        for (Point& p : out.coordinates) {
            p.x += ox;
            p.y += oy;
        }
        auto decoded = decode_detections(out, net.num_categories, kStemStride, config.score_threshold);
        detections.insert(detections.end(), decoded.begin(), decoded.end());
    };

    if (plan_needs_dense_neck(plan, gh, gw)) {
        if (!samples.empty()) {
            emit(head_forward_sparse(net.run_neck(features), net.head, SparseSampleSet{samples, 0}), 0, 0);
        }
    } else {
        const std::vector<FeatureStack> patches = extract_patches(features, plan);
        const auto local = assign_to_patches(plan, samples);
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const FeatureStack neck = net.run_neck(patches[i]);
            if (!local[i].empty()) {
                emit(head_forward_sparse(neck, net.head, SparseSampleSet{local[i], 0}), plan.boxes[i].x1,
                     plan.boxes[i].y1);
            }
        }
    }

    ImageReport report;
    report.name = scene != nullptr ? scene->name : std::string();
    report.grid_w = gw;
    report.grid_h = gh;
    report.center_count = centers.size();
    report.patch_count = plan.boxes.size();
    report.detection_count = detections.size();
    report.cost = pipeline_cost(net, image.height(), image.width(), plan, samples);
    report.preserved_ratio = report.cost.preserved_patch_ratio;
    if (scene != nullptr) {
        report.bpr = BprResult{bpr_box(*scene, plan), bpr_ctr(*scene, centers)};
        report.mask_quality = mask_pr(mask, label->grid, config.activation_threshold);
    }

    return PipelineResult{std::move(mask), std::move(centers), std::move(plan), std::move(detections),
                          std::move(report)};
}

}  // namespace esod
