#pragma once

// End-to-end driver: stem -> seek (or oracle mask) -> slice -> neck per patch
// -> sparse head at centres -> decode.

#include "esod/labels.hpp"
#include "esod/metrics.hpp"
#include "esod/network.hpp"
#include "esod/scene.hpp"
#include "esod/slicer.hpp"
#include "esod/sparse_head.hpp"
#include "esod/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esod {

enum class MaskSource { Predicted, Oracle };

std::string_view to_string(MaskSource source);
MaskSource parse_mask_source(std::string_view name);

struct PipelineConfig {
    Network network;
    int k = 8;
    double activation_threshold = kDefaultActivationThreshold;
    double tau = 0.5;
    SliceStrategy strategy = SliceStrategy::Greedy;
    MaskSource mask_source = MaskSource::Predicted;
    double score_threshold = 0.5;

    void validate() const;
};

/// Flat settings read from a "key = value" file and command-line overrides.
struct RunSettings {
    int k = 8;
    double threshold = kDefaultActivationThreshold;
    double tau = 0.5;
    double score_threshold = 0.5;
    SliceStrategy strategy = SliceStrategy::Greedy;
    MaskSource mask_source = MaskSource::Predicted;
    std::uint64_t seed = 0;
    int num_categories = 10;
    std::string seeker_params;  // optional trained seeker file
    int scenes = 4;             // synthetic scenes per run when no annotations are given
    SynthParams synth;
};

/// Throws ParameterError for unknown keys or unparsable values.
void apply_setting(RunSettings& settings, std::string_view key, std::string_view value);
/// Blank lines and '#' comments are ignored. Throws ParseError with a line number.
void apply_settings_text(RunSettings& settings, const std::string& text);
void apply_settings_file(RunSettings& settings, const std::filesystem::path& path);
/// Current value of `key` in settings-file syntax.
std::string setting_value(const RunSettings& settings, std::string_view key);
/// Every key, sorted, in the same "key = value" syntax.
std::string format_settings(const RunSettings& settings);

/// Builds the toy network from the seed (loading the seeker if a params file
/// is set).
PipelineConfig make_pipeline_config(const RunSettings& settings);

struct ImageReport {
    std::string name;
    int grid_w = 0;
    int grid_h = 0;
    std::size_t center_count = 0;
    std::size_t patch_count = 0;
    double preserved_ratio = 0.0;
    std::size_t detection_count = 0;
    CostReport cost;
    std::optional<BprResult> bpr;
    std::optional<MaskPR> mask_quality;
};

struct PipelineResult {
    Grid2D mask;
    CenterSet centers;
    PatchPlan plan;
    std::vector<Detection> detections;
    ImageReport report;
};

struct MaskSlicing {
    CenterSet centers;
    PatchPlan plan;
    std::vector<Point> samples;  // head positions, in grid coordinates
    bool saturated = false;
};

/// Activation, centres and plan for one mask. A fully activated mask carries
/// no sparsity: every uniform cell is kept and every position is sampled.
MaskSlicing slice_mask(const Grid2D& mask, const PipelineConfig& config);

/// Oracle mask source and all recall metrics need `scene`.
PipelineResult run_pipeline(const FeatureStack& image, const PipelineConfig& config,
                            const SceneAnnotation* scene = nullptr);

/// Gaussian label of a scene on a grid_h x grid_w mask.
PseudoMask scene_label(const SceneAnnotation& scene, int grid_h, int grid_w, double tau);

}  // namespace esod
