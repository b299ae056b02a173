#include "esod/esod.h"

#include "esod/error.hpp"
#include "esod/labels.hpp"
#include "esod/metrics.hpp"
#include "esod/overlay.hpp"
#include "esod/pipeline.hpp"
#include "esod/report.hpp"
#include "esod/scene.hpp"
#include "esod/seeker.hpp"
#include "esod/slicer.hpp"
#include "esod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

struct esod_settings {
    esod::RunSettings value;
};

struct SceneEntry {
    esod::SceneAnnotation scene;
    std::string image_path;  // empty: render synthetically
};

struct esod_sceneset {
    std::vector<SceneEntry> entries;
};

struct RunArtifacts {
    SceneEntry entry;
    std::uint64_t seed = 0;
    esod::PipelineResult result;
};

struct esod_report {
    esod::RunReport report;
    std::vector<RunArtifacts> runs;  // empty for loaded or merged reports
};

struct esod_mask {
    esod::Grid2D grid;
};

struct esod_plan {
    esod::PatchPlan plan;
};

namespace {

thread_local std::string last_error;

esod_status fail(esod_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

template <typename F>
esod_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return ESOD_OK;
    } catch (const esod::ShapeError& e) {
        return fail(ESOD_ERR_SHAPE, e.what());
    } catch (const esod::ParameterError& e) {
        return fail(ESOD_ERR_PARAMETER, e.what());
    } catch (const esod::FormatError& e) {
        return fail(ESOD_ERR_FORMAT, e.what());
    } catch (const esod::AnnotationError& e) {
        return fail(ESOD_ERR_ANNOTATION, e.what());
    } catch (const esod::ParseError& e) {
        return fail(ESOD_ERR_PARSE, "line " + std::to_string(e.line()) + ": " + e.what());
    } catch (const esod::IoError& e) {
        return fail(ESOD_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(ESOD_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(ESOD_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(ESOD_ERR_INTERNAL, "unknown error");
    }
}

esod_status null_argument(const char* what) { return fail(ESOD_ERR_ARGUMENT, std::string(what) + " is null"); }

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

esod::FeatureStack load_image(const SceneEntry& entry, std::uint64_t seed) {
    if (entry.image_path.empty()) {
        return esod::render_scene(entry.scene, seed);
    }
    return esod::image_to_features(esod::pnm::read(entry.image_path));
}

void ensure_directory(const char* directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw esod::IoError(std::string("cannot create directory ") + directory + ": " + ec.message());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw esod::IoError("cannot write " + path.string());
    }
}

std::filesystem::path entry_path(const char* directory, const std::string& name, const char* extension) {
    return std::filesystem::path(directory) / (name + extension);
}

}  // namespace

extern "C" {

const char* esod_version(void) { return "1.0.0"; }

const char* esod_status_string(esod_status status) {
    switch (status) {
        case ESOD_OK: return "ok";
        case ESOD_ERR_ARGUMENT: return "invalid argument";
        case ESOD_ERR_SHAPE: return "shape error";
        case ESOD_ERR_PARAMETER: return "parameter error";
        case ESOD_ERR_FORMAT: return "format error";
        case ESOD_ERR_ANNOTATION: return "annotation error";
        case ESOD_ERR_PARSE: return "parse error";
        case ESOD_ERR_IO: return "i/o error";
        case ESOD_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* esod_last_error(void) { return last_error.c_str(); }

void esod_string_free(char* s) { std::free(s); }

esod_status esod_settings_create(esod_settings** out) {
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = new esod_settings(); });
}

void esod_settings_destroy(esod_settings* settings) { delete settings; }

esod_status esod_settings_load(esod_settings* settings, const char* path) {
    if (settings == nullptr) return null_argument("settings");
    if (path == nullptr) return null_argument("path");
    return guarded([&] {
        esod::RunSettings updated = settings->value;
        esod::apply_settings_file(updated, path);
        settings->value = updated;
    });
}

esod_status esod_settings_set(esod_settings* settings, const char* key, const char* value) {
    if (settings == nullptr) return null_argument("settings");
    if (key == nullptr || value == nullptr) return null_argument("key/value");
    return guarded([&] { esod::apply_setting(settings->value, key, value); });
}

esod_status esod_settings_get(const esod_settings* settings, const char* key, char** out) {
    if (settings == nullptr) return null_argument("settings");
    if (key == nullptr) return null_argument("key");
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = duplicate(esod::setting_value(settings->value, key)); });
}

esod_status esod_settings_format(const esod_settings* settings, char** out) {
    if (settings == nullptr) return null_argument("settings");
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = duplicate(esod::format_settings(settings->value)); });
}

esod_status esod_sceneset_create(esod_sceneset** out) {
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = new esod_sceneset(); });
}

void esod_sceneset_destroy(esod_sceneset* set) { delete set; }

esod_status esod_sceneset_synth(const esod_settings* settings, int count, esod_sceneset** out) {
    if (settings == nullptr) return null_argument("settings");
    if (out == nullptr) return null_argument("out");
    return guarded([&] {
        esod::SynthParams params = settings->value.synth;
        params.seed = settings->value.seed;
        params.num_categories = settings->value.num_categories;
        auto set = std::make_unique<esod_sceneset>();
        for (esod::SceneAnnotation& scene : esod::synth_scenes(params, count)) {
            set->entries.push_back(SceneEntry{std::move(scene), {}});
        }
        *out = set.release();
    });
}

esod_status esod_sceneset_add_visdrone(esod_sceneset* set, const char* annotation_path, int image_w, int image_h,
                                       const char* image_path) {
    if (set == nullptr) return null_argument("set");
    if (annotation_path == nullptr) return null_argument("annotation_path");
    return guarded([&] {
        SceneEntry entry{esod::read_visdrone(annotation_path, image_w, image_h), image_path ? image_path : ""};
        if (!entry.image_path.empty()) {
            const esod::pnm::Image probe = esod::pnm::read(entry.image_path);
            if (probe.width != image_w || probe.height != image_h) {
                throw esod::ShapeError("image " + entry.image_path + " does not match the annotation size");
            }
        }
        set->entries.push_back(std::move(entry));
    });
}

size_t esod_sceneset_size(const esod_sceneset* set) { return set == nullptr ? 0 : set->entries.size(); }

esod_status esod_sceneset_object_count(const esod_sceneset* set, size_t index, size_t* out) {
    if (set == nullptr) return null_argument("set");
    if (out == nullptr) return null_argument("out");
    if (index >= set->entries.size()) return fail(ESOD_ERR_ARGUMENT, "scene index out of range");
    *out = set->entries[index].scene.boxes.size();
    last_error.clear();
    return ESOD_OK;
}

esod_status esod_sceneset_write(const esod_sceneset* set, const char* directory, int with_images, uint64_t seed) {
    if (set == nullptr) return null_argument("set");
    if (directory == nullptr) return null_argument("directory");
    return guarded([&] {
        ensure_directory(directory);
        for (const SceneEntry& e : set->entries) {
            write_text(entry_path(directory, e.scene.name, ".txt"), esod::format_visdrone(e.scene));
            if (with_images != 0) {
                const esod::FeatureStack image = load_image(e, seed);
                esod::pnm::Image out;
                out.width = image.width();
                out.height = image.height();
                out.channels = 3;
                out.samples.resize(static_cast<std::size_t>(out.width) * out.height * 3);
                for (int y = 0; y < out.height; ++y) {
                    for (int x = 0; x < out.width; ++x) {
                        for (int c = 0; c < 3; ++c) {
                            const double v = std::clamp(image(c, y, x), 0.0, 1.0);
                            out.samples[(static_cast<std::size_t>(y) * out.width + x) * 3 + c] =
                                static_cast<std::uint16_t>(std::lround(v * 255.0));
                        }
                    }
                }
                esod::pnm::write(entry_path(directory, e.scene.name, ".ppm"), out);
            }
        }
    });
}

esod_status esod_sceneset_stats(const esod_sceneset* set, int k, esod_stats* out) {
    if (set == nullptr) return null_argument("set");
    if (out == nullptr) return null_argument("out");
    return guarded([&] {
        esod_stats s{};
        s.k = k;
        s.scenes = set->entries.size();
        double occupancy = 0.0;
        double emptiness = 0.0;
        for (const SceneEntry& e : set->entries) {
            s.objects += e.scene.boxes.size();
            occupancy += esod::pixel_occupancy(e.scene);
            emptiness += esod::patch_emptiness(e.scene, k);
        }
        if (s.scenes > 0) {
            const double n = static_cast<double>(s.scenes);
            s.mean_objects = static_cast<double>(s.objects) / n;
            s.mean_occupancy = occupancy / n;
            s.mean_emptiness = emptiness / n;
        }
        *out = s;
    });
}

esod_status esod_run(const esod_settings* settings, const esod_sceneset* set, esod_report** out) {
    if (settings == nullptr) return null_argument("settings");
    if (set == nullptr) return null_argument("set");
    if (out == nullptr) return null_argument("out");
    return guarded([&] {
        const esod::PipelineConfig config = esod::make_pipeline_config(settings->value);
        auto report = std::make_unique<esod_report>();
        for (const SceneEntry& e : set->entries) {
            const esod::FeatureStack image = load_image(e, settings->value.seed);
            esod::PipelineResult result = esod::run_pipeline(image, config, &e.scene);
            report->report.images.push_back(result.report);
            report->runs.push_back(RunArtifacts{e, settings->value.seed, std::move(result)});
        }
        *out = report.release();
    });
}

esod_status esod_report_load(const char* path, esod_report** out) {
    if (path == nullptr) return null_argument("path");
    if (out == nullptr) return null_argument("out");
    return guarded([&] {
        auto report = std::make_unique<esod_report>();
        report->report = esod::read_report(path);
        *out = report.release();
    });
}

esod_status esod_report_merge(const esod_report* const* reports, size_t count, esod_report** out) {
    if (reports == nullptr && count > 0) return null_argument("reports");
    if (out == nullptr) return null_argument("out");
    for (size_t i = 0; i < count; ++i) {
        if (reports[i] == nullptr) return null_argument("report");
    }
    return guarded([&] {
        std::vector<esod::RunReport> parts;
        for (size_t i = 0; i < count; ++i) {
            parts.push_back(reports[i]->report);
        }
        auto merged = std::make_unique<esod_report>();
        merged->report = esod::merge_reports(parts);
        *out = merged.release();
    });
}

void esod_report_destroy(esod_report* report) { delete report; }

size_t esod_report_size(const esod_report* report) { return report == nullptr ? 0 : report->report.images.size(); }

esod_status esod_report_format(const esod_report* report, char** out) {
    if (report == nullptr) return null_argument("report");
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = duplicate(esod::format_report(report->report)); });
}

esod_status esod_report_write(const esod_report* report, const char* path) {
    if (report == nullptr) return null_argument("report");
    if (path == nullptr) return null_argument("path");
    return guarded([&] { esod::write_report(report->report, path); });
}

// Reports read back from JSON carry numbers only, not masks or plans.
static esod_status require_artifacts(const esod_report* report) {
    if (report->runs.size() != report->report.images.size()) {
        return fail(ESOD_ERR_ARGUMENT, "report has no run artifacts (loaded or merged from files)");
    }
    return ESOD_OK;
}

esod_status esod_report_write_plans(const esod_report* report, const char* directory) {
    if (report == nullptr) return null_argument("report");
    if (directory == nullptr) return null_argument("directory");
    if (const esod_status st = require_artifacts(report); st != ESOD_OK) return st;
    return guarded([&] {
        ensure_directory(directory);
        for (const RunArtifacts& run : report->runs) {
            esod::write_plan(run.result.plan, entry_path(directory, run.entry.scene.name, ".plan"));
        }
    });
}

esod_status esod_report_write_detections(const esod_report* report, const char* directory) {
    if (report == nullptr) return null_argument("report");
    if (directory == nullptr) return null_argument("directory");
    if (const esod_status st = require_artifacts(report); st != ESOD_OK) return st;
    return guarded([&] {
        ensure_directory(directory);
        for (const RunArtifacts& run : report->runs) {
            write_text(entry_path(directory, run.entry.scene.name, ".det"),
                       esod::format_detections(run.result.detections));
        }
    });
}

esod_status esod_report_write_overlays(const esod_report* report, const char* directory) {
    if (report == nullptr) return null_argument("report");
    if (directory == nullptr) return null_argument("directory");
    if (const esod_status st = require_artifacts(report); st != ESOD_OK) return st;
    return guarded([&] {
        ensure_directory(directory);
        for (const RunArtifacts& run : report->runs) {
            const esod::FeatureStack image = load_image(run.entry, run.seed);
            esod::write_overlay(entry_path(directory, run.entry.scene.name, ".ppm"), run.entry.scene.image_w,
                                run.entry.scene.image_h, &image, run.result.mask, run.result.plan,
                                run.result.detections, esod::kStemStride);
        }
    });
}

esod_status esod_mask_load_pgm(const char* path, esod_mask** out) {
    if (path == nullptr) return null_argument("path");
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = new esod_mask{esod::load_mask_pgm(path).grid}; });
}

void esod_mask_destroy(esod_mask* mask) { delete mask; }

int esod_mask_width(const esod_mask* mask) { return mask == nullptr ? 0 : mask->grid.width(); }

int esod_mask_height(const esod_mask* mask) { return mask == nullptr ? 0 : mask->grid.height(); }

esod_status esod_slice(const esod_settings* settings, const esod_mask* mask, esod_plan** out) {
    if (settings == nullptr) return null_argument("settings");
    if (mask == nullptr) return null_argument("mask");
    if (out == nullptr) return null_argument("out");
    return guarded([&] {
        const esod::RunSettings& s = settings->value;
        *out = new esod_plan{esod::slice(mask->grid, s.strategy, s.k, s.threshold)};
    });
}

void esod_plan_destroy(esod_plan* plan) { delete plan; }

size_t esod_plan_size(const esod_plan* plan) { return plan == nullptr ? 0 : plan->plan.boxes.size(); }

esod_status esod_plan_box(const esod_plan* plan, size_t index, int box[4]) {
    if (plan == nullptr) return null_argument("plan");
    if (box == nullptr) return null_argument("box");
    if (index >= plan->plan.boxes.size()) return fail(ESOD_ERR_ARGUMENT, "box index out of range");
    const esod::PatchBox& b = plan->plan.boxes[index];
    box[0] = b.x1;
    box[1] = b.y1;
    box[2] = b.x2;
    box[3] = b.y2;
    last_error.clear();
    return ESOD_OK;
}

esod_status esod_plan_format(const esod_plan* plan, char** out) {
    if (plan == nullptr) return null_argument("plan");
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = duplicate(esod::format_plan(plan->plan)); });
}

esod_status esod_plan_write(const esod_plan* plan, const char* path) {
    if (plan == nullptr) return null_argument("plan");
    if (path == nullptr) return null_argument("path");
    return guarded([&] { esod::write_plan(plan->plan, path); });
}

esod_status esod_seeker_train(const esod_settings* settings, const esod_sceneset* set, int steps,
                              double learning_rate, const char* out_path, double* loss_before,
                              double* loss_after) {
    if (settings == nullptr) return null_argument("settings");
    if (set == nullptr) return null_argument("set");
    if (out_path == nullptr) return null_argument("out_path");
    return guarded([&] {
        if (set->entries.empty()) {
            throw esod::ParameterError("training needs at least one scene");
        }
        const esod::PipelineConfig config = esod::make_pipeline_config(settings->value);
        std::vector<esod::FeatureStack> features;
        std::vector<esod::Grid2D> targets;
        for (const SceneEntry& e : set->entries) {
            features.push_back(config.network.run_stem(load_image(e, settings->value.seed)));
            targets.push_back(
                esod::scene_label(e.scene, features.back().height(), features.back().width(), config.tau).grid);
        }
        esod::SeekerParams params = config.network.seeker;
        const std::vector<double> losses =
            esod::train_seeker(params, features, targets, esod::TrainOptions{steps, learning_rate});
        esod::save_seeker_params(params, out_path);
        if (loss_before != nullptr) *loss_before = losses.front();
        if (loss_after != nullptr) *loss_after = losses.back();
    });
}

}  // extern "C"
