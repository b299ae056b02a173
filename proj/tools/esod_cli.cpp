// Command-line driver. Talks to the library only through the C interface.

#include "esod/esod.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Failure : std::runtime_error {
    explicit Failure(const std::string& what) : std::runtime_error(what) {}
};

void check(esod_status status, const char* action) {
    if (status != ESOD_OK) {
        throw Failure(std::string(action) + ": " + esod_status_string(status) + ": " + esod_last_error());
    }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
    void operator()(T* p) const { Destroy(p); }
};

using Settings = std::unique_ptr<esod_settings, Deleter<esod_settings, esod_settings_destroy>>;
using SceneSet = std::unique_ptr<esod_sceneset, Deleter<esod_sceneset, esod_sceneset_destroy>>;
using Report = std::unique_ptr<esod_report, Deleter<esod_report, esod_report_destroy>>;
using Mask = std::unique_ptr<esod_mask, Deleter<esod_mask, esod_mask_destroy>>;
using Plan = std::unique_ptr<esod_plan, Deleter<esod_plan, esod_plan_destroy>>;

std::string take_string(char* s) {
    std::string out(s);
    esod_string_free(s);
    return out;
}

// Flags shared by every subcommand that needs settings; each maps onto a
// settings key and wins over the config file.
struct SettingFlags {
    std::string config;
    std::map<std::string, std::string> values;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "key = value settings file")->check(CLI::ExistingFile);
        add(app, "--strategy", "strategy", "uniform | greedy | parallel");
        add(app, "--k", "k", "patch-grid divisor");
        add(app, "--tau", "tau", "Gaussian label value at box borders");
        add(app, "--threshold", "threshold", "mask activation threshold");
        add(app, "--mask-source", "mask_source", "predicted | oracle");
        add(app, "--seed", "seed", "seed for network weights and synthetic scenes");
        add(app, "--seeker-params", "seeker_params", "trained seeker parameter file");
        add(app, "--set", "", "extra key=value overrides");
    }

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        if (key.empty()) {
            app->add_option(flag, extra, help);
            return;
        }
        app->add_option(flag, values[key], help);
        flags[key] = flag;
    }

    Settings build(CLI::App* app) const {
        esod_settings* raw = nullptr;
        check(esod_settings_create(&raw), "settings");
        Settings settings(raw);
        if (!config.empty()) {
            check(esod_settings_load(settings.get(), config.c_str()), "loading config");
        }
        for (const std::string& kv : extra) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw Failure("--set expects key=value, got '" + kv + "'");
            }
            check(esod_settings_set(settings.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set");
        }
        for (const auto& [key, flag] : flags) {
            if (app->count(flag) > 0) {
                check(esod_settings_set(settings.get(), key.c_str(), values.at(key).c_str()), flag.c_str());
            }
        }
        return settings;
    }

    std::map<std::string, std::string> flags;
    std::vector<std::string> extra;
};

// Scene inputs: VisDrone annotation files, or synthetic scenes.
struct SceneFlags {
    std::string ann_format = "visdrone";
    std::vector<std::string> annotations;
    std::vector<std::string> images;
    int image_w = 0;
    int image_h = 0;
    int scenes = 0;

    void attach(CLI::App* app) {
        app->add_option("--ann-format", ann_format, "annotation format")->check(CLI::IsMember({"visdrone"}));
        app->add_option("--ann", annotations, "annotation files")->check(CLI::ExistingFile);
        app->add_option("--image", images, "PPM/PGM images, one per annotation file")->check(CLI::ExistingFile);
        app->add_option("--image-w", image_w, "image width for annotation files")->check(CLI::PositiveNumber);
        app->add_option("--image-h", image_h, "image height for annotation files")->check(CLI::PositiveNumber);
        app->add_option("--scenes", scenes, "number of synthetic scenes (default from settings)")
            ->check(CLI::PositiveNumber);
    }

    SceneSet build(const esod_settings* settings, int default_scenes) const {
        esod_sceneset* raw = nullptr;
        if (annotations.empty()) {
            check(esod_sceneset_synth(settings, scenes > 0 ? scenes : default_scenes, &raw), "synthesising scenes");
            return SceneSet(raw);
        }
        if (image_w <= 0 || image_h <= 0) {
            throw Failure("--ann requires --image-w and --image-h");
        }
        if (!images.empty() && images.size() != annotations.size()) {
            throw Failure("--image must be given once per --ann file");
        }
        check(esod_sceneset_create(&raw), "scene set");
        SceneSet set(raw);
        for (std::size_t i = 0; i < annotations.size(); ++i) {
            const char* image = images.empty() ? nullptr : images[i].c_str();
            check(esod_sceneset_add_visdrone(set.get(), annotations[i].c_str(), image_w, image_h, image),
                  annotations[i].c_str());
        }
        return set;
    }
};

std::string setting(const esod_settings* settings, const char* key) {
    char* text = nullptr;
    check(esod_settings_get(settings, key, &text), key);
    return take_string(text);
}

int settings_scene_count(const esod_settings* settings) { return std::stoi(setting(settings, "scenes")); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse small-object detection pipeline"};
    app.set_version_flag("--version", std::string(esod_version()));
    app.require_subcommand(1);

    SettingFlags stats_settings, synth_settings, run_settings, slice_settings, train_settings;
    SceneFlags stats_scenes, run_scenes, train_scenes;

    auto* stats = app.add_subcommand("stats", "dataset sparsity statistics");
    stats_settings.attach(stats);
    stats_scenes.attach(stats);

    auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
    synth_settings.attach(synth);
    int synth_count = 0;
    bool synth_images = false;
    std::string synth_out;
    synth->add_option("--scenes", synth_count, "number of scenes (default from settings)")->check(CLI::PositiveNumber);
    synth->add_flag("--images", synth_images, "also write rendered PPM images");
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* run = app.add_subcommand("run", "run the pipeline and write a report");
    run_settings.attach(run);
    run_scenes.attach(run);
    std::string run_out;
    bool run_overlays = false;
    run->add_option("--out", run_out, "output directory")->required();
    run->add_flag("--overlays", run_overlays, "write PPM overlays");

    auto* slice = app.add_subcommand("slice", "slice a PGM mask into a patch plan");
    slice_settings.attach(slice);
    std::string slice_mask;
    std::string slice_out;
    slice->add_option("--mask", slice_mask, "PGM objectness mask")->required()->check(CLI::ExistingFile);
    slice->add_option("--out", slice_out, "plan file (stdout when omitted)");

    auto* report = app.add_subcommand("report", "merge run reports and print the aggregate");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report->add_option("reports", report_inputs, "report files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "merged report file (stdout when omitted)");

    auto* train = app.add_subcommand("train", "train the seeker on annotated or synthetic scenes");
    train_settings.attach(train);
    train_scenes.attach(train);
    int train_steps = 200;
    double train_lr = 0.01;
    std::string train_out;
    train->add_option("--steps", train_steps, "optimiser steps")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_lr, "learning rate")->check(CLI::PositiveNumber);
    train->add_option("--out", train_out, "seeker parameter file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) {
            const Settings settings = stats_settings.build(stats);
            const SceneSet set = stats_scenes.build(settings.get(), settings_scene_count(settings.get()));
            const int k = std::stoi(setting(settings.get(), "k"));
            esod_stats s{};
            check(esod_sceneset_stats(set.get(), k, &s), "stats");
            std::printf("scenes %zu\nobjects %zu\nmean_objects %.6f\nmean_occupancy %.6f\nmean_emptiness_k%d %.6f\n",
                        s.scenes, s.objects, s.mean_objects, s.mean_occupancy, s.k, s.mean_emptiness);
        } else if (synth->parsed()) {
            const Settings settings = synth_settings.build(synth);
            esod_sceneset* raw = nullptr;
            const int n = synth_count > 0 ? synth_count : settings_scene_count(settings.get());
            check(esod_sceneset_synth(settings.get(), n, &raw), "synthesising scenes");
            const SceneSet set(raw);
            const std::uint64_t seed = std::stoull(setting(settings.get(), "seed"));
            check(esod_sceneset_write(set.get(), synth_out.c_str(), synth_images ? 1 : 0, seed), "writing scenes");
            std::printf("wrote %zu scenes to %s\n", esod_sceneset_size(set.get()), synth_out.c_str());
        } else if (run->parsed()) {
            const Settings settings = run_settings.build(run);
            const SceneSet set = run_scenes.build(settings.get(), settings_scene_count(settings.get()));
            esod_report* raw = nullptr;
            check(esod_run(settings.get(), set.get(), &raw), "run");
            const Report result(raw);
            std::filesystem::create_directories(run_out);
            const std::filesystem::path out(run_out);
            check(esod_report_write(result.get(), (out / "report.json").string().c_str()), "writing report");
            check(esod_report_write_plans(result.get(), (out / "plans").string().c_str()), "writing plans");
            check(esod_report_write_detections(result.get(), (out / "detections").string().c_str()),
                  "writing detections");
            if (run_overlays) {
                check(esod_report_write_overlays(result.get(), (out / "overlays").string().c_str()),
                      "writing overlays");
            }
            char* text = nullptr;
            check(esod_settings_format(settings.get(), &text), "settings");
            std::FILE* f = std::fopen((out / "settings.txt").string().c_str(), "wb");
            if (f == nullptr) {
                throw Failure("cannot write settings.txt");
            }
            const std::string settings_text = take_string(text);
            std::fwrite(settings_text.data(), 1, settings_text.size(), f);
            std::fclose(f);
            std::printf("processed %zu images into %s\n", esod_report_size(result.get()), run_out.c_str());
        } else if (slice->parsed()) {
            const Settings settings = slice_settings.build(slice);
            esod_mask* mraw = nullptr;
            check(esod_mask_load_pgm(slice_mask.c_str(), &mraw), "loading mask");
            const Mask mask(mraw);
            esod_plan* praw = nullptr;
            check(esod_slice(settings.get(), mask.get(), &praw), "slice");
            const Plan plan(praw);
            if (slice_out.empty()) {
                char* text = nullptr;
                check(esod_plan_format(plan.get(), &text), "format");
                std::fputs(take_string(text).c_str(), stdout);
            } else {
                check(esod_plan_write(plan.get(), slice_out.c_str()), "writing plan");
            }
        } else if (report->parsed()) {
            std::vector<Report> loaded;
            std::vector<const esod_report*> views;
            for (const std::string& path : report_inputs) {
                esod_report* raw = nullptr;
                check(esod_report_load(path.c_str(), &raw), path.c_str());
                loaded.emplace_back(raw);
                views.push_back(raw);
            }
            esod_report* raw = nullptr;
            check(esod_report_merge(views.data(), views.size(), &raw), "merge");
            const Report merged(raw);
            if (report_out.empty()) {
                char* text = nullptr;
                check(esod_report_format(merged.get(), &text), "format");
                std::fputs(take_string(text).c_str(), stdout);
            } else {
                check(esod_report_write(merged.get(), report_out.c_str()), "writing report");
            }
        } else if (train->parsed()) {
            const Settings settings = train_settings.build(train);
            const SceneSet set = train_scenes.build(settings.get(), settings_scene_count(settings.get()));
            double before = 0.0;
            double after = 0.0;
            check(esod_seeker_train(settings.get(), set.get(), train_steps, train_lr, train_out.c_str(), &before,
                                    &after),
                  "train");
            std::printf("loss %.6f -> %.6f\n", before, after);
        }
    } catch (const Failure& e) {
        std::fprintf(stderr, "esod: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "esod: %s\n", e.what());
        return 1;
    }
    return 0;
}
