#include "esod/report.hpp"

#include "esod/error.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>

namespace esod {

namespace {

using nlohmann::json;

json stage_json(const StageCost& s) {
    return json{{"stem", s.stem},
                {"seeker", s.seeker},
                {"neck", s.neck},
                {"head", s.head},
                {"neck_head", s.neck_head()},
                {"total", s.total()}};
}

StageCost stage_from(const json& j) {
    StageCost s;
    s.stem = j.at("stem").get<Macs>();
    s.seeker = j.at("seeker").get<Macs>();
    s.neck = j.at("neck").get<Macs>();
    s.head = j.at("head").get<Macs>();
    if (j.at("total").get<Macs>() != s.total() || j.at("neck_head").get<Macs>() != s.neck_head()) {
        throw FormatError("report: stage totals do not match their parts");
    }
    return s;
}

json recall_json(const Recall& r) {
    std::vector<int> hits;
    hits.reserve(r.hits.size());
    for (bool h : r.hits) {
        hits.push_back(h ? 1 : 0);
    }
    return json{{"ratio", r.ratio}, {"hits", hits}, {"vacuous", r.vacuous}};
}

Recall recall_from(const json& j) {
    Recall r;
    r.ratio = j.at("ratio").get<double>();
    r.vacuous = j.at("vacuous").get<bool>();
    for (int h : j.at("hits").get<std::vector<int>>()) {
        r.hits.push_back(h != 0);
    }
    return r;
}

json image_json(const ImageReport& r) {
    json j;
    j["name"] = r.name;
    j["grid"] = {{"width", r.grid_w}, {"height", r.grid_h}};
    j["centers"] = r.center_count;
    j["patches"] = r.patch_count;
    j["preserved_ratio"] = r.preserved_ratio;
    j["detections"] = r.detection_count;
    j["cost"] = {{"dense", stage_json(r.cost.dense)},
                 {"sliced", stage_json(r.cost.sliced)},
                 {"patch_area_ratio", r.cost.patch_area_ratio},
                 {"dense_neck", r.cost.dense_neck},
                 {"unit", "mac"}};
    j["bpr"] = r.bpr ? json{{"box", recall_json(r.bpr->box)}, {"ctr", recall_json(r.bpr->ctr)}} : json(nullptr);
    j["mask"] = r.mask_quality ? json{{"precision", r.mask_quality->precision},
                                      {"recall", r.mask_quality->recall},
                                      {"precision_vacuous", r.mask_quality->precision_vacuous},
                                      {"recall_vacuous", r.mask_quality->recall_vacuous}}
                               : json(nullptr);
    return j;
}

ImageReport image_from(const json& j) {
    ImageReport r;
    r.name = j.at("name").get<std::string>();
    r.grid_w = j.at("grid").at("width").get<int>();
    r.grid_h = j.at("grid").at("height").get<int>();
    r.center_count = j.at("centers").get<std::size_t>();
    r.patch_count = j.at("patches").get<std::size_t>();
    r.preserved_ratio = j.at("preserved_ratio").get<double>();
    r.detection_count = j.at("detections").get<std::size_t>();
    const json& cost = j.at("cost");
    r.cost.dense = stage_from(cost.at("dense"));
    r.cost.sliced = stage_from(cost.at("sliced"));
    r.cost.patch_area_ratio = cost.at("patch_area_ratio").get<double>();
    r.cost.dense_neck = cost.at("dense_neck").get<bool>();
    r.cost.preserved_patch_ratio = r.preserved_ratio;
    if (!j.at("bpr").is_null()) {
        r.bpr = BprResult{recall_from(j.at("bpr").at("box")), recall_from(j.at("bpr").at("ctr"))};
    }
    if (!j.at("mask").is_null()) {
        const json& m = j.at("mask");
        r.mask_quality = MaskPR{m.at("precision").get<double>(), m.at("recall").get<double>(),
                                m.at("precision_vacuous").get<bool>(), m.at("recall_vacuous").get<bool>()};
    }
    return r;
}

struct Mean {
    double sum = 0.0;
    std::size_t n = 0;

    void add(double v) {
        sum += v;
        ++n;
    }
    json value() const { return n == 0 ? json(nullptr) : json(sum / static_cast<double>(n)); }
};

json aggregate_json(const std::vector<ImageReport>& images) {
    Mean patches, preserved, detections, centers, dense_total, sliced_total, dense_nh, sliced_nh, nh_ratio;
    Mean box, ctr, precision, recall;
    std::size_t scored = 0;
    for (const ImageReport& r : images) {
        patches.add(static_cast<double>(r.patch_count));
        preserved.add(r.preserved_ratio);
        detections.add(static_cast<double>(r.detection_count));
        centers.add(static_cast<double>(r.center_count));
        dense_total.add(static_cast<double>(r.cost.dense.total()));
        sliced_total.add(static_cast<double>(r.cost.sliced.total()));
        dense_nh.add(static_cast<double>(r.cost.dense.neck_head()));
        sliced_nh.add(static_cast<double>(r.cost.sliced.neck_head()));
        if (r.cost.dense.neck_head() > 0) {
            nh_ratio.add(static_cast<double>(r.cost.sliced.neck_head()) /
                         static_cast<double>(r.cost.dense.neck_head()));
        }
        if (r.bpr) {
            ++scored;
            if (!r.bpr->box.vacuous) box.add(r.bpr->box.ratio);
            if (!r.bpr->ctr.vacuous) ctr.add(r.bpr->ctr.ratio);
        }
        if (r.mask_quality) {
            if (!r.mask_quality->precision_vacuous) precision.add(r.mask_quality->precision);
            if (!r.mask_quality->recall_vacuous) recall.add(r.mask_quality->recall);
        }
    }
    return json{{"images", images.size()},
                {"scored_images", scored},
                {"mean_patches", patches.value()},
                {"mean_preserved_ratio", preserved.value()},
                {"mean_detections", detections.value()},
                {"mean_centers", centers.value()},
                {"mean_dense_macs", dense_total.value()},
                {"mean_sliced_macs", sliced_total.value()},
                {"mean_dense_neck_head_macs", dense_nh.value()},
                {"mean_sliced_neck_head_macs", sliced_nh.value()},
                {"mean_neck_head_ratio", nh_ratio.value()},
                {"mean_bpr_box", box.value()},
                {"bpr_box_images", box.n},
                {"mean_bpr_ctr", ctr.value()},
                {"bpr_ctr_images", ctr.n},
                {"mean_mask_precision", precision.value()},
                {"mean_mask_recall", recall.value()}};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

std::string format_report(const RunReport& report) {
    json j;
    j["schema"] = kReportSchema;
    j["images"] = json::array();
    for (const ImageReport& r : report.images) {
        j["images"].push_back(image_json(r));
    }
    j["aggregate"] = aggregate_json(report.images);
    return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << format_report(report);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

RunReport parse_report(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || j["schema"] != kReportSchema) {
        throw FormatError(std::string("report: expected schema ") + kReportSchema);
    }
    RunReport report;
    try {
        for (const json& entry : j.at("images")) {
            report.images.push_back(image_from(entry));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
    return report;
}

RunReport read_report(const std::filesystem::path& path) { return parse_report(slurp(path)); }

RunReport merge_reports(const std::vector<RunReport>& reports) {
    RunReport merged;
    for (const RunReport& r : reports) {
        merged.images.insert(merged.images.end(), r.images.begin(), r.images.end());
    }
    return merged;
}

}  // namespace esod
