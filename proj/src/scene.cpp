#include "esod/scene.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

namespace esod {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long parse_int(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    if (t.empty()) {
        throw ParseError("empty field", line_no);
    }
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size()) {
        throw ParseError("expected an integer, got '" + t + "'", line_no);
    }
    return v;
}

}  // namespace

SceneAnnotation parse_visdrone(const std::string& text, int image_w, int image_h) {
    if (image_w <= 0 || image_h <= 0) {
        throw ParameterError("image dimensions must be positive");
    }
    SceneAnnotation scene;
    scene.image_w = image_w;
    scene.image_h = image_h;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.back() == ',') {
            t.pop_back();
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 8) {
            throw ParseError("expected 8 comma-separated fields, got " + std::to_string(fields.size()), line_no);
        }
        long v[8];
        for (std::size_t i = 0; i < 8; ++i) {
            v[i] = parse_int(fields[i], line_no);
        }
        const long category = v[5];
        if (category == 0 || v[2] <= 0 || v[3] <= 0) {
            continue;
        }
        const double x0 = std::clamp<double>(static_cast<double>(v[0]), 0.0, image_w);
        const double y0 = std::clamp<double>(static_cast<double>(v[1]), 0.0, image_h);
        const double x1 = std::clamp<double>(static_cast<double>(v[0] + v[2]), 0.0, image_w);
        const double y1 = std::clamp<double>(static_cast<double>(v[1] + v[3]), 0.0, image_h);
        if (x1 <= x0 || y1 <= y0) {
            continue;
        }
        scene.boxes.push_back(BoundingBox::from_tlwh(x0, y0, x1 - x0, y1 - y0, static_cast<int>(category)));
    }
    return scene;
}

SceneAnnotation read_visdrone(const std::filesystem::path& path, int image_w, int image_h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    SceneAnnotation scene = parse_visdrone(
        std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()), image_w, image_h);
    scene.name = path.stem().string();
    return scene;
}

std::string format_visdrone(const SceneAnnotation& scene) {
    std::ostringstream out;
    for (const BoundingBox& b : scene.boxes) {
        out << std::lround(b.left()) << ',' << std::lround(b.top()) << ',' << std::lround(b.w) << ','
            << std::lround(b.h) << ",1," << b.category << ",0,0\n";
    }
    return out.str();
}

}  // namespace esod
