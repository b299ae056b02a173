#pragma once

// Minimal netpbm codec: P2/P5 greymaps and P3/P6 pixmaps, maxval up to 65535.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace esod::pnm {

struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 for greymaps, 3 for pixmaps
    int maxval = 255;
    std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

/// Parses any of P2, P3, P5, P6. Throws FormatError on malformed input.
Image decode(const std::string& bytes);
Image read(const std::filesystem::path& path);

/// Binary encoding (P5 or P6 depending on channels).
std::string encode(const Image& image);
void write(const std::filesystem::path& path, const Image& image);

}  // namespace esod::pnm
