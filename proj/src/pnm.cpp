#include "esod/pnm.hpp"

#include "esod/error.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace esod::pnm {

namespace {

// Pixel counts above this are treated as hostile headers.
constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 28;

class Cursor {
public:
    explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint64_t read_uint(const char* what) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            throw FormatError(std::string("pnm: expected ") + what);
        }
        std::uint64_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
            if (value > std::numeric_limits<std::uint32_t>::max()) {
                throw FormatError(std::string("pnm: ") + what + " overflows");
            }
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates the header from binary data.
    void consume_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw FormatError("pnm: missing whitespace after header");
        }
        ++pos_;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    unsigned char byte() { return static_cast<unsigned char>(bytes_[pos_++]); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Image decode(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw FormatError("pnm: missing magic number");
    }
    const char kind = bytes[1];
    bool ascii = false;
    int channels = 1;
    switch (kind) {
    case '2': ascii = true; channels = 1; break;
    case '3': ascii = true; channels = 3; break;
    case '5': ascii = false; channels = 1; break;
    case '6': ascii = false; channels = 3; break;
    default: throw FormatError(std::string("pnm: unsupported magic P") + kind);
    }

    Cursor cur(bytes);
    cur.byte();
    cur.byte();
    const std::uint64_t width = cur.read_uint("width");
    const std::uint64_t height = cur.read_uint("height");
    const std::uint64_t maxval = cur.read_uint("maxval");
    if (width == 0 || height == 0) {
        throw FormatError("pnm: zero dimension");
    }
    if (width * height > kMaxPixels) {
        throw FormatError("pnm: dimensions too large");
    }
    if (maxval == 0 || maxval > 65535) {
        throw FormatError("pnm: maxval must be in [1, 65535]");
    }

    Image image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.channels = channels;
    image.maxval = static_cast<int>(maxval);
    const std::size_t count = static_cast<std::size_t>(width * height) * static_cast<std::size_t>(channels);
    image.samples.resize(count);

    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t v = cur.read_uint("sample");
            if (v > maxval) {
                throw FormatError("pnm: sample exceeds maxval");
            }
            image.samples[i] = static_cast<std::uint16_t>(v);
        }
        return image;
    }

    cur.consume_single_space();
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    if (cur.remaining() < count * bytes_per) {
        throw FormatError("pnm: truncated raster");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t v = cur.byte();
        if (bytes_per == 2) {
            v = static_cast<std::uint16_t>((v << 8) | cur.byte());
        }
        if (v > maxval) {
            throw FormatError("pnm: sample exceeds maxval");
        }
        image.samples[i] = v;
    }
    return image;
}

Image read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

std::string encode(const Image& image) {
    if (image.width <= 0 || image.height <= 0 || (image.channels != 1 && image.channels != 3)) {
        throw FormatError("pnm: invalid image shape");
    }
    if (image.maxval <= 0 || image.maxval > 65535) {
        throw FormatError("pnm: maxval must be in [1, 65535]");
    }
    const std::size_t count = static_cast<std::size_t>(image.width) * image.height * image.channels;
    if (image.samples.size() != count) {
        throw FormatError("pnm: sample count does not match shape");
    }
    std::ostringstream out;
    out << (image.channels == 1 ? "P5" : "P6") << '\n'
        << image.width << ' ' << image.height << '\n'
        << image.maxval << '\n';
    std::string data = out.str();
    const bool wide = image.maxval > 255;
    data.reserve(data.size() + count * (wide ? 2 : 1));
    for (std::uint16_t v : image.samples) {
        if (wide) {
            data.push_back(static_cast<char>(v >> 8));
        }
        data.push_back(static_cast<char>(v & 0xFF));
    }
    return data;
}

void write(const std::filesystem::path& path, const Image& image) {
    const std::string data = encode(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace esod::pnm
