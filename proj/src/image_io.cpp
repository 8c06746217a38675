#include "cva/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "cva/errors.hpp"

namespace cva::io {
namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& header, const std::vector<unsigned char>& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

// Netpbm header tokenizer: whitespace separated, '#' starts a comment to end of line.
class HeaderReader {
public:
    explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
        if (start == pos_) throw FormatError("unexpected end of header", pos_);
        return {bytes_.begin() + static_cast<std::ptrdiff_t>(start), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)};
    }

    long long integer(long long lo, long long hi, const char* what) {
        const std::size_t at = pos_;
        const std::string t = token();
        long long v = 0;
        for (char c : t) {
            if (!std::isdigit(static_cast<unsigned char>(c)) || v > hi)
                throw FormatError(std::string("bad ") + what + " '" + t + "'", at);
            v = v * 10 + (c - '0');
        }
        if (v < lo || v > hi) throw FormatError(std::string(what) + " out of range", at);
        return v;
    }

    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("missing raster separator", pos_);
        return pos_ + 1;
    }

    std::size_t line_end() {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
        if (pos_ >= bytes_.size()) throw FormatError("unterminated header line", pos_);
        return ++pos_;
    }

    std::size_t pos() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

PgmImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    HeaderReader header(bytes);
    if (header.token() != "P5") throw FormatError("not a binary PGM (P5) file: " + path.string(), 0);
    PgmImage img;
    img.width = static_cast<int>(header.integer(1, 1 << 20, "width"));
    img.height = static_cast<int>(header.integer(1, 1 << 20, "height"));
    img.maxval = static_cast<int>(header.integer(1, 65535, "maxval"));
    const std::size_t start = header.raster_start();
    const std::size_t bps = img.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() - start < count * bps) throw FormatError("truncated PGM raster", bytes.size());
    img.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = bytes.data() + start + i * bps;
        const std::uint16_t v = bps == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
        if (v > img.maxval) throw FormatError("sample exceeds maxval", start + i * bps);
        img.samples[i] = v;
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
    if (image.width < 1 || image.height < 1 || image.maxval < 1 || image.maxval > 65535)
        throw std::invalid_argument("write_pgm: bad header values");
    const std::size_t count = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
    if (image.samples.size() != count) throw std::invalid_argument("write_pgm: sample count mismatch");
    const bool wide = image.maxval > 255;
    std::vector<unsigned char> body;
    body.reserve(count * (wide ? 2 : 1));
    for (auto v : image.samples) {
        if (v > image.maxval) throw std::invalid_argument("write_pgm: sample exceeds maxval");
        if (wide) body.push_back(static_cast<unsigned char>(v >> 8));
        body.push_back(static_cast<unsigned char>(v & 0xFF));
    }
    std::ostringstream hdr;
    hdr << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
    dump(path, hdr.str(), body);
}

GrayImage read_gray(const std::filesystem::path& path) {
    const PgmImage pgm = read_pgm(path);
    std::vector<float> values(pgm.samples.size());
    const float scale = static_cast<float>(pgm.maxval);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(pgm.samples[i]) / scale;
    return GrayImage(pgm.width, pgm.height, std::move(values));
}

void write_gray(const std::filesystem::path& path, const GrayImage& image) {
    PgmImage pgm{image.width(), image.height(), 255, {}};
    pgm.samples.reserve(image.values().size());
    for (float v : image.values()) pgm.samples.push_back(static_cast<std::uint16_t>(std::lround(v * 255.0f)));
    write_pgm(path, pgm);
}

DisparityMap read_disparity(const std::filesystem::path& path, int max_disparity) {
    const PgmImage pgm = read_pgm(path);
    DisparityMap map(pgm.width, pgm.height, max_disparity);
    for (int y = 0; y < pgm.height; ++y) {
        for (int x = 0; x < pgm.width; ++x) {
            const auto v = pgm.samples[static_cast<std::size_t>(y) * pgm.width + x];
            if (v == kInvalidDisparity) {
                map.invalidate(x, y);
            } else if (v > max_disparity) {
                throw FormatError("disparity exceeds maximum " + std::to_string(max_disparity),
                                  static_cast<std::uint64_t>(y) * pgm.width + x);
            } else {
                map.set(x, y, v);
            }
        }
    }
    return map;
}

void write_disparity(const std::filesystem::path& path, const DisparityMap& map) {
    if (map.max_disparity() >= kInvalidDisparity)
        throw std::invalid_argument("write_disparity: max disparity does not fit 16-bit encoding");
    PgmImage pgm{map.width(), map.height(), 65535, {}};
    pgm.samples.reserve(static_cast<std::size_t>(map.width()) * map.height());
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            pgm.samples.push_back(map.is_valid(x, y) ? static_cast<std::uint16_t>(map.at(x, y)) : kInvalidDisparity);
    write_pgm(path, pgm);
}

GroundTruthMap read_ground_truth(const std::filesystem::path& path) {
    const PgmImage pgm = read_pgm(path);
    GroundTruthMap gt(pgm.width, pgm.height);
    for (int y = 0; y < pgm.height; ++y) {
        for (int x = 0; x < pgm.width; ++x) {
            const auto v = pgm.samples[static_cast<std::size_t>(y) * pgm.width + x];
            if (v != 0) gt.set(x, y, static_cast<double>(v) / kGroundTruthScale);
        }
    }
    return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruthMap& map) {
    PgmImage pgm{map.width(), map.height(), 65535, {}};
    pgm.samples.reserve(static_cast<std::size_t>(map.width()) * map.height());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (!map.is_valid(x, y)) {
                pgm.samples.push_back(0);
                continue;
            }
            const long scaled = std::lround(map.at(x, y) * kGroundTruthScale);
            if (scaled < 1 || scaled > 65535)
                throw std::invalid_argument("write_ground_truth: disparity not representable at (" +
                                            std::to_string(x) + ", " + std::to_string(y) + ")");
            pgm.samples.push_back(static_cast<std::uint16_t>(scaled));
        }
    }
    write_pgm(path, pgm);
}

Grid<float> read_pfm(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    HeaderReader header(bytes);
    if (header.token() != "Pf") throw FormatError("not a single-channel PFM file: " + path.string(), 0);
    const int width = static_cast<int>(header.integer(1, 1 << 20, "width"));
    const int height = static_cast<int>(header.integer(1, 1 << 20, "height"));
    const std::size_t scale_at = header.pos();
    const std::string scale_token = header.token();
    double scale = 0.0;
    try {
        scale = std::stod(scale_token);
    } catch (...) {
        throw FormatError("bad PFM scale '" + scale_token + "'", scale_at);
    }
    if (scale == 0.0 || !std::isfinite(scale)) throw FormatError("bad PFM scale", scale_at);
    const bool little = scale < 0.0;
    const std::size_t start = header.raster_start();
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - start < count * 4) throw FormatError("truncated PFM raster", bytes.size());
    Grid<float> out(width, height);
    // PFM stores rows bottom to top.
    for (int row = 0; row < height; ++row) {
        for (int x = 0; x < width; ++x) {
            const unsigned char* p = bytes.data() + start + (static_cast<std::size_t>(row) * width + x) * 4;
            const std::uint32_t bits = little ? (std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                                 std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24)
                                              : (std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 |
                                                 std::uint32_t(p[1]) << 16 | std::uint32_t(p[0]) << 24);
            out(x, height - 1 - row) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

void write_pfm(const std::filesystem::path& path, const Grid<float>& values) {
    if (values.width() < 1 || values.height() < 1) throw std::invalid_argument("write_pfm: empty grid");
    std::vector<unsigned char> body;
    body.reserve(values.size() * 4);
    for (int row = values.height() - 1; row >= 0; --row) {
        for (int x = 0; x < values.width(); ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(values(x, row));
            for (int b = 0; b < 4; ++b) body.push_back(static_cast<unsigned char>(bits >> (8 * b)));
        }
    }
    std::ostringstream hdr;
    hdr << "Pf\n" << values.width() << ' ' << values.height() << "\n-1.0\n";
    dump(path, hdr.str(), body);
}

ConfidenceMap read_confidence(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && magic[1] == 'f') {
        const Grid<float> raw = read_pfm(path);
        ConfidenceMap map(raw.width(), raw.height());
        for (int y = 0; y < raw.height(); ++y)
            for (int x = 0; x < raw.width(); ++x) {
                const float c = raw(x, y);
                if (!(c >= 0.0f && c <= 1.0f))
                    throw FormatError("confidence outside [0,1]", static_cast<std::uint64_t>(y) * raw.width() + x);
                map.set(x, y, c);
            }
        return map;
    }
    const PgmImage pgm = read_pgm(path);
    ConfidenceMap map(pgm.width, pgm.height);
    for (int y = 0; y < pgm.height; ++y)
        for (int x = 0; x < pgm.width; ++x)
            map.set(x, y, static_cast<float>(pgm.samples[static_cast<std::size_t>(y) * pgm.width + x]) /
                              static_cast<float>(pgm.maxval));
    return map;
}

void write_confidence_pgm(const std::filesystem::path& path, const ConfidenceMap& map) {
    PgmImage pgm{map.width(), map.height(), 65535, {}};
    pgm.samples.reserve(map.values().size());
    for (float c : map.values()) pgm.samples.push_back(static_cast<std::uint16_t>(std::lround(c * 65535.0f)));
    write_pgm(path, pgm);
}

void write_confidence_pfm(const std::filesystem::path& path, const ConfidenceMap& map) {
    Grid<float> raw(map.width(), map.height());
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) raw(x, y) = map.at(x, y);
    write_pfm(path, raw);
}

}  // namespace cva::io
