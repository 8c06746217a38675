#include "cva/costvol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>

#include "cva/errors.hpp"

namespace cva {

CostVolume::CostVolume(int width, int height, int depth, float fill, bool normalized)
    : width_(width), height_(height), depth_(depth), normalized_(normalized) {
    if (width < 1 || height < 1) throw std::invalid_argument("CostVolume: width and height must be >= 1");
    if (depth < 2) throw std::invalid_argument("CostVolume: depth must be >= 2");
    costs_.assign(static_cast<std::size_t>(width) * height * depth, fill);
}

void CostVolume::validate() const {
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            for (int d = 0; d < depth_; ++d) {
                const float c = (*this)(x, y, d);
                if (!std::isfinite(c) || c < 0.0f || (normalized_ && c > 1.0f))
                    throw std::out_of_range("cost volume cell (" + std::to_string(x) + ", " + std::to_string(y) +
                                            ", " + std::to_string(d) + ") = " + std::to_string(c) +
                                            " violates the cost range");
            }
}

namespace costvol {

Matcher parse_matcher(std::string_view tag) {
    if (tag == "census-bm") return Matcher::kCensusBm;
    if (tag == "census-sgm") return Matcher::kCensusSgm;
    throw std::invalid_argument("unknown matcher '" + std::string(tag) + "' (expected census-bm or census-sgm)");
}

std::string_view matcher_name(Matcher matcher) {
    return matcher == Matcher::kCensusBm ? "census-bm" : "census-sgm";
}

NormalizationBounds default_bounds(Matcher matcher, int window, double p2, int paths) {
    const double c_max = static_cast<double>(window) * window - 1.0;
    switch (matcher) {
        case Matcher::kCensusBm:
            return {0.0, c_max};
        case Matcher::kCensusSgm:
            if (paths < 1) throw std::invalid_argument("default_bounds: path count must be >= 1");
            if (p2 < 0.0) throw std::invalid_argument("default_bounds: p2 must be >= 0");
            return {0.0, paths * (c_max + p2)};
    }
    throw std::invalid_argument("default_bounds: unknown matcher");
}

CostVolume normalize(const CostVolume& volume, NormalizationBounds bounds) {
    if (volume.normalized()) throw InvalidStateError("normalize: volume is already normalized");
    if (!std::isfinite(bounds.c_min) || !std::isfinite(bounds.c_max) || !(bounds.c_max > bounds.c_min))
        throw std::invalid_argument("normalize: bounds require finite c_min < c_max");
    CostVolume out(volume.width(), volume.height(), volume.depth(), 0.0f, true);
    const double range = bounds.c_max - bounds.c_min;
    for (int y = 0; y < volume.height(); ++y) {
        for (int x = 0; x < volume.width(); ++x) {
            const auto src = volume.curve(x, y);
            auto dst = out.curve(x, y);
            for (int d = 0; d < volume.depth(); ++d) {
                const double c = src[d];
                if (!(c >= bounds.c_min && c <= bounds.c_max))
                    throw std::out_of_range("normalize: cost " + std::to_string(c) + " at cell (" + std::to_string(x) +
                                            ", " + std::to_string(y) + ", " + std::to_string(d) + ") outside [" +
                                            std::to_string(bounds.c_min) + ", " + std::to_string(bounds.c_max) + "]");
                dst[d] = static_cast<float>((c - bounds.c_min) / range);
            }
        }
    }
    return out;
}

void extract_patch_into(const CostVolume& volume, int x, int y, int size, std::span<float> dst) {
    if (!volume.normalized()) throw InvalidStateError("extract_patch: volume is not normalized");
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("extract_patch: size must be odd and >= 1");
    if (x < 0 || y < 0 || x >= volume.width() || y >= volume.height())
        throw std::out_of_range("extract_patch: centre (" + std::to_string(x) + ", " + std::to_string(y) +
                                ") outside the volume");
    const int depth = volume.depth();
    if (dst.size() != static_cast<std::size_t>(size) * size * depth)
        throw std::invalid_argument("extract_patch: destination size mismatch");
    const int r = size / 2;
    float* out = dst.data();
    for (int row = 0; row < size; ++row) {
        const int sy = std::clamp(y - r + row, 0, volume.height() - 1);
        for (int col = 0; col < size; ++col) {
            const int sx = std::clamp(x - r + col, 0, volume.width() - 1);
            const auto curve = volume.curve(sx, sy);
            out = std::copy(curve.begin(), curve.end(), out);
        }
    }
}

PatchTensor extract_patch(const CostVolume& volume, int x, int y, int size) {
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("extract_patch: size must be odd and >= 1");
    PatchTensor patch{size, volume.depth(), x, y, {}};
    patch.values.resize(static_cast<std::size_t>(size) * size * volume.depth());
    extract_patch_into(volume, x, y, size, patch.values);
    return patch;
}

namespace {

constexpr unsigned char kMagic[4] = {'C', 'V', 'A', 'V'};

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

std::uint16_t get_u16(std::span<const unsigned char> in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const unsigned char> in, std::size_t at) {
    return std::uint32_t(in[at]) | std::uint32_t(in[at + 1]) << 8 | std::uint32_t(in[at + 2]) << 16 |
           std::uint32_t(in[at + 3]) << 24;
}

}  // namespace

std::vector<unsigned char> encode_volume(const CostVolume& volume) {
    volume.validate();
    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(kVolumeHeaderBytes + volume.costs().size() * 4);
    put_u16(out, kVolumeFormatVersion);
    put_u16(out, volume.normalized() ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(volume.width()));
    put_u32(out, static_cast<std::uint32_t>(volume.height()));
    put_u32(out, static_cast<std::uint32_t>(volume.depth()));
    for (float c : volume.costs()) put_u32(out, std::bit_cast<std::uint32_t>(c));
    return out;
}

CostVolume decode_volume(std::span<const unsigned char> bytes) {
    if (bytes.size() < kVolumeHeaderBytes) throw FormatError("truncated cost-volume header", bytes.size());
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        throw FormatError("bad cost-volume magic (expected CVAV)", 0);
    if (get_u16(bytes, 4) != kVolumeFormatVersion)
        throw FormatError("unsupported cost-volume version " + std::to_string(get_u16(bytes, 4)), 4);
    const std::uint16_t flags = get_u16(bytes, 6);
    if (flags & ~std::uint16_t{1}) throw FormatError("unknown cost-volume flag bits", 6);
    const std::uint32_t width = get_u32(bytes, 8);
    const std::uint32_t height = get_u32(bytes, 12);
    const std::uint32_t depth = get_u32(bytes, 16);
    if (width < 1 || width > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("invalid cost-volume width", 8);
    if (height < 1 || height > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("invalid cost-volume height", 12);
    if (depth < 2 || depth > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("invalid cost-volume depth", 16);
    // 3 x 32 bits fits in 96 bits; check the product against the payload in steps.
    const unsigned __int128 cells = static_cast<unsigned __int128>(width) * height * depth;
    const std::size_t payload = bytes.size() - kVolumeHeaderBytes;
    if (cells * 4 != payload)
        throw FormatError("cost-volume payload size " + std::to_string(payload) + " does not match header dimensions",
                          cells * 4 > payload ? bytes.size() : kVolumeHeaderBytes + static_cast<std::size_t>(cells * 4));
    CostVolume vol(static_cast<int>(width), static_cast<int>(height), static_cast<int>(depth), 0.0f, (flags & 1) != 0);
    auto costs = vol.costs();
    for (std::size_t i = 0; i < costs.size(); ++i) {
        const std::size_t at = kVolumeHeaderBytes + i * 4;
        const float c = std::bit_cast<float>(get_u32(bytes, at));
        if (!std::isfinite(c) || c < 0.0f || (vol.normalized() && c > 1.0f))
            throw FormatError("cost value out of range", at);
        costs[i] = c;
    }
    return vol;
}

void write_volume(const CostVolume& volume, const std::filesystem::path& path) {
    const auto bytes = encode_volume(volume);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

CostVolume read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_volume(bytes);
}

}  // namespace costvol
}  // namespace cva
