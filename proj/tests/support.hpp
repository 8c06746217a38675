#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "cva/cost_volume.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("cva_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline cva::CostVolume random_volume(int w, int h, int d, std::uint64_t seed, bool normalized = true) {
    cva::CostVolume v(w, h, d, 0.0f, normalized);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& c : v.costs()) c = u(rng);
    return v;
}

}  // namespace testing
