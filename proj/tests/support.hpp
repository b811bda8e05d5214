#pragma once

#include "glyphid/bitmap.hpp"
#include "glyphid/rng.hpp"

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

namespace testsupport {

/// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("glyphid-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
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

inline std::filesystem::path data_dir() { return TEST_DATA_DIR; }

inline glyphid::Bitmap random_bitmap(glyphid::Rng& rng, int w, int h, double fill) {
    glyphid::Bitmap b;
    b.width = w;
    b.height = h;
    b.pixels.assign(static_cast<size_t>(w) * h, 0);
    for (auto& px : b.pixels) px = rng.unit() < fill ? 1 : 0;
    return b;
}

} // namespace testsupport
