#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace glyphid {

/// Inclusive pixel-coordinate rectangle.
struct Box {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool valid() const { return x1 >= x0 && y1 >= y0; }
    bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }

    bool operator==(const Box&) const = default;
};

/// Binary raster, row-major, 1 = foreground.
struct Bitmap {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    Bitmap() = default;
    Bitmap(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0) {}

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, uint8_t v = 1) { pixels[static_cast<size_t>(y) * width + x] = v; }

    long long foreground_count() const {
        long long n = 0;
        for (uint8_t p : pixels) n += (p != 0);
        return n;
    }

    /// Tight bounding box of the foreground; nullopt when blank.
    std::optional<Box> foreground_box() const {
        Box b{width, height, -1, -1};
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (at(x, y)) {
                    if (x < b.x0) b.x0 = x;
                    if (x > b.x1) b.x1 = x;
                    if (y < b.y0) b.y0 = y;
                    if (y > b.y1) b.y1 = y;
                }
        if (!b.valid()) return std::nullopt;
        return b;
    }

    bool operator==(const Bitmap&) const = default;
};

/// 8-bit grayscale raster, row-major, 0 = black.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 255)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, uint8_t v) { pixels[static_cast<size_t>(y) * width + x] = v; }
};

} // namespace glyphid
