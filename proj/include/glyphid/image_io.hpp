#pragma once

#include "glyphid/bitmap.hpp"

#include <filesystem>

namespace glyphid {

/// Read PGM (P2/P5) or grayscale PNG. PNG color images are converted by
/// channel average. Throws IoError / ParseError.
GrayImage read_gray_image(const std::filesystem::path& path);

/// ASCII PGM (P2) writer.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Binary bitmap as PGM: foreground black (0), background white (255).
void write_pgm(const std::filesystem::path& path, const Bitmap& bitmap);

/// Foreground = gray value strictly below `threshold`.
GrayImage to_gray(const Bitmap& bitmap);

} // namespace glyphid
