#include "glyphid/image_io.hpp"

#include "glyphid/errors.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace glyphid {

namespace {

// Skips PGM whitespace and '#' comment lines, then reads one integer token.
int next_pgm_int(std::istream& in, const std::filesystem::path& path) {
    int c = in.peek();
    while (c != EOF) {
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
        c = in.peek();
    }
    int value;
    if (!(in >> value))
        fail(Errc::ParseError, "malformed PGM header in " + path.string());
    return value;
}

GrayImage read_pgm(std::ifstream& in, bool binary, const std::filesystem::path& path) {
    int width = next_pgm_int(in, path);
    int height = next_pgm_int(in, path);
    int maxval = next_pgm_int(in, path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        fail(Errc::ParseError, "bad PGM dimensions in " + path.string());
    GrayImage img(width, height);
    if (binary) {
        in.get(); // single whitespace after maxval
        size_t n = static_cast<size_t>(width) * height;
        if (maxval < 256) {
            std::vector<unsigned char> buf(n);
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
            if (static_cast<size_t>(in.gcount()) != n)
                fail(Errc::ParseError, "truncated PGM data in " + path.string());
            for (size_t i = 0; i < n; ++i)
                img.pixels[i] = static_cast<uint8_t>(buf[i] * 255 / maxval);
        } else {
            std::vector<unsigned char> buf(n * 2);
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
            if (static_cast<size_t>(in.gcount()) != n * 2)
                fail(Errc::ParseError, "truncated PGM data in " + path.string());
            for (size_t i = 0; i < n; ++i) {
                int v = buf[2 * i] << 8 | buf[2 * i + 1];
                img.pixels[i] = static_cast<uint8_t>(v * 255 / maxval);
            }
        }
    } else {
        for (size_t i = 0; i < img.pixels.size(); ++i) {
            int v = next_pgm_int(in, path);
            if (v < 0 || v > maxval)
                fail(Errc::ParseError, "PGM sample out of range in " + path.string());
            img.pixels[i] = static_cast<uint8_t>(v * 255 / maxval);
        }
    }
    return img;
}

GrayImage read_png(const std::filesystem::path& path) {
    FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) fail(Errc::IoError, "cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(Errc::IoError, "libpng init failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(Errc::ParseError, "malformed PNG " + path.string());
    }
    png_init_io(png, fp);
    png_read_png(png, info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING |
                     PNG_TRANSFORM_EXPAND,
                 nullptr);
    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int channels = png_get_channels(png, info);
    png_bytepp rows = png_get_rows(png, info);
    GrayImage img(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        for (png_uint_32 x = 0; x < width; ++x) {
            png_bytep px = rows[y] + static_cast<size_t>(x) * channels;
            int v = 0;
            for (int c = 0; c < channels; ++c) v += px[c];
            img.set(static_cast<int>(x), static_cast<int>(y), static_cast<uint8_t>(v / channels));
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

} // namespace

GrayImage read_gray_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2) fail(Errc::ParseError, "empty image file " + path.string());
    if (magic[0] == 'P' && magic[1] == '5') return read_pgm(in, true, path);
    if (magic[0] == 'P' && magic[1] == '2') return read_pgm(in, false, path);
    if (magic[0] == char(0x89) && magic[1] == 'P') {
        in.close();
        return read_png(path);
    }
    fail(Errc::ParseError, "unsupported image format in " + path.string() +
                               " (expected PGM P2/P5 or PNG)");
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write " + path.string());
    out << "P2\n" << image.width << " " << image.height << "\n255\n";
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            out << int(image.at(x, y)) << (x + 1 == image.width ? "" : " ");
        }
        out << "\n";
    }
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Bitmap& bitmap) {
    write_pgm(path, to_gray(bitmap));
}

GrayImage to_gray(const Bitmap& bitmap) {
    GrayImage img(bitmap.width, bitmap.height, 255);
    for (int y = 0; y < bitmap.height; ++y)
        for (int x = 0; x < bitmap.width; ++x)
            if (bitmap.at(x, y)) img.set(x, y, 0);
    return img;
}

} // namespace glyphid
