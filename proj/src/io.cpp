#include "stitch/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace stitch {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(double v) {
    double x = std::lround(v * 255.0);
    if (x < 0) x = 0;
    if (x > 255) x = 255;
    return static_cast<std::uint8_t>(x);
}

struct PngRows {
    std::vector<std::uint8_t> bytes;
    std::vector<png_bytep> rows;
    int height = 0, width = 0, channels = 0;
};

// Decodes any PNG to 8-bit samples; palette and tRNS are expanded, 16-bit is stripped.
PngRows decode_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open PNG file: " + path);

    std::uint8_t sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw DataError("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng init failed");
    }

    PngRows out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt PNG file: " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);       // palette -> rgb, gray<8 -> 8, tRNS -> alpha
    png_set_strip_16(png);
    png_read_update_info(png, info);

    out.height = static_cast<int>(png_get_image_height(png, info));
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);

    out.bytes.resize(stride * out.height);
    out.rows.resize(out.height);
    for (int i = 0; i < out.height; ++i) out.rows[i] = out.bytes.data() + stride * i;
    png_read_image(png, out.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void encode_png(const std::string& path, int height, int width, int channels,
                const std::vector<std::uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write PNG file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG write failed: " + path);
    }

    png_init_io(png, fp.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(height);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int i = 0; i < height; ++i)
        rows[i] = const_cast<png_bytep>(bytes.data() + stride * i);
    png_write_image(png, rows.data());
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_png(const std::string& path) {
    PngRows raw = decode_png(path);
    Image img(raw.height, raw.width);
    const int ch = raw.channels;
    for (int i = 0; i < raw.height; ++i) {
        const std::uint8_t* row = raw.rows[i];
        for (int j = 0; j < raw.width; ++j) {
            const std::uint8_t* px = row + static_cast<std::size_t>(j) * ch;
            double r, g, b;
            if (ch >= 3) {
                r = px[0] / 255.0;
                g = px[1] / 255.0;
                b = px[2] / 255.0;
            } else {
                r = g = b = px[0] / 255.0;  // gray, alpha dropped
            }
            img.at(i, j, 0) = r;
            img.at(i, j, 1) = g;
            img.at(i, j, 2) = b;
        }
    }
    return img;
}

void write_png(const std::string& path, const Image& img) {
    std::vector<std::uint8_t> bytes(img.pixel_count() * 3);
    for (std::size_t k = 0; k < img.data.size(); ++k) bytes[k] = to_byte(img.data[k]);
    encode_png(path, img.height, img.width, 3, bytes);
}

void write_png_gray(const std::string& path, const GrayImage& img) {
    std::vector<std::uint8_t> bytes(img.pixel_count());
    for (std::size_t k = 0; k < img.data.size(); ++k) bytes[k] = to_byte(img.data[k]);
    encode_png(path, img.height, img.width, 1, bytes);
}

GrayImage read_png_channel0(const std::string& path, int* channels) {
    PngRows raw = decode_png(path);
    if (channels) *channels = raw.channels;
    GrayImage out(raw.height, raw.width);
    for (int i = 0; i < raw.height; ++i) {
        const std::uint8_t* row = raw.rows[i];
        for (int j = 0; j < raw.width; ++j)
            out(i, j) = row[static_cast<std::size_t>(j) * raw.channels] / 255.0;
    }
    return out;
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c) && c != '#')
        tok.push_back(static_cast<char>(c));
    if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
    }
    return tok;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PGM file: " + path);
    if (pgm_token(in) != "P5") throw DataError("not a binary (P5) PGM file: " + path);
    int width, height, maxval;
    try {
        width = std::stoi(pgm_token(in));
        height = std::stoi(pgm_token(in));
        maxval = std::stoi(pgm_token(in));
    } catch (const std::exception&) {
        throw DataError("malformed PGM header: " + path);
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw DataError("unsupported PGM header in " + path);

    std::vector<char> bytes(static_cast<std::size_t>(width) * height);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw DataError("truncated PGM data: " + path);

    GrayImage out(height, width);
    for (std::size_t k = 0; k < bytes.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(bytes[k]) / static_cast<double>(maxval);
    return out;
}

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write PGM file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<char> bytes(img.pixel_count());
    for (std::size_t k = 0; k < img.data.size(); ++k)
        bytes[k] = static_cast<char>(to_byte(img.data[k]));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("PGM write failed: " + path);
}

BinaryMask read_mask_pgm(const std::string& path) {
    GrayImage g = read_pgm(path);
    BinaryMask out(g.height, g.width);
    for (std::size_t k = 0; k < g.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(g.data[k] >= 128.0 / 255.0);
    return out;
}

void write_mask_pgm(const std::string& path, const BinaryMask& mask) {
    GrayImage g(mask.height, mask.width);
    for (std::size_t k = 0; k < mask.data.size(); ++k) g.data[k] = mask.data[k] ? 1.0 : 0.0;
    write_pgm(path, g);
}

}  // namespace stitch
