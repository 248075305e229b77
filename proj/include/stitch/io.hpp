#pragma once

#include <string>

#include "stitch/image.hpp"

namespace stitch {

// PNG, any bit depth / palette / alpha; decoded to 8-bit RGB and scaled to [0,1].
Image read_png(const std::string& path);

// 8-bit RGB PNG, values rounded from [0,1].
void write_png(const std::string& path, const Image& img);

// Grayscale variant of the above.
void write_png_gray(const std::string& path, const GrayImage& img);

// Reports the channel count of a PNG after palette expansion (1, 2, 3 or 4)
// and decodes the first channel scaled to [0,1]. Used for mask ingestion,
// where multi-channel input must be rejected by the caller.
GrayImage read_png_channel0(const std::string& path, int* channels);

// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

// Masks serialize as PGM with 0/255 values; values >= 128 read back as 1.
BinaryMask read_mask_pgm(const std::string& path);
void write_mask_pgm(const std::string& path, const BinaryMask& mask);

}  // namespace stitch
