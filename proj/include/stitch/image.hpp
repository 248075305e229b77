#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stitch/error.hpp"

namespace stitch {

// Row-major 2-D grid. The Tag parameter keeps semantically different grids
// (gray images, soft masks, ...) from being mixed up at compile time.
template <typename T, typename Tag>
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int h, int w, T fill = T{})
        : height(h), width(w), data(checked_size(h, w), fill) {}

    T& operator()(int i, int j) { return data[index(i, j)]; }
    const T& operator()(int i, int j) const { return data[index(i, j)]; }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(width) + j;
    }
    std::size_t pixel_count() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_size(int h, int w) const { return height == h && width == w; }
    bool in_bounds(int i, int j) const {
        return i >= 0 && i < height && j >= 0 && j < width;
    }

    static std::size_t checked_size(int h, int w) {
        if (h < 0 || w < 0) throw UsageError("grid dimensions must be non-negative");
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
};

// Single-channel intensities in [0,1].
using GrayImage = Grid<double, struct GrayImageTag>;

// Per-pixel blend weights in [0,1].
using SoftMask = Grid<double, struct SoftMaskTag>;

// Hard labels, every value exactly 0 or 1.
using BinaryMask = Grid<std::uint8_t, struct BinaryMaskTag>;

// Three-channel RGB image, intensities in [0,1], row-major interleaved.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size = height * width * 3

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), data(Grid<double, void>::checked_size(h, w) * 3, fill) {}

    double& at(int i, int j, int c) { return data[index(i, j, c)]; }
    double at(int i, int j, int c) const { return data[index(i, j, c)]; }
    std::size_t index(int i, int j, int c) const {
        return (static_cast<std::size_t>(i) * width + j) * 3 + c;
    }
    std::size_t pixel_count() const { return data.size() / 3; }
    bool empty() const { return data.empty(); }
    bool same_size(int h, int w) const { return height == h && width == w; }
};

// Non-negative per-pixel cost, defined only where `domain` is 1 and zero elsewhere.
struct CostMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;
    BinaryMask domain;

    CostMap() = default;
    CostMap(int h, int w)
        : height(h), width(w),
          data(Grid<double, void>::checked_size(h, w), 0.0), domain(h, w, 0) {}

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }
    bool empty() const { return data.empty(); }
};

namespace detail {
inline void require_same_size(int ha, int wa, int hb, int wb, const char* what) {
    if (ha != hb || wa != wb)
        throw DataError(std::string(what) + ": incompatible dimensions (" +
                        std::to_string(ha) + "x" + std::to_string(wa) + " vs " +
                        std::to_string(hb) + "x" + std::to_string(wb) + ")");
}
}  // namespace detail

// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const Image& img);

// Per-pixel Euclidean RGB distance inside `domain`, zero outside.
CostMap color_difference_map(const Image& a, const Image& b, const BinaryMask& domain);

// Euclidean distance between central-difference luma gradients inside `domain`.
// Alternative seam cost for scenes with exposure mismatch.
CostMap gradient_difference_map(const Image& a, const Image& b, const BinaryMask& domain);

double mask_area(const SoftMask& m);
double mask_area(const BinaryMask& m);

// Elementwise product.
SoftMask mask_intersect(const BinaryMask& a, const SoftMask& b);
SoftMask mask_intersect(const SoftMask& a, const SoftMask& b);

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

// Count of set pixels.
std::size_t mask_count(const BinaryMask& m);

template <typename T, typename Tag>
Grid<T, Tag> transposed(const Grid<T, Tag>& g) {
    Grid<T, Tag> out(g.width, g.height);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) out(j, i) = g(i, j);
    return out;
}

Image transposed(const Image& img);
CostMap transposed(const CostMap& c);

}  // namespace stitch
