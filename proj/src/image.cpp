#include "stitch/image.hpp"

#include <cmath>

namespace stitch {

GrayImage to_grayscale(const Image& img) {
    GrayImage out(img.height, img.width);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            out(i, j) = 0.299 * img.at(i, j, 0) + 0.587 * img.at(i, j, 1) +
                        0.114 * img.at(i, j, 2);
    return out;
}

CostMap color_difference_map(const Image& a, const Image& b, const BinaryMask& domain) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "color_difference_map");
    detail::require_same_size(a.height, a.width, domain.height, domain.width,
                              "color_difference_map domain");
    CostMap out(a.height, a.width);
    out.domain = domain;
    for (int i = 0; i < a.height; ++i) {
        for (int j = 0; j < a.width; ++j) {
            if (!domain(i, j)) continue;
            double s = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = a.at(i, j, c) - b.at(i, j, c);
                s += d * d;
            }
            out(i, j) = std::sqrt(s);
        }
    }
    return out;
}

namespace {

// Central differences, replicated borders.
void luma_gradients(const GrayImage& g, GrayImage& gx, GrayImage& gy) {
    gx = GrayImage(g.height, g.width);
    gy = GrayImage(g.height, g.width);
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            const int jl = j > 0 ? j - 1 : 0;
            const int jr = j + 1 < g.width ? j + 1 : g.width - 1;
            const int iu = i > 0 ? i - 1 : 0;
            const int id = i + 1 < g.height ? i + 1 : g.height - 1;
            gx(i, j) = 0.5 * (g(i, jr) - g(i, jl));
            gy(i, j) = 0.5 * (g(id, j) - g(iu, j));
        }
    }
}

}  // namespace

CostMap gradient_difference_map(const Image& a, const Image& b, const BinaryMask& domain) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "gradient_difference_map");
    detail::require_same_size(a.height, a.width, domain.height, domain.width,
                              "gradient_difference_map domain");
    GrayImage ga = to_grayscale(a), gb = to_grayscale(b);
    GrayImage ax, ay, bx, by;
    luma_gradients(ga, ax, ay);
    luma_gradients(gb, bx, by);
    CostMap out(a.height, a.width);
    out.domain = domain;
    for (int i = 0; i < a.height; ++i) {
        for (int j = 0; j < a.width; ++j) {
            if (!domain(i, j)) continue;
            const double dx = ax(i, j) - bx(i, j);
            const double dy = ay(i, j) - by(i, j);
            out(i, j) = std::sqrt(dx * dx + dy * dy);
        }
    }
    return out;
}

double mask_area(const SoftMask& m) {
    double s = 0.0;
    for (double v : m.data) s += v;
    return s;
}

double mask_area(const BinaryMask& m) {
    double s = 0.0;
    for (auto v : m.data) s += v;
    return s;
}

SoftMask mask_intersect(const BinaryMask& a, const SoftMask& b) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "mask_intersect");
    SoftMask out(a.height, a.width);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = a.data[k] ? b.data[k] : 0.0;
    return out;
}

SoftMask mask_intersect(const SoftMask& a, const SoftMask& b) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "mask_intersect");
    SoftMask out(a.height, a.width);
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = a.data[k] * b.data[k];
    return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "mask_and");
    BinaryMask out(a.height, a.width);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(a.data[k] && b.data[k]);
    return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    detail::require_same_size(a.height, a.width, b.height, b.width, "mask_union");
    BinaryMask out(a.height, a.width);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(a.data[k] || b.data[k]);
    return out;
}

std::size_t mask_count(const BinaryMask& m) {
    std::size_t n = 0;
    for (auto v : m.data) n += v;
    return n;
}

Image transposed(const Image& img) {
    Image out(img.width, img.height);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            for (int c = 0; c < 3; ++c) out.at(j, i, c) = img.at(i, j, c);
    return out;
}

CostMap transposed(const CostMap& c) {
    CostMap out(c.width, c.height);
    out.domain = transposed(c.domain);
    for (int i = 0; i < c.height; ++i)
        for (int j = 0; j < c.width; ++j) out(j, i) = c(i, j);
    return out;
}

}  // namespace stitch
