#include "stitch/saliency.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include "stitch/io.hpp"

namespace stitch {

namespace {

// FFTW plan creation is not thread safe; executions on distinct plans are.
std::mutex fftw_mutex;

struct FftwBuffer {
    fftw_complex* p = nullptr;
    explicit FftwBuffer(std::size_t n) {
        p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!p) throw Error("fftw_malloc failed");
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// Bilinear resample to an arbitrary size (edge-clamped).
GrayImage resize_bilinear(const GrayImage& src, int h, int w) {
    GrayImage out(h, w);
    const double sy = h > 1 ? static_cast<double>(src.height - 1) / (h - 1) : 0.0;
    const double sx = w > 1 ? static_cast<double>(src.width - 1) / (w - 1) : 0.0;
    for (int i = 0; i < h; ++i) {
        const double y = i * sy;
        const int y0 = std::min(static_cast<int>(y), src.height - 1);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double ay = y - y0;
        for (int j = 0; j < w; ++j) {
            const double x = j * sx;
            const int x0 = std::min(static_cast<int>(x), src.width - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double ax = x - x0;
            const double top = src(y0, x0) + ax * (src(y0, x1) - src(y0, x0));
            const double bot = src(y1, x0) + ax * (src(y1, x1) - src(y1, x0));
            out(i, j) = top + ay * (bot - top);
        }
    }
    return out;
}

// Mean over the in-bounds 3x3 neighborhood.
GrayImage box3(const GrayImage& src) {
    GrayImage out(src.height, src.width);
    for (int i = 0; i < src.height; ++i) {
        for (int j = 0; j < src.width; ++j) {
            double s = 0.0;
            int n = 0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= src.height || jj < 0 || jj >= src.width) continue;
                    s += src(ii, jj);
                    ++n;
                }
            out(i, j) = s / n;
        }
    }
    return out;
}

GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        kernel[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
        ksum += kernel[d + radius];
    }
    for (double& k : kernel) k /= ksum;

    GrayImage tmp(src.height, src.width), out(src.height, src.width);
    for (int i = 0; i < src.height; ++i)
        for (int j = 0; j < src.width; ++j) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int jj = std::clamp(j + d, 0, src.width - 1);
                s += kernel[d + radius] * src(i, jj);
            }
            tmp(i, j) = s;
        }
    for (int i = 0; i < src.height; ++i)
        for (int j = 0; j < src.width; ++j) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int ii = std::clamp(i + d, 0, src.height - 1);
                s += kernel[d + radius] * tmp(ii, j);
            }
            out(i, j) = s;
        }
    return out;
}

// Scale so the maximum becomes 1; a flat map collapses to zero.
void normalize_max(SoftMask& m) {
    double lo = m.data.empty() ? 0.0 : m.data[0];
    double hi = lo;
    for (double v : m.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)) || hi <= 0.0) {
        std::fill(m.data.begin(), m.data.end(), 0.0);
        return;
    }
    for (double& v : m.data) v = std::clamp(v / hi, 0.0, 1.0);
}

}  // namespace

SoftMask spectral_residual(const GrayImage& gray, const SaliencyConfig& cfg) {
    if (gray.height < 16 || gray.width < 16)
        throw DataError("spectral_residual: image must be at least 16x16");
    if (cfg.work_size < 8) throw UsageError("spectral_residual: work_size must be >= 8");

    const int n = cfg.work_size;
    GrayImage small = resize_bilinear(gray, n, n);

    // Remove the mean so the DC bin carries nothing.
    double mean = 0.0;
    for (double v : small.data) mean += v;
    mean /= small.data.size();
    double max_abs = 0.0;
    for (double& v : small.data) {
        v -= mean;
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (max_abs <= 1e-12) return SoftMask(gray.height, gray.width, 0.0);

    const std::size_t total = static_cast<std::size_t>(n) * n;
    FftwBuffer in(total), freq(total);
    for (std::size_t k = 0; k < total; ++k) {
        in.p[k][0] = small.data[k];
        in.p[k][1] = 0.0;
    }

    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fwd = fftw_plan_dft_2d(n, n, in.p, freq.p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(n, n, freq.p, in.p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);

    GrayImage log_amp(n, n);
    std::vector<double> phase(total);
    double max_mag = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        const double mag = std::hypot(freq.p[k][0], freq.p[k][1]);
        max_mag = std::max(max_mag, mag);
    }
    if (max_mag <= 0.0) {
        // Constant input: the spectrum is empty after mean removal.
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        return SoftMask(gray.height, gray.width, 0.0);
    }
    // The floor scales with the spectrum so the residual is invariant to a
    // global intensity gain.
    const double floor_mag = max_mag * 1e-12;
    for (std::size_t k = 0; k < total; ++k) {
        const double mag = std::hypot(freq.p[k][0], freq.p[k][1]);
        log_amp.data[k] = std::log(std::max(mag, floor_mag));
        phase[k] = std::atan2(freq.p[k][1], freq.p[k][0]);
    }

    const GrayImage smoothed = box3(log_amp);
    for (std::size_t k = 0; k < total; ++k) {
        const double amp = std::exp(log_amp.data[k] - smoothed.data[k]);
        freq.p[k][0] = amp * std::cos(phase[k]);
        freq.p[k][1] = amp * std::sin(phase[k]);
    }
    fftw_execute(bwd);

    GrayImage sal(n, n);
    const double scale = 1.0 / total;  // FFTW backward transform is unscaled
    for (std::size_t k = 0; k < total; ++k) {
        const double re = in.p[k][0] * scale, im = in.p[k][1] * scale;
        sal.data[k] = re * re + im * im;
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }

    sal = gaussian_blur(sal, cfg.blur_sigma);
    const GrayImage up = resize_bilinear(sal, gray.height, gray.width);
    SoftMask out(gray.height, gray.width);
    out.data = up.data;
    normalize_max(out);
    return out;
}

BinaryMask binarize(const SoftMask& s, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw UsageError("binarize: tau must lie strictly inside (0,1)");
    BinaryMask out(s.height, s.width);
    for (std::size_t k = 0; k < s.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(s.data[k] >= tau);
    return out;
}

BinaryMask object_union(const BinaryMask& m_t, const BinaryMask& m_r) {
    detail::require_same_size(m_t.height, m_t.width, m_r.height, m_r.width, "object_union");
    BinaryMask out(m_t.height, m_t.width);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = std::max(m_t.data[k], m_r.data[k]);
    return out;
}

namespace {

// Out-of-bounds neighbors count as 0 for both operations.
BinaryMask erode3(const BinaryMask& m) {
    BinaryMask out(m.height, m.width, 0);
    for (int i = 0; i < m.height; ++i)
        for (int j = 0; j < m.width; ++j) {
            bool all = true;
            for (int di = -1; di <= 1 && all; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= m.height || jj < 0 || jj >= m.width || !m(ii, jj)) {
                        all = false;
                        break;
                    }
                }
            out(i, j) = static_cast<std::uint8_t>(all);
        }
    return out;
}

BinaryMask dilate3(const BinaryMask& m) {
    BinaryMask out(m.height, m.width, 0);
    for (int i = 0; i < m.height; ++i)
        for (int j = 0; j < m.width; ++j) {
            bool any = false;
            for (int di = -1; di <= 1 && !any; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii >= 0 && ii < m.height && jj >= 0 && jj < m.width && m(ii, jj)) {
                        any = true;
                        break;
                    }
                }
            out(i, j) = static_cast<std::uint8_t>(any);
        }
    return out;
}

}  // namespace

BinaryMask morph_cleanup(const BinaryMask& m) {
    return erode3(dilate3(dilate3(erode3(m))));  // open, then close
}

BinaryMask load_mask(const std::string& path, int expected_height, int expected_width) {
    BinaryMask mask;
    // Dispatch on magic bytes rather than the extension.
    {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw DataError("mask file not found: " + path);
        unsigned char magic[2] = {0, 0};
        const std::size_t got = std::fread(magic, 1, 2, f);
        std::fclose(f);
        if (got != 2) throw DataError("mask file too short: " + path);
        if (magic[0] == 'P' && magic[1] == '5') {
            mask = read_mask_pgm(path);
        } else if (magic[0] == 0x89 && magic[1] == 'P') {
            int channels = 0;
            GrayImage g = read_png_channel0(path, &channels);
            if (channels != 1)
                throw DataError("mask PNG must be single-channel, got " +
                                std::to_string(channels) + " channels: " + path);
            mask = BinaryMask(g.height, g.width);
            for (std::size_t k = 0; k < g.data.size(); ++k)
                mask.data[k] = static_cast<std::uint8_t>(g.data[k] >= 128.0 / 255.0);
        } else {
            throw DataError("mask file is neither PGM (P5) nor PNG: " + path);
        }
    }
    if (!mask.same_size(expected_height, expected_width))
        throw DataError("mask " + path + " is " + std::to_string(mask.height) + "x" +
                        std::to_string(mask.width) + ", expected " +
                        std::to_string(expected_height) + "x" + std::to_string(expected_width));
    return mask;
}

SoftMask canvas_saliency(const Image& warped, const BinaryMask& validity,
                         const SaliencyConfig& cfg) {
    detail::require_same_size(warped.height, warped.width, validity.height, validity.width,
                              "canvas_saliency");
    GrayImage gray = to_grayscale(warped);
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < gray.data.size(); ++k)
        if (validity.data[k]) {
            mean += gray.data[k];
            ++n;
        }
    if (n == 0) return SoftMask(warped.height, warped.width, 0.0);
    mean /= static_cast<double>(n);
    for (std::size_t k = 0; k < gray.data.size(); ++k)
        if (!validity.data[k]) gray.data[k] = mean;

    SoftMask s = spectral_residual(gray, cfg);
    for (std::size_t k = 0; k < s.data.size(); ++k)
        if (!validity.data[k]) s.data[k] = 0.0;
    normalize_max(s);
    return s;
}

}  // namespace stitch
