// Test-only reference implementation of the spectral-residual pipeline with a
// naive row-column DFT. Kept deliberately independent of src/saliency.cpp.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "test_support.hpp"

namespace testsup {

namespace {

using Cx = std::complex<double>;

std::vector<Cx> dft_1d(const std::vector<Cx>& in, bool inverse) {
    const int n = static_cast<int>(in.size());
    std::vector<Cx> out(n);
    const double sgn = inverse ? 2.0 * M_PI : -2.0 * M_PI;
    for (int k = 0; k < n; ++k) {
        Cx acc(0.0, 0.0);
        for (int t = 0; t < n; ++t) acc += in[t] * std::polar(1.0, sgn * k * t / n);
        out[k] = acc;
    }
    return out;
}

void dft_2d(std::vector<Cx>& a, int n, bool inverse) {
    std::vector<Cx> line(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) line[j] = a[i * n + j];
        line = dft_1d(line, inverse);
        for (int j = 0; j < n; ++j) a[i * n + j] = line[j];
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) line[i] = a[i * n + j];
        line = dft_1d(line, inverse);
        for (int i = 0; i < n; ++i) a[i * n + j] = line[i];
    }
}

double sample_bilinear(const GrayImage& g, double y, double x) {
    const int y0 = std::min(static_cast<int>(y), g.height - 1);
    const int x0 = std::min(static_cast<int>(x), g.width - 1);
    const int y1 = std::min(y0 + 1, g.height - 1);
    const int x1 = std::min(x0 + 1, g.width - 1);
    const double ay = y - y0, ax = x - x0;
    const double top = g(y0, x0) + ax * (g(y0, x1) - g(y0, x0));
    const double bot = g(y1, x0) + ax * (g(y1, x1) - g(y1, x0));
    return top + ay * (bot - top);
}

}  // namespace

SoftMask naive_spectral_residual(const GrayImage& gray, int work_size, double blur_sigma) {
    const int n = work_size;
    GrayImage small(n, n);
    const double sy = n > 1 ? static_cast<double>(gray.height - 1) / (n - 1) : 0.0;
    const double sx = n > 1 ? static_cast<double>(gray.width - 1) / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) small(i, j) = sample_bilinear(gray, i * sy, j * sx);

    double mean = 0.0;
    for (double v : small.data) mean += v;
    mean /= small.data.size();
    double max_abs = 0.0;
    for (double v : small.data) max_abs = std::max(max_abs, std::abs(v - mean));
    if (max_abs <= 1e-12) return SoftMask(gray.height, gray.width, 0.0);

    std::vector<Cx> f(static_cast<std::size_t>(n) * n);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = Cx(small.data[k] - mean, 0.0);
    dft_2d(f, n, false);

    double max_mag = 0.0;
    for (const Cx& c : f) max_mag = std::max(max_mag, std::abs(c));
    if (max_mag <= 0.0) return SoftMask(gray.height, gray.width, 0.0);
    const double floor_mag = max_mag * 1e-12;

    std::vector<double> log_amp(f.size()), phase(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        log_amp[k] = std::log(std::max(std::abs(f[k]), floor_mag));
        phase[k] = std::arg(f[k]);
    }
    std::vector<double> blurred(f.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            int cnt = 0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= n || jj < 0 || jj >= n) continue;
                    s += log_amp[ii * n + jj];
                    ++cnt;
                }
            blurred[i * n + j] = s / cnt;
        }
    for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = std::polar(std::exp(log_amp[k] - blurred[k]), phase[k]);
    dft_2d(f, n, true);

    GrayImage sal(n, n);
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Cx v = f[k] * scale;
        sal.data[k] = std::norm(v);
    }

    // Gaussian blur, clamped borders.
    const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * blur_sigma)));
    std::vector<double> kern(2 * radius + 1);
    double ks = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        kern[d + radius] = std::exp(-0.5 * d * d / (blur_sigma * blur_sigma));
        ks += kern[d + radius];
    }
    for (double& k : kern) k /= ks;
    GrayImage tmp(n, n), out_small(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += kern[d + radius] * sal(i, std::clamp(j + d, 0, n - 1));
            tmp(i, j) = s;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += kern[d + radius] * tmp(std::clamp(i + d, 0, n - 1), j);
            out_small(i, j) = s;
        }

    SoftMask out(gray.height, gray.width);
    const double uy = gray.height > 1 ? static_cast<double>(n - 1) / (gray.height - 1) : 0.0;
    const double ux = gray.width > 1 ? static_cast<double>(n - 1) / (gray.width - 1) : 0.0;
    for (int i = 0; i < gray.height; ++i)
        for (int j = 0; j < gray.width; ++j)
            out(i, j) = sample_bilinear(out_small, i * uy, j * ux);

    double hi = 0.0, lo = out.data.empty() ? 0.0 : out.data[0];
    for (double v : out.data) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)) || hi <= 0.0) {
        std::fill(out.data.begin(), out.data.end(), 0.0);
        return out;
    }
    for (double& v : out.data) v = std::clamp(v / hi, 0.0, 1.0);
    return out;
}

}  // namespace testsup
