#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here is deliberately brute force: exhaustive path/cut enumeration and naive
// transforms that the fast implementations are checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "stitch/alignment.hpp"
#include "stitch/image.hpp"
#include "stitch/seam.hpp"

namespace testsup {

using namespace stitch;

inline AlignedPair make_pair_from_masks(const BinaryMask& valid_t, const BinaryMask& valid_r,
                                        Image warped_t = {}, Image warped_r = {}) {
    const int h = valid_t.height, w = valid_t.width;
    if (warped_t.empty()) warped_t = Image(h, w);
    if (warped_r.empty()) warped_r = Image(h, w);
    return make_prealigned(std::move(warped_t), std::move(warped_r), valid_t, valid_r);
}

// Full-canvas overlap (no exclusive regions).
inline AlignedPair full_overlap_pair(int h, int w) {
    return make_pair_from_masks(BinaryMask(h, w, 1), BinaryMask(h, w, 1));
}

// Left strip exclusive to the target, right strip exclusive to the reference,
// overlap in between: valid_t covers [0, t_end], valid_r covers [r_begin, w).
inline AlignedPair strip_pair(int h, int w, int t_end, int r_begin) {
    BinaryMask vt(h, w, 0), vr(h, w, 0);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j <= t_end; ++j) vt(i, j) = 1;
        for (int j = r_begin; j < w; ++j) vr(i, j) = 1;
    }
    return make_pair_from_masks(vt, vr);
}

inline CostMap cost_from_values(const std::vector<std::vector<double>>& rows,
                                const BinaryMask& domain) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    CostMap c(h, w);
    c.domain = domain;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) c(i, j) = domain(i, j) ? rows[i][j] : 0.0;
    return c;
}

// --- exhaustive DP oracle ---------------------------------------------------

// Minimum cost over every monotone top-to-bottom path (moves -1/0/+1 per row)
// through the overlap. Exponential; keep instances small.
inline double dp_path_oracle(const CostMap& cost, const BinaryMask& overlap) {
    const int h = overlap.height, w = overlap.width;
    int r0 = -1, r1 = -1;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (overlap(i, j)) {
                if (r0 < 0) r0 = i;
                r1 = i;
                break;
            }
    double best = std::numeric_limits<double>::infinity();
    struct Rec {
        const CostMap& cost;
        const BinaryMask& overlap;
        int r1, w;
        double best = std::numeric_limits<double>::infinity();
        void go(int i, int j, double acc) {
            acc += cost(i, j);
            if (i == r1) {
                best = std::min(best, acc);
                return;
            }
            for (int dj = -1; dj <= 1; ++dj) {
                const int jj = j + dj;
                if (jj < 0 || jj >= w || !overlap(i + 1, jj)) continue;
                go(i + 1, jj, acc);
            }
        }
    } rec{cost, overlap, r1, w};
    for (int j = 0; j < w; ++j)
        if (overlap(r0, j)) rec.go(r0, j, 0.0);
    best = rec.best;
    return best;
}

// --- exhaustive min-cut oracle ----------------------------------------------

// Minimum, over every labeling of the overlap consistent with the terminal
// constraints, of the boundary energy sum_{adjacent, opposite} cost(p)+cost(q).
inline double cut_labeling_oracle(const CostMap& cost, const AlignedPair& pair) {
    const int h = pair.height, w = pair.width;
    std::vector<PixelCoord> px;
    std::vector<int> forced;  // 0 free, 1 target, 2 reference
    Grid<int, struct IdxTag> idx(h, w, -1);
    static const int d4i[4] = {-1, 1, 0, 0};
    static const int d4j[4] = {0, 0, -1, 1};
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (!pair.overlap(i, j)) continue;
            idx(i, j) = static_cast<int>(px.size());
            px.push_back({i, j});
            int f = 0;
            for (int k = 0; k < 4; ++k) {
                const int ii = i + d4i[k], jj = j + d4j[k];
                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                if (pair.valid_t(ii, jj) && !pair.valid_r(ii, jj)) f |= 1;
                if (pair.valid_r(ii, jj) && !pair.valid_t(ii, jj)) f |= 2;
            }
            if (f & 1) f = 1;  // target precedence, mirroring graphcut_seam
            forced.push_back(f);
        }
    const int n = static_cast<int>(px.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        bool feasible = true;
        for (int k = 0; k < n && feasible; ++k) {
            const bool is_target = (bits >> k) & 1u;
            if ((forced[k] & 1) && !is_target) feasible = false;
            if ((forced[k] & 2) && is_target) feasible = false;
        }
        if (!feasible) continue;
        double e = 0.0;
        for (int k = 0; k < n; ++k) {
            const PixelCoord p = px[k];
            const bool lp = (bits >> k) & 1u;
            // right and down once per pair
            if (p.j + 1 < w && idx(p.i, p.j + 1) >= 0) {
                const bool lq = (bits >> idx(p.i, p.j + 1)) & 1u;
                if (lp != lq) e += cost(p.i, p.j) + cost(p.i, p.j + 1);
            }
            if (p.i + 1 < h && idx(p.i + 1, p.j) >= 0) {
                const bool lq = (bits >> idx(p.i + 1, p.j)) & 1u;
                if (lp != lq) e += cost(p.i, p.j) + cost(p.i + 1, p.j);
            }
        }
        best = std::min(best, e);
    }
    return best;
}

// --- brute-force distance transform ----------------------------------------

inline double nearest_seed_sq(const BinaryMask& seeds, int i, int j) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < seeds.height; ++a)
        for (int b = 0; b < seeds.width; ++b)
            if (seeds(a, b)) {
                const double d = static_cast<double>(a - i) * (a - i) +
                                 static_cast<double>(b - j) * (b - j);
                best = std::min(best, d);
            }
    return best;
}

// --- naive spectral residual (independent of the FFTW path) -----------------

// Same pipeline as stitch::spectral_residual, with a quadratic-time DFT and
// plain loops. Used to cross-check the saliency argmax.
SoftMask naive_spectral_residual(const GrayImage& gray, int work_size, double blur_sigma);

// --- deterministic RNG helpers ----------------------------------------------

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

}  // namespace testsup
