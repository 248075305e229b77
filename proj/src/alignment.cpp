#include "stitch/alignment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace stitch {

Homography Homography::translation(double tx, double ty) {
    Homography H;
    H(0, 2) = tx;
    H(1, 2) = ty;
    return H;
}

double Homography::det() const {
    const auto& m = h;
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-12) throw NumericError("homography is singular, cannot invert");
    const auto& m = h;
    Homography inv;
    inv.h = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
             (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
             (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
             (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
             (m[0] * m[4] - m[1] * m[3]) / d};
    return inv.normalized();
}

Homography Homography::normalized() const {
    Homography out = *this;
    if (std::abs(h[8]) > 1e-12) {
        for (double& v : out.h) v /= h[8];
        out.h[8] = 1.0;
    }
    return out;
}

Point Homography::apply(const Point& p) const {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    if (std::abs(w) <= 1e-12)
        throw NumericError("homography maps point to infinity");
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

std::string to_json(const Homography& H) {
    nlohmann::json j = H.h;
    return j.dump();
}

Homography homography_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid homography JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("h")) j = j["h"];
    if (!j.is_array() || j.size() != 9)
        throw DataError("homography JSON must be an array of 9 numbers, row-major");
    Homography H;
    for (int k = 0; k < 9; ++k) {
        if (!j[k].is_number()) throw DataError("homography JSON must contain numbers only");
        H.h[k] = j[k].get<double>();
    }
    H = H.normalized();
    if (!H.invertible()) throw DataError("homography JSON describes a singular matrix");
    return H;
}

Homography load_homography(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open homography file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return homography_from_json(ss.str());
}

void save_homography(const std::string& path, const Homography& H) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write homography file: " + path);
    out << to_json(H) << "\n";
}

// ---------------------------------------------------------------------------
// Feature detection and matching
// ---------------------------------------------------------------------------

namespace {

struct Corner {
    int i, j;
    double response;
};

// Harris corner response after Sobel gradients and a small Gaussian window.
std::vector<Corner> harris_corners(const GrayImage& g, const MatchConfig& cfg) {
    const int h = g.height, w = g.width;
    GrayImage ixx(h, w), iyy(h, w), ixy(h, w);
    for (int i = 1; i + 1 < h; ++i) {
        for (int j = 1; j + 1 < w; ++j) {
            const double gx = (g(i - 1, j + 1) + 2 * g(i, j + 1) + g(i + 1, j + 1)) -
                              (g(i - 1, j - 1) + 2 * g(i, j - 1) + g(i + 1, j - 1));
            const double gy = (g(i + 1, j - 1) + 2 * g(i + 1, j) + g(i + 1, j + 1)) -
                              (g(i - 1, j - 1) + 2 * g(i - 1, j) + g(i - 1, j + 1));
            ixx(i, j) = gx * gx;
            iyy(i, j) = gy * gy;
            ixy(i, j) = gx * gy;
        }
    }

    // 5x5 Gaussian window on the structure tensor.
    static const double k5[5] = {1, 4, 6, 4, 1};
    auto smooth = [&](const GrayImage& src) {
        GrayImage tmp(h, w), dst(h, w);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double s = 0, n = 0;
                for (int d = -2; d <= 2; ++d) {
                    const int jj = j + d;
                    if (jj < 0 || jj >= w) continue;
                    s += k5[d + 2] * src(i, jj);
                    n += k5[d + 2];
                }
                tmp(i, j) = s / n;
            }
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double s = 0, n = 0;
                for (int d = -2; d <= 2; ++d) {
                    const int ii = i + d;
                    if (ii < 0 || ii >= h) continue;
                    s += k5[d + 2] * tmp(ii, j);
                    n += k5[d + 2];
                }
                dst(i, j) = s / n;
            }
        return dst;
    };
    ixx = smooth(ixx);
    iyy = smooth(iyy);
    ixy = smooth(ixy);

    GrayImage resp(h, w);
    double max_resp = 0.0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double tr = ixx(i, j) + iyy(i, j);
            const double dt = ixx(i, j) * iyy(i, j) - ixy(i, j) * ixy(i, j);
            resp(i, j) = dt - cfg.harris_k * tr * tr;
            max_resp = std::max(max_resp, resp(i, j));
        }
    }
    if (max_resp <= 0.0) return {};

    const double thr = cfg.quality * max_resp;
    const int margin = cfg.patch_radius + 1;
    const int r = cfg.min_distance;
    std::vector<Corner> corners;
    for (int i = margin; i < h - margin; ++i) {
        for (int j = margin; j < w - margin; ++j) {
            const double v = resp(i, j);
            if (v < thr) continue;
            bool is_max = true;
            for (int di = -r; di <= r && is_max; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                    const double u = resp(ii, jj);
                    // Strict inequality on one half of the window breaks plateaus
                    // deterministically toward the top-left pixel.
                    if (u > v || (u == v && (di < 0 || (di == 0 && dj < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) corners.push_back({i, j, v});
        }
    }
    std::stable_sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    if (static_cast<int>(corners.size()) > cfg.max_corners) corners.resize(cfg.max_corners);
    return corners;
}

struct PatchStats {
    std::vector<double> centered;  // patch minus mean
    double norm = 0.0;             // sqrt of sum of squares
};

PatchStats patch_stats(const GrayImage& g, int ci, int cj, int r) {
    PatchStats s;
    const int n = (2 * r + 1) * (2 * r + 1);
    s.centered.resize(n);
    double mean = 0.0;
    int k = 0;
    for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj) mean += g(ci + di, cj + dj), ++k;
    mean /= n;
    double ss = 0.0;
    k = 0;
    for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj) {
            const double v = g(ci + di, cj + dj) - mean;
            s.centered[k++] = v;
            ss += v * v;
        }
    s.norm = std::sqrt(ss);
    return s;
}

}  // namespace

std::vector<Correspondence> detect_matches(const Image& a, const Image& b,
                                           const MatchConfig& cfg) {
    if (a.height < 32 || a.width < 32 || b.height < 32 || b.width < 32)
        throw DataError("detect_matches: images must be at least 32x32");

    const GrayImage ga = to_grayscale(a), gb = to_grayscale(b);
    const std::vector<Corner> ca = harris_corners(ga, cfg);
    const std::vector<Corner> cb = harris_corners(gb, cfg);
    if (ca.empty() || cb.empty()) return {};

    const int r = cfg.patch_radius;
    std::vector<PatchStats> pa(ca.size()), pb(cb.size());
    for (std::size_t k = 0; k < ca.size(); ++k) pa[k] = patch_stats(ga, ca[k].i, ca[k].j, r);
    for (std::size_t k = 0; k < cb.size(); ++k) pb[k] = patch_stats(gb, cb[k].i, cb[k].j, r);

    const double flat_eps = 1e-9;
    std::vector<int> best_ab(ca.size(), -1), best_ba(cb.size(), -1);
    std::vector<double> score_ab(ca.size(), -2.0), score_ba(cb.size(), -2.0);
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (pa[i].norm < flat_eps) continue;
        for (std::size_t j = 0; j < cb.size(); ++j) {
            if (pb[j].norm < flat_eps) continue;
            double dot = 0.0;
            for (std::size_t k = 0; k < pa[i].centered.size(); ++k)
                dot += pa[i].centered[k] * pb[j].centered[k];
            const double ncc = dot / (pa[i].norm * pb[j].norm);
            if (ncc > score_ab[i]) {
                score_ab[i] = ncc;
                best_ab[i] = static_cast<int>(j);
            }
            if (ncc > score_ba[j]) {
                score_ba[j] = ncc;
                best_ba[j] = static_cast<int>(i);
            }
        }
    }

    std::vector<Correspondence> out;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const int j = best_ab[i];
        if (j < 0 || best_ba[j] != static_cast<int>(i)) continue;
        if (score_ab[i] < cfg.min_score) continue;
        out.push_back({{static_cast<double>(ca[i].j), static_cast<double>(ca[i].i)},
                       {static_cast<double>(cb[j].j), static_cast<double>(cb[j].i)},
                       std::min(1.0, score_ab[i])});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Correspondence& u, const Correspondence& v) {
                         return u.score > v.score;
                     });
    return out;
}

// ---------------------------------------------------------------------------
// Homography estimation
// ---------------------------------------------------------------------------

namespace {

struct Normalizer {
    double cx = 0, cy = 0, s = 1;  // x' = s (x - cx)
    Point apply(const Point& p) const { return {s * (p.x - cx), s * (p.y - cy)}; }
};

Normalizer hartley(const std::vector<Point>& pts) {
    Normalizer n;
    for (const Point& p : pts) {
        n.cx += p.x;
        n.cy += p.y;
    }
    n.cx /= pts.size();
    n.cy /= pts.size();
    double mean_dist = 0.0;
    for (const Point& p : pts)
        mean_dist += std::hypot(p.x - n.cx, p.y - n.cy);
    mean_dist /= pts.size();
    n.s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    return n;
}

bool collinear(const Point& a, const Point& b, const Point& c, double eps) {
    const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(area) < eps;
}

}  // namespace

Homography dlt_homography(const std::vector<Correspondence>& matches) {
    const std::size_t n = matches.size();
    if (n < 4) throw DataError("dlt_homography needs at least 4 correspondences, got " +
                               std::to_string(n));

    std::vector<Point> src(n), dst(n);
    for (std::size_t k = 0; k < n; ++k) {
        src[k] = matches[k].src;
        dst[k] = matches[k].dst;
    }
    const Normalizer ns = hartley(src), nd = hartley(dst);

    if (n == 4) {
        // With only 4 points one collinear triple already makes the system
        // rank deficient; report it by name.
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                for (int c = b + 1; c < 4; ++c)
                    if (collinear(ns.apply(src[a]), ns.apply(src[b]), ns.apply(src[c]), 1e-8))
                        throw DataError(
                            "dlt_homography: degenerate configuration, three source points "
                            "are collinear");
    }

    Eigen::MatrixXd A(2 * n, 9);
    for (std::size_t k = 0; k < n; ++k) {
        const Point p = ns.apply(src[k]);
        const Point q = nd.apply(dst[k]);
        A.row(2 * k) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
        A.row(2 * k + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // A loses rank 8 exactly for degenerate configurations.
    if (sv(0) <= 0.0 || sv(7) < 1e-10 * sv(0))
        throw DataError("dlt_homography: degenerate configuration, DLT system is rank deficient");

    const Eigen::VectorXd hvec = svd.matrixV().col(8);
    // Denormalize: H = Td^-1 Hn Ts.
    Eigen::Matrix3d Hn;
    Hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);
    Eigen::Matrix3d Ts, Td;
    Ts << ns.s, 0, -ns.s * ns.cx, 0, ns.s, -ns.s * ns.cy, 0, 0, 1;
    Td << nd.s, 0, -nd.s * nd.cx, 0, nd.s, -nd.s * nd.cy, 0, 0, 1;
    const Eigen::Matrix3d Hd = Td.inverse() * Hn * Ts;

    Homography H;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) H(r, c) = Hd(r, c);
    H = H.normalized();
    if (!H.invertible())
        throw DataError("dlt_homography: estimated homography is singular");
    return H;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double reprojection_error(const Homography& H, const Correspondence& m) {
    const double w = H.h[6] * m.src.x + H.h[7] * m.src.y + H.h[8];
    if (std::abs(w) <= 1e-12) return std::numeric_limits<double>::infinity();
    const double x = (H.h[0] * m.src.x + H.h[1] * m.src.y + H.h[2]) / w;
    const double y = (H.h[3] * m.src.x + H.h[4] * m.src.y + H.h[5]) / w;
    return std::hypot(x - m.dst.x, y - m.dst.y);
}

std::vector<int> consensus_set(const Homography& H,
                               const std::vector<Correspondence>& matches, double thr) {
    std::vector<int> out;
    for (std::size_t k = 0; k < matches.size(); ++k)
        if (reprojection_error(H, matches[k]) <= thr) out.push_back(static_cast<int>(k));
    return out;
}

}  // namespace

RansacResult ransac_homography(const std::vector<Correspondence>& matches,
                               const RansacConfig& cfg) {
    const int n = static_cast<int>(matches.size());
    if (n < 4) throw DataError("ransac_homography needs at least 4 matches, got " +
                               std::to_string(n));

    // A 4-point sample always explains itself, so a model counts only when it
    // is corroborated beyond the sample (up to 4 extra matches when available).
    const int required = 4 + std::min(4, n - 4);

    Homography best_H;
    std::vector<int> best_inliers;
    bool found = false;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(iter))));
        std::uniform_int_distribution<int> pick(0, n - 1);
        int idx[4];
        int got = 0;
        while (got < 4) {
            const int c = pick(rng);
            bool dup = false;
            for (int k = 0; k < got; ++k) dup |= (idx[k] == c);
            if (!dup) idx[got++] = c;
        }
        std::vector<Correspondence> sample = {matches[idx[0]], matches[idx[1]],
                                              matches[idx[2]], matches[idx[3]]};
        Homography H;
        try {
            H = dlt_homography(sample);
        } catch (const DataError&) {
            continue;  // degenerate sample
        }
        std::vector<int> inliers = consensus_set(H, matches, cfg.inlier_threshold_px);
        if (static_cast<int>(inliers.size()) >= required &&
            inliers.size() > best_inliers.size()) {
            best_inliers = std::move(inliers);
            best_H = H;
            found = true;
        }
    }

    if (!found)
        throw DataError("ransac_homography: no model reached the required consensus of " +
                        std::to_string(required) + " matches");

    // Refit on the consensus set; fall back to the minimal model if the refit
    // degenerates.
    std::vector<Correspondence> support;
    support.reserve(best_inliers.size());
    for (int k : best_inliers) support.push_back(matches[k]);
    try {
        const Homography refit = dlt_homography(support);
        const std::vector<int> re = consensus_set(refit, matches, cfg.inlier_threshold_px);
        if (static_cast<int>(re.size()) >= 4) {
            best_H = refit;
            best_inliers = re;
        }
    } catch (const DataError&) {
    }

    return {best_H.normalized(), best_inliers};
}

// ---------------------------------------------------------------------------
// Warping
// ---------------------------------------------------------------------------

namespace {

// Bilinear sample at (x, y); returns false when any neighbor with nonzero
// weight falls outside [0,w-1]x[0,h-1].
template <typename Fetch>
bool bilinear(double x, double y, int h, int w, Fetch&& fetch, double* out, int ch) {
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
    const double ax = x - fx0, ay = y - fy0;
    const bool need_x1 = ax > 0.0, need_y1 = ay > 0.0;
    if (x0 < 0 || y0 < 0) return false;
    if (x0 > w - 1 || y0 > h - 1) return false;
    if (need_x1 && x0 + 1 > w - 1) return false;
    if (need_y1 && y0 + 1 > h - 1) return false;

    const int x1 = need_x1 ? x0 + 1 : x0;
    const int y1 = need_y1 ? y0 + 1 : y0;
    for (int c = 0; c < ch; ++c) {
        const double v00 = fetch(y0, x0, c), v01 = fetch(y0, x1, c);
        const double v10 = fetch(y1, x0, c), v11 = fetch(y1, x1, c);
        const double top = v00 + ax * (v01 - v00);
        const double bot = v10 + ax * (v11 - v10);
        out[c] = top + ay * (bot - top);
    }
    return true;
}

}  // namespace

AlignedPair warp_pair(const Image& target, const Image& reference, const Homography& H,
                      const WarpConfig& cfg) {
    if (!H.invertible()) throw DataError("warp_pair: homography is not invertible");
    if (target.empty() || reference.empty()) throw DataError("warp_pair: empty input image");

    // Footprints in the reference frame; homographies map the target's corner
    // rectangle to a quadrilateral, so its bounding box is exact.
    const double wt = target.width - 1.0, ht = target.height - 1.0;
    const Point corners[4] = {{0, 0}, {wt, 0}, {0, ht}, {wt, ht}};
    double min_x = 0.0, min_y = 0.0;
    double max_x = reference.width - 1.0, max_y = reference.height - 1.0;
    for (const Point& c : corners) {
        Point p;
        try {
            p = H.apply(c);
        } catch (const NumericError&) {
            throw DataError("warp_pair: target footprint crosses the plane at infinity");
        }
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }

    const double ox = std::floor(min_x), oy = std::floor(min_y);
    const int W = static_cast<int>(std::ceil(max_x) - ox) + 1;
    const int Hc = static_cast<int>(std::ceil(max_y) - oy) + 1;
    if (static_cast<std::size_t>(W) * static_cast<std::size_t>(Hc) > cfg.max_canvas_area)
        throw DataError("warp_pair: canvas of " + std::to_string(W) + "x" + std::to_string(Hc) +
                        " exceeds the maximum area of " + std::to_string(cfg.max_canvas_area));

    AlignedPair pair;
    pair.height = Hc;
    pair.width = W;
    pair.origin_x = ox;
    pair.origin_y = oy;
    pair.target_to_reference = H.normalized();
    pair.warped_target = Image(Hc, W);
    pair.warped_reference = Image(Hc, W);
    pair.valid_t = BinaryMask(Hc, W, 0);
    pair.valid_r = BinaryMask(Hc, W, 0);

    // Reference placement is a pure integer translation.
    const int jr0 = static_cast<int>(-ox), ir0 = static_cast<int>(-oy);
    for (int y = 0; y < reference.height; ++y) {
        for (int x = 0; x < reference.width; ++x) {
            const int i = y + ir0, j = x + jr0;
            for (int c = 0; c < 3; ++c) pair.warped_reference.at(i, j, c) = reference.at(y, x, c);
            pair.valid_r(i, j) = 1;
        }
    }

    const Homography Hinv = H.inverse();
    auto fetch = [&](int i, int j, int c) { return target.at(i, j, c); };
    double px[3];
    for (int i = 0; i < Hc; ++i) {
        for (int j = 0; j < W; ++j) {
            const double gx = j + ox, gy = i + oy;
            const double w = Hinv.h[6] * gx + Hinv.h[7] * gy + Hinv.h[8];
            if (std::abs(w) <= 1e-12) continue;
            const double sx = (Hinv.h[0] * gx + Hinv.h[1] * gy + Hinv.h[2]) / w;
            const double sy = (Hinv.h[3] * gx + Hinv.h[4] * gy + Hinv.h[5]) / w;
            if (!bilinear(sx, sy, target.height, target.width, fetch, px, 3)) continue;
            for (int c = 0; c < 3; ++c) pair.warped_target.at(i, j, c) = px[c];
            pair.valid_t(i, j) = 1;
        }
    }

    pair.overlap = mask_and(pair.valid_t, pair.valid_r);
    return pair;
}

AlignedPair make_prealigned(Image warped_target, Image warped_reference, BinaryMask valid_t,
                            BinaryMask valid_r) {
    detail::require_same_size(warped_target.height, warped_target.width,
                              warped_reference.height, warped_reference.width,
                              "make_prealigned images");
    detail::require_same_size(warped_target.height, warped_target.width, valid_t.height,
                              valid_t.width, "make_prealigned valid_t");
    detail::require_same_size(warped_target.height, warped_target.width, valid_r.height,
                              valid_r.width, "make_prealigned valid_r");

    AlignedPair pair;
    pair.height = warped_target.height;
    pair.width = warped_target.width;
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j) {
            if (!valid_t(i, j))
                for (int c = 0; c < 3; ++c) warped_target.at(i, j, c) = 0.0;
            if (!valid_r(i, j))
                for (int c = 0; c < 3; ++c) warped_reference.at(i, j, c) = 0.0;
        }
    pair.warped_target = std::move(warped_target);
    pair.warped_reference = std::move(warped_reference);
    pair.overlap = mask_and(valid_t, valid_r);
    pair.valid_t = std::move(valid_t);
    pair.valid_r = std::move(valid_r);
    return pair;
}

BinaryMask warp_mask_to_canvas(const BinaryMask& mask, const AlignedPair& pair) {
    BinaryMask out(pair.height, pair.width, 0);
    const Homography Hinv = pair.target_to_reference.inverse();
    auto fetch = [&](int i, int j, int) { return static_cast<double>(mask(i, j)); };
    double v;
    for (int i = 0; i < pair.height; ++i) {
        for (int j = 0; j < pair.width; ++j) {
            const double gx = j + pair.origin_x, gy = i + pair.origin_y;
            const double w = Hinv.h[6] * gx + Hinv.h[7] * gy + Hinv.h[8];
            if (std::abs(w) <= 1e-12) continue;
            const double sx = (Hinv.h[0] * gx + Hinv.h[1] * gy + Hinv.h[2]) / w;
            const double sy = (Hinv.h[3] * gx + Hinv.h[4] * gy + Hinv.h[5]) / w;
            if (!bilinear(sx, sy, mask.height, mask.width, fetch, &v, 1)) continue;
            out(i, j) = static_cast<std::uint8_t>(v >= 0.5);
        }
    }
    return out;
}

BinaryMask place_reference_mask(const BinaryMask& mask, const AlignedPair& pair) {
    BinaryMask out(pair.height, pair.width, 0);
    const int j0 = static_cast<int>(-pair.origin_x), i0 = static_cast<int>(-pair.origin_y);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const int i = y + i0, j = x + j0;
            if (i >= 0 && i < pair.height && j >= 0 && j < pair.width) out(i, j) = mask(y, x);
        }
    return out;
}

AlignedPair transposed(const AlignedPair& pair) {
    AlignedPair out;
    out.height = pair.width;
    out.width = pair.height;
    out.warped_target = transposed(pair.warped_target);
    out.warped_reference = transposed(pair.warped_reference);
    out.valid_t = transposed(pair.valid_t);
    out.valid_r = transposed(pair.valid_r);
    out.overlap = transposed(pair.overlap);
    out.origin_x = pair.origin_y;
    out.origin_y = pair.origin_x;
    // Conjugate by the axis swap so the stored transform stays consistent.
    const auto& m = pair.target_to_reference.h;
    out.target_to_reference.h = {m[4], m[3], m[5], m[1], m[0], m[2], m[7], m[6], m[8]};
    out.target_to_reference = out.target_to_reference.normalized();
    return out;
}

}  // namespace stitch
