#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stitch/image.hpp"

namespace stitch {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// 3x3 projective transform, row-major. Normalized so h[2][2] = 1 whenever
// that entry is nonzero.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }
    static Homography translation(double tx, double ty);

    double det() const;
    bool invertible(double eps = 1e-12) const { return std::abs(det()) > eps; }
    Homography inverse() const;
    Homography normalized() const;

    // Applies the transform to a point; throws NumericError if the mapped
    // point lies at infinity.
    Point apply(const Point& p) const;

    double operator()(int r, int c) const { return h[r * 3 + c]; }
    double& operator()(int r, int c) { return h[r * 3 + c]; }
};

// JSON serialization: a bare array of 9 numbers, row-major.
std::string to_json(const Homography& H);
Homography homography_from_json(const std::string& text);
Homography load_homography(const std::string& path);
void save_homography(const std::string& path, const Homography& H);

struct Correspondence {
    Point src;     // target image pixel
    Point dst;     // reference image pixel
    double score;  // NCC value in [0,1]
};

// Warped pair on a shared canvas. `origin_*` is the canvas-to-global offset:
// canvas pixel (i,j) sits at global coordinates (j + origin_x, i + origin_y),
// where the reference image occupies [0,w)x[0,h) of the global frame.
struct AlignedPair {
    int height = 0;  // H_s
    int width = 0;   // W_s
    Image warped_target;
    Image warped_reference;
    BinaryMask valid_t;
    BinaryMask valid_r;
    BinaryMask overlap;
    Homography target_to_reference;
    double origin_x = 0.0;
    double origin_y = 0.0;
};

struct MatchConfig {
    int max_corners = 400;
    double quality = 0.01;       // relative Harris response threshold
    int min_distance = 5;        // non-max suppression radius
    double harris_k = 0.04;
    int patch_radius = 7;        // NCC patch half-width
    double min_score = 0.5;      // NCC floor for accepting a match
};

// Harris corners matched by normalized cross-correlation with mutual-best
// filtering, sorted by descending score. Both images must be at least 32x32.
std::vector<Correspondence> detect_matches(const Image& a, const Image& b,
                                           const MatchConfig& cfg = {});

// Least-squares DLT with Hartley normalization. Needs >= 4 correspondences
// with no 3 collinear source points.
Homography dlt_homography(const std::vector<Correspondence>& matches);

struct RansacConfig {
    int iterations = 2000;
    double inlier_threshold_px = 3.0;
    std::uint64_t seed = 0;
};

struct RansacResult {
    Homography H;
    std::vector<int> inliers;  // indices into the input match list, ascending
};

// Deterministic RANSAC: per-iteration RNG streams are derived from
// (seed, iteration), so results do not depend on scheduling.
RansacResult ransac_homography(const std::vector<Correspondence>& matches,
                               const RansacConfig& cfg = {});

struct WarpConfig {
    std::size_t max_canvas_area = 64ull * 1000 * 1000;
};

// Warps `target` by H onto a canvas that tightly encloses both footprints;
// the reference is placed by integer translation. Bilinear sampling; samples
// needing any out-of-bounds neighbor with nonzero weight are invalid.
AlignedPair warp_pair(const Image& target, const Image& reference, const Homography& H,
                      const WarpConfig& cfg = {});

// Builds an AlignedPair from externally warped inputs. Pixels outside the
// validity masks are forced to zero.
AlignedPair make_prealigned(Image warped_target, Image warped_reference,
                            BinaryMask valid_t, BinaryMask valid_r);

// Warps a target-frame mask onto the pair's canvas (bilinear, threshold 0.5).
BinaryMask warp_mask_to_canvas(const BinaryMask& mask, const AlignedPair& pair);

// Places a reference-frame mask onto the pair's canvas.
BinaryMask place_reference_mask(const BinaryMask& mask, const AlignedPair& pair);

AlignedPair transposed(const AlignedPair& pair);

}  // namespace stitch
