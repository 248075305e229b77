#pragma once

#include <utility>
#include <vector>

#include "stitch/alignment.hpp"
#include "stitch/image.hpp"
#include "stitch/seam.hpp"

namespace stitch {

// Unbounded logit field over the canvas. L1 = sigmoid(logit) pixelwise and
// L2 = 1 - L1, so the partition of unity holds by construction. Pixels
// outside the overlap are frozen at +/- freeze_logit: +c on the target's
// exclusive region (soft value within 1e-5 of 1) and -c elsewhere.
struct MaskLogits {
    int height = 0;
    int width = 0;
    std::vector<double> logit;
    BinaryMask frozen;

    double& at(int i, int j) { return logit[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return logit[static_cast<std::size_t>(i) * width + j]; }
};

struct OptimConfig {
    int max_epochs = 1000;
    double step = 0.5;            // logit step size
    double step_decay = 0.999;    // multiplicative decay per accepted epoch
    double step_growth = 1.02;    // adaptive regrowth per accepted epoch
    double converge_rel_tol = 1e-6;
    int converge_window = 10;     // consecutive epochs below tolerance
    double w_comp = 1.0;
    double w_excl = 1.0;
    double w_smooth = 1.0;
    double w_photo = 1.0;
    bool paper_exact = false;     // raw sums for excl/smooth/photo instead of normalized
    enum class Init { Voronoi, Uniform };
    Init init = Init::Voronoi;
    double freeze_logit = 12.0;
    int init_blur_radius = 2;
};

struct CompResult {
    double value = 0.0;
    int k = 2;  // selected mask; ties resolve to 2
};

// Completeness term: mean squared gap between O and whichever of M1 = O.L1,
// M2 = O.L2 currently covers more area. N is the full pixel count of O.
CompResult comp_loss(const BinaryMask& object, const SoftMask& l1, const SoftMask& l2);

// Exclusivity term: sum of (O.L2)^2. Raw in paper_exact mode; otherwise
// normalized by the object area so its balance against the completeness term
// does not depend on resolution.
double excl_loss(const BinaryMask& object, const SoftMask& l2, bool paper_exact = false);

// Forward-difference smoothness: sum of squared dx/dy steps of the mask,
// zero at the last row/column. Normalized by pixel count unless paper_exact.
double smooth_loss(const SoftMask& l, bool paper_exact = false);

// Photometric term: sum over the overlap of D * 4*L1*(1-L1). The transition
// factor peaks at L1 = 0.5, so only the blend band pays for color mismatch.
// Normalized by pixel count unless paper_exact.
double photo_loss(const CostMap& cost, const SoftMask& l1, const BinaryMask& overlap,
                  bool paper_exact = false);

// Weighted sum of the four terms; the stored components carry their weights
// so total = comp + excl + smooth + photo. An empty cost map contributes 0.
LossBreakdown total_loss(const MaskLogits& state, const BinaryMask& object,
                         const CostMap& cost, const BinaryMask& overlap,
                         const OptimConfig& cfg);

// Exact analytic gradient of total_loss with respect to each unfrozen logit,
// with the selected k held fixed (subgradient at the area tie). Frozen
// pixels get exactly zero.
std::vector<double> loss_gradient(const MaskLogits& state, const BinaryMask& object,
                                  const CostMap& cost, const BinaryMask& overlap,
                                  const OptimConfig& cfg);

// Seeds the logit field with a soft Voronoi ramp between the two exclusive
// regions (its 0.5 level set is the Voronoi boundary, box blurred) or
// uniformly at zero, then freezes everything outside the overlap. Falls back
// to the uniform seed when no exclusive regions exist.
MaskLogits init_logits(const AlignedPair& pair, const OptimConfig& cfg);

// Gradient descent on the loss with per-epoch re-selection of k, step decay
// and a backtracking guard that keeps the recorded trace non-increasing.
// Stops once the relative loss change stays below converge_rel_tol for
// converge_window epochs. `cost` defaults to the color difference over the
// overlap when the photometric weight is positive.
SeamResult optimize_masks(const AlignedPair& pair, const BinaryMask& object,
                          const OptimConfig& cfg = {}, const CostMap* cost = nullptr);

// Hard labels from a soft mask: L1 is confined to the target's validity, L2
// to the reference's, the overlap thresholds at 0.5 (>= goes to Target) and
// exclusive regions keep their own label.
std::pair<LabelMap, std::vector<PixelCoord>> extract_seam(const SoftMask& l1,
                                                          const AlignedPair& pair);

}  // namespace stitch
