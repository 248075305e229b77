#pragma once

#include <string>

#include "stitch/alignment.hpp"
#include "stitch/image.hpp"
#include "stitch/seam.hpp"

namespace stitch {

struct MetricsReport {
    std::string method;
    double psq = 0.0;  // in [0,1], lower is better
    bool failure = false;
    int split_components = 0;
    int split_pixels = 0;
    double seam_energy = 0.0;
    int seam_length = 0;
    double time_ms = 0.0;
};

std::string to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const std::string& text);

// Blend S = L1 * I_wt + L2 * I_wr. Pixels valid in one image only copy that
// image; invalid pixels are black. Throws when L1 + L2 strays from 1 by more
// than 1e-3 on valid pixels, which would shift exposure.
Image compose(const AlignedPair& pair, const SoftMask& l1, const SoftMask& l2);

struct PsqConfig {
    int patch_radius = 3;
};

// Saliency-weighted mean patch difference along the seam, in [0,1]. For each
// seam pixel the (2r+1)^2 patch is clipped to the overlap, the mean Euclidean
// RGB distance between the warped images is scaled by 1/sqrt(3), and weights
// are 0.5 + 0.5 * saliency. Returns 0 when the label map has no seam.
double psq(const AlignedPair& pair, const LabelMap& labels, const SoftMask& saliency,
           const PsqConfig& cfg = {});

struct IntegrityResult {
    bool failure = false;
    int split_components = 0;
    int split_pixels = 0;
};

// A salient component (8-connected, at least 9 px) is split when it carries
// both Target and Reference labels; split_pixels counts the minority label.
IntegrityResult object_integrity(const BinaryMask& object, const LabelMap& labels);

// Sum of (cost(p)+cost(q))/2 over 4-adjacent overlap pixel pairs with
// opposite labels.
double seam_energy(const CostMap& cost, const LabelMap& labels);

}  // namespace stitch
