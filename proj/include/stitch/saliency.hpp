#pragma once

#include <string>

#include "stitch/image.hpp"

namespace stitch {

struct SaliencyConfig {
    int work_size = 64;       // spectral analysis resolution
    double blur_sigma = 3.0;  // Gaussian smoothing of the saliency map, in work-size pixels
};

// Spectral-residual saliency (log-amplitude residual of the Fourier spectrum).
// The image mean is removed first, which makes the result exactly invariant to
// affine intensity changes a*I + b with a > 0. Output is scaled so the maximum
// is 1; an all-equal map collapses to all zeros. Input must be >= 16x16.
SoftMask spectral_residual(const GrayImage& gray, const SaliencyConfig& cfg = {});

// out = 1 where s >= tau. tau must lie strictly inside (0,1).
BinaryMask binarize(const SoftMask& s, double tau = 0.5);

// Elementwise max of two binary masks on the same canvas.
BinaryMask object_union(const BinaryMask& m_t, const BinaryMask& m_r);

// Morphological open followed by close, 3x3 square element, one iteration.
// Removes speckle that would destabilize mask-area bookkeeping.
BinaryMask morph_cleanup(const BinaryMask& m);

// Reads a mask from PGM or single-channel PNG (values >= 128 become 1) and
// checks it against the expected canvas size. Multi-channel PNG is rejected.
BinaryMask load_mask(const std::string& path, int expected_height, int expected_width);

// Pipeline helper: saliency of a warped image restricted to its validity
// region. Invalid pixels are filled with the valid mean before the spectral
// analysis so the footprint border does not dominate the response, and the
// result is re-normalized after masking.
SoftMask canvas_saliency(const Image& warped, const BinaryMask& validity,
                         const SaliencyConfig& cfg = {});

}  // namespace stitch
