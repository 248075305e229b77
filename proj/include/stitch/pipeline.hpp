#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stitch/alignment.hpp"
#include "stitch/metrics.hpp"
#include "stitch/saliency.hpp"
#include "stitch/seam.hpp"
#include "stitch/seam_opt.hpp"
#include "stitch/synth.hpp"

namespace stitch {

inline const std::vector<std::string> kAllMethods = {"dp", "graphcut", "voronoi",
                                                     "object-aware"};

struct RunConfig {
    std::vector<std::string> methods = kAllMethods;
    // Estimate falls back to feature matching only when no homography is
    // supplied with the pair; ProvidedH requires one.
    enum class Alignment { Estimate, ProvidedH, PreWarped };
    Alignment alignment = Alignment::Estimate;
    enum class SaliencySource { Spectral, File };
    SaliencySource saliency_source = SaliencySource::Spectral;
    enum class ObjectCombine { Union, Intersection };
    ObjectCombine object_combine = ObjectCombine::Union;
    enum class CostKind { Color, Gradient };
    CostKind cost_kind = CostKind::Color;
    bool cleanup = true;  // morphological open/close after binarize
    double tau = 0.5;
    OptimConfig optim;
    SaliencyConfig saliency_cfg;
    MatchConfig match;
    RansacConfig ransac;
    WarpConfig warp;
    bool no_timing = false;  // report time_ms as 0 for bit-reproducible outputs
    int jobs = 1;
    bool write_images = true;
};

// Parses a JSON config (any subset of the RunConfig fields) over `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});

struct PairInputs {
    std::string name;
    Image target;
    Image reference;
    std::optional<Homography> homography;
    std::optional<BinaryMask> mask_t;   // object masks, view coordinates
    std::optional<BinaryMask> mask_r;   // (canvas coordinates in pre-warped mode)
    std::optional<BinaryMask> valid_t;  // pre-warped mode only
    std::optional<BinaryMask> valid_r;
};

// Reads the pair directory convention: target.png, reference.png, optional
// mask_t.pgm / mask_r.pgm / H.json, plus valid_t.pgm / valid_r.pgm for
// pre-warped inputs.
PairInputs load_pair_dir(const std::string& dir);

struct MethodOutcome {
    std::string method;
    bool ok = false;
    std::string error;
    SeamResult seam;
    Image stitched;
    MetricsReport report;
};

struct PairOutcome {
    std::string name;
    bool ok = false;
    std::string error;  // alignment or setup failure, before any method ran
    std::vector<MethodOutcome> methods;
};

// Aligns (or adopts) the pair, derives the object mask, runs every requested
// method and scores it. A method failure is recorded without aborting the
// others.
PairOutcome run_pair(const PairInputs& inputs, const RunConfig& cfg);

struct PairSource {
    std::string name;
    std::string dir;                // directory source
    std::optional<SynthSpec> spec;  // or generated on the fly
};

struct BatchResult {
    std::vector<PairOutcome> pairs;
    std::string csv;           // one row per (pair, method)
    std::string summary_json;  // per-method means, failure counts and rates
};

// Runs every source (in parallel when cfg.jobs > 1; aggregation order is
// fixed by the source order). Per-pair errors are logged in the summary and
// do not stop the batch. When out_dir is nonempty, stitched images, label
// maps, traces and reports are written under <out_dir>/<pair>/.
BatchResult run_batch(const std::vector<PairSource>& sources, const RunConfig& cfg,
                      const std::string& out_dir);

std::string trace_to_json(const std::vector<LossBreakdown>& trace);

// Fixed column order: pair, method, psq, failure, split_components,
// split_pixels, seam_energy, seam_length, time_ms.
extern const char* kCsvHeader;
std::string csv_row(const std::string& pair, const MetricsReport& r);

}  // namespace stitch
