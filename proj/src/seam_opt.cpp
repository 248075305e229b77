#include "stitch/seam_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stitch {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double object_area_norm(const BinaryMask& object, bool paper_exact) {
    if (paper_exact) return 1.0;
    return 1.0 / std::max<double>(1.0, static_cast<double>(mask_count(object)));
}

// Local gradient of the weighted total with respect to one logit; shared by
// the public op and the optimizer so both produce identical values.
struct GradientContext {
    const BinaryMask* object;
    const CostMap* cost;           // may be null
    const BinaryMask* overlap;
    const std::vector<double>* l1;
    int height, width;
    int k;
    double inv_n;       // 1/N
    double excl_scale;  // 1/A_O or 1 (paper_exact)
    double sum_scale;   // 1/N or 1 (paper_exact)
    double w_comp, w_excl, w_smooth, w_photo;

    double at(int i, int j) const {
        return (*l1)[static_cast<std::size_t>(i) * width + j];
    }

    double pixel(int i, int j) const {
        const std::size_t idx = static_cast<std::size_t>(i) * width + j;
        const double v = at(i, j);
        double g = 0.0;
        if ((*object).data[idx]) {
            // d comp / d L1, with M2 = O*(1-L1) so O - M2 = O*L1.
            const double dcomp = k == 1 ? -2.0 * inv_n * (1.0 - v) : 2.0 * inv_n * v;
            g += w_comp * dcomp;
            g += w_excl * (-2.0 * excl_scale * (1.0 - v));
        }
        if (w_smooth != 0.0) {
            double ds = 0.0;
            if (j + 1 < width) ds -= 2.0 * (at(i, j + 1) - v);
            if (j > 0) ds += 2.0 * (v - at(i, j - 1));
            if (i + 1 < height) ds -= 2.0 * (at(i + 1, j) - v);
            if (i > 0) ds += 2.0 * (v - at(i - 1, j));
            g += w_smooth * sum_scale * ds;
        }
        if (w_photo != 0.0 && cost && !cost->empty() && (*overlap).data[idx])
            g += w_photo * sum_scale * (*cost)(i, j) * 4.0 * (1.0 - 2.0 * v);
        return g * v * (1.0 - v);  // chain through the sigmoid
    }
};

}  // namespace

CompResult comp_loss(const BinaryMask& object, const SoftMask& l1, const SoftMask& l2) {
    detail::require_same_size(object.height, object.width, l1.height, l1.width, "comp_loss L1");
    detail::require_same_size(object.height, object.width, l2.height, l2.width, "comp_loss L2");
    const std::size_t n = object.pixel_count();
    if (n == 0) throw DataError("comp_loss: degenerate canvas, O has no pixels");

    double a1 = 0.0, a2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!object.data[k]) continue;
        a1 += l1.data[k];
        a2 += l2.data[k];
    }
    const int k_sel = a1 > a2 ? 1 : 2;
    const SoftMask& lk = k_sel == 1 ? l1 : l2;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double m = object.data[k] ? lk.data[k] : 0.0;
        const double d = static_cast<double>(object.data[k]) - m;
        s += d * d;
    }
    return {s / static_cast<double>(n), k_sel};
}

double excl_loss(const BinaryMask& object, const SoftMask& l2, bool paper_exact) {
    detail::require_same_size(object.height, object.width, l2.height, l2.width, "excl_loss");
    double s = 0.0;
    for (std::size_t k = 0; k < object.pixel_count(); ++k) {
        if (!object.data[k]) continue;
        s += l2.data[k] * l2.data[k];
    }
    return s * object_area_norm(object, paper_exact);
}

double smooth_loss(const SoftMask& l, bool paper_exact) {
    double s = 0.0;
    for (int i = 0; i < l.height; ++i)
        for (int j = 0; j < l.width; ++j) {
            if (j + 1 < l.width) {
                const double d = l(i, j + 1) - l(i, j);
                s += d * d;
            }
            if (i + 1 < l.height) {
                const double d = l(i + 1, j) - l(i, j);
                s += d * d;
            }
        }
    if (!paper_exact && l.pixel_count() > 0) s /= static_cast<double>(l.pixel_count());
    return s;
}

double photo_loss(const CostMap& cost, const SoftMask& l1, const BinaryMask& overlap,
                  bool paper_exact) {
    if (cost.empty()) return 0.0;
    detail::require_same_size(cost.height, cost.width, l1.height, l1.width, "photo_loss L1");
    detail::require_same_size(cost.height, cost.width, overlap.height, overlap.width,
                              "photo_loss overlap");
    double s = 0.0;
    for (std::size_t k = 0; k < l1.pixel_count(); ++k) {
        if (!overlap.data[k]) continue;
        const double v = l1.data[k];
        s += cost.data[k] * 4.0 * v * (1.0 - v);
    }
    if (!paper_exact && l1.pixel_count() > 0) s /= static_cast<double>(l1.pixel_count());
    return s;
}

LossBreakdown total_loss(const MaskLogits& state, const BinaryMask& object,
                         const CostMap& cost, const BinaryMask& overlap,
                         const OptimConfig& cfg) {
    detail::require_same_size(state.height, state.width, object.height, object.width,
                              "total_loss object");
    detail::require_same_size(state.height, state.width, overlap.height, overlap.width,
                              "total_loss overlap");

    SoftMask l1(state.height, state.width), l2(state.height, state.width);
    for (std::size_t k = 0; k < state.logit.size(); ++k) {
        l1.data[k] = sigmoid(state.logit[k]);
        l2.data[k] = 1.0 - l1.data[k];
    }

    LossBreakdown b;
    const CompResult comp = comp_loss(object, l1, l2);
    b.selected_k = comp.k;
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t k = 0; k < object.pixel_count(); ++k) {
        if (!object.data[k]) continue;
        a1 += l1.data[k];
        a2 += l2.data[k];
    }
    b.area_m1 = a1;
    b.area_m2 = a2;
    b.comp = cfg.w_comp * comp.value;
    b.excl = cfg.w_excl * excl_loss(object, l2, cfg.paper_exact);
    b.smooth = cfg.w_smooth * smooth_loss(l1, cfg.paper_exact);
    b.photo = cfg.w_photo * photo_loss(cost, l1, overlap, cfg.paper_exact);
    b.total = b.comp + b.excl + b.smooth + b.photo;
    return b;
}

std::vector<double> loss_gradient(const MaskLogits& state, const BinaryMask& object,
                                  const CostMap& cost, const BinaryMask& overlap,
                                  const OptimConfig& cfg) {
    detail::require_same_size(state.height, state.width, object.height, object.width,
                              "loss_gradient object");

    std::vector<double> l1(state.logit.size());
    for (std::size_t k = 0; k < state.logit.size(); ++k) l1[k] = sigmoid(state.logit[k]);

    // The branch is selected exactly as in total_loss and then held fixed.
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t k = 0; k < object.pixel_count(); ++k) {
        if (!object.data[k]) continue;
        a1 += l1[k];
        a2 += 1.0 - l1[k];
    }

    GradientContext ctx;
    ctx.object = &object;
    ctx.cost = &cost;
    ctx.overlap = &overlap;
    ctx.l1 = &l1;
    ctx.height = state.height;
    ctx.width = state.width;
    ctx.k = a1 > a2 ? 1 : 2;
    ctx.inv_n = 1.0 / static_cast<double>(object.pixel_count());
    ctx.excl_scale = object_area_norm(object, cfg.paper_exact);
    ctx.sum_scale = cfg.paper_exact ? 1.0 : 1.0 / static_cast<double>(object.pixel_count());
    ctx.w_comp = cfg.w_comp;
    ctx.w_excl = cfg.w_excl;
    ctx.w_smooth = cfg.w_smooth;
    ctx.w_photo = cfg.w_photo;

    std::vector<double> g(state.logit.size(), 0.0);
    for (int i = 0; i < state.height; ++i)
        for (int j = 0; j < state.width; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * state.width + j;
            if (state.frozen.data[idx]) continue;
            g[idx] = ctx.pixel(i, j);
        }
    return g;
}

MaskLogits init_logits(const AlignedPair& pair, const OptimConfig& cfg) {
    MaskLogits state;
    state.height = pair.height;
    state.width = pair.width;
    state.logit.assign(static_cast<std::size_t>(pair.height) * pair.width, 0.0);
    state.frozen = BinaryMask(pair.height, pair.width, 0);

    bool seeded = false;
    if (cfg.init == OptimConfig::Init::Voronoi) {
        // Soft Voronoi seed: a logit ramp between the two exclusive regions.
        // Its 0.5 level set is exactly the Voronoi boundary, and the wide
        // profile starts the smoothness term near its equilibrium instead of
        // thousands of diffusion steps away from it.
        BinaryMask excl_t(pair.height, pair.width, 0), excl_r(pair.height, pair.width, 0);
        std::size_t nt = 0, nr = 0;
        for (int i = 0; i < pair.height; ++i)
            for (int j = 0; j < pair.width; ++j) {
                const bool t = pair.valid_t(i, j), r = pair.valid_r(i, j);
                if (t && !r) {
                    excl_t(i, j) = 1;
                    ++nt;
                } else if (r && !t) {
                    excl_r(i, j) = 1;
                    ++nr;
                }
            }
        if (nt > 0 && nr > 0) {
            const auto d2t = squared_distance_transform(excl_t);
            const auto d2r = squared_distance_transform(excl_r);
            for (int i = 0; i < pair.height; ++i)
                for (int j = 0; j < pair.width; ++j) {
                    const double dt = std::sqrt(d2t(i, j)), dr = std::sqrt(d2r(i, j));
                    const double l1 = dr / std::max(dt + dr, 1e-12);
                    const double lo = 1.0 / (1.0 + std::exp(cfg.freeze_logit));
                    const double v = std::clamp(l1, lo, 1.0 - lo);
                    state.at(i, j) = std::log(v / (1.0 - v));
                }
            seeded = true;
        }
        // Without both exclusive regions there is no ramp; fall through to
        // the uniform seed.
    }
    if (seeded && cfg.init_blur_radius > 0) {
        const int r = cfg.init_blur_radius;
        std::vector<double> blurred(state.logit.size(), 0.0);
        for (int i = 0; i < pair.height; ++i)
            for (int j = 0; j < pair.width; ++j) {
                double s = 0.0;
                int n = 0;
                for (int di = -r; di <= r; ++di)
                    for (int dj = -r; dj <= r; ++dj) {
                        const int ii = i + di, jj = j + dj;
                        if (ii < 0 || ii >= pair.height || jj < 0 || jj >= pair.width) continue;
                        s += state.at(ii, jj);
                        ++n;
                    }
                blurred[static_cast<std::size_t>(i) * pair.width + j] = s / n;
            }
        state.logit = std::move(blurred);
    }

    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j) {
            if (pair.overlap(i, j)) continue;
            const bool target_only = pair.valid_t(i, j) && !pair.valid_r(i, j);
            state.at(i, j) = target_only ? cfg.freeze_logit : -cfg.freeze_logit;
            state.frozen(i, j) = 1;
        }
    return state;
}

std::pair<LabelMap, std::vector<PixelCoord>> extract_seam(const SoftMask& l1,
                                                          const AlignedPair& pair) {
    detail::require_same_size(l1.height, l1.width, pair.height, pair.width, "extract_seam");
    LabelMap labels = base_label_map(pair);
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j)
            if (pair.overlap(i, j))
                labels(i, j) = l1(i, j) >= 0.5 ? Label::Target : Label::Reference;
    std::vector<PixelCoord> seam = trace_seam_pixels(labels, pair.overlap);
    return {std::move(labels), std::move(seam)};
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

namespace {

// Loss evaluation split into a static part over frozen pixels, computed once,
// and a dynamic part over the overlap bounding box. Keeps each epoch linear
// in the overlap size rather than the canvas size.
struct ActiveEvaluator {
    const BinaryMask* object;
    const CostMap* cost;
    const BinaryMask* overlap;
    const BinaryMask* frozen;
    int height = 0, width = 0;
    int bi0 = 0, bi1 = -1, bj0 = 0, bj1 = -1;  // overlap bounding box
    double n_pixels = 0.0;

    // Frozen-pixel contributions.
    double c1_out = 0.0, c2_out = 0.0, excl_out = 0.0;
    double a1_out = 0.0, a2_out = 0.0, smooth_out = 0.0;

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * width + j;
    }

    void prime(const std::vector<double>& l1_frozen) {
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) {
                if (overlap->data[idx(i, j)]) {
                    if (bi1 < bi0) {
                        bi0 = bi1 = i;
                        bj0 = bj1 = j;
                    } else {
                        bi0 = std::min(bi0, i);
                        bi1 = std::max(bi1, i);
                        bj0 = std::min(bj0, j);
                        bj1 = std::max(bj1, j);
                    }
                }
            }
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) {
                const std::size_t k = idx(i, j);
                if (!frozen->data[k]) continue;
                const double v = l1_frozen[k];
                if (object->data[k]) {
                    c1_out += (1.0 - v) * (1.0 - v);
                    c2_out += v * v;
                    excl_out += (1.0 - v) * (1.0 - v);
                    a1_out += v;
                    a2_out += 1.0 - v;
                }
                // Pairs between two frozen pixels never change.
                if (j + 1 < width && frozen->data[k + 1]) {
                    const double d = l1_frozen[k + 1] - v;
                    smooth_out += d * d;
                }
                if (i + 1 < height && frozen->data[k + width]) {
                    const double d = l1_frozen[k + width] - v;
                    smooth_out += d * d;
                }
            }
    }

    // Refreshes l1 on unfrozen pixels from `logits` and returns the raw sums.
    struct Parts {
        double c1 = 0.0, c2 = 0.0, excl = 0.0, a1 = 0.0, a2 = 0.0;
        double smooth = 0.0, photo = 0.0;
    };

    Parts evaluate(const std::vector<double>& logits, std::vector<double>& l1) const {
        Parts p{c1_out, c2_out, excl_out, a1_out, a2_out, smooth_out, 0.0};
        if (bi1 < bi0) return p;
        for (int i = bi0; i <= bi1; ++i) {
            for (int j = bj0; j <= bj1; ++j) {
                const std::size_t k = idx(i, j);
                if (frozen->data[k]) continue;
                const double v = sigmoid(logits[k]);
                l1[k] = v;
                if (object->data[k]) {
                    p.c1 += (1.0 - v) * (1.0 - v);
                    p.c2 += v * v;
                    p.excl += (1.0 - v) * (1.0 - v);
                    p.a1 += v;
                    p.a2 += 1.0 - v;
                }
                if (cost && !cost->empty() && overlap->data[k])
                    p.photo += cost->data[k] * 4.0 * v * (1.0 - v);
            }
        }
        // Smoothness pairs touching at least one unfrozen pixel. Every such
        // pair starts within the bounding box expanded by one; frozen-frozen
        // pairs are already in smooth_out and are skipped here.
        const int si0 = std::max(0, bi0 - 1);
        const int sj0 = std::max(0, bj0 - 1);
        for (int i = si0; i <= bi1; ++i) {
            for (int j = sj0; j <= bj1; ++j) {
                const std::size_t k = idx(i, j);
                if (j + 1 < width) {
                    if (!frozen->data[k] || !frozen->data[k + 1]) {
                        const double d = l1[k + 1] - l1[k];
                        p.smooth += d * d;
                    }
                }
                if (i + 1 < height) {
                    if (!frozen->data[k] || !frozen->data[k + width]) {
                        const double d = l1[k + width] - l1[k];
                        p.smooth += d * d;
                    }
                }
            }
        }
        return p;
    }

    LossBreakdown assemble(const Parts& p, const OptimConfig& cfg, double excl_scale) const {
        LossBreakdown b;
        b.area_m1 = p.a1;
        b.area_m2 = p.a2;
        b.selected_k = p.a1 > p.a2 ? 1 : 2;
        const double comp_raw = b.selected_k == 1 ? p.c1 : p.c2;
        b.comp = cfg.w_comp * comp_raw / n_pixels;
        b.excl = cfg.w_excl * p.excl * excl_scale;
        const double sum_scale = cfg.paper_exact ? 1.0 : 1.0 / n_pixels;
        b.smooth = cfg.w_smooth * p.smooth * sum_scale;
        b.photo = cfg.w_photo * p.photo * sum_scale;
        b.total = b.comp + b.excl + b.smooth + b.photo;
        return b;
    }
};

}  // namespace

SeamResult optimize_masks(const AlignedPair& pair, const BinaryMask& object,
                          const OptimConfig& cfg, const CostMap* cost) {
    detail::require_same_size(pair.height, pair.width, object.height, object.width,
                              "optimize_masks object");
    if (cfg.max_epochs <= 0) throw UsageError("optimize_masks: max_epochs must be positive");
    if (!(cfg.step > 0.0)) throw UsageError("optimize_masks: step must be positive");
    if (cfg.w_comp < 0 || cfg.w_excl < 0 || cfg.w_smooth < 0 || cfg.w_photo < 0)
        throw UsageError("optimize_masks: loss weights must be non-negative");
    if (mask_count(pair.overlap) == 0)
        throw DataError("optimize_masks: overlap region is empty");

    // Saliency outside both footprints cannot be covered by either mask;
    // drop it so the completeness term is attainable.
    BinaryMask obj = object;
    for (std::size_t k = 0; k < obj.data.size(); ++k)
        if (!pair.valid_t.data[k] && !pair.valid_r.data[k]) obj.data[k] = 0;

    CostMap local_cost;
    const CostMap* d = cost;
    if (!d && cfg.w_photo > 0.0) {
        local_cost = color_difference_map(pair.warped_target, pair.warped_reference,
                                          pair.overlap);
        d = &local_cost;
    }
    static const CostMap empty_cost;
    if (!d) d = &empty_cost;

    MaskLogits state = init_logits(pair, cfg);

    ActiveEvaluator ev;
    ev.object = &obj;
    ev.cost = d;
    ev.overlap = &pair.overlap;
    ev.frozen = &state.frozen;
    ev.height = pair.height;
    ev.width = pair.width;
    ev.n_pixels = static_cast<double>(obj.pixel_count());

    // Paired logit/L1 buffers; frozen entries are filled once and never touched.
    std::vector<double> x = state.logit;
    std::vector<double> l1(x.size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) l1[k] = sigmoid(x[k]);
    std::vector<double> x_trial = x;
    std::vector<double> l1_trial = l1;
    std::vector<double> grad(x.size(), 0.0);
    std::vector<double> vel(x.size(), 0.0);  // last accepted displacement
    ev.prime(l1);

    const double excl_scale = cfg.paper_exact
                                  ? 1.0
                                  : 1.0 / std::max<double>(1.0, mask_area(obj));
    // In normalized mode the losses are per-pixel means, so the raw gradient
    // scales like 1/N and the configured logit step would be inert; stepping
    // on N times the gradient restores the raw-sum dynamics at any
    // resolution.
    const double grad_scale = cfg.paper_exact ? 1.0 : ev.n_pixels;

    GradientContext ctx;
    ctx.object = &obj;
    ctx.cost = d;
    ctx.overlap = &pair.overlap;
    ctx.l1 = &l1;
    ctx.height = pair.height;
    ctx.width = pair.width;
    ctx.inv_n = 1.0 / ev.n_pixels;
    ctx.excl_scale = excl_scale;
    ctx.sum_scale = cfg.paper_exact ? 1.0 : 1.0 / ev.n_pixels;
    ctx.w_comp = cfg.w_comp;
    ctx.w_excl = cfg.w_excl;
    ctx.w_smooth = cfg.w_smooth;
    ctx.w_photo = cfg.w_photo;

    SeamResult res;
    res.trace.reserve(cfg.max_epochs + 1);

    LossBreakdown cur = ev.assemble(ev.evaluate(x, l1), cfg, excl_scale);
    double eta = cfg.step;
    int below_tol = 0;
    const int bi0 = ev.bi0, bi1 = ev.bi1, bj0 = ev.bj0, bj1 = ev.bj1;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        cur.epoch = epoch;
        res.trace.push_back(cur);
        if (!std::isfinite(cur.total))
            throw NumericError("optimize_masks: loss diverged at epoch " +
                               std::to_string(epoch));

        if (res.trace.size() >= 2) {
            const double prev = res.trace[res.trace.size() - 2].total;
            const double rel = std::abs(cur.total - prev) / std::max(std::abs(prev), 1e-12);
            below_tol = rel < cfg.converge_rel_tol ? below_tol + 1 : 0;
            if (below_tol >= cfg.converge_window) break;
        }
        if (epoch == cfg.max_epochs) break;

        ctx.k = cur.selected_k;
        ctx.l1 = &l1;
        for (int i = bi0; i <= bi1; ++i)
            for (int j = bj0; j <= bj1; ++j) {
                const std::size_t k = ev.idx(i, j);
                grad[k] = state.frozen.data[k] ? 0.0 : ctx.pixel(i, j);
            }

        // Snap phase: pixels already deep in saturation whose gradient still
        // points outward jump straight to the clamp. Without this the
        // sigmoid tail is chased forever and the loss never plateaus. The
        // move only sticks when it does not increase the loss.
        // On a sparse cadence, propose the long-range candidate outright:
        // the distance-ratio ramp between everything pinned at the two
        // clamps. Once the object has committed to a side this is one jump
        // to the approximate smoothness equilibrium that local relaxation
        // would need thousands of sweeps to reach.
        if (epoch == 3 || epoch == 6 || epoch % 25 == 0) {
            BinaryMask seed_t(pair.height, pair.width, 0);
            BinaryMask seed_r(pair.height, pair.width, 0);
            std::size_t nt = 0, nr = 0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k] >= cfg.freeze_logit - 1e-9) {
                    seed_t.data[k] = 1;
                    ++nt;
                } else if (x[k] <= -cfg.freeze_logit + 1e-9) {
                    seed_r.data[k] = 1;
                    ++nr;
                }
            }
            if (nt > 0 && nr > 0) {
                const auto d2t = squared_distance_transform(seed_t);
                const auto d2r = squared_distance_transform(seed_r);
                const double lo = 1.0 / (1.0 + std::exp(cfg.freeze_logit));
                for (int i = bi0; i <= bi1; ++i)
                    for (int j = bj0; j <= bj1; ++j) {
                        const std::size_t k = ev.idx(i, j);
                        if (state.frozen.data[k] || seed_t.data[k] || seed_r.data[k]) {
                            x_trial[k] = x[k];
                            continue;
                        }
                        const double dt = std::sqrt(d2t(i, j)), dr = std::sqrt(d2r(i, j));
                        const double v =
                            std::clamp(dr / std::max(dt + dr, 1e-12), lo, 1.0 - lo);
                        x_trial[k] = std::log(v / (1.0 - v));
                    }
                const LossBreakdown nxt =
                    ev.assemble(ev.evaluate(x_trial, l1_trial), cfg, excl_scale);
                if (std::isfinite(nxt.total) && nxt.total <= cur.total) {
                    x.swap(x_trial);
                    l1.swap(l1_trial);
                    cur = nxt;
                    std::fill(vel.begin(), vel.end(), 0.0);
                    for (int i = bi0; i <= bi1; ++i)
                        for (int j = bj0; j <= bj1; ++j) {
                            const std::size_t k = ev.idx(i, j);
                            grad[k] = state.frozen.data[k] ? 0.0 : ctx.pixel(i, j);
                        }
                }
            }
        }

        bool snapped = false;
        for (int i = bi0; i <= bi1; ++i)
            for (int j = bj0; j <= bj1; ++j) {
                const std::size_t k = ev.idx(i, j);
                if (state.frozen.data[k]) continue;
                double nx = x[k];
                if (x[k] >= 4.0 && grad[k] < 0.0 && x[k] < cfg.freeze_logit) {
                    nx = cfg.freeze_logit;
                } else if (x[k] <= -4.0 && grad[k] > 0.0 && x[k] > -cfg.freeze_logit) {
                    nx = -cfg.freeze_logit;
                }
                snapped |= nx != x[k];
                x_trial[k] = nx;
            }
        if (snapped) {
            const LossBreakdown nxt = ev.assemble(ev.evaluate(x_trial, l1_trial), cfg,
                                                  excl_scale);
            if (std::isfinite(nxt.total) && nxt.total <= cur.total) {
                x.swap(x_trial);
                l1.swap(l1_trial);
                cur = nxt;
                // Gradients refer to the pre-snap state; refresh them.
                for (int i = bi0; i <= bi1; ++i)
                    for (int j = bj0; j <= bj1; ++j) {
                        const std::size_t k = ev.idx(i, j);
                        grad[k] = state.frozen.data[k] ? 0.0 : ctx.pixel(i, j);
                    }
            }
        }

        // Heavy-ball step with a monotone guard: rejected trials damp the
        // velocity and halve the step instead of discarding the accumulated
        // long-wavelength motion. The smooth term is a diffusion whose
        // slowest mode is hopeless without acceleration.
        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            const double scale = eta * grad_scale;
            for (int i = bi0; i <= bi1; ++i)
                for (int j = bj0; j <= bj1; ++j) {
                    const std::size_t k = ev.idx(i, j);
                    if (state.frozen.data[k]) continue;
                    // Projected step: the logit field lives in the same
                    // [-c_freeze, c_freeze] band the frozen pixels use.
                    x_trial[k] = std::clamp(x[k] + 0.97 * vel[k] - scale * grad[k],
                                            -cfg.freeze_logit, cfg.freeze_logit);
                }
            const LossBreakdown nxt = ev.assemble(ev.evaluate(x_trial, l1_trial), cfg,
                                                  excl_scale);
            if (std::isfinite(nxt.total) && nxt.total <= cur.total) {
                for (int i = bi0; i <= bi1; ++i)
                    for (int j = bj0; j <= bj1; ++j) {
                        const std::size_t k = ev.idx(i, j);
                        vel[k] = x_trial[k] - x[k];
                    }
                x.swap(x_trial);
                l1.swap(l1_trial);
                cur = nxt;
                accepted = true;
            } else {
                eta *= 0.5;
                for (int i = bi0; i <= bi1; ++i)
                    for (int j = bj0; j <= bj1; ++j) vel[ev.idx(i, j)] *= 0.5;
            }
        }
        if (accepted) {
            // Regrow toward the largest stable step (rejections halve it),
            // then apply the configured decay.
            eta = std::min(eta * cfg.step_growth, cfg.step * 64.0);
            eta *= cfg.step_decay;
        } else {
            std::fill(vel.begin(), vel.end(), 0.0);
        }
        // A fully rejected epoch leaves the state in place; the unchanged
        // loss feeds the convergence window.
    }

    // Export: exclusive regions snap to exact 0/1 so the partition of unity
    // holds to machine precision on every valid pixel.
    res.soft_l1 = SoftMask(pair.height, pair.width, 0.0);
    res.soft_l2 = SoftMask(pair.height, pair.width, 0.0);
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j) {
            const std::size_t k = ev.idx(i, j);
            const bool t = pair.valid_t.data[k], r = pair.valid_r.data[k];
            if (t && r) {
                res.soft_l1.data[k] = l1[k];
                res.soft_l2.data[k] = 1.0 - l1[k];
            } else if (t) {
                res.soft_l1.data[k] = 1.0;
            } else if (r) {
                res.soft_l2.data[k] = 1.0;
            }
        }

    auto [labels, seam] = extract_seam(res.soft_l1, pair);
    res.labels = std::move(labels);
    res.seam_pixels = std::move(seam);
    res.energy = res.trace.empty() ? 0.0 : res.trace.back().total;
    return res;
}

}  // namespace stitch
