#include "stitch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "json.hpp"

namespace stitch {

std::string to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["psq"] = r.psq;
    j["failure"] = r.failure;
    j["split_components"] = r.split_components;
    j["split_pixels"] = r.split_pixels;
    j["seam_energy"] = r.seam_energy;
    j["seam_length"] = r.seam_length;
    j["time_ms"] = r.time_ms;
    return j.dump(2);
}

MetricsReport metrics_report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid metrics JSON: ") + e.what());
    }
    MetricsReport r;
    r.method = j.value("method", "");
    r.psq = j.value("psq", 0.0);
    r.failure = j.value("failure", false);
    r.split_components = j.value("split_components", 0);
    r.split_pixels = j.value("split_pixels", 0);
    r.seam_energy = j.value("seam_energy", 0.0);
    r.seam_length = j.value("seam_length", 0);
    r.time_ms = j.value("time_ms", 0.0);
    return r;
}

Image compose(const AlignedPair& pair, const SoftMask& l1, const SoftMask& l2) {
    detail::require_same_size(pair.height, pair.width, l1.height, l1.width, "compose L1");
    detail::require_same_size(pair.height, pair.width, l2.height, l2.width, "compose L2");

    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j) {
            if (!pair.valid_t(i, j) && !pair.valid_r(i, j)) continue;
            const double s = l1(i, j) + l2(i, j);
            if (std::abs(s - 1.0) > 1e-3)
                throw DataError("compose: masks break the partition of unity at pixel (" +
                                std::to_string(i) + "," + std::to_string(j) + "), L1+L2=" +
                                std::to_string(s));
        }

    Image out(pair.height, pair.width);
    for (int i = 0; i < pair.height; ++i) {
        for (int j = 0; j < pair.width; ++j) {
            const bool t = pair.valid_t(i, j), r = pair.valid_r(i, j);
            if (t && r) {
                const double a = l1(i, j), b = l2(i, j);
                for (int c = 0; c < 3; ++c)
                    out.at(i, j, c) = a * pair.warped_target.at(i, j, c) +
                                      b * pair.warped_reference.at(i, j, c);
            } else if (t) {
                for (int c = 0; c < 3; ++c) out.at(i, j, c) = pair.warped_target.at(i, j, c);
            } else if (r) {
                for (int c = 0; c < 3; ++c) out.at(i, j, c) = pair.warped_reference.at(i, j, c);
            }
        }
    }
    return out;
}

double psq(const AlignedPair& pair, const LabelMap& labels, const SoftMask& saliency,
           const PsqConfig& cfg) {
    detail::require_same_size(pair.height, pair.width, labels.height, labels.width,
                              "psq labels");
    detail::require_same_size(pair.height, pair.width, saliency.height, saliency.width,
                              "psq saliency");
    const std::vector<PixelCoord> seam = trace_seam_pixels(labels, pair.overlap);
    if (seam.empty()) return 0.0;

    const int r = cfg.patch_radius;
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    double num = 0.0, den = 0.0;
    for (const PixelCoord& p : seam) {
        double e = 0.0;
        int n = 0;
        for (int di = -r; di <= r; ++di) {
            for (int dj = -r; dj <= r; ++dj) {
                const int i = p.i + di, j = p.j + dj;
                if (i < 0 || i >= pair.height || j < 0 || j >= pair.width) continue;
                if (!pair.overlap(i, j)) continue;
                double ss = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d =
                        pair.warped_target.at(i, j, c) - pair.warped_reference.at(i, j, c);
                    ss += d * d;
                }
                e += std::sqrt(ss) * inv_sqrt3;
                ++n;
            }
        }
        if (n == 0) continue;  // cannot happen: the seam pixel itself overlaps
        e /= n;
        const double wgt = 0.5 + 0.5 * saliency(p.i, p.j);
        num += e * wgt;
        den += wgt;
    }
    return den > 0.0 ? num / den : 0.0;
}

IntegrityResult object_integrity(const BinaryMask& object, const LabelMap& labels) {
    detail::require_same_size(object.height, object.width, labels.height, labels.width,
                              "object_integrity");
    const int h = object.height, w = object.width;
    Grid<std::uint8_t, struct SeenTag> seen(h, w, 0);
    IntegrityResult res;

    static const int d8i[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int d8j[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    std::queue<PixelCoord> q;
    for (int si = 0; si < h; ++si) {
        for (int sj = 0; sj < w; ++sj) {
            if (!object(si, sj) || seen(si, sj)) continue;
            int size = 0, n_target = 0, n_reference = 0;
            seen(si, sj) = 1;
            q.push({si, sj});
            while (!q.empty()) {
                const PixelCoord p = q.front();
                q.pop();
                ++size;
                if (labels(p.i, p.j) == Label::Target) ++n_target;
                if (labels(p.i, p.j) == Label::Reference) ++n_reference;
                for (int k = 0; k < 8; ++k) {
                    const int ii = p.i + d8i[k], jj = p.j + d8j[k];
                    if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                    if (!object(ii, jj) || seen(ii, jj)) continue;
                    seen(ii, jj) = 1;
                    q.push({ii, jj});
                }
            }
            if (size < 9) continue;  // speckle
            if (n_target > 0 && n_reference > 0) {
                ++res.split_components;
                res.split_pixels += std::min(n_target, n_reference);
            }
        }
    }
    res.failure = res.split_components >= 1;
    return res;
}

double seam_energy(const CostMap& cost, const LabelMap& labels) {
    detail::require_same_size(cost.height, cost.width, labels.height, labels.width,
                              "seam_energy");
    double e = 0.0;
    for (int i = 0; i < labels.height; ++i) {
        for (int j = 0; j < labels.width; ++j) {
            if (!cost.domain(i, j)) continue;
            const Label a = labels(i, j);
            if (a == Label::Invalid) continue;
            // Right and down neighbors count each unordered pair once.
            if (j + 1 < labels.width && cost.domain(i, j + 1)) {
                const Label b = labels(i, j + 1);
                if (b != Label::Invalid && b != a) e += 0.5 * (cost(i, j) + cost(i, j + 1));
            }
            if (i + 1 < labels.height && cost.domain(i + 1, j)) {
                const Label b = labels(i + 1, j);
                if (b != Label::Invalid && b != a) e += 0.5 * (cost(i, j) + cost(i + 1, j));
            }
        }
    }
    return e;
}

}  // namespace stitch
