#include "stitch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "stitch/io.hpp"

namespace stitch {

namespace fs = std::filesystem;

const char* kCsvHeader =
    "pair,method,psq,failure,split_components,split_pixels,seam_energy,seam_length,time_ms";

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string csv_row(const std::string& pair, const MetricsReport& r) {
    std::ostringstream os;
    os << pair << ',' << r.method << ',' << fmt_double(r.psq) << ',' << (r.failure ? 1 : 0)
       << ',' << r.split_components << ',' << r.split_pixels << ','
       << fmt_double(r.seam_energy) << ',' << r.seam_length << ',' << fmt_double(r.time_ms);
    return os.str();
}

std::string trace_to_json(const std::vector<LossBreakdown>& trace) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LossBreakdown& b : trace) {
        nlohmann::json j;
        j["epoch"] = b.epoch;
        j["comp"] = b.comp;
        j["excl"] = b.excl;
        j["smooth"] = b.smooth;
        j["photo"] = b.photo;
        j["total"] = b.total;
        j["k"] = b.selected_k;
        j["A_M1"] = b.area_m1;
        j["A_M2"] = b.area_m2;
        arr.push_back(j);
    }
    return arr.dump();
}

RunConfig run_config_from_json(const std::string& text, RunConfig base) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid config JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config JSON must be an object");

    if (j.contains("methods")) base.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("alignment")) {
        const std::string a = j["alignment"].get<std::string>();
        if (a == "estimate")
            base.alignment = RunConfig::Alignment::Estimate;
        else if (a == "provided-h")
            base.alignment = RunConfig::Alignment::ProvidedH;
        else if (a == "pre-warped")
            base.alignment = RunConfig::Alignment::PreWarped;
        else
            throw UsageError("config: unknown alignment mode " + a);
    }
    if (j.contains("saliency")) {
        const std::string s = j["saliency"].get<std::string>();
        if (s == "spectral")
            base.saliency_source = RunConfig::SaliencySource::Spectral;
        else if (s == "file")
            base.saliency_source = RunConfig::SaliencySource::File;
        else
            throw UsageError("config: unknown saliency source " + s);
    }
    if (j.contains("object_combine")) {
        const std::string c = j["object_combine"].get<std::string>();
        if (c == "union")
            base.object_combine = RunConfig::ObjectCombine::Union;
        else if (c == "intersection")
            base.object_combine = RunConfig::ObjectCombine::Intersection;
        else
            throw UsageError("config: unknown object_combine " + c);
    }
    if (j.contains("cost")) {
        const std::string c = j["cost"].get<std::string>();
        if (c == "color")
            base.cost_kind = RunConfig::CostKind::Color;
        else if (c == "gradient")
            base.cost_kind = RunConfig::CostKind::Gradient;
        else
            throw UsageError("config: unknown cost kind " + c);
    }
    base.cleanup = j.value("cleanup", base.cleanup);
    base.tau = j.value("tau", base.tau);
    base.no_timing = j.value("no_timing", base.no_timing);
    base.jobs = j.value("jobs", base.jobs);
    base.write_images = j.value("write_images", base.write_images);

    if (j.contains("optim")) {
        const auto& o = j["optim"];
        base.optim.max_epochs = o.value("max_epochs", base.optim.max_epochs);
        base.optim.step = o.value("step", base.optim.step);
        base.optim.step_decay = o.value("step_decay", base.optim.step_decay);
        base.optim.converge_rel_tol = o.value("converge_rel_tol", base.optim.converge_rel_tol);
        base.optim.converge_window = o.value("converge_window", base.optim.converge_window);
        base.optim.w_comp = o.value("w_comp", base.optim.w_comp);
        base.optim.w_excl = o.value("w_excl", base.optim.w_excl);
        base.optim.w_smooth = o.value("w_smooth", base.optim.w_smooth);
        base.optim.w_photo = o.value("w_photo", base.optim.w_photo);
        base.optim.paper_exact = o.value("paper_exact", base.optim.paper_exact);
        if (o.contains("init")) {
            const std::string i = o["init"].get<std::string>();
            if (i == "voronoi")
                base.optim.init = OptimConfig::Init::Voronoi;
            else if (i == "uniform")
                base.optim.init = OptimConfig::Init::Uniform;
            else
                throw UsageError("config: unknown init " + i);
        }
    }
    if (j.contains("saliency_cfg")) {
        const auto& s = j["saliency_cfg"];
        base.saliency_cfg.work_size = s.value("work_size", base.saliency_cfg.work_size);
        base.saliency_cfg.blur_sigma = s.value("blur_sigma", base.saliency_cfg.blur_sigma);
    }
    if (j.contains("ransac")) {
        const auto& r = j["ransac"];
        base.ransac.iterations = r.value("iterations", base.ransac.iterations);
        base.ransac.inlier_threshold_px =
            r.value("inlier_threshold_px", base.ransac.inlier_threshold_px);
        base.ransac.seed = r.value("seed", base.ransac.seed);
    }
    return base;
}

PairInputs load_pair_dir(const std::string& dir) {
    const fs::path p(dir);
    if (!fs::is_directory(p)) throw DataError("pair directory not found: " + dir);
    PairInputs in;
    in.name = p.filename().string();
    const fs::path tgt = p / "target.png", ref = p / "reference.png";
    if (!fs::exists(tgt) || !fs::exists(ref))
        throw DataError("pair directory must contain target.png and reference.png: " + dir);
    in.target = read_png(tgt.string());
    in.reference = read_png(ref.string());
    if (fs::exists(p / "H.json")) in.homography = load_homography((p / "H.json").string());

    auto maybe_mask = [&](const char* name) -> std::optional<BinaryMask> {
        const fs::path mp = p / name;
        if (!fs::exists(mp)) return std::nullopt;
        return read_mask_pgm(mp.string());
    };
    in.mask_t = maybe_mask("mask_t.pgm");
    in.mask_r = maybe_mask("mask_r.pgm");
    in.valid_t = maybe_mask("valid_t.pgm");
    in.valid_r = maybe_mask("valid_r.pgm");
    return in;
}

namespace {

// Places a view-coordinate or canvas-coordinate mask onto the canvas.
BinaryMask mask_on_canvas(const BinaryMask& mask, const AlignedPair& pair, bool is_target,
                          const Image& view) {
    if (mask.same_size(pair.height, pair.width)) return mask;
    if (mask.same_size(view.height, view.width))
        return is_target ? warp_mask_to_canvas(mask, pair)
                         : place_reference_mask(mask, pair);
    throw DataError("object mask matches neither the view nor the canvas size");
}

SeamResult run_dp_oriented(const CostMap& cost, const AlignedPair& pair) {
    int bi0 = pair.height, bi1 = -1, bj0 = pair.width, bj1 = -1;
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j)
            if (pair.overlap(i, j)) {
                bi0 = std::min(bi0, i);
                bi1 = std::max(bi1, i);
                bj0 = std::min(bj0, j);
                bj1 = std::max(bj1, j);
            }
    if (bi1 < bi0) throw DataError("dp_seam: overlap region is empty");
    const int bh = bi1 - bi0 + 1, bw = bj1 - bj0 + 1;
    if (bw <= bh) return dp_seam(cost, pair);

    // Wide overlap: run the vertical seam on the transposed problem.
    const AlignedPair tp = transposed(pair);
    const CostMap tc = transposed(cost);
    SeamResult r = dp_seam(tc, tp);
    SeamResult out;
    out.labels = transposed(r.labels);
    out.soft_l1 = transposed(r.soft_l1);
    out.soft_l2 = transposed(r.soft_l2);
    out.energy = r.energy;
    out.trace = std::move(r.trace);
    out.seam_pixels.reserve(r.seam_pixels.size());
    for (const PixelCoord& s : r.seam_pixels) out.seam_pixels.push_back({s.j, s.i});
    return out;
}

struct DerivedInputs {
    AlignedPair pair;
    BinaryMask object;
    SoftMask psq_weight;
    CostMap cost;
};

DerivedInputs prepare(const PairInputs& in, const RunConfig& cfg) {
    DerivedInputs d;

    switch (cfg.alignment) {
        case RunConfig::Alignment::Estimate: {
            // A homography shipped with the pair wins over estimation.
            if (in.homography) {
                d.pair = warp_pair(in.target, in.reference, *in.homography, cfg.warp);
                break;
            }
            const std::vector<Correspondence> matches =
                detect_matches(in.target, in.reference, cfg.match);
            const RansacResult rr = ransac_homography(matches, cfg.ransac);
            d.pair = warp_pair(in.target, in.reference, rr.H, cfg.warp);
            break;
        }
        case RunConfig::Alignment::ProvidedH: {
            if (!in.homography)
                throw DataError("alignment mode provided-h needs H.json or --homography");
            d.pair = warp_pair(in.target, in.reference, *in.homography, cfg.warp);
            break;
        }
        case RunConfig::Alignment::PreWarped: {
            if (!in.valid_t || !in.valid_r)
                throw DataError("pre-warped mode needs valid_t.pgm and valid_r.pgm");
            d.pair = make_prealigned(in.target, in.reference, *in.valid_t, *in.valid_r);
            break;
        }
    }

    BinaryMask m_t, m_r;
    const bool masks_supplied = in.mask_t && in.mask_r;
    if (cfg.saliency_source == RunConfig::SaliencySource::File && !masks_supplied)
        throw DataError("saliency mode file needs mask_t.pgm and mask_r.pgm");
    if (masks_supplied) {
        // Supplied object masks win over detection, matching the homography
        // precedence above.
        m_t = mask_on_canvas(*in.mask_t, d.pair, true, in.target);
        m_r = mask_on_canvas(*in.mask_r, d.pair, false, in.reference);
        d.psq_weight = SoftMask(d.pair.height, d.pair.width, 0.0);
        for (std::size_t k = 0; k < d.psq_weight.data.size(); ++k)
            d.psq_weight.data[k] = std::max(m_t.data[k], m_r.data[k]) ? 1.0 : 0.0;
    } else {
        const SoftMask s_t =
            canvas_saliency(d.pair.warped_target, d.pair.valid_t, cfg.saliency_cfg);
        const SoftMask s_r =
            canvas_saliency(d.pair.warped_reference, d.pair.valid_r, cfg.saliency_cfg);
        m_t = binarize(s_t, cfg.tau);
        m_r = binarize(s_r, cfg.tau);
        if (cfg.cleanup) {
            m_t = morph_cleanup(m_t);
            m_r = morph_cleanup(m_r);
        }
        d.psq_weight = SoftMask(d.pair.height, d.pair.width, 0.0);
        for (std::size_t k = 0; k < d.psq_weight.data.size(); ++k)
            d.psq_weight.data[k] = std::max(s_t.data[k], s_r.data[k]);
    }
    d.object = cfg.object_combine == RunConfig::ObjectCombine::Union
                   ? object_union(m_t, m_r)
                   : mask_and(m_t, m_r);

    d.cost = cfg.cost_kind == RunConfig::CostKind::Color
                 ? color_difference_map(d.pair.warped_target, d.pair.warped_reference,
                                        d.pair.overlap)
                 : gradient_difference_map(d.pair.warped_target, d.pair.warped_reference,
                                           d.pair.overlap);
    return d;
}

}  // namespace

PairOutcome run_pair(const PairInputs& inputs, const RunConfig& cfg) {
    if (cfg.methods.empty()) throw UsageError("run_pair: method list is empty");
    for (const std::string& m : cfg.methods)
        if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end())
            throw UsageError("run_pair: unknown method " + m);

    PairOutcome out;
    out.name = inputs.name;

    DerivedInputs d;
    try {
        d = prepare(inputs, cfg);
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        return out;
    }

    for (const std::string& method : cfg.methods) {
        MethodOutcome mo;
        mo.method = method;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (method == "dp")
                mo.seam = run_dp_oriented(d.cost, d.pair);
            else if (method == "graphcut")
                mo.seam = graphcut_seam(d.cost, d.pair);
            else if (method == "voronoi")
                mo.seam = voronoi_seam(d.pair, &d.cost);
            else
                mo.seam = optimize_masks(d.pair, d.object, cfg.optim, &d.cost);
            const auto t1 = std::chrono::steady_clock::now();

            mo.stitched = compose(d.pair, mo.seam.soft_l1, mo.seam.soft_l2);
            mo.report.method = method;
            mo.report.psq = psq(d.pair, mo.seam.labels, d.psq_weight);
            const IntegrityResult ir = object_integrity(d.object, mo.seam.labels);
            mo.report.failure = ir.failure;
            mo.report.split_components = ir.split_components;
            mo.report.split_pixels = ir.split_pixels;
            mo.report.seam_energy = seam_energy(d.cost, mo.seam.labels);
            mo.report.seam_length = static_cast<int>(mo.seam.seam_pixels.size());
            mo.report.time_ms =
                cfg.no_timing
                    ? 0.0
                    : std::chrono::duration<double, std::milli>(t1 - t0).count();
            mo.ok = true;
        } catch (const std::exception& e) {
            mo.ok = false;
            mo.error = std::string(e.what());
        }
        out.methods.push_back(std::move(mo));
    }
    out.ok = true;
    return out;
}

namespace {

void write_outputs(const std::string& out_dir, const PairOutcome& po, const RunConfig& cfg) {
    if (out_dir.empty()) return;
    const fs::path dir = fs::path(out_dir) / po.name;
    fs::create_directories(dir);
    for (const MethodOutcome& mo : po.methods) {
        if (!mo.ok) continue;
        if (cfg.write_images) write_png((dir / (mo.method + ".png")).string(), mo.stitched);
        write_label_pgm((dir / (mo.method + "_labels.pgm")).string(), mo.seam.labels);
        std::ofstream rep(dir / (mo.method + "_report.json"));
        rep << to_json(mo.report) << "\n";
        if (!mo.seam.trace.empty()) {
            std::ofstream tr(dir / (mo.method + "_trace.json"));
            tr << trace_to_json(mo.seam.trace) << "\n";
        }
    }
}

}  // namespace

BatchResult run_batch(const std::vector<PairSource>& sources, const RunConfig& cfg,
                      const std::string& out_dir) {
    if (sources.empty()) throw DataError("run_batch: no pairs to evaluate");
    if (cfg.methods.empty()) throw UsageError("run_batch: method list is empty");

    BatchResult res;
    res.pairs.resize(sources.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sources.size()) break;
            const PairSource& src = sources[i];
            PairOutcome po;
            po.name = src.name;
            try {
                PairInputs in;
                if (src.spec) {
                    const SynthPair sp = synth_pair(*src.spec);
                    in.name = src.name;
                    in.target = sp.target;
                    in.reference = sp.reference;
                    in.homography = sp.true_h;
                    in.mask_t = sp.mask_t;
                    in.mask_r = sp.mask_r;
                } else {
                    in = load_pair_dir(src.dir);
                    in.name = src.name;
                }
                po = run_pair(in, cfg);
                po.name = src.name;
                write_outputs(out_dir, po, cfg);
            } catch (const std::exception& e) {
                po.ok = false;
                po.error = e.what();
            }
            res.pairs[i] = std::move(po);
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n = std::min<std::size_t>(jobs, sources.size());
        pool.reserve(n);
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Serial aggregation in source order keeps the outputs independent of the
    // scheduling.
    std::ostringstream csv;
    csv << kCsvHeader << "\n";
    struct Agg {
        int count = 0, failures = 0;
        double psq = 0.0, energy = 0.0, time = 0.0;
    };
    std::map<std::string, Agg> agg;
    nlohmann::json errors = nlohmann::json::array();
    for (const PairOutcome& po : res.pairs) {
        if (!po.ok) {
            errors.push_back({{"pair", po.name}, {"stage", "setup"}, {"message", po.error}});
            continue;
        }
        for (const MethodOutcome& mo : po.methods) {
            if (!mo.ok) {
                errors.push_back(
                    {{"pair", po.name}, {"stage", mo.method}, {"message", mo.error}});
                continue;
            }
            csv << csv_row(po.name, mo.report) << "\n";
            Agg& a = agg[mo.method];
            ++a.count;
            a.failures += mo.report.failure ? 1 : 0;
            a.psq += mo.report.psq;
            a.energy += mo.report.seam_energy;
            a.time += mo.report.time_ms;
        }
    }
    res.csv = csv.str();

    nlohmann::json summary;
    summary["pairs"] = sources.size();
    nlohmann::json methods_json;
    for (const auto& [name, a] : agg) {
        nlohmann::json m;
        m["count"] = a.count;
        m["failures"] = a.failures;
        m["failure_rate"] = a.count ? static_cast<double>(a.failures) / a.count : 0.0;
        m["success_rate"] = a.count ? 1.0 - static_cast<double>(a.failures) / a.count : 0.0;
        m["mean_psq"] = a.count ? a.psq / a.count : 0.0;
        m["mean_seam_energy"] = a.count ? a.energy / a.count : 0.0;
        m["mean_time_ms"] = a.count ? a.time / a.count : 0.0;
        methods_json[name] = m;
    }
    summary["methods"] = methods_json;
    summary["errors"] = errors;
    res.summary_json = summary.dump(2);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream csvf(fs::path(out_dir) / "results.csv");
        csvf << res.csv;
        std::ofstream sumf(fs::path(out_dir) / "summary.json");
        sumf << res.summary_json << "\n";
    }
    return res;
}

}  // namespace stitch
