// seamstitch command-line front end: stitch, seam, saliency, synth, eval.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stitch/io.hpp"
#include "stitch/pipeline.hpp"

namespace fs = std::filesystem;
using namespace stitch;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out = ".";
    std::uint64_t seed = 0;
    int jobs = 1;
    bool no_timing = false;

    std::string target, reference, homography;
    std::string mask_t, mask_r, valid_t, valid_r;
    std::string align = "estimate";
    std::string saliency = "spectral";
    std::string object_combine = "union";
    std::string cost = "color";
    double tau = 0.5;
    bool no_cleanup = false;
    std::vector<std::string> methods;

    // optimizer flags
    int epochs = -1;
    double step = -1.0;
    double w_comp = -1.0, w_excl = -1.0, w_smooth = -1.0, w_photo = -1.0;
    bool paper_exact = false;
    std::string init;
    std::string trace_path;
};

void add_run_flags(CLI::App* cmd, CommonOpts& o, bool with_inputs) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--jobs", o.jobs, "parallel pair workers");
    cmd->add_flag("--no-timing", o.no_timing, "report time_ms as 0 (reproducible outputs)");
    if (with_inputs) {
        cmd->add_option("--target", o.target, "target image (PNG)")->required();
        cmd->add_option("--reference", o.reference, "reference image (PNG)")->required();
        cmd->add_option("--homography", o.homography, "homography JSON (enables provided-h)");
        cmd->add_option("--mask-t", o.mask_t, "target object mask (PGM/PNG)");
        cmd->add_option("--mask-r", o.mask_r, "reference object mask (PGM/PNG)");
        cmd->add_option("--valid-t", o.valid_t, "target validity mask (pre-warped mode)");
        cmd->add_option("--valid-r", o.valid_r, "reference validity mask (pre-warped mode)");
        cmd->add_option("--align", o.align, "estimate | provided-h | pre-warped");
    }
    cmd->add_option("--saliency-mode", o.saliency, "spectral | file");
    cmd->add_option("--object-combine", o.object_combine, "union | intersection");
    cmd->add_option("--cost", o.cost, "color | gradient");
    cmd->add_option("--tau", o.tau, "saliency binarization threshold in (0,1)");
    cmd->add_flag("--no-cleanup", o.no_cleanup, "skip morphological mask cleanup");
    cmd->add_option("--method,--methods", o.methods,
                    "dp, graphcut, voronoi, object-aware (repeatable)");

    cmd->add_option("--epochs", o.epochs, "optimizer epoch limit");
    cmd->add_option("--step", o.step, "optimizer step size");
    cmd->add_option("--w-comp", o.w_comp, "completeness weight");
    cmd->add_option("--w-excl", o.w_excl, "exclusivity weight");
    cmd->add_option("--w-smooth", o.w_smooth, "smoothness weight");
    cmd->add_option("--w-photo", o.w_photo, "photometric weight");
    cmd->add_flag("--paper-exact", o.paper_exact, "raw-sum loss variant");
    cmd->add_option("--init", o.init, "optimizer init: voronoi | uniform");
    cmd->add_option("--trace", o.trace_path, "write the optimizer trace JSON here");
}

RunConfig build_config(const CommonOpts& o, const std::vector<std::string>& default_methods) {
    RunConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw DataError("cannot open config file: " + o.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = run_config_from_json(ss.str(), cfg);
    }
    if (!o.methods.empty())
        cfg.methods = o.methods;
    else if (!default_methods.empty())
        cfg.methods = default_methods;

    if (o.align == "estimate")
        cfg.alignment = RunConfig::Alignment::Estimate;
    else if (o.align == "provided-h")
        cfg.alignment = RunConfig::Alignment::ProvidedH;
    else if (o.align == "pre-warped")
        cfg.alignment = RunConfig::Alignment::PreWarped;
    else
        throw UsageError("unknown alignment mode: " + o.align);
    if (!o.homography.empty() && o.align == "estimate")
        cfg.alignment = RunConfig::Alignment::ProvidedH;
    if (!o.valid_t.empty() || !o.valid_r.empty())
        cfg.alignment = RunConfig::Alignment::PreWarped;

    if (o.saliency == "spectral")
        cfg.saliency_source = RunConfig::SaliencySource::Spectral;
    else if (o.saliency == "file")
        cfg.saliency_source = RunConfig::SaliencySource::File;
    else
        throw UsageError("unknown saliency mode: " + o.saliency);
    if (!o.mask_t.empty() || !o.mask_r.empty())
        cfg.saliency_source = RunConfig::SaliencySource::File;

    if (o.object_combine == "union")
        cfg.object_combine = RunConfig::ObjectCombine::Union;
    else if (o.object_combine == "intersection")
        cfg.object_combine = RunConfig::ObjectCombine::Intersection;
    else
        throw UsageError("unknown object combine mode: " + o.object_combine);

    if (o.cost == "color")
        cfg.cost_kind = RunConfig::CostKind::Color;
    else if (o.cost == "gradient")
        cfg.cost_kind = RunConfig::CostKind::Gradient;
    else
        throw UsageError("unknown cost kind: " + o.cost);

    cfg.tau = o.tau;
    cfg.cleanup = !o.no_cleanup;
    cfg.no_timing = o.no_timing;
    cfg.jobs = o.jobs;
    cfg.ransac.seed = o.seed;

    if (o.epochs > 0) cfg.optim.max_epochs = o.epochs;
    if (o.step > 0) cfg.optim.step = o.step;
    if (o.w_comp >= 0) cfg.optim.w_comp = o.w_comp;
    if (o.w_excl >= 0) cfg.optim.w_excl = o.w_excl;
    if (o.w_smooth >= 0) cfg.optim.w_smooth = o.w_smooth;
    if (o.w_photo >= 0) cfg.optim.w_photo = o.w_photo;
    if (o.paper_exact) cfg.optim.paper_exact = true;
    if (!o.init.empty()) {
        if (o.init == "voronoi")
            cfg.optim.init = OptimConfig::Init::Voronoi;
        else if (o.init == "uniform")
            cfg.optim.init = OptimConfig::Init::Uniform;
        else
            throw UsageError("unknown init: " + o.init);
    }
    return cfg;
}

PairInputs load_inputs(const CommonOpts& o, const AlignedPair* /*unused*/ = nullptr) {
    PairInputs in;
    in.name = fs::path(o.target).stem().string() + "_vs_" +
              fs::path(o.reference).stem().string();
    in.target = read_png(o.target);
    in.reference = read_png(o.reference);
    if (!o.homography.empty()) in.homography = load_homography(o.homography);
    auto opt_mask = [](const std::string& path) -> std::optional<BinaryMask> {
        if (path.empty()) return std::nullopt;
        BinaryMask m = read_mask_pgm(path);
        return m;
    };
    if (!o.mask_t.empty() || !o.mask_r.empty()) {
        if (o.mask_t.empty() || o.mask_r.empty())
            throw UsageError("--mask-t and --mask-r must be given together");
        in.mask_t = opt_mask(o.mask_t);
        in.mask_r = opt_mask(o.mask_r);
    }
    if (!o.valid_t.empty() || !o.valid_r.empty()) {
        if (o.valid_t.empty() || o.valid_r.empty())
            throw UsageError("--valid-t and --valid-r must be given together");
        in.valid_t = opt_mask(o.valid_t);
        in.valid_r = opt_mask(o.valid_r);
    }
    return in;
}

int report_outcome(const PairOutcome& po, const RunConfig& cfg, const std::string& out_dir,
                   const std::string& trace_path) {
    if (!po.ok) throw DataError(po.error);
    fs::create_directories(out_dir);
    bool all_ok = true;
    for (const MethodOutcome& mo : po.methods) {
        if (!mo.ok) {
            std::cerr << "[" << mo.method << "] failed: " << mo.error << "\n";
            all_ok = false;
            continue;
        }
        const fs::path dir = fs::path(out_dir) / po.name;
        fs::create_directories(dir);
        if (cfg.write_images) write_png((dir / (mo.method + ".png")).string(), mo.stitched);
        write_label_pgm((dir / (mo.method + "_labels.pgm")).string(), mo.seam.labels);
        std::ofstream rep(dir / (mo.method + "_report.json"));
        rep << to_json(mo.report) << "\n";
        if (!mo.seam.trace.empty()) {
            const fs::path tp =
                trace_path.empty() ? dir / (mo.method + "_trace.json") : fs::path(trace_path);
            std::ofstream tr(tp);
            tr << trace_to_json(mo.seam.trace) << "\n";
        }
        std::cout << po.name << " [" << mo.method << "] psq=" << mo.report.psq
                  << " failure=" << (mo.report.failure ? "yes" : "no")
                  << " seam_energy=" << mo.report.seam_energy << "\n";
    }
    return all_ok ? 0 : 3;
}

std::vector<PairSource> collect_sources(const std::string& pairs_dir,
                                        const std::string& suite, std::uint64_t seed_base) {
    std::vector<PairSource> sources;
    if (!pairs_dir.empty()) {
        if (!fs::is_directory(pairs_dir))
            throw DataError("pairs directory not found: " + pairs_dir);
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(pairs_dir))
            if (e.is_directory() && fs::exists(e.path() / "target.png"))
                names.push_back(e.path().string());
        std::sort(names.begin(), names.end());
        for (const std::string& n : names)
            sources.push_back({fs::path(n).filename().string(), n, std::nullopt});
    } else {
        std::vector<SynthSpec> specs =
            suite == "default" ? default_suite() : load_suite(suite);
        int i = 0;
        for (SynthSpec& s : specs) {
            s.seed += seed_base;
            char name[32];
            std::snprintf(name, sizeof(name), "pair_%03d", i++);
            sources.push_back({name, "", s});
        }
    }
    if (sources.empty()) throw DataError("no pairs found to evaluate");
    return sources;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seamstitch: foreground-aware image stitching and seam evaluation"};
    app.require_subcommand(1);

    CommonOpts stitch_o, seam_o, eval_o;
    std::string sal_image, sal_out = "mask.pgm", sal_soft;
    double sal_tau = 0.5;
    int sal_work = 64;
    double sal_sigma = 3.0;
    std::string synth_out, synth_suite, synth_spec_path, synth_write_config;
    std::uint64_t synth_seed = 0;
    std::string eval_pairs, eval_suite = "default";

    CLI::App* c_stitch = app.add_subcommand("stitch", "align, seam and blend a pair");
    add_run_flags(c_stitch, stitch_o, true);

    CLI::App* c_seam = app.add_subcommand("seam", "compute a seam and emit the label map");
    add_run_flags(c_seam, seam_o, true);

    CLI::App* c_sal = app.add_subcommand("saliency", "detect the salient foreground");
    c_sal->add_option("image", sal_image, "input image (PNG)")->required();
    c_sal->add_option("--out", sal_out, "binary mask output (PGM)");
    c_sal->add_option("--soft", sal_soft, "also write the soft saliency map (PGM)");
    c_sal->add_option("--tau", sal_tau, "binarization threshold in (0,1)");
    c_sal->add_option("--work-size", sal_work, "spectral analysis resolution");
    c_sal->add_option("--blur-sigma", sal_sigma, "saliency smoothing sigma");

    CLI::App* c_synth = app.add_subcommand("synth", "generate synthetic pairs");
    c_synth->add_option("--out", synth_out, "output directory");
    c_synth->add_option("--suite", synth_suite, "'default' or a suite JSON file");
    c_synth->add_option("--spec", synth_spec_path, "single pair spec JSON file");
    c_synth->add_option("--seed", synth_seed, "seed offset added to every spec");
    c_synth->add_option("--write-config", synth_write_config,
                        "write the suite spec JSON here and exit");

    CLI::App* c_eval = app.add_subcommand("eval", "batch evaluation producing CSV + summary");
    add_run_flags(c_eval, eval_o, false);
    c_eval->add_option("--pairs", eval_pairs, "directory of pair subdirectories");
    c_eval->add_option("--suite", eval_suite, "'default' or a suite JSON file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (c_stitch->parsed() || c_seam->parsed()) {
            const CommonOpts& o = c_stitch->parsed() ? stitch_o : seam_o;
            const std::vector<std::string> defaults =
                c_stitch->parsed() ? std::vector<std::string>{"object-aware"} : kAllMethods;
            RunConfig cfg = build_config(o, defaults);
            cfg.write_images = c_stitch->parsed();
            const PairInputs in = load_inputs(o);
            const PairOutcome po = run_pair(in, cfg);
            return report_outcome(po, cfg, o.out, o.trace_path);
        }
        if (c_sal->parsed()) {
            if (!(sal_tau > 0.0 && sal_tau < 1.0))
                throw UsageError("tau must lie strictly inside (0,1)");
            const Image img = read_png(sal_image);
            SaliencyConfig scfg;
            scfg.work_size = sal_work;
            scfg.blur_sigma = sal_sigma;
            const SoftMask s = spectral_residual(to_grayscale(img), scfg);
            if (!sal_soft.empty()) {
                GrayImage g(s.height, s.width);
                g.data = s.data;
                write_pgm(sal_soft, g);
            }
            write_mask_pgm(sal_out, morph_cleanup(binarize(s, sal_tau)));
            std::cout << "wrote " << sal_out << "\n";
            return 0;
        }
        if (c_synth->parsed()) {
            if (!synth_write_config.empty()) {
                save_suite(synth_write_config,
                           synth_suite.empty() || synth_suite == "default"
                               ? default_suite()
                               : load_suite(synth_suite));
                std::cout << "wrote " << synth_write_config << "\n";
                return 0;
            }
            if (synth_out.empty()) throw UsageError("synth needs --out");
            std::vector<SynthSpec> specs;
            if (!synth_spec_path.empty()) {
                specs = load_suite(synth_spec_path);
            } else {
                specs = synth_suite.empty() || synth_suite == "default"
                            ? default_suite()
                            : load_suite(synth_suite);
            }
            int i = 0;
            for (SynthSpec s : specs) {
                s.seed += synth_seed;
                char name[32];
                std::snprintf(name, sizeof(name), "pair_%03d", i++);
                SynthPair p = synth_pair(s);
                p.name = name;
                write_pair_dir((fs::path(synth_out) / name).string(), p);
            }
            std::cout << "wrote " << i << " pairs under " << synth_out << "\n";
            return 0;
        }
        if (c_eval->parsed()) {
            RunConfig cfg = build_config(eval_o, kAllMethods);
            if (eval_pairs.empty()) {
                // Synthetic pairs ship their exact homography and masks.
                if (eval_o.align == "estimate") cfg.alignment = RunConfig::Alignment::ProvidedH;
                if (eval_o.saliency == "spectral")
                    cfg.saliency_source = RunConfig::SaliencySource::File;
            }
            const std::vector<PairSource> sources =
                collect_sources(eval_pairs, eval_suite, eval_o.seed);
            const BatchResult br = run_batch(sources, cfg, eval_o.out);
            std::cout << br.summary_json << "\n";
            int pair_errors = 0;
            for (const PairOutcome& po : br.pairs)
                if (!po.ok) ++pair_errors;
            std::cout << "rows written to " << (fs::path(eval_o.out) / "results.csv").string()
                      << " (" << pair_errors << " pair errors)\n";
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
