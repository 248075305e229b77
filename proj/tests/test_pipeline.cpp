#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stitch/io.hpp"
#include "stitch/pipeline.hpp"
#include "test_support.hpp"

using namespace stitch;
using namespace testsup;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
    const fs::path p = fs::temp_directory_path() / "stitch_pipeline_tests";
    fs::create_directories(p);
    return p;
}

PairInputs inputs_from_spec(const SynthSpec& spec, const std::string& name) {
    const SynthPair sp = synth_pair(spec);
    PairInputs in;
    in.name = name;
    in.target = sp.target;
    in.reference = sp.reference;
    in.homography = sp.true_h;
    in.mask_t = sp.mask_t;
    in.mask_r = sp.mask_r;
    return in;
}

RunConfig suite_config() {
    RunConfig cfg;
    cfg.alignment = RunConfig::Alignment::ProvidedH;
    cfg.saliency_source = RunConfig::SaliencySource::File;
    cfg.no_timing = true;
    return cfg;
}

SynthSpec off_center_identical_spec() {
    SynthSpec s;
    s.view_height = 64;
    s.view_width = 64;
    s.overlap_fraction = 0.5;
    s.texture = SynthSpec::Texture::Checker;
    s.seed = 9;
    SynthObject o;
    o.cx = 40.0;  // inside the overlap [32, 96) but away from its center 64
    o.cy = 32.0;
    o.size = 6.0;
    s.objects.push_back(o);
    return s;
}

}  // namespace

TEST_CASE("identical pair: psq 0 and no failures for every method") {
    const PairInputs in = inputs_from_spec(off_center_identical_spec(), "identical");
    const PairOutcome po = run_pair(in, suite_config());
    REQUIRE(po.ok);
    REQUIRE(po.methods.size() == 4);
    for (const MethodOutcome& mo : po.methods) {
        REQUIRE_MESSAGE(mo.ok, mo.method, ": ", mo.error);
        CHECK(mo.report.psq == 0.0);
        CHECK_FALSE(mo.report.failure);
        // Composed output matches the reference wherever it is valid.
        CHECK(mo.stitched.width == 96);
    }
}

TEST_CASE("adversarial pair: photometric methods split the object, object-aware does not") {
    // A suite pair with jitter and the corridor through the object.
    std::vector<SynthSpec> suite = default_suite();
    const SynthSpec* adversarial = nullptr;
    for (const SynthSpec& s : suite)
        if (s.jitter > 0.0 && s.objects[0].dx == 0.0) {
            adversarial = &s;
            break;
        }
    REQUIRE(adversarial != nullptr);
    const PairInputs in = inputs_from_spec(*adversarial, "adversarial");
    const PairOutcome po = run_pair(in, suite_config());
    REQUIRE(po.ok);

    bool gc_failure = false, oa_failure = true;
    for (const MethodOutcome& mo : po.methods) {
        REQUIRE_MESSAGE(mo.ok, mo.method, ": ", mo.error);
        if (mo.method == "graphcut") gc_failure = mo.report.failure;
        if (mo.method == "object-aware") oa_failure = mo.report.failure;
    }
    CHECK(gc_failure);
    CHECK_FALSE(oa_failure);
}

TEST_CASE("empty or unknown method lists are configuration errors") {
    const PairInputs in = inputs_from_spec(off_center_identical_spec(), "cfg");
    RunConfig cfg = suite_config();
    cfg.methods = {};
    CHECK_THROWS_AS(run_pair(in, cfg), UsageError);
    cfg.methods = {"zigzag"};
    CHECK_THROWS_AS(run_pair(in, cfg), UsageError);
}

TEST_CASE("spectral saliency pipeline finds the planted object") {
    SynthSpec spec = off_center_identical_spec();
    spec.texture = SynthSpec::Texture::Gradient;  // quiet background
    const SynthPair sp = synth_pair(spec);

    RunConfig cfg = suite_config();
    cfg.saliency_source = RunConfig::SaliencySource::Spectral;
    PairInputs in;
    in.name = "spectral";
    in.target = sp.target;
    in.reference = sp.reference;
    in.homography = sp.true_h;
    const PairOutcome po = run_pair(in, cfg);
    REQUIRE(po.ok);
    for (const MethodOutcome& mo : po.methods) REQUIRE_MESSAGE(mo.ok, mo.error);
}

TEST_CASE("run_batch writes rows, summary and stable artifacts") {
    std::vector<PairSource> sources;
    std::vector<SynthSpec> suite = default_suite();
    for (int k = 0; k < 4; ++k) {
        char name[16];
        std::snprintf(name, sizeof(name), "pair_%03d", k);
        sources.push_back({name, "", suite[k * 7]});
    }
    RunConfig cfg = suite_config();
    cfg.methods = {"graphcut", "object-aware"};
    cfg.write_images = false;

    const fs::path out = tmp_root() / "batch";
    fs::remove_all(out);
    const BatchResult br = run_batch(sources, cfg, out.string());

    SUBCASE("cardinality: one row per pair and method") {
        int rows = 0;
        std::istringstream is(br.csv);
        std::string line;
        std::getline(is, line);
        CHECK(line == kCsvHeader);
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 8);
    }

    SUBCASE("summary failure rate equals a recount from the CSV") {
        std::istringstream is(br.csv);
        std::string line;
        std::getline(is, line);
        int gc_rows = 0, gc_failures = 0;
        while (std::getline(is, line)) {
            if (line.find(",graphcut,") == std::string::npos) continue;
            ++gc_rows;
            // failure is the 4th column
            std::istringstream ls(line);
            std::string field;
            for (int c = 0; c < 4; ++c) std::getline(ls, field, ',');
            if (field == "1") ++gc_failures;
        }
        REQUIRE(gc_rows == 4);
        std::istringstream sj(br.summary_json);
        std::stringstream buf;
        buf << sj.rdbuf();
        const std::string summary = buf.str();
        char expect[64];
        std::snprintf(expect, sizeof(expect), "\"failures\": %d", gc_failures);
        CHECK(summary.find(expect) != std::string::npos);
    }

    SUBCASE("batch outputs are byte-stable across runs and job counts") {
        RunConfig cfg4 = cfg;
        cfg4.jobs = 4;
        const fs::path out4 = tmp_root() / "batch_jobs4";
        fs::remove_all(out4);
        const BatchResult br4 = run_batch(sources, cfg4, out4.string());
        CHECK(br4.csv == br.csv);
        CHECK(br4.summary_json == br.summary_json);
        for (int k = 0; k < 4; ++k) {
            char name[16];
            std::snprintf(name, sizeof(name), "pair_%03d", k);
            for (const char* fname : {"graphcut_labels.pgm", "object-aware_labels.pgm",
                                      "object-aware_trace.json"}) {
                std::ifstream f1(out / name / fname, std::ios::binary);
                std::ifstream f4(out4 / name / fname, std::ios::binary);
                REQUIRE(f1.good());
                REQUIRE(f4.good());
                std::stringstream s1, s4;
                s1 << f1.rdbuf();
                s4 << f4.rdbuf();
                CHECK(s1.str() == s4.str());
            }
        }
    }
}

TEST_CASE("pair directories round trip through the loader") {
    const SynthPair sp = synth_pair(off_center_identical_spec());
    const fs::path dir = tmp_root() / "pair_dir";
    fs::remove_all(dir);
    write_pair_dir(dir.string(), sp);

    const PairInputs in = load_pair_dir(dir.string());
    CHECK(in.target.same_size(sp.target.height, sp.target.width));
    REQUIRE(in.homography.has_value());
    CHECK(in.homography->h == sp.true_h.h);
    REQUIRE(in.mask_t.has_value());
    CHECK(mask_count(*in.mask_t) == mask_count(sp.mask_t));

    // PNG quantization: reading back and re-writing is stable.
    const fs::path again = tmp_root() / "again.png";
    write_png(again.string(), in.target);
    const Image reread = read_png(again.string());
    CHECK(reread.data == in.target.data);

    RunConfig cfg = suite_config();
    cfg.methods = {"voronoi"};
    const PairOutcome po = run_pair(in, cfg);
    REQUIRE(po.ok);
    REQUIRE(po.methods[0].ok);
}

TEST_CASE("run_config_from_json overrides selectively") {
    RunConfig cfg = run_config_from_json(
        R"({"methods":["dp"],"alignment":"pre-warped","tau":0.3,
            "optim":{"max_epochs":123,"paper_exact":true,"init":"uniform"}})");
    CHECK(cfg.methods == std::vector<std::string>{"dp"});
    CHECK(cfg.alignment == RunConfig::Alignment::PreWarped);
    CHECK(cfg.tau == 0.3);
    CHECK(cfg.optim.max_epochs == 123);
    CHECK(cfg.optim.paper_exact);
    CHECK(cfg.optim.init == OptimConfig::Init::Uniform);
    CHECK_THROWS_AS(run_config_from_json("[]"), DataError);
    CHECK_THROWS_AS(run_config_from_json(R"({"alignment":"sideways"})"), UsageError);
}

TEST_CASE("pre-warped inputs skip alignment") {
    auto g = rng(3);
    const int h = 40, w = 60;
    Image wt(h, w), wr(h, w);
    BinaryMask vt(h, w, 0), vr(h, w, 0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (j <= 39) vt(i, j) = 1;
            if (j >= 20) vr(i, j) = 1;
            for (int c = 0; c < 3; ++c) {
                const double v = uniform(g, 0, 1);
                wt.at(i, j, c) = v;
                wr.at(i, j, c) = v;
            }
        }
    PairInputs in;
    in.name = "prewarped";
    in.target = wt;
    in.reference = wr;
    in.valid_t = vt;
    in.valid_r = vr;
    in.mask_t = BinaryMask(h, w, 0);  // canvas-coordinate masks
    in.mask_r = BinaryMask(h, w, 0);

    RunConfig cfg = suite_config();
    cfg.alignment = RunConfig::Alignment::PreWarped;
    cfg.methods = {"dp", "voronoi"};
    const PairOutcome po = run_pair(in, cfg);
    REQUIRE(po.ok);
    for (const MethodOutcome& mo : po.methods) {
        REQUIRE_MESSAGE(mo.ok, mo.error);
        CHECK(mo.report.psq == 0.0);
    }
}
