#include "stitch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stitch/io.hpp"

namespace stitch {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Position-keyed uniform in [0,1): independent of evaluation order.
double hash_uniform(std::uint64_t seed, std::uint64_t salt, int x, int y) {
    const std::uint64_t key =
        splitmix64(seed ^ splitmix64(salt ^ (static_cast<std::uint64_t>(x) << 32 |
                                             static_cast<std::uint32_t>(y))));
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

bool inside_object(const SynthObject& o, double x, double y, bool displaced) {
    const double cx = displaced ? o.cx + o.dx : o.cx;
    const double cy = displaced ? o.cy + o.dy : o.cy;
    if (o.shape == SynthObject::Shape::Disk) {
        const double ddx = x - cx, ddy = y - cy;
        return ddx * ddx + ddy * ddy <= o.size * o.size;
    }
    return std::abs(x - cx) <= o.size && std::abs(y - cy) <= 0.7 * o.size;
}

void background_pixel(const SynthSpec& spec, int sx, int sy, double* rgb) {
    switch (spec.texture) {
        case SynthSpec::Texture::Gradient: {
            const double u = spec.scene_width() > 1
                                 ? static_cast<double>(sx) / (spec.scene_width() - 1)
                                 : 0.0;
            const double v = spec.view_height > 1
                                 ? static_cast<double>(sy) / (spec.view_height - 1)
                                 : 0.0;
            rgb[0] = 0.2 + 0.6 * u;
            rgb[1] = 0.3 + 0.4 * v;
            rgb[2] = 0.7 - 0.4 * u;
            break;
        }
        case SynthSpec::Texture::Checker: {
            const bool on = ((sx / 16) + (sy / 16)) % 2 == 0;
            const double base = on ? 0.65 : 0.35;
            rgb[0] = base;
            rgb[1] = base * 0.95;
            rgb[2] = base * 1.05;
            break;
        }
        case SynthSpec::Texture::Noise: {
            rgb[0] = 0.2 + 0.6 * hash_uniform(spec.seed, 0x11, sx, sy);
            rgb[1] = 0.2 + 0.6 * hash_uniform(spec.seed, 0x22, sx, sy);
            rgb[2] = 0.2 + 0.6 * hash_uniform(spec.seed, 0x33, sx, sy);
            break;
        }
    }
}

}  // namespace

int SynthSpec::shift_px() const {
    return static_cast<int>(std::lround(view_width * (1.0 - overlap_fraction)));
}

int SynthSpec::scene_width() const { return view_width + shift_px(); }

SynthPair synth_pair(const SynthSpec& spec) {
    if (spec.view_height < 16 || spec.view_width < 16)
        throw UsageError("synth_pair: views must be at least 16x16");
    if (!(spec.overlap_fraction > 0.0 && spec.overlap_fraction < 1.0))
        throw UsageError("synth_pair: overlap_fraction must lie in (0,1)");
    if (spec.overlap_fraction * spec.view_width < 8.0)
        throw UsageError("synth_pair: overlap narrower than 8 px");

    const int shift = spec.shift_px();
    const int sw = spec.scene_width();
    const int sh = spec.view_height;

    for (const SynthObject& o : spec.objects) {
        const double hx = o.shape == SynthObject::Shape::Disk ? o.size : o.size;
        const double hy = o.shape == SynthObject::Shape::Disk ? o.size : 0.7 * o.size;
        for (int view = 0; view < 2; ++view) {
            const double cx = view ? o.cx + o.dx : o.cx;
            const double cy = view ? o.cy + o.dy : o.cy;
            if (cx - hx < 0 || cx + hx > sw - 1 || cy - hy < 0 || cy + hy > sh - 1)
                throw DataError("synth_pair: object footprint leaves the canvas");
        }
    }

    SynthPair out;
    out.true_h = Homography::translation(shift, 0.0);
    out.reference = Image(sh, spec.view_width);
    out.target = Image(sh, spec.view_width);
    out.mask_r = BinaryMask(sh, spec.view_width, 0);
    out.mask_t = BinaryMask(sh, spec.view_width, 0);
    out.true_object = BinaryMask(sh, sw, 0);

    const double half_corridor = spec.corridor_width * 0.5;
    auto in_corridor = [&](int sx) {
        return spec.corridor_width > 0.0 &&
               std::abs(sx - spec.corridor_center_x) <= half_corridor;
    };

    // view 0 = reference (scene columns [0, view_width)),
    // view 1 = target (scene columns [shift, shift+view_width)).
    for (int view = 0; view < 2; ++view) {
        Image& img = view ? out.target : out.reference;
        BinaryMask& mask = view ? out.mask_t : out.mask_r;
        const int x0 = view ? shift : 0;
        for (int y = 0; y < sh; ++y) {
            for (int x = 0; x < spec.view_width; ++x) {
                const int sx = x + x0;
                double rgb[3] = {0.0, 0.0, 0.0};
                background_pixel(spec, sx, y, rgb);
                bool on_object = false;
                for (const SynthObject& o : spec.objects) {
                    if (inside_object(o, sx, y, view == 1)) {
                        rgb[0] = o.color[0];
                        rgb[1] = o.color[1];
                        rgb[2] = o.color[2];
                        on_object = true;
                        break;
                    }
                }
                if (on_object) mask(y, x) = 1;
                if (view == 1 && spec.jitter > 0.0 && !in_corridor(sx)) {
                    const double n = 2.0 * hash_uniform(spec.seed, 0x77, sx, y) - 1.0;
                    for (int c = 0; c < 3; ++c)
                        rgb[c] = std::clamp(rgb[c] + spec.jitter * n, 0.0, 1.0);
                }
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
            }
        }
    }

    for (int y = 0; y < sh; ++y)
        for (int sx = 0; sx < sw; ++sx)
            for (const SynthObject& o : spec.objects)
                if (inside_object(o, sx, y, false) || inside_object(o, sx, y, true)) {
                    out.true_object(y, sx) = 1;
                    break;
                }
    return out;
}

std::vector<SynthSpec> default_suite() {
    std::vector<SynthSpec> suite;
    suite.reserve(60);
    const SynthObject::Shape shapes[2] = {SynthObject::Shape::Disk,
                                          SynthObject::Shape::Rectangle};
    const double displacements[3] = {0.0, 5.0, 15.0};
    const double jitters[2] = {0.0, 0.02};
    const SynthSpec::Texture textures[3] = {SynthSpec::Texture::Noise,
                                            SynthSpec::Texture::Gradient,
                                            SynthSpec::Texture::Checker};

    std::uint64_t seed = 0;
    int combo = 0;
    for (int si = 0; si < 2; ++si) {
        for (int di = 0; di < 3; ++di) {
            for (int ji = 0; ji < 2; ++ji) {
                // Jittered pairs carry the adversarial corridor, so they get
                // most of the seeds; exact-agreement pairs keep two each.
                const int reps = jitters[ji] > 0.0 ? 8 : 2;
                for (int rep = 0; rep < reps; ++rep, ++seed) {
                    SynthSpec spec;
                    spec.view_height = 128;
                    spec.view_width = 128;
                    spec.overlap_fraction = 0.5;
                    spec.texture = textures[combo % 3];
                    spec.jitter = jitters[ji];
                    spec.seed = seed;

                    SynthObject obj;
                    obj.shape = shapes[si];
                    obj.size = 10.0;
                    obj.cx = 96.0;  // overlap center of the 192-wide scene
                    obj.cy = 40.0 + 12.0 * static_cast<double>(seed % 5);
                    obj.dx = displacements[di];
                    obj.dy = 0.0;
                    obj.color[0] = 0.85;
                    obj.color[1] = 0.15 + 0.1 * static_cast<double>(seed % 3);
                    obj.color[2] = 0.2;
                    spec.objects.push_back(obj);

                    // Corridor through the intersection of the two object
                    // footprints: the cheapest seam must cross the object.
                    spec.corridor_center_x = obj.cx + obj.dx / 2.0;
                    spec.corridor_width = std::max(3.0, 2.0 * obj.size - obj.dx - 4.0);
                    suite.push_back(spec);
                }
                ++combo;
            }
        }
    }
    return suite;
}

namespace {

nlohmann::json spec_to_json(const SynthSpec& s) {
    nlohmann::json j;
    j["view_height"] = s.view_height;
    j["view_width"] = s.view_width;
    j["overlap_fraction"] = s.overlap_fraction;
    j["texture"] = s.texture == SynthSpec::Texture::Gradient  ? "gradient"
                   : s.texture == SynthSpec::Texture::Checker ? "checker"
                                                              : "noise";
    j["jitter"] = s.jitter;
    j["corridor_center_x"] = s.corridor_center_x;
    j["corridor_width"] = s.corridor_width;
    j["seed"] = s.seed;
    nlohmann::json objs = nlohmann::json::array();
    for (const SynthObject& o : s.objects) {
        nlohmann::json jo;
        jo["shape"] = o.shape == SynthObject::Shape::Disk ? "disk" : "rectangle";
        jo["cx"] = o.cx;
        jo["cy"] = o.cy;
        jo["size"] = o.size;
        jo["color"] = {o.color[0], o.color[1], o.color[2]};
        jo["dx"] = o.dx;
        jo["dy"] = o.dy;
        objs.push_back(jo);
    }
    j["objects"] = objs;
    return j;
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    s.view_height = j.value("view_height", 128);
    s.view_width = j.value("view_width", 128);
    s.overlap_fraction = j.value("overlap_fraction", 0.5);
    const std::string tex = j.value("texture", "noise");
    if (tex == "gradient")
        s.texture = SynthSpec::Texture::Gradient;
    else if (tex == "checker")
        s.texture = SynthSpec::Texture::Checker;
    else if (tex == "noise")
        s.texture = SynthSpec::Texture::Noise;
    else
        throw DataError("unknown texture kind: " + tex);
    s.jitter = j.value("jitter", 0.0);
    s.corridor_center_x = j.value("corridor_center_x", 0.0);
    s.corridor_width = j.value("corridor_width", 0.0);
    s.seed = j.value("seed", 0ull);
    if (j.contains("objects")) {
        for (const auto& jo : j["objects"]) {
            SynthObject o;
            const std::string shape = jo.value("shape", "disk");
            if (shape == "disk")
                o.shape = SynthObject::Shape::Disk;
            else if (shape == "rectangle")
                o.shape = SynthObject::Shape::Rectangle;
            else
                throw DataError("unknown object shape: " + shape);
            o.cx = jo.value("cx", 0.0);
            o.cy = jo.value("cy", 0.0);
            o.size = jo.value("size", 10.0);
            if (jo.contains("color")) {
                const auto& c = jo["color"];
                if (!c.is_array() || c.size() != 3)
                    throw DataError("object color must be an array of 3 numbers");
                for (int k = 0; k < 3; ++k) o.color[k] = c[k].get<double>();
            }
            o.dx = jo.value("dx", 0.0);
            o.dy = jo.value("dy", 0.0);
            s.objects.push_back(o);
        }
    }
    return s;
}

}  // namespace

std::string suite_to_json(const std::vector<SynthSpec>& specs) {
    nlohmann::json j;
    nlohmann::json pairs = nlohmann::json::array();
    for (const SynthSpec& s : specs) pairs.push_back(spec_to_json(s));
    j["pairs"] = pairs;
    return j.dump(2);
}

std::vector<SynthSpec> suite_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid suite JSON: ") + e.what());
    }
    std::vector<SynthSpec> specs;
    if (j.is_object() && j.contains("pairs")) {
        for (const auto& jp : j["pairs"]) specs.push_back(spec_from_json(jp));
    } else if (j.is_array()) {
        for (const auto& jp : j) specs.push_back(spec_from_json(jp));
    } else if (j.is_object()) {
        specs.push_back(spec_from_json(j));
    } else {
        throw DataError("suite JSON must be an object with \"pairs\" or an array");
    }
    if (specs.empty()) throw DataError("suite JSON contains no pairs");
    return specs;
}

std::vector<SynthSpec> load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open suite file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return suite_from_json(ss.str());
}

void save_suite(const std::string& path, const std::vector<SynthSpec>& specs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write suite file: " + path);
    out << suite_to_json(specs) << "\n";
}

void write_pair_dir(const std::string& dir, const SynthPair& pair) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path p(dir);
    write_png((p / "target.png").string(), pair.target);
    write_png((p / "reference.png").string(), pair.reference);
    write_mask_pgm((p / "mask_t.pgm").string(), pair.mask_t);
    write_mask_pgm((p / "mask_r.pgm").string(), pair.mask_r);
    write_mask_pgm((p / "true_object.pgm").string(), pair.true_object);
    save_homography((p / "H.json").string(), pair.true_h);
}

}  // namespace stitch
