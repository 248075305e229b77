#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stitch/alignment.hpp"
#include "stitch/image.hpp"

namespace stitch {

struct SynthObject {
    enum class Shape { Disk, Rectangle };
    Shape shape = Shape::Disk;
    double cx = 0.0, cy = 0.0;  // scene coordinates, reference-view placement
    double size = 10.0;         // disk radius; rectangles use size x 0.7*size half-extents
    double color[3] = {0.9, 0.2, 0.15};
    double dx = 0.0, dy = 0.0;  // displacement between the two views
};

// Two crops of a procedurally rendered scene with planted foreground objects.
// The views are related by a pure integer translation (the ground-truth
// homography); objects move by their displacement between the views, and an
// optional low-mismatch corridor steers the cheapest photometric seam.
struct SynthSpec {
    int view_height = 128;
    int view_width = 128;
    double overlap_fraction = 0.5;
    enum class Texture { Gradient, Checker, Noise };
    Texture texture = Texture::Noise;
    std::vector<SynthObject> objects;
    double jitter = 0.0;             // photometric mismatch added to the target view
    double corridor_center_x = 0.0;  // scene column; corridor disabled when width <= 0
    double corridor_width = 0.0;
    std::uint64_t seed = 0;

    int shift_px() const;   // inter-view translation
    int scene_width() const;
};

struct SynthPair {
    std::string name;
    Image target;
    Image reference;
    Homography true_h;       // target -> reference
    BinaryMask true_object;  // union of object footprints in scene coordinates
    BinaryMask mask_t;       // per-view object masks
    BinaryMask mask_r;
};

// Deterministic for a fixed spec: identical seeds give bit-identical pixels.
SynthPair synth_pair(const SynthSpec& spec);

// The 60-pair evaluation suite: disk and rectangle objects, displacements
// {0, 5, 15} px, jitter {0, 0.02}, seeds 0..59, every object planted on the
// corridor so photometric seam finders are drawn through it.
std::vector<SynthSpec> default_suite();

std::string suite_to_json(const std::vector<SynthSpec>& specs);
std::vector<SynthSpec> suite_from_json(const std::string& text);
std::vector<SynthSpec> load_suite(const std::string& path);
void save_suite(const std::string& path, const std::vector<SynthSpec>& specs);

// Writes target.png, reference.png, mask_t.pgm, mask_r.pgm, H.json and
// true_object.pgm under `dir` (created if missing).
void write_pair_dir(const std::string& dir, const SynthPair& pair);

}  // namespace stitch
