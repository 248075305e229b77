#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stitch/alignment.hpp"
#include "stitch/image.hpp"

namespace stitch {

enum class Label : std::uint8_t { Invalid = 0, Target = 1, Reference = 2 };

// Per-pixel source assignment over the canvas. Invalid exactly where neither
// validity mask is set; pixels valid in only one image carry that label.
using LabelMap = Grid<Label, struct LabelMapTag>;

struct PixelCoord {
    int i = 0;
    int j = 0;
    bool operator==(const PixelCoord&) const = default;
};

// One optimization epoch of the object-aware seam. Classic methods leave the
// trace empty. Component values are the weighted contributions, so
// total = comp + excl + smooth + photo.
struct LossBreakdown {
    int epoch = 0;
    double comp = 0.0;
    double excl = 0.0;
    double smooth = 0.0;
    double photo = 0.0;
    double total = 0.0;
    int selected_k = 2;  // Algorithm branch: mask with the larger object area
    double area_m1 = 0.0;
    double area_m2 = 0.0;
};

struct SeamResult {
    LabelMap labels;
    SoftMask soft_l1;                     // blend weight of the warped target
    SoftMask soft_l2;                     // blend weight of the warped reference
    std::vector<PixelCoord> seam_pixels;  // overlap pixels on the label boundary
    double energy = 0.0;
    std::vector<LossBreakdown> trace;
};

// Directed flow network. Capacities may be +infinity for terminal links.
struct FlowNetwork {
    struct Edge {
        int u = 0;
        int v = 0;
        double capacity = 0.0;
    };
    int node_count = 0;
    int source = 0;
    int sink = 0;
    std::vector<Edge> edges;

    void add_edge(int u, int v, double capacity) { edges.push_back({u, v, capacity}); }
};

// Exact max flow (Dinic). Deterministic for a fixed edge insertion order; the
// returned vector marks the source side of a minimum cut.
std::pair<double, std::vector<char>> max_flow_min_cut(const FlowNetwork& net);

// Minimum-cost monotone top-to-bottom path through the overlap (moves
// down-left/down/down-right). Ties break toward the leftmost optimal path.
SeamResult dp_seam(const CostMap& cost, const AlignedPair& pair);

// Grid min-cut over the overlap: neighbor capacity cost(p)+cost(q), infinite
// terminal links where the overlap touches an exclusive region.
SeamResult graphcut_seam(const CostMap& cost, const AlignedPair& pair);

// Nearest-exclusive-region labeling by Euclidean distance transform; ties go
// to the target. Energy is the seam-adjacent cost sum when a map is given.
SeamResult voronoi_seam(const AlignedPair& pair, const CostMap* cost = nullptr);

// --- shared helpers -------------------------------------------------------

// Label map with exclusive regions and invalid pixels filled in; overlap
// pixels start out Invalid.
LabelMap base_label_map(const AlignedPair& pair);

// True when the target's exclusive region sits on the lower-x side.
bool target_is_left(const AlignedPair& pair);

// Overlap pixels with a 4-neighbor of the opposite label, ordered by a
// deterministic boundary walk.
std::vector<PixelCoord> trace_seam_pixels(const LabelMap& labels, const BinaryMask& overlap);

// 0/1 indicator masks of a hard label map (Invalid pixels get 0 in both).
std::pair<SoftMask, SoftMask> labels_to_soft(const LabelMap& labels);

// Squared Euclidean distance transform; seeds are the set pixels.
Grid<double, struct DistTag> squared_distance_transform(const BinaryMask& seeds);

LabelMap transposed(const LabelMap& labels);

// PGM encoding: Target=255, Reference=0, Invalid=128.
void write_label_pgm(const std::string& path, const LabelMap& labels);
LabelMap read_label_pgm(const std::string& path);

}  // namespace stitch
