#include "stitch/seam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "stitch/io.hpp"
#include "stitch/metrics.hpp"

namespace stitch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

LabelMap base_label_map(const AlignedPair& pair) {
    LabelMap labels(pair.height, pair.width, Label::Invalid);
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j) {
            const bool t = pair.valid_t(i, j), r = pair.valid_r(i, j);
            if (t && !r)
                labels(i, j) = Label::Target;
            else if (r && !t)
                labels(i, j) = Label::Reference;
        }
    return labels;
}

namespace {

struct Centroid {
    double x = 0.0, y = 0.0;
    std::size_t n = 0;
};

Centroid centroid_of(const BinaryMask& m) {
    Centroid c;
    for (int i = 0; i < m.height; ++i)
        for (int j = 0; j < m.width; ++j)
            if (m(i, j)) {
                c.x += j;
                c.y += i;
                ++c.n;
            }
    if (c.n) {
        c.x /= static_cast<double>(c.n);
        c.y /= static_cast<double>(c.n);
    }
    return c;
}

BinaryMask exclusive_target(const AlignedPair& pair) {
    BinaryMask out(pair.height, pair.width, 0);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(pair.valid_t.data[k] && !pair.valid_r.data[k]);
    return out;
}

BinaryMask exclusive_reference(const AlignedPair& pair) {
    BinaryMask out(pair.height, pair.width, 0);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = static_cast<std::uint8_t>(pair.valid_r.data[k] && !pair.valid_t.data[k]);
    return out;
}

}  // namespace

bool target_is_left(const AlignedPair& pair) {
    const Centroid ct = centroid_of(exclusive_target(pair));
    const Centroid cr = centroid_of(exclusive_reference(pair));
    if (ct.n && cr.n) return ct.x <= cr.x;
    const Centroid co = centroid_of(pair.overlap);
    if (ct.n) return ct.x <= co.x;
    if (cr.n) return cr.x > co.x;
    return true;
}

std::vector<PixelCoord> trace_seam_pixels(const LabelMap& labels, const BinaryMask& overlap) {
    detail::require_same_size(labels.height, labels.width, overlap.height, overlap.width,
                              "trace_seam_pixels");
    const int h = labels.height, w = labels.width;
    Grid<std::uint8_t, struct SeamSetTag> member(h, w, 0);
    std::size_t count = 0;
    static const int d4i[4] = {-1, 1, 0, 0};
    static const int d4j[4] = {0, 0, -1, 1};
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (!overlap(i, j)) continue;
            const Label l = labels(i, j);
            if (l == Label::Invalid) continue;
            const Label opp = l == Label::Target ? Label::Reference : Label::Target;
            for (int k = 0; k < 4; ++k) {
                const int ii = i + d4i[k], jj = j + d4j[k];
                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                if (labels(ii, jj) == opp) {
                    member(i, j) = 1;
                    ++count;
                    break;
                }
            }
        }

    // Deterministic boundary walk: greedy 8-neighbor chaining from the
    // lexicographically smallest pixel, restarting per contour.
    std::vector<PixelCoord> out;
    out.reserve(count);
    static const int d8i[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static const int d8j[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    std::size_t taken = 0;
    int scan_i = 0, scan_j = 0;
    while (taken < count) {
        // Find the next unvisited member in scan order.
        int si = -1, sj = -1;
        for (int i = scan_i; i < h && si < 0; ++i)
            for (int j = (i == scan_i ? scan_j : 0); j < w; ++j)
                if (member(i, j)) {
                    si = i;
                    sj = j;
                    break;
                }
        if (si < 0) break;
        scan_i = si;
        scan_j = sj;
        int ci = si, cj = sj;
        while (true) {
            out.push_back({ci, cj});
            member(ci, cj) = 0;
            ++taken;
            bool moved = false;
            for (int k = 0; k < 8; ++k) {
                const int ii = ci + d8i[k], jj = cj + d8j[k];
                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                if (member(ii, jj)) {
                    ci = ii;
                    cj = jj;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
    }
    return out;
}

std::pair<SoftMask, SoftMask> labels_to_soft(const LabelMap& labels) {
    SoftMask l1(labels.height, labels.width, 0.0), l2(labels.height, labels.width, 0.0);
    for (std::size_t k = 0; k < labels.data.size(); ++k) {
        if (labels.data[k] == Label::Target)
            l1.data[k] = 1.0;
        else if (labels.data[k] == Label::Reference)
            l2.data[k] = 1.0;
    }
    return {std::move(l1), std::move(l2)};
}

LabelMap transposed(const LabelMap& labels) {
    LabelMap out(labels.width, labels.height, Label::Invalid);
    for (int i = 0; i < labels.height; ++i)
        for (int j = 0; j < labels.width; ++j) out(j, i) = labels(i, j);
    return out;
}

void write_label_pgm(const std::string& path, const LabelMap& labels) {
    GrayImage g(labels.height, labels.width);
    for (std::size_t k = 0; k < labels.data.size(); ++k) {
        switch (labels.data[k]) {
            case Label::Target: g.data[k] = 1.0; break;
            case Label::Reference: g.data[k] = 0.0; break;
            case Label::Invalid: g.data[k] = 128.0 / 255.0; break;
        }
    }
    write_pgm(path, g);
}

LabelMap read_label_pgm(const std::string& path) {
    const GrayImage g = read_pgm(path);
    LabelMap out(g.height, g.width, Label::Invalid);
    for (std::size_t k = 0; k < g.data.size(); ++k) {
        const int v = static_cast<int>(std::lround(g.data[k] * 255.0));
        if (v >= 192)
            out.data[k] = Label::Target;
        else if (v < 64)
            out.data[k] = Label::Reference;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dynamic-programming seam
// ---------------------------------------------------------------------------

SeamResult dp_seam(const CostMap& cost, const AlignedPair& pair) {
    detail::require_same_size(cost.height, cost.width, pair.height, pair.width, "dp_seam cost");
    const BinaryMask& overlap = pair.overlap;
    const int h = pair.height, w = pair.width;

    int r0 = -1, r1 = -1;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (overlap(i, j)) {
                if (r0 < 0) r0 = i;
                r1 = i;
                break;
            }
    if (r0 < 0) throw DataError("dp_seam: overlap region is empty");
    for (int i = r0; i <= r1; ++i) {
        bool any = false;
        for (int j = 0; j < w && !any; ++j) any = overlap(i, j);
        if (!any)
            throw DataError("dp_seam: overlap row " + std::to_string(i) +
                            " is empty, region is not vertically traversable");
    }

    // Suffix costs from each overlap pixel to the bottom row.
    Grid<double, struct DpTag> dp(h, w, kInf);
    for (int j = 0; j < w; ++j)
        if (overlap(r1, j)) dp(r1, j) = cost(r1, j);
    for (int i = r1 - 1; i >= r0; --i) {
        for (int j = 0; j < w; ++j) {
            if (!overlap(i, j)) continue;
            double best = kInf;
            for (int dj = -1; dj <= 1; ++dj) {
                const int jj = j + dj;
                if (jj < 0 || jj >= w) continue;
                best = std::min(best, dp(i + 1, jj));
            }
            if (best < kInf) dp(i, j) = cost(i, j) + best;
        }
    }

    int start = -1;
    double best_total = kInf;
    for (int j = 0; j < w; ++j) {
        if (!overlap(r0, j)) continue;
        if (dp(r0, j) < best_total) {
            best_total = dp(r0, j);
            start = j;
        }
    }
    if (start < 0)
        throw DataError("dp_seam: no monotone path connects the top and bottom overlap rows");

    // Walk downward, breaking ties toward the leftmost continuation; with the
    // leftmost minimal start this yields the lexicographically smallest
    // optimal path.
    std::vector<PixelCoord> path;
    path.reserve(r1 - r0 + 1);
    int c = start;
    for (int i = r0; i <= r1; ++i) {
        path.push_back({i, c});
        if (i == r1) break;
        double best = kInf;
        for (int dj = -1; dj <= 1; ++dj) {
            const int jj = c + dj;
            if (jj < 0 || jj >= w) continue;
            best = std::min(best, dp(i + 1, jj));
        }
        int next = -1;
        for (int dj = -1; dj <= 1; ++dj) {
            const int jj = c + dj;
            if (jj < 0 || jj >= w) continue;
            if (dp(i + 1, jj) == best) {
                next = jj;
                break;
            }
        }
        c = next;
    }

    // Column of the seam per row, for side assignment.
    std::vector<int> seam_col(h, -1);
    for (const PixelCoord& p : path) seam_col[p.i] = p.j;

    const bool t_left = target_is_left(pair);
    const Label left = t_left ? Label::Target : Label::Reference;
    const Label right = t_left ? Label::Reference : Label::Target;

    SeamResult res;
    res.labels = base_label_map(pair);
    for (int i = 0; i < h; ++i) {
        if (seam_col[i] < 0) continue;
        for (int j = 0; j < w; ++j)
            if (overlap(i, j)) res.labels(i, j) = j <= seam_col[i] ? left : right;
    }
    res.energy = best_total;
    res.seam_pixels = path;
    std::tie(res.soft_l1, res.soft_l2) = labels_to_soft(res.labels);
    return res;
}

// ---------------------------------------------------------------------------
// Max flow / min cut
// ---------------------------------------------------------------------------

namespace {

struct Dinic {
    struct Arc {
        int to;
        double cap;
    };
    std::vector<Arc> arcs;                // paired: arc k and k^1 are partners
    std::vector<std::vector<int>> adj;    // insertion order preserved
    std::vector<int> level, iter;
    int s, t;

    Dinic(int n, int s_, int t_) : adj(n), level(n), iter(n), s(s_), t(t_) {}

    void add(int u, int v, double cap) {
        adj[u].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({v, cap});
        adj[v].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({u, 0.0});
    }

    bool bfs() {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int e : adj[u]) {
                const Arc& a = arcs[e];
                if (a.cap > 0 && level[a.to] < 0) {
                    level[a.to] = level[u] + 1;
                    q.push(a.to);
                }
            }
        }
        return level[t] >= 0;
    }

    double dfs(int u, double limit) {
        if (u == t) return limit;
        for (int& k = iter[u]; k < static_cast<int>(adj[u].size()); ++k) {
            const int e = adj[u][k];
            Arc& a = arcs[e];
            if (a.cap <= 0 || level[a.to] != level[u] + 1) continue;
            const double pushed = dfs(a.to, std::min(limit, a.cap));
            if (pushed > 0) {
                if (std::isinf(pushed))
                    throw NumericError(
                        "max_flow_min_cut: augmenting path of infinite capacity, cut is "
                        "unbounded");
                a.cap -= pushed;
                arcs[e ^ 1].cap += pushed;
                return pushed;
            }
        }
        return 0.0;
    }

    double run() {
        double flow = 0.0;
        while (bfs()) {
            std::fill(iter.begin(), iter.end(), 0);
            double pushed;
            while ((pushed = dfs(s, kInf)) > 0) flow += pushed;
        }
        return flow;
    }
};

}  // namespace

std::pair<double, std::vector<char>> max_flow_min_cut(const FlowNetwork& net) {
    if (net.node_count <= 0) throw DataError("max_flow_min_cut: empty network");
    if (net.source == net.sink) throw DataError("max_flow_min_cut: source equals sink");
    if (net.source < 0 || net.source >= net.node_count || net.sink < 0 ||
        net.sink >= net.node_count)
        throw DataError("max_flow_min_cut: terminal index out of range");

    Dinic dinic(net.node_count, net.source, net.sink);
    for (const FlowNetwork::Edge& e : net.edges) {
        if (e.u < 0 || e.u >= net.node_count || e.v < 0 || e.v >= net.node_count)
            throw DataError("max_flow_min_cut: edge endpoint out of range");
        if (std::isnan(e.capacity) || e.capacity < 0.0)
            throw DataError("max_flow_min_cut: edge capacity must be non-negative");
        dinic.add(e.u, e.v, e.capacity);
    }

    const double flow = dinic.run();

    std::vector<char> source_side(net.node_count, 0);
    std::queue<int> q;
    q.push(net.source);
    source_side[net.source] = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int e : dinic.adj[u]) {
            const Dinic::Arc& a = dinic.arcs[e];
            if (a.cap > 0 && !source_side[a.to]) {
                source_side[a.to] = 1;
                q.push(a.to);
            }
        }
    }
    return {flow, std::move(source_side)};
}

// ---------------------------------------------------------------------------
// Graph-cut seam
// ---------------------------------------------------------------------------

SeamResult graphcut_seam(const CostMap& cost, const AlignedPair& pair) {
    detail::require_same_size(cost.height, cost.width, pair.height, pair.width,
                              "graphcut_seam cost");
    const BinaryMask& overlap = pair.overlap;
    const int h = pair.height, w = pair.width;

    Grid<int, struct NodeIdTag> node(h, w, -1);
    int n = 0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (overlap(i, j)) node(i, j) = n++;
    if (n == 0) throw DataError("graphcut_seam: overlap region is empty");

    FlowNetwork net;
    net.node_count = n + 2;
    net.source = n;
    net.sink = n + 1;

    const BinaryMask excl_t = exclusive_target(pair);
    const BinaryMask excl_r = exclusive_reference(pair);
    static const int d4i[4] = {-1, 1, 0, 0};
    static const int d4j[4] = {0, 0, -1, 1};

    bool any_source = false, any_sink = false;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            if (!overlap(i, j)) continue;
            const int u = node(i, j);
            bool near_t = false, near_r = false;
            for (int k = 0; k < 4; ++k) {
                const int ii = i + d4i[k], jj = j + d4j[k];
                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                near_t |= static_cast<bool>(excl_t(ii, jj));
                near_r |= static_cast<bool>(excl_r(ii, jj));
                // Right and down neighbors carry the pairwise terms once.
                if (k == 1 || k == 3) {
                    if (overlap(ii, jj)) {
                        const double cap = cost(i, j) + cost(ii, jj);
                        net.add_edge(u, node(ii, jj), cap);
                        net.add_edge(node(ii, jj), u, cap);
                    }
                }
            }
            // A pixel touching both exclusive regions (1-px slivers from
            // imperfect alignment) keeps only the target constraint; tying it
            // to both terminals would make every cut infinite.
            if (near_t) {
                net.add_edge(net.source, u, kInf);
                any_source = true;
            } else if (near_r) {
                net.add_edge(u, net.sink, kInf);
                any_sink = true;
            }
        }
    }
    if (!any_source || !any_sink)
        throw DataError(
            "graphcut_seam: seam endpoints undefined, the overlap does not touch both "
            "exclusive regions");

    auto [flow, source_side] = max_flow_min_cut(net);

    SeamResult res;
    res.labels = base_label_map(pair);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (overlap(i, j))
                res.labels(i, j) = source_side[node(i, j)] ? Label::Target : Label::Reference;
    res.energy = flow;
    res.seam_pixels = trace_seam_pixels(res.labels, overlap);
    std::tie(res.soft_l1, res.soft_l2) = labels_to_soft(res.labels);
    return res;
}

// ---------------------------------------------------------------------------
// Voronoi seam
// ---------------------------------------------------------------------------

namespace {

// Felzenszwalb-Huttenlocher 1-D squared distance transform.
void dt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    d.assign(n, 0.0);
    std::vector<int> v(n, 0);
    std::vector<double> z(n + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        d[q] = (q - p) * static_cast<double>(q - p) + f[p];
    }
}

}  // namespace

Grid<double, struct DistTag> squared_distance_transform(const BinaryMask& seeds) {
    const int h = seeds.height, w = seeds.width;
    Grid<double, struct DistTag> dist(h, w, 0.0);
    const double far = 1e18;

    std::vector<double> buf, out;
    // Columns first.
    for (int j = 0; j < w; ++j) {
        buf.assign(h, 0.0);
        for (int i = 0; i < h; ++i) buf[i] = seeds(i, j) ? 0.0 : far;
        dt_1d(buf, out);
        for (int i = 0; i < h; ++i) dist(i, j) = out[i];
    }
    // Then rows.
    for (int i = 0; i < h; ++i) {
        buf.assign(w, 0.0);
        for (int j = 0; j < w; ++j) buf[j] = dist(i, j);
        dt_1d(buf, out);
        for (int j = 0; j < w; ++j) dist(i, j) = out[j];
    }
    return dist;
}

SeamResult voronoi_seam(const AlignedPair& pair, const CostMap* cost) {
    const BinaryMask excl_t = exclusive_target(pair);
    const BinaryMask excl_r = exclusive_reference(pair);
    if (mask_count(excl_t) == 0)
        throw DataError("voronoi_seam: the target's exclusive region is empty");
    if (mask_count(excl_r) == 0)
        throw DataError("voronoi_seam: the reference's exclusive region is empty");

    const auto dist_t = squared_distance_transform(excl_t);
    const auto dist_r = squared_distance_transform(excl_r);

    SeamResult res;
    res.labels = base_label_map(pair);
    for (int i = 0; i < pair.height; ++i)
        for (int j = 0; j < pair.width; ++j)
            if (pair.overlap(i, j))
                res.labels(i, j) =
                    dist_t(i, j) <= dist_r(i, j) ? Label::Target : Label::Reference;

    res.seam_pixels = trace_seam_pixels(res.labels, pair.overlap);
    res.energy = cost ? seam_energy(*cost, res.labels) : 0.0;
    std::tie(res.soft_l1, res.soft_l2) = labels_to_soft(res.labels);
    return res;
}

}  // namespace stitch
