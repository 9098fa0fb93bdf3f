#include "spx/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spx {

namespace {

struct Lab {
    double l = 0, a = 0, b = 0;
};

double srgb_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double kCube = 0.008856451679035631;  // (6/29)^3
    return t > kCube ? std::cbrt(t) : t / 0.12841854934601665 + 4.0 / 29.0;
}

Lab rgb_to_lab(uint8_t r8, uint8_t g8, uint8_t b8) {
    double r = srgb_linear(r8 / 255.0);
    double g = srgb_linear(g8 / 255.0);
    double b = srgb_linear(b8 / 255.0);
    double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double lab_dist2(const Lab& p, const Lab& q) {
    double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
    return dl * dl + da * da + db * db;
}

struct Cluster {
    double row = 0, col = 0;  // continuous pixel coordinates
    Lab color;
};

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

SuperpixelMap slic_segment(const Image& image, const SlicParams& params) {
    const int rows = image.rows, cols = image.cols;
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("slic_segment: empty image");
    const long long pixels = static_cast<long long>(rows) * cols;
    if (params.target_count < 1) throw std::invalid_argument("slic_segment: target_count < 1");
    if (params.target_count > pixels)
        throw std::invalid_argument("slic_segment: target_count exceeds pixel count");
    if (params.compactness <= 0) throw std::invalid_argument("slic_segment: compactness <= 0");
    if (params.iterations < 1) throw std::invalid_argument("slic_segment: iterations < 1");

    std::vector<Lab> lab(pixels);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            lab[static_cast<size_t>(r) * cols + c] =
                rgb_to_lab(image.at(r, c, 0), image.at(r, c, 1), image.at(r, c, 2));

    const double grid_step = std::sqrt(static_cast<double>(pixels) / params.target_count);

    // Grid layout approximating target_count while respecting aspect ratio.
    int ny = clampi(static_cast<int>(std::lround(
                 std::sqrt(static_cast<double>(params.target_count) * rows / cols))),
                 1, rows);
    int nx = clampi(static_cast<int>(std::lround(static_cast<double>(params.target_count) / ny)),
                    1, cols);

    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<size_t>(nx) * ny);
    const double cell_h = static_cast<double>(rows) / ny;
    const double cell_w = static_cast<double>(cols) / nx;
    auto grad2 = [&](int r, int c) {
        const Lab& left = lab[static_cast<size_t>(r) * cols + clampi(c - 1, 0, cols - 1)];
        const Lab& right = lab[static_cast<size_t>(r) * cols + clampi(c + 1, 0, cols - 1)];
        const Lab& up = lab[static_cast<size_t>(clampi(r - 1, 0, rows - 1)) * cols + c];
        const Lab& down = lab[static_cast<size_t>(clampi(r + 1, 0, rows - 1)) * cols + c];
        return lab_dist2(left, right) + lab_dist2(up, down);
    };
    for (int gy = 0; gy < ny; ++gy)
        for (int gx = 0; gx < nx; ++gx) {
            Cluster cl;
            cl.row = (gy + 0.5) * cell_h - 0.5;
            cl.col = (gx + 0.5) * cell_w - 0.5;
            // Perturb the seed to the lowest-gradient pixel of its 3x3
            // neighborhood; ties keep the earlier candidate (center first).
            int sr = clampi(static_cast<int>(std::lround(cl.row)), 0, rows - 1);
            int sc = clampi(static_cast<int>(std::lround(cl.col)), 0, cols - 1);
            int br = sr, bc = sc;
            double best = grad2(sr, sc);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    int r = sr + dr, c = sc + dc;
                    if (r < 0 || r >= rows || c < 0 || c >= cols) continue;
                    double g = grad2(r, c);
                    if (g < best) {
                        best = g;
                        br = r;
                        bc = c;
                    }
                }
            if (br != sr || bc != sc) {
                cl.row = br;
                cl.col = bc;
            }
            cl.color = lab[static_cast<size_t>(br) * cols + bc];
            clusters.push_back(cl);
        }

    const int k = static_cast<int>(clusters.size());
    // Local k-means window. 2S x 2S around each center, widened when the
    // seeding grid is coarser than S so that every pixel stays covered.
    const double win_r = std::max(grid_step, cell_h / 2 + 1.0);
    const double win_c = std::max(grid_step, cell_w / 2 + 1.0);
    const double spatial_w = (params.compactness * params.compactness) / (grid_step * grid_step);

    std::vector<int32_t> label(pixels, -1);
    std::vector<double> best_d(pixels);
    for (int iter = 0; iter < params.iterations; ++iter) {
        std::fill(best_d.begin(), best_d.end(), std::numeric_limits<double>::infinity());
        std::fill(label.begin(), label.end(), -1);
        for (int ci = 0; ci < k; ++ci) {
            const Cluster& cl = clusters[ci];
            int r0 = clampi(static_cast<int>(std::ceil(cl.row - win_r)), 0, rows - 1);
            int r1 = clampi(static_cast<int>(std::floor(cl.row + win_r)), 0, rows - 1);
            int c0 = clampi(static_cast<int>(std::ceil(cl.col - win_c)), 0, cols - 1);
            int c1 = clampi(static_cast<int>(std::floor(cl.col + win_c)), 0, cols - 1);
            for (int r = r0; r <= r1; ++r)
                for (int c = c0; c <= c1; ++c) {
                    size_t p = static_cast<size_t>(r) * cols + c;
                    double dr = r - cl.row, dc = c - cl.col;
                    double d = lab_dist2(lab[p], cl.color) + (dr * dr + dc * dc) * spatial_w;
                    if (d < best_d[p]) {  // ties keep the lower cluster index
                        best_d[p] = d;
                        label[p] = ci;
                    }
                }
        }
        // Pixels outside every window (possible after center drift) fall back
        // to the spatially nearest center.
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                size_t p = static_cast<size_t>(r) * cols + c;
                if (label[p] >= 0) continue;
                double best = std::numeric_limits<double>::infinity();
                for (int ci = 0; ci < k; ++ci) {
                    double dr = r - clusters[ci].row, dc = c - clusters[ci].col;
                    double d = dr * dr + dc * dc;
                    if (d < best) {
                        best = d;
                        label[p] = ci;
                    }
                }
            }
        // Move centers to the mean of their members; empty clusters stay put.
        std::vector<double> acc(static_cast<size_t>(k) * 5, 0.0);
        std::vector<int> n(k, 0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                size_t p = static_cast<size_t>(r) * cols + c;
                int ci = label[p];
                double* a = &acc[static_cast<size_t>(ci) * 5];
                a[0] += lab[p].l;
                a[1] += lab[p].a;
                a[2] += lab[p].b;
                a[3] += r;
                a[4] += c;
                ++n[ci];
            }
        for (int ci = 0; ci < k; ++ci) {
            if (n[ci] == 0) continue;
            const double* a = &acc[static_cast<size_t>(ci) * 5];
            clusters[ci].color = {a[0] / n[ci], a[1] / n[ci], a[2] / n[ci]};
            clusters[ci].row = a[3] / n[ci];
            clusters[ci].col = a[4] / n[ci];
        }
    }

    SuperpixelMap raw(rows, cols, k);
    raw.ids = std::move(label);
    const int min_size = static_cast<int>(pixels / params.target_count / 4);
    SuperpixelMap out = enforce_connectivity(raw, min_size);
    // Heavily structured images can leave more above-threshold fragments than
    // the contract allows; fold the smallest ones back until the count bound
    // holds.
    while (out.count > 2 * params.target_count) out = merge_smallest(out);
    return out;
}

SuperpixelMap merge_smallest(const SuperpixelMap& sp) {
    if (sp.count < 2) return sp;
    std::vector<int> sizes(sp.count, 0);
    for (int32_t id : sp.ids) ++sizes[id];
    int victim = 0;
    for (int id = 1; id < sp.count; ++id)
        if (sizes[id] < sizes[victim]) victim = id;
    // largest neighbor of the victim, ties to the lower id
    std::vector<uint8_t> adjacent(sp.count, 0);
    for (int r = 0; r < sp.rows; ++r)
        for (int c = 0; c < sp.cols; ++c) {
            int32_t id = sp.at(r, c);
            if (c + 1 < sp.cols && (id == victim) != (sp.at(r, c + 1) == victim))
                adjacent[id == victim ? sp.at(r, c + 1) : id] = 1;
            if (r + 1 < sp.rows && (id == victim) != (sp.at(r + 1, c) == victim))
                adjacent[id == victim ? sp.at(r + 1, c) : id] = 1;
        }
    int target = -1;
    for (int id = 0; id < sp.count; ++id)
        if (adjacent[id] && (target < 0 || sizes[id] > sizes[target])) target = id;
    if (target < 0) return sp;  // disconnected map, nothing adjacent

    SuperpixelMap out(sp.rows, sp.cols, sp.count - 1);
    for (size_t p = 0; p < sp.ids.size(); ++p) {
        int32_t id = sp.ids[p] == victim ? target : sp.ids[p];
        out.ids[p] = id > victim ? id - 1 : id;
    }
    return out;
}

SuperpixelMap enforce_connectivity(const SuperpixelMap& raw, int min_size) {
    const int rows = raw.rows, cols = raw.cols;
    if (rows <= 0 || cols <= 0 || raw.ids.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("enforce_connectivity: bad shape");
    for (int32_t id : raw.ids)
        if (id < 0) throw std::invalid_argument("enforce_connectivity: negative id");

    const size_t pixels = raw.ids.size();
    std::vector<int> comp(pixels, -1);
    std::vector<int> comp_size;
    // Label 4-connected equal-id components in scan order.
    static const int dr[4] = {-1, 1, 0, 0};
    static const int dc[4] = {0, 0, -1, 1};
    std::vector<int> stack;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            size_t p = static_cast<size_t>(r) * cols + c;
            if (comp[p] >= 0) continue;
            int id = static_cast<int>(comp_size.size());
            comp_size.push_back(0);
            comp[p] = id;
            stack.assign(1, static_cast<int>(p));
            while (!stack.empty()) {
                int q = stack.back();
                stack.pop_back();
                ++comp_size[id];
                int qr = q / cols, qc = q % cols;
                for (int d = 0; d < 4; ++d) {
                    int nr = qr + dr[d], nc = qc + dc[d];
                    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                    size_t np = static_cast<size_t>(nr) * cols + nc;
                    if (comp[np] >= 0 || raw.ids[np] != raw.ids[p]) continue;
                    comp[np] = id;
                    stack.push_back(static_cast<int>(np));
                }
            }
        }

    const int n = static_cast<int>(comp_size.size());
    // Component adjacency from horizontal/vertical pixel borders.
    std::vector<std::vector<int>> adj(n);
    auto add_adj = [&](int a, int b) {
        if (a == b) return;
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            size_t p = static_cast<size_t>(r) * cols + c;
            if (c + 1 < cols) add_adj(comp[p], comp[p + 1]);
            if (r + 1 < rows) add_adj(comp[p], comp[p + cols]);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }

    // Union-find with member lists; fragments below min_size merge into the
    // largest adjacent blob until no mergeable fragment remains.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::vector<int>> members(n);
    for (int i = 0; i < n; ++i) members[i] = {i};
    std::vector<long long> blob_size(comp_size.begin(), comp_size.end());
    std::vector<int> first_member(n);  // smallest original component index in the blob
    std::iota(first_member.begin(), first_member.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    bool merged = true;
    while (merged) {
        merged = false;
        for (int c = 0; c < n; ++c) {
            int r = find(c);
            if (first_member[r] != c) continue;  // visit each blob once per pass
            if (blob_size[r] >= min_size) continue;
            // largest adjacent blob; ties to the earliest-seen blob
            int target = -1;
            for (int m : members[r])
                for (int a : adj[m]) {
                    int ra = find(a);
                    if (ra == r) continue;
                    if (target < 0 || blob_size[ra] > blob_size[target] ||
                        (blob_size[ra] == blob_size[target] &&
                         first_member[ra] < first_member[target]))
                        target = ra;
                }
            if (target < 0) continue;  // isolated region, nothing to merge into
            parent[r] = target;
            blob_size[target] += blob_size[r];
            first_member[target] = std::min(first_member[target], first_member[r]);
            if (members[target].size() < members[r].size()) members[target].swap(members[r]);
            members[target].insert(members[target].end(), members[r].begin(), members[r].end());
            members[r].clear();
            merged = true;
        }
    }

    // Relabel blobs contiguously by scan order of their first pixel.
    SuperpixelMap out(rows, cols, 0);
    std::vector<int32_t> new_id(n, -1);
    int next = 0;
    for (size_t p = 0; p < pixels; ++p) {
        int r = find(comp[p]);
        if (new_id[r] < 0) new_id[r] = next++;
        out.ids[p] = new_id[r];
    }
    out.count = next;
    return out;
}

}  // namespace spx
