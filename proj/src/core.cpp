#include "spx/core.hpp"

#include <cmath>
#include <queue>

namespace spx {

long long Tensor::check_shape(int channels, int rows, int cols) {
    if (channels < 0 || rows < 0 || cols < 0)
        throw std::invalid_argument("tensor: negative dimension");
    return static_cast<long long>(channels) * rows * cols;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

size_t Matrix::checked_count(int rows, int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("matrix: negative dimension");
    return static_cast<size_t>(rows) * cols;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_labels(const LabelMap& map, int label_count) {
    for (int32_t v : map.labels)
        if (v < 0 || v >= label_count)
            throw std::invalid_argument("label map: label " + std::to_string(v) +
                                        " out of range [0," + std::to_string(label_count) + ")");
}

namespace {

// Flood fill of one equal-id region, 4-neighborhood. Returns component size.
int flood(const SuperpixelMap& sp, int r0, int c0, std::vector<uint8_t>& seen) {
    const int32_t id = sp.at(r0, c0);
    std::queue<std::pair<int, int>> q;
    q.emplace(r0, c0);
    seen[static_cast<size_t>(r0) * sp.cols + c0] = 1;
    int size = 0;
    static const int dr[4] = {-1, 1, 0, 0};
    static const int dc[4] = {0, 0, -1, 1};
    while (!q.empty()) {
        auto [r, c] = q.front();
        q.pop();
        ++size;
        for (int d = 0; d < 4; ++d) {
            int nr = r + dr[d], nc = c + dc[d];
            if (nr < 0 || nr >= sp.rows || nc < 0 || nc >= sp.cols) continue;
            size_t ni = static_cast<size_t>(nr) * sp.cols + nc;
            if (seen[ni] || sp.at(nr, nc) != id) continue;
            seen[ni] = 1;
            q.emplace(nr, nc);
        }
    }
    return size;
}

}  // namespace

PartitionCheck validate_partition(const SuperpixelMap& sp) {
    PartitionCheck out;
    if (sp.rows <= 0 || sp.cols <= 0 || sp.ids.size() != static_cast<size_t>(sp.rows) * sp.cols) {
        out.ok = false;
        out.diagnostics.push_back("shape/id storage mismatch");
        return out;
    }
    // ids in declared range
    for (int r = 0; r < sp.rows; ++r)
        for (int c = 0; c < sp.cols; ++c) {
            int32_t id = sp.at(r, c);
            if (id < 0 || id >= sp.count) {
                out.ok = false;
                out.diagnostics.push_back("id " + std::to_string(id) + " out of range at (" +
                                          std::to_string(r) + "," + std::to_string(c) + ")");
                return out;
            }
        }
    // every id non-empty
    std::vector<int> sizes(sp.count, 0);
    for (int32_t id : sp.ids) ++sizes[id];
    for (int id = 0; id < sp.count; ++id)
        if (sizes[id] == 0) {
            out.ok = false;
            out.diagnostics.push_back("id " + std::to_string(id) + " empty");
        }
    if (!out.ok) return out;
    // each id one 4-connected component: count components per id
    std::vector<uint8_t> seen(sp.ids.size(), 0);
    std::vector<int> components(sp.count, 0);
    for (int r = 0; r < sp.rows; ++r)
        for (int c = 0; c < sp.cols; ++c) {
            if (seen[static_cast<size_t>(r) * sp.cols + c]) continue;
            int32_t id = sp.at(r, c);
            ++components[id];
            if (components[id] > 1) {
                out.ok = false;
                out.diagnostics.push_back("id " + std::to_string(id) + " disconnected");
                return out;
            }
            flood(sp, r, c, seen);
        }
    return out;
}

SuperpixelStats superpixel_stats(const SuperpixelMap& sp) {
    SuperpixelStats st;
    st.centroids.assign(sp.count, {0.0, 0.0});
    st.sizes.assign(sp.count, 0);
    st.bboxes.assign(sp.count, {sp.rows, sp.cols, -1, -1});
    for (int r = 0; r < sp.rows; ++r)
        for (int c = 0; c < sp.cols; ++c) {
            int32_t id = sp.at(r, c);
            if (id < 0 || id >= sp.count)
                throw std::invalid_argument("superpixel_stats: id out of range");
            st.centroids[id][0] += r;
            st.centroids[id][1] += c;
            ++st.sizes[id];
            auto& b = st.bboxes[id];
            b[0] = std::min(b[0], r);
            b[1] = std::min(b[1], c);
            b[2] = std::max(b[2], r);
            b[3] = std::max(b[3], c);
        }
    for (int id = 0; id < sp.count; ++id) {
        if (st.sizes[id] == 0)
            throw std::invalid_argument("superpixel_stats: id " + std::to_string(id) + " empty");
        st.centroids[id][0] /= st.sizes[id];
        st.centroids[id][1] /= st.sizes[id];
    }
    return st;
}

}  // namespace spx
