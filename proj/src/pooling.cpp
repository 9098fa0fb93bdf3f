#include "spx/pooling.hpp"

#include <algorithm>
#include <cmath>

namespace spx {

namespace {

// Index of the cell whose center (j + 0.5) * stride is nearest to pos (a
// pixel center, r + 0.5). Ties go to the lower index.
int nearest_cell(double pos, double stride, int cells) {
    double jf = pos / stride - 0.5;
    int j0 = static_cast<int>(std::floor(jf));
    int lo = std::clamp(j0, 0, cells - 1);
    int hi = std::clamp(j0 + 1, 0, cells - 1);
    if (lo == hi) return lo;
    double dlo = std::abs((lo + 0.5) * stride - pos);
    double dhi = std::abs((hi + 0.5) * stride - pos);
    return dhi < dlo ? hi : lo;
}

}  // namespace

SuperpixelFeatures pool_superpixels(const Tensor& features, const SuperpixelMap& sp,
                                    const ReceptiveFieldGrid& grid) {
    if (grid.stride < 1.0) throw std::invalid_argument("pool_superpixels: stride < 1");
    const int rows = sp.rows, cols = sp.cols;
    const int cell_rows = static_cast<int>(std::ceil(rows / grid.stride));
    const int cell_cols = static_cast<int>(std::ceil(cols / grid.stride));
    if (cell_rows != features.rows() || cell_cols != features.cols())
        throw std::invalid_argument("pool_superpixels: grid inconsistent with feature map shape");
    if (sp.count < 1) throw std::invalid_argument("pool_superpixels: empty superpixel map");

    const int dim = features.channels();
    SuperpixelFeatures out;
    out.count = sp.count;
    out.dim = dim;
    out.rows = rows;
    out.cols = cols;
    out.features = Matrix(sp.count, dim);
    out.positions.assign(sp.count, {0.0, 0.0});
    out.sizes.assign(sp.count, 0);

    // Ascending pixel index keeps per-superpixel accumulation order fixed.
    for (int r = 0; r < rows; ++r) {
        int jr = nearest_cell(r + 0.5, grid.stride, cell_rows);
        for (int c = 0; c < cols; ++c) {
            int jc = nearest_cell(c + 0.5, grid.stride, cell_cols);
            int id = sp.at(r, c);
            if (id < 0 || id >= sp.count)
                throw std::invalid_argument("pool_superpixels: id out of range");
            for (int k = 0; k < dim; ++k) out.features.at(id, k) += features.at(k, jr, jc);
            out.positions[id][0] += r;
            out.positions[id][1] += c;
            ++out.sizes[id];
        }
    }
    for (int id = 0; id < sp.count; ++id) {
        if (out.sizes[id] == 0)
            throw std::invalid_argument("pool_superpixels: superpixel " + std::to_string(id) +
                                        " empty");
        for (int k = 0; k < dim; ++k) out.features.at(id, k) /= out.sizes[id];
        out.positions[id][0] /= out.sizes[id];
        out.positions[id][1] /= out.sizes[id];
    }
    if (!out.features.all_finite())
        throw std::invalid_argument("pool_superpixels: non-finite pooled features");
    return out;
}

std::vector<double> global_average(const SuperpixelFeatures& spf) {
    if (spf.count < 1) throw std::invalid_argument("global_average: no superpixels");
    std::vector<double> mean(spf.dim, 0.0);
    for (int i = 0; i < spf.count; ++i)
        for (int d = 0; d < spf.dim; ++d) mean[d] += spf.features.at(i, d);
    for (double& v : mean) v /= spf.count;
    return mean;
}

Matrix sp_cam(const std::vector<Matrix>& per_scale_scores) {
    if (per_scale_scores.empty()) throw std::invalid_argument("sp_cam: empty scale list");
    Matrix out = per_scale_scores.front();
    for (size_t s = 1; s < per_scale_scores.size(); ++s) {
        const Matrix& m = per_scale_scores[s];
        if (m.rows() != out.rows() || m.cols() != out.cols())
            throw std::invalid_argument("sp_cam: scale shape mismatch");
        for (size_t i = 0; i < out.data().size(); ++i)
            out.data()[i] = std::max(out.data()[i], m.data()[i]);
    }
    return out;
}

}  // namespace spx
