#include "spx/simgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spx {

PairFeature pair_features(const SuperpixelFeatures& spf, int i, int j) {
    if (i == j) throw std::invalid_argument("pair_features: i == j");
    if (i < 0 || j < 0 || i >= spf.count || j >= spf.count)
        throw std::invalid_argument("pair_features: index out of range");
    double feat2 = 0.0;
    for (int d = 0; d < spf.dim; ++d) {
        double diff = spf.features.at(i, d) - spf.features.at(j, d);
        feat2 += diff * diff;
    }
    double dr = spf.positions[i][0] - spf.positions[j][0];
    double dc = spf.positions[i][1] - spf.positions[j][1];
    double diagonal = std::sqrt(static_cast<double>(spf.rows) * spf.rows +
                                static_cast<double>(spf.cols) * spf.cols);
    double si = spf.sizes[i], sj = spf.sizes[j];
    return {std::sqrt(feat2), std::sqrt(dr * dr + dc * dc) / diagonal,
            std::abs(si - sj) / (si + sj)};
}

double predict_same_label(const LinearModel& model, const PairFeature& f) {
    if (model.input_dim() != 3 || model.output_dim() != 1)
        throw std::invalid_argument("predict_same_label: model must be 3 -> 1");
    return sigmoid(linear_forward(model, {f[0], f[1], f[2]})[0]);
}

Matrix similarity_matrix(const SuperpixelFeatures& spf,
                         const std::optional<LinearModel>& model) {
    Matrix sim(spf.count, spf.count, 0.0);
    for (int i = 0; i < spf.count; ++i) {
        sim.at(i, i) = 1.0;
        for (int j = i + 1; j < spf.count; ++j) {
            PairFeature f = pair_features(spf, i, j);
            double s = model ? predict_same_label(*model, f) : std::exp(-(f[0] + f[1] + f[2]));
            sim.at(i, j) = s;
            sim.at(j, i) = s;
        }
    }
    return sim;
}

EdgeList mst_topk(const Matrix& similarity, int k) {
    const int n = similarity.rows();
    if (n < 2) throw std::invalid_argument("mst_topk: need at least 2 superpixels");
    if (similarity.cols() != n) throw std::invalid_argument("mst_topk: matrix not square");
    if (k < 1) throw std::invalid_argument("mst_topk: k < 1");

    struct Cand {
        int i, j;
        double dis;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            cands.push_back({i, j, 1.0 - similarity.at(i, j)});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dis != b.dis) return a.dis < b.dis;
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });

    // Kruskal
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<Edge> tree;
    for (const Cand& c : cands) {
        int a = find(c.i), b = find(c.j);
        if (a == b) continue;
        parent[a] = b;
        tree.push_back({c.i, c.j, similarity.at(c.i, c.j)});
        if (static_cast<int>(tree.size()) == n - 1) break;
    }

    std::sort(tree.begin(), tree.end(), [](const Edge& a, const Edge& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    if (static_cast<int>(tree.size()) > k) tree.resize(k);

    EdgeList out;
    out.kind = WeightKind::Similarity;
    out.edges = std::move(tree);
    return out;
}

}  // namespace spx
