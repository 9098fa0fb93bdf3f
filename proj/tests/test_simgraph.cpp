#include "doctest.h"

#include <numeric>

#include "oracles.hpp"
#include "spx/rng.hpp"
#include "spx/simgraph.hpp"

using namespace spx;

namespace {

SuperpixelFeatures features_of(std::vector<std::vector<double>> feats,
                               std::vector<std::array<double, 2>> pos, std::vector<int> sizes,
                               int rows = 10, int cols = 10) {
    SuperpixelFeatures spf;
    spf.count = static_cast<int>(feats.size());
    spf.dim = static_cast<int>(feats.front().size());
    spf.rows = rows;
    spf.cols = cols;
    spf.features = Matrix(spf.count, spf.dim);
    for (int i = 0; i < spf.count; ++i)
        for (int d = 0; d < spf.dim; ++d) spf.features.at(i, d) = feats[i][d];
    spf.positions = std::move(pos);
    spf.sizes = std::move(sizes);
    return spf;
}

Matrix random_similarity(Rng& rng, int n) {
    Matrix sim(n, n);
    for (int i = 0; i < n; ++i) {
        sim.at(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            double s = rng.u01();
            sim.at(i, j) = s;
            sim.at(j, i) = s;
        }
    }
    return sim;
}

bool acyclic_and_within_bound(const EdgeList& el, int n) {
    if (static_cast<int>(el.edges.size()) > n - 1) return false;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Edge& e : el.edges) {
        int a = find(e.i), b = find(e.j);
        if (a == b) return false;  // cycle
        parent[a] = b;
    }
    return true;
}

}  // namespace

TEST_CASE("pair_features of identical superpixels is zero") {
    auto spf = features_of({{1, 2}, {1, 2}}, {{3, 4}, {3, 4}}, {5, 5});
    PairFeature f = pair_features(spf, 0, 1);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
}

TEST_CASE("pair_features computes the 3-4-5 feature distance") {
    auto spf = features_of({{0, 0}, {3, 4}}, {{2, 2}, {2, 2}}, {7, 7});
    PairFeature f = pair_features(spf, 0, 1);
    CHECK(f[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
}

TEST_CASE("pair_features is symmetric over random pairs") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        int n = rng.uniform_int(2, 8);
        std::vector<std::vector<double>> feats(n, std::vector<double>(3));
        std::vector<std::array<double, 2>> pos(n);
        std::vector<int> sizes(n);
        for (int i = 0; i < n; ++i) {
            for (double& v : feats[i]) v = rng.uniform(-2, 2);
            pos[i] = {rng.uniform(0, 9), rng.uniform(0, 9)};
            sizes[i] = rng.uniform_int(1, 50);
        }
        auto spf = features_of(feats, pos, sizes);
        int i = rng.uniform_int(0, n - 1), j = rng.uniform_int(0, n - 1);
        if (i == j) continue;
        CHECK(pair_features(spf, i, j) == pair_features(spf, j, i));
    }
    auto spf = features_of({{0}, {1}}, {{0, 0}, {1, 1}}, {1, 1});
    CHECK_THROWS_AS(pair_features(spf, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(pair_features(spf, 0, 2), std::invalid_argument);
}

TEST_CASE("predict_same_label behaves like a calibrated similarity") {
    LinearModel zero;
    zero.weights = Matrix(1, 4, 0.0);
    CHECK(predict_same_label(zero, {0.3, 0.1, 0.9}) == 0.5);

    // strong negative weight on feature distance ranks near pairs higher
    LinearModel sensitive;
    sensitive.weights = Matrix(1, 4, 0.0);
    sensitive.weights.at(0, 0) = -5.0;
    double near = predict_same_label(sensitive, {0.1, 0.0, 0.0});
    double far = predict_same_label(sensitive, {3.0, 0.0, 0.0});
    CHECK(near > far);
    CHECK(near > 0.0);
    CHECK(near < 1.0);
    CHECK(far > 0.0);

    LinearModel wrong;
    wrong.weights = Matrix(1, 3, 0.0);
    CHECK_THROWS_AS(predict_same_label(wrong, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("mst_topk on the worked 3-node example") {
    Matrix sim(3, 3, 0.0);
    auto set = [&](int i, int j, double v) {
        sim.at(i, j) = v;
        sim.at(j, i) = v;
    };
    set(0, 1, 0.9);
    set(0, 2, 0.1);
    set(1, 2, 0.8);
    // Kruskal on dissimilarities 0.1, 0.2, 0.9 keeps (0,1) and (1,2)
    EdgeList top2 = mst_topk(sim, 2);
    REQUIRE(top2.edges.size() == 2);
    CHECK(top2.edges[0].i == 0);
    CHECK(top2.edges[0].j == 1);
    CHECK(top2.edges[0].weight == 0.9);
    CHECK(top2.edges[1].i == 1);
    CHECK(top2.edges[1].j == 2);

    EdgeList top1 = mst_topk(sim, 1);
    REQUIRE(top1.edges.size() == 1);
    CHECK(top1.edges[0].i == 0);
    CHECK(top1.edges[0].j == 1);
}

TEST_CASE("two superpixels always connect through the single edge") {
    Matrix sim(2, 2, 0.0);
    sim.at(0, 1) = 0.3;
    sim.at(1, 0) = 0.3;
    for (int k : {1, 5}) {
        EdgeList el = mst_topk(sim, k);
        REQUIRE(el.edges.size() == 1);
        CHECK(el.edges[0].i == 0);
        CHECK(el.edges[0].j == 1);
    }
    Matrix tiny(1, 1, 0.0);
    CHECK_THROWS_AS(mst_topk(tiny, 1), std::invalid_argument);
}

TEST_CASE("mst_topk output is acyclic and within the spanning bound") {
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        int n = rng.uniform_int(2, 50);
        Matrix sim = random_similarity(rng, n);
        EdgeList el = mst_topk(sim, rng.uniform_int(1, n));
        CHECK(acyclic_and_within_bound(el, n));
    }
}

TEST_CASE("mst total dissimilarity matches exhaustive tree enumeration") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        int n = rng.uniform_int(2, 6);
        Matrix sim = random_similarity(rng, n);
        EdgeList el = mst_topk(sim, n - 1);  // the full tree
        REQUIRE(static_cast<int>(el.edges.size()) == n - 1);

        Matrix dis(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dis.at(i, j) = 1.0 - sim.at(i, j);
        // canonical summation order on both sides keeps the comparison exact
        std::vector<std::pair<int, int>> pairs;
        for (const Edge& e : el.edges) pairs.emplace_back(e.i, e.j);
        std::sort(pairs.begin(), pairs.end());
        double total = 0.0;
        for (auto [i, j] : pairs) total += dis.at(i, j);
        CHECK(total == doctest::Approx(testing::mst_min_total_enumerated(dis)).epsilon(1e-12));
    }
}

TEST_CASE("k of at least n-1 returns exactly the full tree") {
    Rng rng(43);
    Matrix sim = random_similarity(rng, 7);
    EdgeList full = mst_topk(sim, 6);
    EdgeList more = mst_topk(sim, 100);
    REQUIRE(full.edges.size() == 6);
    REQUIRE(more.edges.size() == 6);
    for (size_t e = 0; e < full.edges.size(); ++e) {
        CHECK(full.edges[e].i == more.edges[e].i);
        CHECK(full.edges[e].j == more.edges[e].j);
    }
    // sorted by descending similarity
    for (size_t e = 1; e < full.edges.size(); ++e)
        CHECK(full.edges[e - 1].weight >= full.edges[e].weight);
}

TEST_CASE("relabeling superpixels permutes the edge list consistently") {
    Rng rng(47);
    const int n = 6;
    Matrix sim = random_similarity(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);

    Matrix permuted(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) permuted.at(perm[i], perm[j]) = sim.at(i, j);

    auto canonical = [](EdgeList el) {
        std::vector<std::tuple<int, int, double>> out;
        for (const Edge& e : el.edges) out.emplace_back(e.i, e.j, e.weight);
        std::sort(out.begin(), out.end());
        return out;
    };
    EdgeList base = mst_topk(sim, n - 1);
    EdgeList mapped = mst_topk(permuted, n - 1);
    std::vector<std::tuple<int, int, double>> remapped;
    for (const Edge& e : base.edges) {
        int i = perm[e.i], j = perm[e.j];
        remapped.emplace_back(std::min(i, j), std::max(i, j), e.weight);
    }
    std::sort(remapped.begin(), remapped.end());
    CHECK(remapped == canonical(mapped));
}
