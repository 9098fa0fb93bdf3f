#include "doctest.h"

#include "oracles.hpp"
#include "spx/metrics.hpp"
#include "spx/rng.hpp"

using namespace spx;

namespace {

LabelMap map_of(int rows, int cols, std::vector<int32_t> labels) {
    LabelMap m(rows, cols);
    m.labels = std::move(labels);
    return m;
}

Instance instance_of(int rows, int cols, std::vector<int32_t> mask, int cls, double score) {
    Instance inst;
    inst.mask = map_of(rows, cols, std::move(mask));
    inst.class_id = cls;
    inst.score = score;
    return inst;
}

LabelMap random_map(Rng& rng, int rows, int cols, int labels) {
    LabelMap m(rows, cols);
    for (int32_t& v : m.labels) v = rng.uniform_int(0, labels - 1);
    return m;
}

}  // namespace

TEST_CASE("miou on the worked 2x2 fixture") {
    auto pred = map_of(2, 2, {0, 0, 1, 1});
    auto gt = map_of(2, 2, {0, 1, 1, 1});
    IouResult r = miou(pred, gt, 2);
    CHECK(r.per_class[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.mean == doctest::Approx(7.0 / 12.0).epsilon(1e-12));

    SUBCASE("identical maps score 1 everywhere") {
        IouResult s = miou(gt, gt, 2);
        CHECK(s.per_class[0] == 1.0);
        CHECK(s.per_class[1] == 1.0);
        CHECK(s.mean == 1.0);
    }
    SUBCASE("disjoint maps score 0") {
        IouResult s = miou(map_of(1, 2, {0, 0}), map_of(1, 2, {1, 1}), 2);
        CHECK(s.per_class[0] == 0.0);
        CHECK(s.per_class[1] == 0.0);
        CHECK(s.mean == 0.0);
    }
    SUBCASE("classes absent from both maps stay out of the mean") {
        IouResult s = miou(map_of(1, 2, {0, 0}), map_of(1, 2, {0, 0}), 5);
        CHECK(s.per_class[0] == 1.0);
        CHECK(s.per_class[3] == -1.0);
        CHECK(s.mean == 1.0);
    }
    CHECK_THROWS_AS(miou(pred, map_of(1, 2, {0, 0}), 2), std::invalid_argument);
}

TEST_CASE("pixel accuracy counts matches") {
    auto gt = map_of(4, 4, std::vector<int32_t>(16, 1));
    CHECK(pixel_accuracy(gt, gt) == 1.0);
    auto off = gt;
    off.labels[5] = 0;
    CHECK(pixel_accuracy(off, gt) == doctest::Approx(15.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("metrics agree with set-arithmetic oracles on random maps") {
    Rng rng(81);
    for (int trial = 0; trial < 100; ++trial) {
        int labels = rng.uniform_int(2, 5);
        LabelMap pred = random_map(rng, 8, 8, labels);
        LabelMap gt = random_map(rng, 8, 8, labels);
        IouResult r = miou(pred, gt, labels);
        auto oracle = testing::miou_oracle(pred, gt, labels);
        for (int c = 0; c < labels; ++c) CHECK(r.per_class[c] == oracle[c]);
        CHECK(pixel_accuracy(pred, gt) == testing::accuracy_oracle(pred, gt));

        // symmetry of both metrics under swapping pred and gt
        IouResult s = miou(gt, pred, labels);
        for (int c = 0; c < labels; ++c) CHECK(r.per_class[c] == s.per_class[c]);
        CHECK(pixel_accuracy(pred, gt) == pixel_accuracy(gt, pred));
    }
}

TEST_CASE("ap_r on the worked single-detection fixture") {
    // one prediction overlapping one GT with IoU 0.8
    auto gt = instance_of(2, 5, {1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, 0, 1.0);
    auto pred = instance_of(2, 5, {1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, 0, 0.9);
    CHECK(mask_iou(pred.mask, gt.mask) == doctest::Approx(0.8).epsilon(1e-12));
    ApResult r = ap_r({pred}, {gt}, 0.5);
    CHECK(r.per_class.at(0) == 1.0);
    CHECK(r.mean == 1.0);
}

TEST_CASE("ap_r score ordering decides which detection counts") {
    auto gt = instance_of(2, 5, {1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, 0, 1.0);
    auto hit = instance_of(2, 5, {1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, 0, 0.9);
    auto miss = instance_of(2, 5, {0, 0, 0, 0, 0, 0, 0, 0, 1, 1}, 0, 0.6);
    CHECK(mask_iou(miss.mask, gt.mask) == 0.0);

    // strong detection first: recall saturates immediately, AP = 1
    CHECK(ap_r({hit, miss}, {gt}, 0.5).mean == doctest::Approx(1.0).epsilon(1e-12));

    // swapped scores: the false positive leads, AP drops to 0.5
    auto miss_first = miss;
    miss_first.score = 0.9;
    auto hit_second = hit;
    hit_second.score = 0.6;
    CHECK(ap_r({miss_first, hit_second}, {gt}, 0.5).mean == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ap_r edge cases") {
    auto gt = instance_of(2, 2, {1, 1, 0, 0}, 0, 1.0);
    // no predictions at all: AP 0 for the class
    ApResult none = ap_r({}, {gt}, 0.5);
    CHECK(none.per_class.at(0) == 0.0);
    CHECK(none.mean == 0.0);

    // class without any GT is excluded entirely
    auto stray = instance_of(2, 2, {0, 1, 0, 0}, 7, 0.4);
    ApResult r = ap_r({stray}, {gt}, 0.5);
    CHECK(r.per_class.count(7) == 0);

    CHECK_THROWS_AS(ap_r({gt}, {gt}, 0.0), std::invalid_argument);
    auto empty_mask = instance_of(2, 2, {0, 0, 0, 0}, 0, 0.5);
    CHECK_THROWS_AS(ap_r({empty_mask}, {gt}, 0.5), std::invalid_argument);
}

TEST_CASE("ap_r matches the independent oracle on random instance sets") {
    Rng rng(83);
    for (int trial = 0; trial < 100; ++trial) {
        InstanceSet gt = testing::random_instances(rng, 8, 8, 3, 4, false);
        InstanceSet pred = testing::random_instances(rng, 8, 8, 3, 5, true);
        double thr = 0.3 + 0.2 * rng.uniform_int(0, 2);
        ApResult r = ap_r(pred, gt, thr);
        std::set<int> classes;
        for (const Instance& g : gt) classes.insert(g.class_id);
        for (int cls : classes)
            CHECK(r.per_class.at(cls) ==
                  doctest::Approx(testing::ap_oracle(pred, gt, cls, thr)).epsilon(1e-12));
    }
}

TEST_CASE("ap is rank-based and non-increasing in the threshold") {
    Rng rng(87);
    for (int trial = 0; trial < 30; ++trial) {
        InstanceSet gt = testing::random_instances(rng, 8, 8, 2, 3, false);
        InstanceSet pred = testing::random_instances(rng, 8, 8, 2, 4, true);

        // strictly monotone score rescaling preserves AP exactly
        InstanceSet rescaled = pred;
        for (Instance& inst : rescaled) inst.score = 0.1 + inst.score * 0.5;
        CHECK(ap_r(pred, gt, 0.5).mean == ap_r(rescaled, gt, 0.5).mean);

        double last = 1.0 + 1e-12;
        for (double thr : {0.3, 0.5, 0.7, 0.9}) {
            double ap = ap_r(pred, gt, thr).mean;
            CHECK(ap <= last + 1e-12);
            last = ap;
        }
    }
}

TEST_CASE("evaluate assembles the full report") {
    auto pred = map_of(2, 2, {0, 0, 1, 1});
    auto gt = map_of(2, 2, {0, 1, 1, 1});
    InstanceSet gti{instance_of(2, 2, {0, 1, 1, 1}, 0, 1.0)};
    InstanceSet predi{instance_of(2, 2, {0, 0, 1, 1}, 0, 0.8)};
    MetricReport report = evaluate(pred, gt, 2, &predi, &gti, {0.5, 0.8});
    CHECK(report.mean_iou == doctest::Approx(7.0 / 12.0));
    CHECK(report.pixel_accuracy == 0.75);
    REQUIRE(report.ap_r.size() == 2);
    CHECK(report.ap_r.at(0.5) == 1.0);   // the two masks overlap at IoU 2/3
    CHECK(report.ap_r.at(0.8) == 0.0);
}
