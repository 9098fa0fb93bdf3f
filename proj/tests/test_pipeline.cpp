#include "doctest.h"

#include <cstdio>

#include "oracles.hpp"
#include "spx/pipeline.hpp"
#include "spx/pooling.hpp"

using namespace spx;

TEST_CASE("fixtures are deterministic per seed and exact at zero noise") {
    FixtureParams params;
    params.seed = 9;
    params.rows = 32;
    params.cols = 32;
    params.label_count = 7;
    params.noise = 0.0;
    Fixture a = generate_fixture(params);
    Fixture b = generate_fixture(params);
    CHECK(a.image.rgb == b.image.rgb);
    CHECK(a.gt.labels == b.gt.labels);
    CHECK(a.unary.data() == b.unary.data());

    // zero noise: the unary argmax reproduces the ground truth exactly
    LabelMap argmax = argmax_labels(a.unary);
    CHECK(argmax.labels == a.gt.labels);
    CHECK(miou(argmax, a.gt, 7).mean == 1.0);

    params.noise = 1.5;
    Fixture noisy = generate_fixture(params);
    CHECK(miou(argmax_labels(noisy.unary), noisy.gt, 7).mean < 1.0);

    CHECK_THROWS_AS(generate_fixture({1, 32, 32, 1, 0.0}), std::invalid_argument);
}

TEST_CASE("colorize is an exact palette lookup") {
    LabelMap zeros(3, 3, 0);
    Image black = colorize(zeros, {{0, 0, 0}});
    for (uint8_t v : black.rgb) CHECK(v == 0);

    LabelMap board(2, 2);
    board.labels = {0, 1, 1, 0};
    std::vector<std::array<uint8_t, 3>> palette{{10, 20, 30}, {200, 100, 50}};
    Image img = colorize(board, palette);
    CHECK(img.at(0, 0, 0) == 10);
    CHECK(img.at(0, 1, 0) == 200);
    CHECK(img.at(1, 0, 2) == 50);

    SUBCASE("inverting an injective palette recovers the label map") {
        LabelMap labels(4, 5);
        for (size_t i = 0; i < labels.labels.size(); ++i)
            labels.labels[i] = static_cast<int32_t>(i % 3);
        auto pal = default_palette(3);
        Image rendered = colorize(labels, pal);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 5; ++c) {
                int found = -1;
                for (int l = 0; l < 3; ++l)
                    if (rendered.at(r, c, 0) == pal[l][0] && rendered.at(r, c, 1) == pal[l][1] &&
                        rendered.at(r, c, 2) == pal[l][2])
                        found = l;
                CHECK(found == labels.at(r, c));
            }
    }

    LabelMap wide(1, 1, 5);
    CHECK_THROWS_AS(colorize(wide, palette), std::invalid_argument);
}

TEST_CASE("noise-free one-hot unaries pass through the pipeline untouched") {
    // half-plane image whose color edge carries the labels; SLIC locks onto
    // the edge, so no superpixel mixes classes and there is nothing to refine
    const int rows = 16, cols = 16;
    Image img(rows, cols);
    LabelMap gt(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            bool rightside = c >= cols / 2;
            gt.at(r, c) = rightside;
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = rightside ? 230 : 20;
        }
    Tensor unary(2, rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) unary.at(gt.at(r, c), r, c) = 1.0;

    PipelineConfig cfg;
    cfg.slic.target_count = 4;
    PipelineResult result = run_pipeline(img, unary, gt, cfg);
    CHECK(result.refined.labels == argmax_labels(unary).labels);
    CHECK(result.refined_metrics->mean_iou == 1.0);
    CHECK(result.baseline_metrics->mean_iou == 1.0);
}

TEST_CASE("pipeline reports stage names on precondition failures") {
    Fixture fx = generate_fixture({3, 24, 24, 4, 0.5});
    Tensor wrong(4, 12, 12);
    for (double& v : wrong.data()) v = 0.25;
    CHECK_THROWS_WITH_AS(run_pipeline(fx.image, wrong, std::nullopt, PipelineConfig{}),
                         doctest::Contains("refine: shape mismatch"), std::invalid_argument);
}

TEST_CASE("unary rows are renormalized silently only below the tolerance") {
    Tensor unary(2, 1, 1);
    unary.at(0, 0, 0) = 0.5004;
    unary.at(1, 0, 0) = 0.5001;  // sum 1.0005, inside 1e-3
    CHECK_NOTHROW(normalize_unary(unary));
    CHECK(unary.at(0, 0, 0) + unary.at(1, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    Tensor bad(2, 1, 1);
    bad.at(0, 0, 0) = 0.6;
    bad.at(1, 0, 0) = 0.6;  // sum 1.2, beyond tolerance
    CHECK_THROWS_AS(normalize_unary(bad), std::invalid_argument);

    Tensor negative(2, 1, 1);
    negative.at(0, 0, 0) = -0.1;
    negative.at(1, 0, 0) = 1.1;
    CHECK_THROWS_AS(normalize_unary(negative), std::invalid_argument);
}

TEST_CASE("pipeline runs are deterministic") {
    Fixture fx = generate_fixture({11, 32, 32, 5, 1.2});
    PipelineConfig cfg;
    cfg.slic.target_count = 24;
    PipelineResult a = run_pipeline(fx.image, fx.unary, fx.gt, cfg);
    PipelineResult b = run_pipeline(fx.image, fx.unary, fx.gt, cfg);
    CHECK(a.refined.labels == b.refined.labels);
    CHECK(a.superpixels.ids == b.superpixels.ids);
    CHECK(a.inference.free_energy == b.inference.free_energy);
    CHECK(a.refined_metrics->mean_iou == b.refined_metrics->mean_iou);
}

TEST_CASE("dense graph mode and the second pairwise term both run") {
    Fixture fx = generate_fixture({13, 32, 32, 5, 1.2});
    PipelineConfig cfg;
    cfg.slic.target_count = 24;
    cfg.graph_mode = GraphMode::Dense;
    cfg.term2.enabled = true;
    PipelineResult result = run_pipeline(fx.image, fx.unary, fx.gt, cfg);
    CHECK(validate_partition(result.superpixels).ok);
    CHECK(result.refined_metrics.has_value());
    CHECK(result.inference.free_energy.size() >= 1);
    // free energy still monotone with two dense terms
    for (size_t s = 1; s < result.inference.free_energy.size(); ++s)
        CHECK(result.inference.free_energy[s] <= result.inference.free_energy[s - 1] + 1e-9);
}

TEST_CASE("an explicit feature tensor replaces the pooled image") {
    Fixture fx = generate_fixture({17, 32, 32, 5, 1.0});
    PipelineConfig cfg;
    cfg.slic.target_count = 20;

    // the image itself as a 3-channel [0,1] tensor: must reproduce the
    // default run exactly
    Tensor rgb(3, 32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
            for (int ch = 0; ch < 3; ++ch) rgb.at(ch, r, c) = fx.image.at(r, c, ch) / 255.0;
    PipelineResult with_default = run_pipeline(fx.image, fx.unary, fx.gt, cfg);
    PipelineResult with_tensor = run_pipeline(fx.image, fx.unary, fx.gt, cfg, &rgb);
    CHECK(with_tensor.refined.labels == with_default.refined.labels);

    // a distinct feature tensor changes the graph but still refines
    Tensor flat(1, 32, 32, 0.5);
    PipelineConfig cfg2 = cfg;
    cfg2.term2.enabled = true;
    PipelineResult other = run_pipeline(fx.image, fx.unary, fx.gt, cfg2, &flat, &rgb);
    CHECK(validate_partition(other.superpixels).ok);
    CHECK(other.refined_metrics.has_value());
}

TEST_CASE("config files round trip") {
    PipelineConfig cfg;
    cfg.slic.target_count = 17;
    cfg.graph_mode = GraphMode::Dense;
    cfg.graph_k = 5;
    cfg.term2.enabled = true;
    cfg.term2.w1 = 2.5;
    cfg.max_iters = 33;
    std::string path = "/tmp/spx_cfg_test.json";
    write_config(path, cfg);
    PipelineConfig back = read_config(path);
    CHECK(back.slic.target_count == 17);
    CHECK(back.graph_mode == GraphMode::Dense);
    CHECK(back.graph_k == 5);
    CHECK(back.term2.enabled);
    CHECK(back.term2.w1 == 2.5);
    CHECK(back.max_iters == 33);
    std::remove(path.c_str());
}
