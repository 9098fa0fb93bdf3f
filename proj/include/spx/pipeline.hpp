#pragma once

#include <optional>
#include <string>

#include "spx/core.hpp"
#include "spx/crf.hpp"
#include "spx/io.hpp"
#include "spx/metrics.hpp"
#include "spx/slic.hpp"

namespace spx {

enum class GraphMode { MstTopK, Dense };

/// Per-pairwise-term settings. Position scales are fractions of the image
/// diagonal so one config ports across image sizes.
struct TermConfig {
    bool enabled = false;
    double w1 = 1.0, w2 = 1.0;
    double sigma_alpha_frac = 0.2;
    double sigma_beta = 1.0;
    double sigma_gamma_frac = 0.05;
    double potts_weight = 1.0;
};

struct PipelineConfig {
    SlicParams slic{64, 10.0, 10};
    double pool_stride = 1.0;
    GraphMode graph_mode = GraphMode::MstTopK;
    int graph_k = 8;
    double alpha_u = 1.0;
    double epsilon = 1e-8;
    TermConfig term1{true, 1.0, 1.0, 0.2, 1.0, 0.05, 1.0};
    TermConfig term2{};  // disabled by default
    int max_iters = 10;
    double tol = 1e-6;
    std::vector<double> ap_thresholds{0.5, 0.6, 0.7, 0.8, 0.9};
};

PipelineConfig read_config(const std::string& path);
void write_config(const std::string& path, const PipelineConfig& cfg);

struct PipelineResult {
    SuperpixelMap superpixels;
    LabelMap baseline;  // per-pixel unary argmax
    LabelMap refined;
    MeanFieldResult inference;
    std::optional<MetricReport> refined_metrics;
    std::optional<MetricReport> baseline_metrics;
};

/// slic -> pool -> graph -> refine -> eval. The similarity graph weights come
/// from a logistic same-label model fitted on pooled-unary argmax agreement
/// (pair-feature distance fallback when only one class survives pooling).
/// Optional feature tensors back the pairwise kernels; without them term1
/// pools the image itself and term2 the pooled unary probabilities. Failures
/// carry their stage name ("refine: shape mismatch").
PipelineResult run_pipeline(const Image& image, const Tensor& unary,
                            const std::optional<LabelMap>& gt, const PipelineConfig& cfg,
                            const Tensor* features = nullptr, const Tensor* features2 = nullptr);

/// Renormalizes per-pixel probability vectors. Deviations from sum 1 up to
/// tol are fixed silently; larger ones throw.
void normalize_unary(Tensor& unary, double tol = 1e-3);

/// Per-pixel argmax over channels, ties to the lowest label.
LabelMap argmax_labels(const Tensor& probs);

// ---- synthetic fixtures -----------------------------------------------------

struct FixtureParams {
    uint64_t seed = 1;
    int rows = 48, cols = 48;
    int label_count = 7;   // background + label_count-1 parts
    double noise = 1.5;    // amplitude of the correlated logit noise
};

struct Fixture {
    Image image;
    LabelMap gt;
    Tensor unary;  // label_count x rows x cols probabilities
};

/// Renders label_count-1 colored geometric parts on a background, then forms
/// unary probabilities as a softmax of one-hot logits plus smooth seeded
/// noise. Byte-deterministic per seed; noise 0 makes the argmax equal the GT.
Fixture generate_fixture(const FixtureParams& params);

std::vector<std::array<uint8_t, 3>> default_palette(int n);

/// Per-pixel palette lookup; throws if any label has no palette entry.
Image colorize(const LabelMap& labels, const std::vector<std::array<uint8_t, 3>>& palette);

}  // namespace spx
