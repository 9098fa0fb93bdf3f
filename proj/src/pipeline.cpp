#include "spx/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "spx/learn.hpp"
#include "spx/pooling.hpp"
#include "spx/rng.hpp"
#include "spx/simgraph.hpp"

namespace spx {

namespace {

using json = nlohmann::json;

TermConfig term_from_json(const json& j, bool enabled_default) {
    TermConfig t;
    t.enabled = j.value("enabled", enabled_default);
    t.w1 = j.value("w1", t.w1);
    t.w2 = j.value("w2", t.w2);
    t.sigma_alpha_frac = j.value("sigma_alpha_frac", t.sigma_alpha_frac);
    t.sigma_beta = j.value("sigma_beta", t.sigma_beta);
    t.sigma_gamma_frac = j.value("sigma_gamma_frac", t.sigma_gamma_frac);
    t.potts_weight = j.value("potts_weight", t.potts_weight);
    return t;
}

json term_to_json(const TermConfig& t) {
    return {{"enabled", t.enabled},
            {"w1", t.w1},
            {"w2", t.w2},
            {"sigma_alpha_frac", t.sigma_alpha_frac},
            {"sigma_beta", t.sigma_beta},
            {"sigma_gamma_frac", t.sigma_gamma_frac},
            {"potts_weight", t.potts_weight}};
}

}  // namespace

PipelineConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("malformed JSON: " + path);

    PipelineConfig cfg;
    if (j.contains("slic")) {
        const json& s = j["slic"];
        cfg.slic.target_count = s.value("target_count", cfg.slic.target_count);
        cfg.slic.compactness = s.value("compactness", cfg.slic.compactness);
        cfg.slic.iterations = s.value("iterations", cfg.slic.iterations);
    }
    if (j.contains("pool")) cfg.pool_stride = j["pool"].value("stride", cfg.pool_stride);
    if (j.contains("graph")) {
        const json& g = j["graph"];
        std::string mode = g.value("mode", std::string("mst"));
        if (mode == "mst")
            cfg.graph_mode = GraphMode::MstTopK;
        else if (mode == "dense")
            cfg.graph_mode = GraphMode::Dense;
        else
            throw std::runtime_error("config: unknown graph mode " + mode);
        cfg.graph_k = g.value("k", cfg.graph_k);
    }
    if (j.contains("crf")) {
        const json& c = j["crf"];
        cfg.alpha_u = c.value("alpha_u", cfg.alpha_u);
        cfg.epsilon = c.value("epsilon", cfg.epsilon);
        if (c.contains("term1")) cfg.term1 = term_from_json(c["term1"], true);
        if (c.contains("term2")) cfg.term2 = term_from_json(c["term2"], true);
    }
    if (j.contains("inference")) {
        const json& i = j["inference"];
        cfg.max_iters = i.value("max_iters", cfg.max_iters);
        cfg.tol = i.value("tol", cfg.tol);
    }
    if (j.contains("eval"))
        cfg.ap_thresholds = j["eval"].value("ap_thresholds", cfg.ap_thresholds);
    return cfg;
}

void write_config(const std::string& path, const PipelineConfig& cfg) {
    json j;
    j["slic"] = {{"target_count", cfg.slic.target_count},
                 {"compactness", cfg.slic.compactness},
                 {"iterations", cfg.slic.iterations}};
    j["pool"] = {{"stride", cfg.pool_stride}};
    j["graph"] = {{"mode", cfg.graph_mode == GraphMode::MstTopK ? "mst" : "dense"},
                  {"k", cfg.graph_k}};
    j["crf"] = {{"alpha_u", cfg.alpha_u},
                {"epsilon", cfg.epsilon},
                {"term1", term_to_json(cfg.term1)},
                {"term2", term_to_json(cfg.term2)}};
    j["inference"] = {{"max_iters", cfg.max_iters}, {"tol", cfg.tol}};
    j["eval"] = {{"ap_thresholds", cfg.ap_thresholds}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

void normalize_unary(Tensor& unary, double tol) {
    const int labels = unary.channels(), rows = unary.rows(), cols = unary.cols();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (int l = 0; l < labels; ++l) {
                double v = unary.at(l, r, c);
                if (!(v >= 0.0)) throw std::invalid_argument("unary probabilities must be >= 0");
                sum += v;
            }
            if (!std::isfinite(sum) || std::abs(sum - 1.0) > tol)
                throw std::invalid_argument("unary probabilities deviate from sum 1 beyond " +
                                            std::to_string(tol));
            for (int l = 0; l < labels; ++l) unary.at(l, r, c) /= sum;
        }
}

LabelMap argmax_labels(const Tensor& probs) {
    LabelMap out(probs.rows(), probs.cols());
    for (int r = 0; r < probs.rows(); ++r)
        for (int c = 0; c < probs.cols(); ++c) {
            int best = 0;
            double best_v = probs.at(0, r, c);
            for (int l = 1; l < probs.channels(); ++l)
                if (probs.at(l, r, c) > best_v) {
                    best_v = probs.at(l, r, c);
                    best = l;
                }
            out.at(r, c) = best;
        }
    return out;
}

namespace {

Tensor image_tensor(const Image& img) {
    Tensor t(3, img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c)
            for (int ch = 0; ch < 3; ++ch) t.at(ch, r, c) = img.at(r, c, ch) / 255.0;
    return t;
}

CrfParams term_params(const TermConfig& t, double alpha_u, double epsilon, int rows, int cols) {
    double diag = std::sqrt(static_cast<double>(rows) * rows + static_cast<double>(cols) * cols);
    CrfParams p;
    p.alpha_u = alpha_u;
    p.epsilon = epsilon;
    p.w1 = t.w1;
    p.w2 = t.w2;
    p.sigma_alpha = t.sigma_alpha_frac * diag;
    p.sigma_beta = t.sigma_beta;
    p.sigma_gamma = t.sigma_gamma_frac * diag;
    return p;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(name) + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const Image& image, const Tensor& unary,
                            const std::optional<LabelMap>& gt, const PipelineConfig& cfg,
                            const Tensor* features, const Tensor* features2) {
    PipelineResult out;

    out.superpixels = stage("slic", [&] { return slic_segment(image, cfg.slic); });
    const SuperpixelMap& sp = out.superpixels;

    // Pairwise features: supplied tensor at the configured stride, else the
    // image itself at stride 1.
    SuperpixelFeatures spf1 = stage("pool", [&] {
        if (features) return pool_superpixels(*features, sp, {cfg.pool_stride});
        return pool_superpixels(image_tensor(image), sp, {1.0});
    });

    Tensor probs_tensor = unary;
    SuperpixelFeatures pooled_unary = stage("refine", [&] {
        if (unary.rows() != image.rows || unary.cols() != image.cols)
            throw std::invalid_argument("shape mismatch");
        if (unary.channels() < 2)
            throw std::invalid_argument("unary needs at least 2 label channels");
        normalize_unary(probs_tensor);
        return pool_superpixels(probs_tensor, sp, {1.0});
    });
    const int label_count = unary.channels();

    // Similarity graph: same-label logistic model supervised by pooled-unary
    // argmax agreement, then MST top-k edge selection.
    std::optional<EdgeList> edges;
    if (cfg.graph_mode == GraphMode::MstTopK && sp.count < 2) {
        edges = EdgeList{};  // single superpixel: nothing to connect
    } else if (cfg.graph_mode == GraphMode::MstTopK) {
        edges = stage("graph", [&] {
            std::vector<int> guess = map_labels(pooled_unary.features);
            std::vector<LabeledSample> samples;
            for (int i = 0; i < sp.count; ++i)
                for (int j = i + 1; j < sp.count; ++j) {
                    PairFeature f = pair_features(spf1, i, j);
                    samples.push_back({{f[0], f[1], f[2]}, guess[i] == guess[j] ? 1 : 0});
                }
            std::optional<LinearModel> model;
            bool has0 = false, has1 = false;
            for (const LabeledSample& s : samples) (s.y ? has1 : has0) = true;
            if (has0 && has1) model = logistic_fit(samples, {0.1, 200, 1e-4}).model;
            return mst_topk(similarity_matrix(spf1, model), cfg.graph_k);
        });
    }

    stage("refine", [&] {
        CrfModel model;
        model.label_count = label_count;
        CrfParams p1 = term_params(cfg.term1, cfg.alpha_u, cfg.epsilon, image.rows, image.cols);
        model.unary = unary_energy(pooled_unary.features, pooled_unary.sizes, p1);
        if (cfg.term1.enabled)
            model.terms.push_back(build_pairwise_term(spf1, p1, edges, cfg.term1.potts_weight));
        if (cfg.term2.enabled) {
            CrfParams p2 = term_params(cfg.term2, cfg.alpha_u, cfg.epsilon, image.rows, image.cols);
            SuperpixelFeatures spf2 =
                features2 ? pool_superpixels(*features2, sp, {cfg.pool_stride}) : pooled_unary;
            model.terms.push_back(build_pairwise_term(spf2, p2, edges, cfg.term2.potts_weight));
        }

        out.inference = mean_field_infer(model, cfg.max_iters, cfg.tol);
        out.refined = broadcast_labels(map_labels(out.inference.beliefs), sp);
        out.baseline = argmax_labels(probs_tensor);
        return 0;
    });

    if (gt) {
        stage("eval", [&] {
            check_labels(*gt, label_count);
            out.refined_metrics = evaluate(out.refined, *gt, label_count);
            out.baseline_metrics = evaluate(out.baseline, *gt, label_count);
            return 0;
        });
    }
    return out;
}

// ---- synthetic fixtures -----------------------------------------------------

std::vector<std::array<uint8_t, 3>> default_palette(int n) {
    std::vector<std::array<uint8_t, 3>> palette;
    palette.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (i == 0) {
            palette.push_back({40, 40, 40});
            continue;
        }
        // evenly spaced hues, full saturation
        double h = 360.0 * (i - 1) / std::max(1, n - 1);
        double x = 1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0);
        double rgb[3] = {0, 0, 0};
        int sector = static_cast<int>(h / 60.0) % 6;
        const double table[6][3] = {{1, x, 0}, {x, 1, 0}, {0, 1, x},
                                    {0, x, 1}, {x, 0, 1}, {1, 0, x}};
        for (int ch = 0; ch < 3; ++ch) rgb[ch] = table[sector][ch];
        palette.push_back({static_cast<uint8_t>(std::lround(230 * rgb[0])),
                           static_cast<uint8_t>(std::lround(230 * rgb[1])),
                           static_cast<uint8_t>(std::lround(230 * rgb[2]))});
    }
    return palette;
}

Image colorize(const LabelMap& labels, const std::vector<std::array<uint8_t, 3>>& palette) {
    Image img(labels.rows, labels.cols);
    for (int r = 0; r < labels.rows; ++r)
        for (int c = 0; c < labels.cols; ++c) {
            int32_t l = labels.at(r, c);
            if (l < 0 || l >= static_cast<int32_t>(palette.size()))
                throw std::invalid_argument("colorize: missing palette entry for label " +
                                            std::to_string(l));
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = palette[l][ch];
        }
    return img;
}

namespace {

// Smooth field: standard normals on a coarse grid, bilinear in between.
std::vector<double> smooth_field(Rng& rng, int rows, int cols, int spacing) {
    int grid_r = (rows - 1) / spacing + 2;
    int grid_c = (cols - 1) / spacing + 2;
    std::vector<double> grid(static_cast<size_t>(grid_r) * grid_c);
    for (double& v : grid) v = rng.normal();
    std::vector<double> field(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double gr = static_cast<double>(r) / spacing, gc = static_cast<double>(c) / spacing;
            int r0 = static_cast<int>(gr), c0 = static_cast<int>(gc);
            double fr = gr - r0, fc = gc - c0;
            auto g = [&](int rr, int cc) { return grid[static_cast<size_t>(rr) * grid_c + cc]; };
            field[static_cast<size_t>(r) * cols + c] =
                (1 - fr) * ((1 - fc) * g(r0, c0) + fc * g(r0, c0 + 1)) +
                fr * ((1 - fc) * g(r0 + 1, c0) + fc * g(r0 + 1, c0 + 1));
        }
    return field;
}

}  // namespace

Fixture generate_fixture(const FixtureParams& params) {
    if (params.label_count < 2) throw std::invalid_argument("generate_fixture: label_count < 2");
    if (params.rows < 8 || params.cols < 8)
        throw std::invalid_argument("generate_fixture: fixture too small");
    const int rows = params.rows, cols = params.cols, labels = params.label_count;
    Rng rng(params.seed);

    Fixture fx;
    fx.gt = LabelMap(rows, cols, 0);

    // Parts 1..L-1: filled ellipses and rectangles, later parts on top.
    for (int part = 1; part < labels; ++part) {
        double cy = rng.uniform(0.15 * rows, 0.85 * rows);
        double cx = rng.uniform(0.15 * cols, 0.85 * cols);
        double ay = rng.uniform(0.10 * rows, 0.28 * rows);
        double ax = rng.uniform(0.10 * cols, 0.28 * cols);
        bool ellipse = part % 2 == 1;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                double dy = (r - cy) / ay, dx = (c - cx) / ax;
                bool inside = ellipse ? dy * dy + dx * dx <= 1.0
                                      : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
                if (inside) fx.gt.at(r, c) = part;
            }
    }

    auto palette = default_palette(labels);
    fx.image = Image(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                int v = palette[fx.gt.at(r, c)][ch] + rng.uniform_int(-8, 8);
                fx.image.at(r, c, ch) = static_cast<uint8_t>(std::clamp(v, 0, 255));
            }

    // Unary: softmax of one-hot logits plus smooth per-class noise fields.
    std::vector<std::vector<double>> fields(labels);
    for (int l = 0; l < labels; ++l) fields[l] = smooth_field(rng, rows, cols, 4);
    fx.unary = Tensor(labels, rows, cols);
    constexpr double kMargin = 2.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double maxlog = -1e300;
            std::vector<double> logit(labels);
            for (int l = 0; l < labels; ++l) {
                logit[l] = (l == fx.gt.at(r, c) ? kMargin : 0.0) +
                           params.noise * fields[l][static_cast<size_t>(r) * cols + c];
                maxlog = std::max(maxlog, logit[l]);
            }
            double sum = 0.0;
            for (int l = 0; l < labels; ++l) {
                logit[l] = std::exp(logit[l] - maxlog);
                sum += logit[l];
            }
            for (int l = 0; l < labels; ++l) fx.unary.at(l, r, c) = logit[l] / sum;
        }
    return fx;
}

}  // namespace spx
