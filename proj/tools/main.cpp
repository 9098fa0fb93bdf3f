#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "spx/core.hpp"
#include "spx/crf.hpp"
#include "spx/io.hpp"
#include "spx/learn.hpp"
#include "spx/metrics.hpp"
#include "spx/pipeline.hpp"
#include "spx/pooling.hpp"
#include "spx/simgraph.hpp"
#include "spx/slic.hpp"

namespace fs = std::filesystem;
using namespace spx;

namespace {

// --config beats SPX_CONFIG beats built-in defaults.
PipelineConfig load_config(const std::string& config_path) {
    if (!config_path.empty()) return read_config(config_path);
    if (const char* env = std::getenv("SPX_CONFIG"); env && *env) return read_config(env);
    return PipelineConfig{};
}

SuperpixelMap load_superpixels(const std::string& path) {
    SuperpixelMap sp = read_id_map(path);
    PartitionCheck check = validate_partition(sp);
    if (!check.ok)
        throw std::invalid_argument(path + ": invalid superpixel map (" + check.diagnostics.front() +
                                    ")");
    return sp;
}

void write_trace(const std::string& path, const MeanFieldResult& result) {
    MetricReport empty;
    write_metrics(path, empty, {{"free_energy", result.free_energy}},
                  {{"sweeps", static_cast<double>(result.sweeps)},
                   {"converged", result.converged ? 1.0 : 0.0}});
}

int cmd_slic(const std::string& image_path, const SlicParams& params, const std::string& out) {
    Image img = read_ppm(image_path);
    SuperpixelMap sp = slic_segment(img, params);
    write_id_map(out, sp);
    std::cout << "superpixels: " << sp.count << "\n";
    return 0;
}

int cmd_pool(const std::string& features_path, const std::string& sp_path, double stride,
             const std::string& out) {
    Tensor features = read_tensor(features_path);
    SuperpixelMap sp = load_superpixels(sp_path);
    SuperpixelFeatures spf = pool_superpixels(features, sp, {stride});
    write_features(out, spf);
    return 0;
}

int cmd_graph(const std::string& features_path, const std::string& unary_path,
              const std::string& sp_path, int k, const std::string& out) {
    SuperpixelFeatures spf = read_features(features_path);
    std::optional<LinearModel> model;
    if (!unary_path.empty()) {
        // Same-label supervision from pooled-unary argmax agreement.
        if (sp_path.empty())
            throw std::invalid_argument("graph: --unary requires --superpixels");
        Tensor unary = read_tensor(unary_path);
        normalize_unary(unary);
        SuperpixelMap sp = load_superpixels(sp_path);
        SuperpixelFeatures pooled = pool_superpixels(unary, sp, {1.0});
        std::vector<int> guess = map_labels(pooled.features);
        std::vector<LabeledSample> samples;
        for (int i = 0; i < spf.count; ++i)
            for (int j = i + 1; j < spf.count; ++j) {
                PairFeature f = pair_features(spf, i, j);
                samples.push_back({{f[0], f[1], f[2]}, guess[i] == guess[j] ? 1 : 0});
            }
        bool has0 = false, has1 = false;
        for (const LabeledSample& s : samples) (s.y ? has1 : has0) = true;
        if (has0 && has1) model = logistic_fit(samples, {0.1, 200, 1e-4}).model;
    }
    EdgeList edges = mst_topk(similarity_matrix(spf, model), k);
    write_edges(out, edges);
    return 0;
}

int cmd_refine(const std::string& unary_path, const std::string& sp_path,
               const std::string& features_path, const std::string& features2_path,
               const std::string& edges_path, bool dense, const std::string& config_path,
               int iters, double tol, const std::string& out, const std::string& trace_path) {
    PipelineConfig cfg = load_config(config_path);
    if (iters > 0) cfg.max_iters = iters;
    if (tol > 0) cfg.tol = tol;
    if ((edges_path.empty() && !dense) || (!edges_path.empty() && dense))
        throw std::invalid_argument("refine: pass exactly one of --edges or --dense");

    Tensor unary = read_tensor(unary_path);
    SuperpixelMap sp = load_superpixels(sp_path);
    if (unary.rows() != sp.rows || unary.cols() != sp.cols)
        throw std::invalid_argument("refine: shape mismatch");
    normalize_unary(unary);
    SuperpixelFeatures spf = read_features(features_path);
    if (spf.count != sp.count) throw std::invalid_argument("refine: features/superpixels mismatch");

    std::optional<EdgeList> edges;
    if (!edges_path.empty()) edges = read_edges(edges_path);

    double diag = std::sqrt(static_cast<double>(sp.rows) * sp.rows +
                            static_cast<double>(sp.cols) * sp.cols);
    auto to_params = [&](const TermConfig& t) {
        CrfParams p;
        p.alpha_u = cfg.alpha_u;
        p.epsilon = cfg.epsilon;
        p.w1 = t.w1;
        p.w2 = t.w2;
        p.sigma_alpha = t.sigma_alpha_frac * diag;
        p.sigma_beta = t.sigma_beta;
        p.sigma_gamma = t.sigma_gamma_frac * diag;
        return p;
    };

    SuperpixelFeatures pooled = pool_superpixels(unary, sp, {1.0});
    CrfModel model;
    model.label_count = unary.channels();
    model.unary = unary_energy(pooled.features, pooled.sizes, to_params(cfg.term1));
    if (cfg.term1.enabled)
        model.terms.push_back(build_pairwise_term(spf, to_params(cfg.term1), edges,
                                                  cfg.term1.potts_weight));
    if (!features2_path.empty() || cfg.term2.enabled) {
        SuperpixelFeatures spf2 = features2_path.empty() ? pooled : read_features(features2_path);
        if (spf2.count != sp.count)
            throw std::invalid_argument("refine: features2/superpixels mismatch");
        model.terms.push_back(build_pairwise_term(spf2, to_params(cfg.term2), edges,
                                                  cfg.term2.potts_weight));
    }

    MeanFieldResult result = mean_field_infer(model, cfg.max_iters, cfg.tol);
    LabelMap refined = broadcast_labels(map_labels(result.beliefs), sp);
    write_pgm(out, refined);
    if (!trace_path.empty()) write_trace(trace_path, result);
    std::cout << "sweeps: " << result.sweeps << (result.converged ? " (converged)" : "") << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, int labels,
             const std::string& pred_inst, const std::string& gt_inst,
             std::vector<double> thresholds, const std::string& out) {
    LabelMap pred = read_pgm(pred_path);
    LabelMap gt = read_pgm(gt_path);
    std::optional<InstanceSet> pi, gi;
    if (!pred_inst.empty() != !gt_inst.empty())
        throw std::invalid_argument("eval: instance files must be given for both pred and gt");
    if (!pred_inst.empty()) {
        pi = read_instances(pred_inst);
        gi = read_instances(gt_inst);
    }
    if (thresholds.empty()) thresholds = {0.5, 0.6, 0.7, 0.8, 0.9};
    MetricReport report = evaluate(pred, gt, labels, pi ? &*pi : nullptr, gi ? &*gi : nullptr,
                                   thresholds);
    write_metrics(out, report);
    std::cout << "mean_iou: " << report.mean_iou << "  pixel_accuracy: " << report.pixel_accuracy
              << "\n";
    return 0;
}

int cmd_colorize(const std::string& labels_path, const std::string& palette_path,
                 const std::string& out) {
    LabelMap labels = read_pgm(labels_path);
    std::vector<std::array<uint8_t, 3>> palette;
    if (!palette_path.empty()) {
        palette = read_palette(palette_path);
    } else {
        int32_t max_label = 0;
        for (int32_t v : labels.labels) max_label = std::max(max_label, v);
        palette = default_palette(max_label + 1);
    }
    write_ppm(out, colorize(labels, palette));
    return 0;
}

int cmd_demo(const FixtureParams& params, const std::string& outdir) {
    Fixture fx = generate_fixture(params);
    fs::create_directories(outdir);
    write_ppm(outdir + "/image.ppm", fx.image);
    write_pgm(outdir + "/gt.pgm", fx.gt);
    write_tensor(outdir + "/unary.spt", fx.unary);
    write_config(outdir + "/config.json", PipelineConfig{});
    std::cout << "fixture written to " << outdir << "\n";
    return 0;
}

int cmd_pipeline(const std::string& image_path, const std::string& unary_path,
                 const std::string& gt_path, const std::string& config_path,
                 const std::string& features_path, const std::string& features2_path,
                 bool viz, const std::string& outdir) {
    PipelineConfig cfg = load_config(config_path);
    Image img = read_ppm(image_path);
    Tensor unary = read_tensor(unary_path);
    std::optional<LabelMap> gt;
    if (!gt_path.empty()) gt = read_pgm(gt_path);
    std::optional<Tensor> features, features2;
    if (!features_path.empty()) features = read_tensor(features_path);
    if (!features2_path.empty()) features2 = read_tensor(features2_path);

    PipelineResult result = run_pipeline(img, unary, gt, cfg, features ? &*features : nullptr,
                                         features2 ? &*features2 : nullptr);

    fs::create_directories(outdir);
    write_id_map(outdir + "/superpixels.spt", result.superpixels);
    write_pgm(outdir + "/labels.pgm", result.refined);
    write_pgm(outdir + "/baseline.pgm", result.baseline);
    MetricReport report = result.refined_metrics ? *result.refined_metrics : MetricReport{};
    std::map<std::string, double> scalars{
        {"sweeps", static_cast<double>(result.inference.sweeps)},
        {"converged", result.inference.converged ? 1.0 : 0.0},
        {"superpixel_count", static_cast<double>(result.superpixels.count)}};
    if (result.baseline_metrics) {
        scalars["baseline_mean_iou"] = result.baseline_metrics->mean_iou;
        scalars["baseline_pixel_accuracy"] = result.baseline_metrics->pixel_accuracy;
    }
    write_metrics(outdir + "/metrics.json", report, {{"free_energy", result.inference.free_energy}},
                  scalars);
    if (viz) {
        write_ppm(outdir + "/refined.ppm", colorize(result.refined, default_palette(unary.channels())));
    }
    if (result.refined_metrics)
        std::cout << "mean_iou: " << result.refined_metrics->mean_iou
                  << " (baseline " << result.baseline_metrics->mean_iou << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superpixel CRF refinement for object parsing"};
    app.require_subcommand(1);

    // slic
    auto* slic = app.add_subcommand("slic", "segment an image into superpixels");
    std::string slic_image, slic_out;
    SlicParams slic_params;
    slic->add_option("--image", slic_image, "input PPM image")->required();
    slic->add_option("--count", slic_params.target_count, "target superpixel count")->required();
    slic->add_option("--compactness", slic_params.compactness, "spatial weight m");
    slic->add_option("--iters", slic_params.iterations, "k-means iterations");
    slic->add_option("--out", slic_out, "output id map (.spt)")->required();

    // pool
    auto* pool = app.add_subcommand("pool", "pool a feature tensor over superpixels");
    std::string pool_features, pool_sp, pool_out;
    double pool_stride = 1.0;
    pool->add_option("--features", pool_features, "feature tensor (.spt)")->required();
    pool->add_option("--superpixels", pool_sp, "superpixel id map (.spt)")->required();
    pool->add_option("--stride", pool_stride, "receptive-field stride");
    pool->add_option("--out", pool_out, "pooled features (.json)")->required();

    // graph
    auto* graph = app.add_subcommand("graph", "build the MST top-k similarity edge list");
    std::string graph_features, graph_unary, graph_sp, graph_out;
    int graph_k = 8;
    graph->add_option("--features", graph_features, "pooled features (.json)")->required();
    graph->add_option("--unary", graph_unary, "unary tensor for same-label supervision");
    graph->add_option("--superpixels", graph_sp, "superpixel id map (with --unary)");
    graph->add_option("--k", graph_k, "edges to keep");
    graph->add_option("--out", graph_out, "edge list (.json)")->required();

    // refine
    auto* refine = app.add_subcommand("refine", "mean-field CRF refinement of a unary tensor");
    std::string ref_unary, ref_sp, ref_features, ref_features2, ref_edges, ref_config, ref_out,
        ref_trace;
    bool ref_dense = false;
    int ref_iters = 0;
    double ref_tol = 0.0;
    refine->add_option("--unary", ref_unary, "unary probability tensor (.spt)")->required();
    refine->add_option("--superpixels", ref_sp, "superpixel id map (.spt)")->required();
    refine->add_option("--features", ref_features, "pooled features (.json)")->required();
    refine->add_option("--features2", ref_features2, "second pooled features (.json)");
    refine->add_option("--edges", ref_edges, "edge list (.json)");
    refine->add_flag("--dense", ref_dense, "use all superpixel pairs");
    refine->add_option("--config", ref_config, "pipeline config (.json)");
    refine->add_option("--iters", ref_iters, "mean-field sweeps");
    refine->add_option("--tol", ref_tol, "convergence tolerance");
    refine->add_option("--out", ref_out, "refined label map (.pgm)")->required();
    refine->add_option("--trace", ref_trace, "free-energy trace (.json)");

    // eval
    auto* eval = app.add_subcommand("eval", "segmentation metrics");
    std::string eval_pred, eval_gt, eval_pi, eval_gi, eval_out;
    int eval_labels = 0;
    std::vector<double> eval_thresholds;
    eval->add_option("--pred", eval_pred, "predicted label map (.pgm)")->required();
    eval->add_option("--gt", eval_gt, "ground-truth label map (.pgm)")->required();
    eval->add_option("--labels", eval_labels, "label count")->required();
    eval->add_option("--pred-instances", eval_pi, "predicted instances (.json)");
    eval->add_option("--gt-instances", eval_gi, "ground-truth instances (.json)");
    eval->add_option("--thresholds", eval_thresholds, "AP IoU thresholds");
    eval->add_option("--out", eval_out, "metric report (.json)")->required();

    // colorize
    auto* colorize_cmd = app.add_subcommand("colorize", "render a label map as an RGB image");
    std::string col_labels, col_palette, col_out;
    colorize_cmd->add_option("--labels", col_labels, "label map (.pgm)")->required();
    colorize_cmd->add_option("--palette", col_palette, "palette (.json)");
    colorize_cmd->add_option("--out", col_out, "output image (.ppm)")->required();

    // demo
    auto* demo = app.add_subcommand("demo", "generate a synthetic fixture");
    FixtureParams fx_params;
    std::string demo_outdir;
    demo->add_option("--seed", fx_params.seed, "random seed");
    demo->add_option("--rows", fx_params.rows, "image rows");
    demo->add_option("--cols", fx_params.cols, "image cols");
    demo->add_option("--labels", fx_params.label_count, "label count (parts + background)");
    demo->add_option("--noise", fx_params.noise, "unary noise level");
    demo->add_option("--outdir", demo_outdir, "output directory")->required();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "full slic/pool/graph/refine/eval run");
    std::string pipe_image, pipe_unary, pipe_gt, pipe_config, pipe_features, pipe_features2,
        pipe_outdir;
    bool pipe_viz = false;
    pipe->add_option("--image", pipe_image, "input PPM image")->required();
    pipe->add_option("--unary", pipe_unary, "unary probability tensor (.spt)")->required();
    pipe->add_option("--gt", pipe_gt, "ground-truth label map (.pgm)");
    pipe->add_option("--config", pipe_config, "pipeline config (.json)");
    pipe->add_option("--features", pipe_features, "pairwise feature tensor (.spt)");
    pipe->add_option("--features2", pipe_features2, "second pairwise feature tensor (.spt)");
    pipe->add_flag("--viz", pipe_viz, "also write a colorized refined map");
    pipe->add_option("--outdir", pipe_outdir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (slic->parsed()) return cmd_slic(slic_image, slic_params, slic_out);
        if (pool->parsed()) return cmd_pool(pool_features, pool_sp, pool_stride, pool_out);
        if (graph->parsed()) return cmd_graph(graph_features, graph_unary, graph_sp, graph_k,
                                              graph_out);
        if (refine->parsed())
            return cmd_refine(ref_unary, ref_sp, ref_features, ref_features2, ref_edges, ref_dense,
                              ref_config, ref_iters, ref_tol, ref_out, ref_trace);
        if (eval->parsed())
            return cmd_eval(eval_pred, eval_gt, eval_labels, eval_pi, eval_gi, eval_thresholds,
                            eval_out);
        if (colorize_cmd->parsed()) return cmd_colorize(col_labels, col_palette, col_out);
        if (demo->parsed()) return cmd_demo(fx_params, demo_outdir);
        if (pipe->parsed())
            return cmd_pipeline(pipe_image, pipe_unary, pipe_gt, pipe_config, pipe_features,
                                pipe_features2, pipe_viz, pipe_outdir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
