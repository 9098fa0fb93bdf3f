#include "spx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace spx {

namespace {

void check_same_shape(const LabelMap& a, const LabelMap& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

IouResult miou(const LabelMap& pred, const LabelMap& gt, int label_count) {
    check_same_shape(pred, gt, "miou");
    check_labels(pred, label_count);
    check_labels(gt, label_count);
    std::vector<long long> inter(label_count, 0), pred_n(label_count, 0), gt_n(label_count, 0);
    for (size_t p = 0; p < pred.labels.size(); ++p) {
        ++pred_n[pred.labels[p]];
        ++gt_n[gt.labels[p]];
        if (pred.labels[p] == gt.labels[p]) ++inter[pred.labels[p]];
    }
    IouResult out;
    out.per_class.assign(label_count, -1.0);
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < label_count; ++c) {
        long long uni = pred_n[c] + gt_n[c] - inter[c];
        if (uni == 0) continue;  // absent from both maps: excluded from the mean
        out.per_class[c] = static_cast<double>(inter[c]) / static_cast<double>(uni);
        sum += out.per_class[c];
        ++defined;
    }
    out.mean = defined > 0 ? sum / defined : 0.0;
    return out;
}

double pixel_accuracy(const LabelMap& pred, const LabelMap& gt) {
    check_same_shape(pred, gt, "pixel_accuracy");
    long long hits = 0;
    for (size_t p = 0; p < pred.labels.size(); ++p)
        if (pred.labels[p] == gt.labels[p]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.labels.size());
}

double mask_iou(const LabelMap& a, const LabelMap& b) {
    check_same_shape(a, b, "mask_iou");
    long long inter = 0, uni = 0;
    for (size_t p = 0; p < a.labels.size(); ++p) {
        bool ia = a.labels[p] != 0, ib = b.labels[p] != 0;
        inter += ia && ib;
        uni += ia || ib;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ApResult ap_r(const InstanceSet& pred, const InstanceSet& gt, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
        throw std::invalid_argument("ap_r: threshold must lie in (0,1)");
    auto reject_empty = [](const InstanceSet& set, const char* what) {
        for (const Instance& inst : set)
            if (std::none_of(inst.mask.labels.begin(), inst.mask.labels.end(),
                             [](int32_t v) { return v != 0; }))
                throw std::invalid_argument(std::string("ap_r: empty ") + what + " mask");
    };
    reject_empty(pred, "prediction");
    reject_empty(gt, "ground-truth");

    std::set<int> classes;
    for (const Instance& g : gt) classes.insert(g.class_id);

    ApResult out;
    double sum = 0.0;
    for (int cls : classes) {
        std::vector<int> gt_idx, pred_idx;
        for (size_t i = 0; i < gt.size(); ++i)
            if (gt[i].class_id == cls) gt_idx.push_back(static_cast<int>(i));
        for (size_t i = 0; i < pred.size(); ++i)
            if (pred[i].class_id == cls) pred_idx.push_back(static_cast<int>(i));
        // descending score, stable so equal scores keep input order
        std::stable_sort(pred_idx.begin(), pred_idx.end(),
                         [&](int a, int b) { return pred[a].score > pred[b].score; });

        const int n_gt = static_cast<int>(gt_idx.size());
        std::vector<bool> matched(gt_idx.size(), false);
        std::vector<int> tp_flags;
        for (int pi : pred_idx) {
            int best_g = -1;
            double best_iou = 0.0;
            for (size_t g = 0; g < gt_idx.size(); ++g) {
                if (matched[g]) continue;
                double iou = mask_iou(pred[pi].mask, gt[gt_idx[g]].mask);
                if (iou >= iou_threshold && iou > best_iou) {  // IoU ties keep the earlier GT
                    best_iou = iou;
                    best_g = static_cast<int>(g);
                }
            }
            if (best_g >= 0) {
                matched[best_g] = true;
                tp_flags.push_back(1);
            } else {
                tp_flags.push_back(0);
            }
        }

        // all-point interpolation: running max of precision from the right
        double ap = 0.0;
        int cum_tp = 0;
        std::vector<double> precision(tp_flags.size());
        for (size_t k = 0; k < tp_flags.size(); ++k) {
            cum_tp += tp_flags[k];
            precision[k] = static_cast<double>(cum_tp) / static_cast<double>(k + 1);
        }
        double envelope = 0.0;
        for (size_t k = tp_flags.size(); k-- > 0;) {
            envelope = std::max(envelope, precision[k]);
            if (tp_flags[k]) ap += envelope / n_gt;  // each TP adds 1/n_gt recall
        }
        out.per_class[cls] = ap;
        sum += ap;
    }
    out.mean = classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
    return out;
}

MetricReport evaluate(const LabelMap& pred, const LabelMap& gt, int label_count,
                      const InstanceSet* pred_instances, const InstanceSet* gt_instances,
                      const std::vector<double>& thresholds) {
    MetricReport report;
    IouResult iou = miou(pred, gt, label_count);
    report.per_class_iou = iou.per_class;
    report.mean_iou = iou.mean;
    report.pixel_accuracy = pixel_accuracy(pred, gt);
    if (pred_instances && gt_instances)
        for (double thr : thresholds)
            report.ap_r[thr] = ap_r(*pred_instances, *gt_instances, thr).mean;
    return report;
}

}  // namespace spx
