#pragma once

#include <map>
#include <utility>
#include <vector>

#include "spx/core.hpp"
#include "spx/io.hpp"

namespace spx {

struct IouResult {
    std::vector<double> per_class;  // -1 for classes absent from both maps
    double mean = 0.0;              // over defined classes only
};

/// Intersection-over-union per class plus the unweighted mean. Classes with
/// an empty union in both maps are excluded from the mean.
IouResult miou(const LabelMap& pred, const LabelMap& gt, int label_count);

/// Fraction of pixels where pred equals gt.
double pixel_accuracy(const LabelMap& pred, const LabelMap& gt);

/// IoU of two binary masks.
double mask_iou(const LabelMap& a, const LabelMap& b);

struct ApResult {
    std::map<int, double> per_class;  // classes with at least one GT instance
    double mean = 0.0;
};

/// Region average precision at one mask-IoU threshold. Predictions are taken
/// in descending score order; each matches the unmatched same-class GT with
/// the highest IoU among those at or above the threshold (none: false
/// positive). AP is the area under the precision-recall curve with precision
/// made monotone from the right.
ApResult ap_r(const InstanceSet& pred, const InstanceSet& gt, double iou_threshold);

/// Full report over a threshold sweep.
MetricReport evaluate(const LabelMap& pred, const LabelMap& gt, int label_count,
                      const InstanceSet* pred_instances = nullptr,
                      const InstanceSet* gt_instances = nullptr,
                      const std::vector<double>& thresholds = {0.5, 0.6, 0.7, 0.8, 0.9});

}  // namespace spx
