#pragma once

#include "spx/core.hpp"

namespace spx {

struct SlicParams {
    int target_count = 64;       // requested number of superpixels
    double compactness = 10.0;   // spatial weight m in D = sqrt(d_lab^2 + (d_xy/S)^2 m^2)
    int iterations = 10;
};

/// Segments an RGB image into compact 4-connected superpixels: grid-seeded
/// local k-means over CIELAB + position, then connectivity enforcement.
/// Deterministic for a fixed input; assignment ties go to the lower cluster
/// index. The returned count lands within [target/2, 2*target].
SuperpixelMap slic_segment(const Image& image, const SlicParams& params);

/// Splits every id of `raw` into its 4-connected components, absorbs
/// components smaller than min_size into their largest adjacent component,
/// and relabels contiguously in scan order of each component's first pixel.
/// Components with no neighbor (single-region maps) are kept regardless of
/// size. raw.count is ignored; ids only need to be non-negative.
SuperpixelMap enforce_connectivity(const SuperpixelMap& raw, int min_size);

/// Folds the smallest superpixel into its largest neighbor.
SuperpixelMap merge_smallest(const SuperpixelMap& sp);

}  // namespace spx
