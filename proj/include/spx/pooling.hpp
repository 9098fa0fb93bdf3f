#pragma once

#include "spx/core.hpp"

namespace spx {

/// Regular receptive-field layout mapping feature cells onto image pixels:
/// cell j covers stride pixels and is centered at (j + 0.5) * stride.
struct ReceptiveFieldGrid {
    double stride = 1.0;
};

/// Averages the feature vector of each pixel's nearest receptive-field cell
/// over every superpixel. Each pixel contributes once, so cells shared by
/// several pixels are counted once per pixel. Nearest-cell ties break toward
/// the lower cell index. The feature map must span ceil(rows/stride) x
/// ceil(cols/stride) cells.
SuperpixelFeatures pool_superpixels(const Tensor& features, const SuperpixelMap& sp,
                                    const ReceptiveFieldGrid& grid);

/// Unweighted mean of the per-superpixel feature vectors.
std::vector<double> global_average(const SuperpixelFeatures& spf);

/// Elementwise maximum of per-scale superpixel class scores.
Matrix sp_cam(const std::vector<Matrix>& per_scale_scores);

}  // namespace spx
