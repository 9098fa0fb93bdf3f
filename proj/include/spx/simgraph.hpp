#pragma once

#include <array>
#include <optional>

#include "spx/core.hpp"
#include "spx/io.hpp"
#include "spx/learn.hpp"

namespace spx {

/// Symmetric pair descriptor: feature distance, centroid distance over the
/// image diagonal, and relative size difference. All components >= 0.
using PairFeature = std::array<double, 3>;

PairFeature pair_features(const SuperpixelFeatures& spf, int i, int j);

/// Same-label probability from a 3-input logistic model, used as the
/// similarity weight between two superpixels.
double predict_same_label(const LinearModel& model, const PairFeature& f);

/// Full N x N similarity matrix from pair features. With a model, entries
/// are predict_same_label; without one, exp(-sum of pair-feature components)
/// is the fallback score. Diagonal is 1.
Matrix similarity_matrix(const SuperpixelFeatures& spf,
                         const std::optional<LinearModel>& model);

/// Minimum spanning tree of the complete graph under dissimilarity
/// 1 - similarity, keeping the min(k, N-1) most-similar tree edges. Edges
/// come back sorted by descending similarity, ties in (i, j) order.
EdgeList mst_topk(const Matrix& similarity, int k);

}  // namespace spx
