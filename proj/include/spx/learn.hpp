#pragma once

#include <utility>
#include <vector>

#include "spx/core.hpp"

namespace spx {

/// Affine map: C x (D+1) weights, last column is the bias.
struct LinearModel {
    Matrix weights;  // C rows, D+1 cols

    int input_dim() const { return weights.cols() - 1; }
    int output_dim() const { return weights.rows(); }
};

struct TrainConfig {
    double learning_rate = 0.1;
    int steps = 1000;
    double l2 = 1e-4;  // applied to weights, not biases
};

struct LabeledSample {
    std::vector<double> x;
    int y = 0;  // {0,1}
};

/// logits = W [x; 1].
std::vector<double> linear_forward(const LinearModel& model, const std::vector<double>& x);

double sigmoid(double logit);

/// Sum over classes of binary cross-entropy from logits, in the
/// log-sum-exp-stable form; grad_c = sigmoid(logit_c) - target_c.
std::pair<double, std::vector<double>> sum_bce_loss(const std::vector<double>& logits,
                                                    const std::vector<int>& targets);

/// Mean binary cross-entropy between probabilities (clamped to
/// [1e-7, 1 - 1e-7]) and a {0,1} target mask of the same shape.
double mask_bce_loss(const Matrix& predicted, const Matrix& target);

/// Mean BCE over the dataset plus (l2/2)*||weights||^2 (biases excluded), for
/// a single-output model.
double logistic_loss(const LinearModel& model, const std::vector<LabeledSample>& samples,
                     double l2);

/// Gradient of logistic_loss with respect to the weights, same layout.
Matrix logistic_grad(const LinearModel& model, const std::vector<LabeledSample>& samples,
                     double l2);

struct FitResult {
    LinearModel model;
    std::vector<double> loss_trace;  // loss before each step, then final
};

/// Full-batch gradient descent from zero weights. Requires at least one
/// sample of each class.
FitResult logistic_fit(const std::vector<LabeledSample>& samples, const TrainConfig& cfg);

}  // namespace spx
