#include "spx/learn.hpp"

#include <algorithm>
#include <cmath>

namespace spx {

std::vector<double> linear_forward(const LinearModel& model, const std::vector<double>& x) {
    const int d = model.input_dim(), c = model.output_dim();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("linear_forward: input dim mismatch");
    std::vector<double> logits(c, 0.0);
    for (int i = 0; i < c; ++i) {
        double acc = model.weights.at(i, d);  // bias
        for (int j = 0; j < d; ++j) acc += model.weights.at(i, j) * x[j];
        logits[i] = acc;
    }
    return logits;
}

double sigmoid(double logit) {
    if (logit >= 0) return 1.0 / (1.0 + std::exp(-logit));
    double e = std::exp(logit);
    return e / (1.0 + e);
}

namespace {

// BCE from a logit: softplus(l) - l*t, evaluated without overflow.
double bce_from_logit(double logit, int target) {
    double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
    return softplus - logit * target;
}

}  // namespace

std::pair<double, std::vector<double>> sum_bce_loss(const std::vector<double>& logits,
                                                    const std::vector<int>& targets) {
    if (logits.size() != targets.size())
        throw std::invalid_argument("sum_bce_loss: length mismatch");
    double loss = 0.0;
    std::vector<double> grad(logits.size());
    for (size_t c = 0; c < logits.size(); ++c) {
        loss += bce_from_logit(logits[c], targets[c]);
        grad[c] = sigmoid(logits[c]) - targets[c];
    }
    return {loss, std::move(grad)};
}

double mask_bce_loss(const Matrix& predicted, const Matrix& target) {
    if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
        throw std::invalid_argument("mask_bce_loss: shape mismatch");
    constexpr double kClamp = 1e-7;
    double loss = 0.0;
    for (size_t i = 0; i < predicted.data().size(); ++i) {
        if (!std::isfinite(predicted.data()[i]))
            throw std::invalid_argument("mask_bce_loss: non-finite probability");
        double p = std::clamp(predicted.data()[i], kClamp, 1.0 - kClamp);
        double y = target.data()[i];
        if (y != 0.0 && y != 1.0) throw std::invalid_argument("mask_bce_loss: non-binary target");
        loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return loss / static_cast<double>(predicted.data().size());
}

double logistic_loss(const LinearModel& model, const std::vector<LabeledSample>& samples,
                     double l2) {
    if (model.output_dim() != 1) throw std::invalid_argument("logistic_loss: model must have C=1");
    double loss = 0.0;
    for (const LabeledSample& s : samples)
        loss += bce_from_logit(linear_forward(model, s.x)[0], s.y);
    loss /= static_cast<double>(samples.size());
    const int d = model.input_dim();
    for (int j = 0; j < d; ++j) loss += 0.5 * l2 * model.weights.at(0, j) * model.weights.at(0, j);
    return loss;
}

Matrix logistic_grad(const LinearModel& model, const std::vector<LabeledSample>& samples,
                     double l2) {
    if (model.output_dim() != 1) throw std::invalid_argument("logistic_grad: model must have C=1");
    const int d = model.input_dim();
    Matrix grad(1, d + 1);
    for (const LabeledSample& s : samples) {
        double err = sigmoid(linear_forward(model, s.x)[0]) - s.y;
        for (int j = 0; j < d; ++j) grad.at(0, j) += err * s.x[j];
        grad.at(0, d) += err;
    }
    for (double& g : grad.data()) g /= static_cast<double>(samples.size());
    for (int j = 0; j < d; ++j) grad.at(0, j) += l2 * model.weights.at(0, j);
    return grad;
}

FitResult logistic_fit(const std::vector<LabeledSample>& samples, const TrainConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("logistic_fit: no samples");
    if (cfg.learning_rate <= 0 || cfg.steps < 1 || cfg.l2 < 0)
        throw std::invalid_argument("logistic_fit: bad training config");
    const int d = static_cast<int>(samples.front().x.size());
    bool has0 = false, has1 = false;
    for (const LabeledSample& s : samples) {
        if (static_cast<int>(s.x.size()) != d)
            throw std::invalid_argument("logistic_fit: inconsistent feature dims");
        if (s.y == 0)
            has0 = true;
        else if (s.y == 1)
            has1 = true;
        else
            throw std::invalid_argument("logistic_fit: labels must be 0 or 1");
    }
    if (!has0 || !has1) throw std::invalid_argument("logistic_fit: need samples of both classes");

    FitResult out;
    out.model.weights = Matrix(1, d + 1, 0.0);
    out.loss_trace.reserve(cfg.steps + 1);
    for (int step = 0; step < cfg.steps; ++step) {
        out.loss_trace.push_back(logistic_loss(out.model, samples, cfg.l2));
        Matrix grad = logistic_grad(out.model, samples, cfg.l2);
        for (size_t i = 0; i < grad.data().size(); ++i)
            out.model.weights.data()[i] -= cfg.learning_rate * grad.data()[i];
    }
    out.loss_trace.push_back(logistic_loss(out.model, samples, cfg.l2));
    return out;
}

}  // namespace spx
