#include "spx/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace spx {

CrfParams CrfParams::for_image(int rows, int cols) {
    CrfParams p;
    double diag = std::sqrt(static_cast<double>(rows) * rows + static_cast<double>(cols) * cols);
    p.sigma_alpha = 0.2 * diag;
    p.sigma_beta = 1.0;
    p.sigma_gamma = 0.05 * diag;
    return p;
}

void CrfParams::validate() const {
    if (!(alpha_u > 0)) throw std::invalid_argument("crf params: alpha_u must be positive");
    if (!(epsilon > 0)) throw std::invalid_argument("crf params: epsilon must be positive");
    if (w1 < 0 || w2 < 0) throw std::invalid_argument("crf params: kernel weights must be >= 0");
    if (!(sigma_alpha > 0) || !(sigma_beta > 0) || !(sigma_gamma > 0))
        throw std::invalid_argument("crf params: sigmas must be positive");
}

Matrix unary_energy(const Matrix& probs, const std::vector<int>& sizes, const CrfParams& params) {
    params.validate();
    if (static_cast<int>(sizes.size()) != probs.rows())
        throw std::invalid_argument("unary_energy: sizes/probs row mismatch");
    Matrix out(probs.rows(), probs.cols());
    for (int i = 0; i < probs.rows(); ++i) {
        if (sizes[i] < 1) throw std::invalid_argument("unary_energy: non-positive size");
        for (int l = 0; l < probs.cols(); ++l) {
            double z = probs.at(i, l);
            if (!(z >= 0.0 && z <= 1.0))
                throw std::invalid_argument("unary_energy: probability outside [0,1]");
            out.at(i, l) = sizes[i] * (-params.alpha_u * std::log(z + params.epsilon));
        }
    }
    return out;
}

double pairwise_kernel(const std::array<double, 2>& pi, const std::array<double, 2>& pj,
                       const std::vector<double>& zi, const std::vector<double>& zj,
                       const CrfParams& params) {
    if (zi.size() != zj.size()) throw std::invalid_argument("pairwise_kernel: feature dim mismatch");
    double dp2 = (pi[0] - pj[0]) * (pi[0] - pj[0]) + (pi[1] - pj[1]) * (pi[1] - pj[1]);
    double dz2 = 0.0;
    for (size_t d = 0; d < zi.size(); ++d) dz2 += (zi[d] - zj[d]) * (zi[d] - zj[d]);
    double appearance = std::exp(-dp2 / (2.0 * params.sigma_alpha * params.sigma_alpha) -
                                 dz2 / (2.0 * params.sigma_beta * params.sigma_beta));
    double smoothness = std::exp(-dp2 / (2.0 * params.sigma_gamma * params.sigma_gamma));
    return params.w1 * appearance + params.w2 * smoothness;
}

PairwiseTerm build_pairwise_term(const SuperpixelFeatures& spf, const CrfParams& params,
                                 const std::optional<EdgeList>& edges, double potts_weight) {
    params.validate();
    if (potts_weight < 0) throw std::invalid_argument("build_pairwise_term: negative Potts weight");
    const int n = spf.count;

    // z-score per dimension so sigma_beta = 1 spans one feature std dev;
    // constant dimensions are dropped to zero.
    Matrix z(n, spf.dim);
    for (int d = 0; d < spf.dim; ++d) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += spf.features.at(i, d);
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            double diff = spf.features.at(i, d) - mean;
            var += diff * diff;
        }
        double sd = std::sqrt(var / n);
        if (sd > 0)
            for (int i = 0; i < n; ++i) z.at(i, d) = (spf.features.at(i, d) - mean) / sd;
    }
    auto feature_row = [&](int i) {
        return std::vector<double>(z.data().begin() + static_cast<size_t>(i) * spf.dim,
                                   z.data().begin() + static_cast<size_t>(i + 1) * spf.dim);
    };

    PairwiseTerm term;
    term.potts_weight = potts_weight;
    if (!edges) {
        term.dense = true;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                term.edges.push_back({i, j, pairwise_kernel(spf.positions[i], spf.positions[j],
                                                            feature_row(i), feature_row(j), params)});
    } else {
        std::set<std::pair<int, int>> seen;
        for (const Edge& e : edges->edges) {
            if (e.i < 0 || e.j <= e.i || e.j >= n)
                throw std::invalid_argument("build_pairwise_term: edge index out of range");
            if (!seen.insert({e.i, e.j}).second)
                throw std::invalid_argument("build_pairwise_term: duplicate edge");
            term.edges.push_back({e.i, e.j, pairwise_kernel(spf.positions[e.i], spf.positions[e.j],
                                                            feature_row(e.i), feature_row(e.j),
                                                            params)});
        }
    }
    return term;
}

namespace {

void check_model(const CrfModel& model) {
    if (model.label_count < 1 || model.unary.cols() != model.label_count)
        throw std::invalid_argument("crf model: label count does not match unary width");
    if (!model.unary.all_finite()) throw std::invalid_argument("crf model: non-finite unary");
    for (const PairwiseTerm& t : model.terms) {
        if (t.potts_weight < 0) throw std::invalid_argument("crf model: negative Potts weight");
        for (const Edge& e : t.edges) {
            if (e.i < 0 || e.j <= e.i || e.j >= model.var_count())
                throw std::invalid_argument("crf model: edge index out of range");
            if (!(e.weight >= 0) || !std::isfinite(e.weight))
                throw std::invalid_argument("crf model: kernel values must be finite and >= 0");
        }
    }
}

void check_assignment(const CrfModel& model, const std::vector<int>& assignment) {
    if (static_cast<int>(assignment.size()) != model.var_count())
        throw std::invalid_argument("assignment length does not match variable count");
    for (int v : assignment)
        if (v < 0 || v >= model.label_count)
            throw std::invalid_argument("assignment label out of range");
}

// Per-variable neighbor lists with combined coefficient potts_weight * k_ij.
std::vector<std::vector<std::pair<int, double>>> neighbor_lists(const CrfModel& model) {
    std::vector<std::vector<std::pair<int, double>>> nb(model.var_count());
    for (const PairwiseTerm& t : model.terms)
        for (const Edge& e : t.edges) {
            double coeff = t.potts_weight * e.weight;
            nb[e.i].push_back({e.j, coeff});
            nb[e.j].push_back({e.i, coeff});
        }
    return nb;
}

void normalize_from_energies(const std::vector<double>& energy, Matrix& beliefs, int i) {
    const int labels = beliefs.cols();
    double lowest = *std::min_element(energy.begin(), energy.end());
    double sum = 0.0;
    for (int l = 0; l < labels; ++l) {
        double b = std::exp(-(energy[l] - lowest));
        beliefs.at(i, l) = b;
        sum += b;
    }
    for (int l = 0; l < labels; ++l) beliefs.at(i, l) /= sum;
}

}  // namespace

EnergyBreakdown total_energy(const CrfModel& model, const std::vector<int>& assignment) {
    check_model(model);
    check_assignment(model, assignment);
    EnergyBreakdown out;
    for (int i = 0; i < model.var_count(); ++i) out.unary += model.unary.at(i, assignment[i]);
    for (const PairwiseTerm& t : model.terms) {
        double e = 0.0;
        for (const Edge& edge : t.edges)
            if (assignment[edge.i] != assignment[edge.j]) e += edge.weight;
        out.pairwise.push_back(t.potts_weight * e);
    }
    out.total = out.unary;
    for (double e : out.pairwise) out.total += e;
    return out;
}

double mean_field_free_energy(const CrfModel& model, const Matrix& beliefs) {
    double expected = 0.0;
    for (int i = 0; i < model.var_count(); ++i)
        for (int l = 0; l < model.label_count; ++l)
            expected += beliefs.at(i, l) * model.unary.at(i, l);
    for (const PairwiseTerm& t : model.terms)
        for (const Edge& e : t.edges) {
            double agree = 0.0;
            for (int l = 0; l < model.label_count; ++l)
                agree += beliefs.at(e.i, l) * beliefs.at(e.j, l);
            expected += t.potts_weight * e.weight * (1.0 - agree);
        }
    double neg_entropy = 0.0;
    for (double b : beliefs.data())
        if (b > 0) neg_entropy += b * std::log(b);
    return expected + neg_entropy;
}

MeanFieldResult mean_field_infer(const CrfModel& model, int max_iters, double tol) {
    check_model(model);
    if (max_iters < 1) throw std::invalid_argument("mean_field_infer: max_iters < 1");
    const int n = model.var_count(), labels = model.label_count;

    MeanFieldResult res;
    res.beliefs = Matrix(n, labels);
    std::vector<double> energy(labels);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < labels; ++l) energy[l] = model.unary.at(i, l);
        normalize_from_energies(energy, res.beliefs, i);
    }

    auto nb = neighbor_lists(model);
    for (int sweep = 0; sweep < max_iters; ++sweep) {
        double max_change = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < labels; ++l) {
                double e = model.unary.at(i, l);
                for (const auto& [j, coeff] : nb[i]) e += coeff * (1.0 - res.beliefs.at(j, l));
                energy[l] = e;
            }
            std::vector<double> before(labels);
            for (int l = 0; l < labels; ++l) before[l] = res.beliefs.at(i, l);
            normalize_from_energies(energy, res.beliefs, i);
            for (int l = 0; l < labels; ++l)
                max_change = std::max(max_change, std::abs(res.beliefs.at(i, l) - before[l]));
        }
        ++res.sweeps;
        res.free_energy.push_back(mean_field_free_energy(model, res.beliefs));
        if (max_change < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

std::vector<int> map_labels(const Matrix& beliefs) {
    std::vector<int> labels(beliefs.rows(), 0);
    for (int i = 0; i < beliefs.rows(); ++i) {
        double best = beliefs.at(i, 0);
        for (int l = 1; l < beliefs.cols(); ++l)
            if (beliefs.at(i, l) > best) {  // ties keep the lowest label
                best = beliefs.at(i, l);
                labels[i] = l;
            }
    }
    return labels;
}

LabelMap broadcast_labels(const std::vector<int>& labels, const SuperpixelMap& sp) {
    if (static_cast<int>(labels.size()) != sp.count)
        throw std::invalid_argument("broadcast_labels: label count does not match superpixels");
    LabelMap out(sp.rows, sp.cols);
    for (size_t p = 0; p < sp.ids.size(); ++p) out.labels[p] = labels[sp.ids[p]];
    return out;
}

std::pair<std::vector<int>, double> brute_force_map(const CrfModel& model) {
    check_model(model);
    const int n = model.var_count(), labels = model.label_count;
    double states = std::pow(static_cast<double>(labels), n);
    if (states > static_cast<double>(1 << 20))
        throw std::invalid_argument("brute_force_map: state space exceeds 2^20");

    // same accumulation order as total_energy, sans per-call validation
    auto evaluate = [&](const std::vector<int>& v) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) e += model.unary.at(i, v[i]);
        for (const PairwiseTerm& t : model.terms) {
            double p = 0.0;
            for (const Edge& edge : t.edges)
                if (v[edge.i] != v[edge.j]) p += edge.weight;
            e += t.potts_weight * p;
        }
        return e;
    };

    std::vector<int> current(n, 0);
    std::vector<int> best = current;
    double best_energy = evaluate(current);
    // Odometer over assignments in lexicographic order; strict improvement
    // keeps the lexicographically smallest minimizer.
    while (true) {
        int pos = n - 1;
        while (pos >= 0 && current[pos] == labels - 1) current[pos--] = 0;
        if (pos < 0) break;
        ++current[pos];
        double e = evaluate(current);
        if (e < best_energy) {
            best_energy = e;
            best = current;
        }
    }
    return {best, best_energy};
}

}  // namespace spx
