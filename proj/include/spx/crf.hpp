#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "spx/core.hpp"
#include "spx/io.hpp"

namespace spx {

/// CRF hyperparameters. Position scales are in pixels; sigma_beta is in
/// z-scored feature units (features are standardized per dimension before
/// kernel evaluation).
struct CrfParams {
    double alpha_u = 1.0;   // unary strength
    double epsilon = 1e-8;  // log guard in the unary
    double w1 = 1.0;        // appearance kernel weight
    double w2 = 1.0;        // smoothness kernel weight
    double sigma_alpha = 1.0;
    double sigma_beta = 1.0;
    double sigma_gamma = 1.0;

    /// Defaults with position scales tied to the image diagonal:
    /// sigma_alpha = 0.2 diag, sigma_beta = 1, sigma_gamma = 0.05 diag.
    static CrfParams for_image(int rows, int cols);

    void validate() const;
};

/// One Potts pairwise term: precomputed kernel values on an edge set.
struct PairwiseTerm {
    bool dense = false;        // built over all pairs rather than a sparse edge list
    std::vector<Edge> edges;   // weight holds the kernel value k_ij >= 0, i < j
    double potts_weight = 1.0;
};

/// Energy model over one discrete variable per superpixel.
struct CrfModel {
    int label_count = 0;
    Matrix unary;  // var_count x label_count, finite
    std::vector<PairwiseTerm> terms;

    int var_count() const { return unary.rows(); }
};

/// psi_i(l) = size_i * (-alpha_u * log(prob(i,l) + epsilon)). Probabilities
/// must lie in [0,1].
Matrix unary_energy(const Matrix& probs, const std::vector<int>& sizes, const CrfParams& params);

/// Two-kernel Gaussian sum:
/// w1 exp(-|dp|^2/2sa^2 - |dz|^2/2sb^2) + w2 exp(-|dp|^2/2sg^2).
double pairwise_kernel(const std::array<double, 2>& pi, const std::array<double, 2>& pj,
                       const std::vector<double>& zi, const std::vector<double>& zj,
                       const CrfParams& params);

/// Evaluates the kernel on every requested superpixel pair. Features are
/// z-score normalized per dimension first; positions stay in pixels. Passing
/// no edge list builds the dense (all-pairs) term.
PairwiseTerm build_pairwise_term(const SuperpixelFeatures& spf, const CrfParams& params,
                                 const std::optional<EdgeList>& edges,
                                 double potts_weight = 1.0);

struct EnergyBreakdown {
    double unary = 0.0;
    std::vector<double> pairwise;  // one entry per term
    double total = 0.0;
};

EnergyBreakdown total_energy(const CrfModel& model, const std::vector<int>& assignment);

struct MeanFieldResult {
    Matrix beliefs;  // var_count x label_count, rows sum to 1
    int sweeps = 0;
    bool converged = false;
    std::vector<double> free_energy;  // after each sweep
};

/// Sequential coordinate mean field: beliefs start at the normalized unary
/// softmax, then each variable in ascending index absorbs the expected Potts
/// penalty from its neighbors and renormalizes. Each update is the exact
/// coordinate minimizer, so the free energy never increases. Stops when the
/// largest belief change over a sweep drops below tol.
MeanFieldResult mean_field_infer(const CrfModel& model, int max_iters = 10, double tol = 1e-6);

/// Mean-field objective: expected energy minus entropy of the beliefs.
double mean_field_free_energy(const CrfModel& model, const Matrix& beliefs);

/// Per-variable argmax with ties to the lowest label.
std::vector<int> map_labels(const Matrix& beliefs);

/// Fills each superpixel with its variable's label.
LabelMap broadcast_labels(const std::vector<int>& labels, const SuperpixelMap& sp);

/// Exhaustive minimizer. Guarded to label_count^var_count <= 2^20; returns
/// the lexicographically smallest assignment among energy ties.
std::pair<std::vector<int>, double> brute_force_map(const CrfModel& model);

}  // namespace spx
