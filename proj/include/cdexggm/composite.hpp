#pragma once

// Penalized composite-likelihood estimation for large p.
//
// The composite likelihood multiplies the conditional densities of each
// coordinate given the rest. For observation m and vertex j, with
// conditional precision k_mj = (K_m)_jj and r_mj = sum_{i != j} (K_m)_ji y_mi,
//     y_mj | rest ~ N(-r_mj / k_mj, 1 / k_mj).
// The estimator minimizes
//     Q(beta) = -l_c(beta) + n * lambda * (sum of |off-diagonal entries| of Q0, P_1..P_H).
// Off-diagonal coordinates have closed-form soft-threshold minimizers; the
// diagonal parameters of each vertex solve a small nonlinear system.

#include "cdexggm/broyden.hpp"
#include "cdexggm/model.hpp"

#include <vector>

namespace cdexggm {

struct PenaltyConfig {
    double lambda = 0.0;
    /// Hold every diagonal slope at zero and use the closed-form diagonal update.
    bool constant_diagonal = false;
    /// With constant_diagonal: solve for alpha_jj in closed form (true) or by
    /// Broyden on the same one-dimensional condition (false).
    bool closed_form_diagonal = true;
    /// Stop once no parameter moves more than this over a full cycle.
    double tol = 1e-5;
    std::size_t max_outer_sweeps = 1000;
    BroydenConfig broyden;
};

struct CompositeFitResult {
    PrecisionBasis estimate;
    /// Q(beta) at the start and after every cycle. Non-increasing.
    std::vector<double> objective_trace;
    bool converged = false;
    std::size_t sweeps = 0;
    double lambda = 0.0;
    /// Off-diagonal upper-triangle entries (matrix, i < j) that are nonzero.
    std::vector<Coordinate> active_set;
    /// -l_c at the estimate, including the (np/2) log 2 pi constant.
    double neg_loglik = 0.0;

    std::size_t df() const noexcept { return active_set.size(); }
};

struct ConditionalMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Conditional mean and variance of y_j given the other coordinates of
/// `y_row`. Throws DomainError when the conditional precision is not positive.
ConditionalMoments conditional_moments(const PrecisionBasis& basis, const Vector& covariate_row, std::size_t j,
                                       const Vector& y_row);

/// -l_c with the constant (np/2) log 2 pi included.
double neg_composite_loglik(const PrecisionBasis& basis, const Dataset& data);

/// Q(beta) = -l_c + n * lambda * ||off-diagonals||_1.
double penalized_objective(const PrecisionBasis& basis, const Dataset& data, double lambda);

/// sign(z) * max(|z| - lambda, 0).
inline double soft_threshold(double z, double lambda) noexcept {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

/// Partial derivatives of Q with respect to the diagonal parameters, ordered
/// alpha_11..alpha_pp, then the diagonal of P_1, then P_2, ...
Vector diagonal_residuals(const PrecisionBasis& basis, const Dataset& data);

/// Gradient of -l_c in the packed parameter order (unnormalized).
Vector composite_gradient(const PrecisionBasis& basis, const Dataset& data);

/// Working state of the coordinate descent: the current basis together with
/// the conditional precisions k_mj and partial sums r_mj for every
/// observation. Holds a reference to `data`, which must outlive it.
class CompositeState {
public:
    CompositeState(const Dataset& data, PrecisionBasis basis);

    const PrecisionBasis& basis() const noexcept { return basis_; }
    const Dataset& data() const noexcept { return *data_; }

    /// Pieces of the normalized coordinate gradient for off-diagonal `target`:
    /// gradient = (1/n) d(-l_c)/d beta_u = zero_gradient + value * curvature,
    /// where zero_gradient is the gradient with beta_u set to zero.
    struct OffDiagonalTerms {
        double zero_gradient = 0.0;
        double curvature = 0.0;
        double gradient = 0.0;
    };
    OffDiagonalTerms off_diagonal_terms(const Coordinate& target) const;

    /// Exact minimizer of Q along `target` with every other parameter fixed.
    double off_diagonal_update(const Coordinate& target, double lambda) const;
    void set_off_diagonal(const Coordinate& target, double value);

    /// Diagonal parameters (alpha_jj, [theta_jj]_1..H) of vertex j.
    Vector diagonal_parameters(std::size_t j) const;
    /// Printed partial derivatives of Q for vertex j evaluated at `params`.
    Vector vertex_residual(std::size_t j, const Vector& params) const;
    /// True iff `params` gives a positive conditional precision at every observation.
    bool vertex_feasible(const Vector& params) const;
    void set_diagonal(std::size_t j, const Vector& params);

    /// Positive root of the alpha_jj stationarity condition when every
    /// diagonal slope is zero.
    double constant_variance_alpha(std::size_t j) const;

    double neg_loglik() const;
    double off_diagonal_l1() const;

private:
    const Dataset* data_;
    PrecisionBasis basis_;
    Matrix partial_;    // r_mj
    Matrix precision_;  // k_mj
};

/// alpha_jj from the constant-variance closed form at the current state.
double update_alpha_diag_constant_variance(std::size_t j, const CompositeState& state);

/// Q0 = diag(n / sum_m y_mj^2), zero slopes.
PrecisionBasis default_composite_init(const Dataset& data);

/// Smallest lambda for which every off-diagonal stays at zero: the largest
/// |(1/n) d(-l_c)/d beta_u| over off-diagonals when all of them are zero.
double lambda_max(const Dataset& data);

/// Largest violation of the lasso subgradient conditions over off-diagonal
/// coordinates, on the (1/n)-normalized scale.
double kkt_violation(const PrecisionBasis& basis, const Dataset& data, double lambda);

CompositeFitResult fit_penalized(const Dataset& data, const PenaltyConfig& config, const PrecisionBasis& init);
CompositeFitResult fit_penalized(const Dataset& data, const PenaltyConfig& config);

}  // namespace cdexggm
