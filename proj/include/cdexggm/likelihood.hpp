#pragma once

// Exact Gaussian likelihood of the covariate-dependent model and its
// coordinate-wise maximum-likelihood fitter, intended for small p.

#include "cdexggm/model.hpp"

#include <optional>
#include <vector>

namespace cdexggm {

struct MleOptions {
    /// Stop once no coordinate moves more than this over a full sweep.
    double tol = 1e-6;
    std::size_t max_sweeps = 500;
    /// Step halvings tried before a coordinate visit is abandoned.
    std::size_t max_halvings = 20;
    /// A stopped fit only counts as converged if max |score| / n is below this.
    double gradient_tol = 1e-4;
    bool compute_covariance = true;
};

struct MleFitResult {
    PrecisionBasis estimate;
    /// Log-likelihood at the start and after every sweep. Non-decreasing.
    std::vector<double> loglik_trace;
    bool converged = false;
    std::size_t sweeps = 0;
    double max_abs_score = 0.0;
    std::size_t observations = 0;
    /// Inverse information at the estimate; present when the fit converged
    /// and covariance was requested.
    std::optional<Matrix> asymptotic_cov;
};

/// -(np/2) log 2 pi + 1/2 sum_m log|K_m| - 1/2 sum_m y_m' K_m y_m.
/// Throws DomainError naming the first observation whose K_m is not PD.
double joint_log_likelihood(const PrecisionBasis& basis, const Dataset& data);

/// Gradient of joint_log_likelihood in the packed parameter order.
Vector score(const ParameterVector& beta, const Dataset& data);

/// Expected information sum_m (1/2) x_m,k x_m,l tr(T^u S_m T^v S_m) over the
/// packed parameters, with x_m,0 = 1 and S_m = K_m^-1.
Matrix information_matrix(const ParameterVector& beta, const CovariateDesign& design);

/// Coordinate-wise Fisher-type updates with a squared-score damping term in
/// the denominator. Every visit is guarded by step halving so the likelihood
/// never decreases.
MleFitResult fit_mle(const Dataset& data, const PrecisionBasis& init, const MleOptions& options = {});
/// Starts from Q0 = I and zero slopes.
MleFitResult fit_mle(const Dataset& data, const MleOptions& options = {});

/// Inverse information at the estimate: the finite-sample covariance of the
/// estimate. Throws SingularityError if the information is not invertible.
Matrix asymptotic_covariance(const MleFitResult& fit, const CovariateDesign& design);

namespace detail {

/// tr(A T^u) for the indicator matrix of entry (i, j).
inline double trace_with_indicator(const Matrix& a, std::size_t i, std::size_t j) {
    return i == j ? a(i, i) : 2.0 * a(i, j);
}

/// tr(T^u A T^v A) for symmetric A and indicators of (a, b) and (c, d).
double trace_indicator_pair(const Matrix& a, std::size_t ua, std::size_t ub, std::size_t va, std::size_t vb);

}  // namespace detail

}  // namespace cdexggm
