#pragma once

// Wald tests, bootstrap standard errors, and partial-correlation comparisons.

#include "cdexggm/composite.hpp"
#include "cdexggm/likelihood.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cdexggm {

struct TestReport {
    double statistic = 0.0;
    /// Chi-square degrees of freedom; 0 for normal-reference tests.
    std::size_t df = 0;
    double p_value = 1.0;
    std::string null_description;
    std::optional<double> se;
};

/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);
/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi_square_upper_p(double statistic, std::size_t df);

/// z = beta_u / sqrt(cov_uu). Throws NumericalError if cov_uu <= 0.
TestReport wald_single(const Vector& estimate, const Matrix& covariance, std::size_t index);
/// Uses fit.asymptotic_cov; throws InvalidArgument if it is absent.
TestReport wald_single(const MleFitResult& fit, std::size_t index);

/// W = beta_J' (cov_JJ)^-1 beta_J against chi-square(|J|). Throws
/// SingularityError if cov_JJ is not positive definite.
TestReport wald_joint(const Vector& estimate, const Matrix& covariance, const std::vector<std::size_t>& indices);
TestReport wald_joint(const MleFitResult& fit, const std::vector<std::size_t>& indices);

/// Packed indices of every slope parameter (all entries of P_1..P_H): the
/// null hypothesis of a static network.
std::vector<std::size_t> slope_indices(std::size_t p, std::size_t covariates);

using EstimatorConfig = std::variant<MleOptions, PenaltyConfig>;
/// Maps a dataset to a vector of statistics.
using Statistic = std::function<Vector(const Dataset&)>;

struct BootstrapConfig {
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

struct BootstrapDraws {
    /// One row per successful replicate, in replicate order.
    Matrix statistics;
    std::size_t failed = 0;
    std::vector<std::string> failure_messages;
};

/// Nonparametric bootstrap: each replicate resamples n rows of (Y, X) with
/// replacement using its own stream derived from (seed, replicate index) and
/// evaluates `statistic`. A replicate fails if `statistic` throws. More than
/// 20% failures throws BootstrapError.
BootstrapDraws bootstrap_statistics(const Dataset& data, const Statistic& statistic, const BootstrapConfig& config);

/// Packed estimate of `estimator` on `data`, warm-started from `init` when
/// given. Non-converged fits throw ConvergenceError.
Vector fit_packed(const Dataset& data, const EstimatorConfig& estimator, const std::optional<PrecisionBasis>& init);

/// Per-coordinate bootstrap standard deviations of the packed estimate.
Vector bootstrap_se(const Dataset& data, const EstimatorConfig& estimator, const std::vector<std::size_t>& indices,
                    const BootstrapConfig& config, const std::optional<PrecisionBasis>& init = std::nullopt);

/// Bootstrap covariance of the full packed estimate.
Matrix bootstrap_covariance(const Dataset& data, const EstimatorConfig& estimator, const BootstrapConfig& config,
                            const std::optional<PrecisionBasis>& init = std::nullopt);

/// Sample standard deviation of each column (0 with fewer than two rows).
Vector column_sd(const Matrix& draws);

/// -K_ij / sqrt(K_ii K_jj). Throws InvalidArgument for i == j or indices out of range.
double partial_correlation(const Matrix& k, std::size_t i, std::size_t j);

/// (rho_a - rho_b) / sqrt(se_a^2 + se_b^2) with a normal reference.
TestReport two_sample_partial_corr_test(double rho_a, double se_a, double rho_b, double se_b);

struct GroupFit {
    const Dataset* data = nullptr;
    PrecisionBasis estimate;
    /// Covariate value at which the group's precision is assembled.
    Vector covariate_row;
};

/// Compares the partial correlation of (i, j) between two independent groups.
/// Each group's standard error comes from a bootstrap of its own data with
/// the same seed, so swapping the groups exactly negates the statistic.
TestReport two_sample_partial_corr_test(const GroupFit& a, const GroupFit& b, std::size_t i, std::size_t j,
                                        const EstimatorConfig& estimator, const BootstrapConfig& config);

}  // namespace cdexggm
