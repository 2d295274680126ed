#pragma once

// Data-generating processes, sampling, and evaluation for simulation studies.

#include "cdexggm/composite.hpp"
#include "cdexggm/likelihood.hpp"
#include "cdexggm/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cdexggm {

using Rng = std::mt19937_64;

/// Deterministic 64-bit seed for substream `stream` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// A A^T + c I with A_ij ~ Unif(-1, 1). With `density`, entries of A are kept
/// independently with the probability that makes each off-diagonal entry of
/// A A^T nonzero with probability `density`.
Matrix gen_random_pd(std::size_t p, double c, std::optional<double> density, Rng& rng);
Matrix gen_random_pd(std::size_t p, double c, std::optional<double> density, std::uint64_t seed);

/// Inverse of the covariance exp(-|s_i - s_j| / 2) for increasing positions
/// `s`; entries off the tridiagonal band are set to exactly zero.
Matrix chain_precision_from_positions(const Vector& s);
/// Positions s_1 ~ Unif(0.5, 1), s_i - s_{i-1} ~ Unif(0.5, 1).
Matrix gen_chain_precision(std::size_t p, Rng& rng);
Matrix gen_chain_precision(std::size_t p, std::uint64_t seed);

/// H = 2 basis whose assembled diagonal equals diag(Q0) at every covariate
/// value: P_h = L0 L_h Q_h L_h L0 - Q0 / 2 with L0 = diag(sqrt(Q0_jj / 2)),
/// L_h = diag(1 / sqrt(Q_h,jj)), for sparse random Q0, Q1, Q2. Retries with a
/// fresh draw (at most 10 times) if the result is not valid.
PrecisionBasis gen_multi_covariate_basis(std::size_t p, double c, double density, Rng& rng);
PrecisionBasis gen_multi_covariate_basis(std::size_t p, std::uint64_t seed, double c = 1.0, double density = 0.2);

/// Each column takes `levels` equispaced values in [0, 1] with n / levels rows
/// per value. Column 0 is blocked; later columns cycle at finer strides.
CovariateDesign leveled_design(std::size_t n, std::size_t covariates, std::size_t levels = 5);
CovariateDesign uniform_design(std::size_t n, std::size_t covariates, Rng& rng);

/// Row m ~ N(0, K(x_m)^{-1}). Returned data carry Centering::assume_centered.
Dataset sample_dataset(const PrecisionBasis& basis, const CovariateDesign& design, Rng& rng);
Dataset sample_dataset(const PrecisionBasis& basis, const CovariateDesign& design, std::uint64_t seed);

struct MetricReport {
    double sensitivity = 0.0;  // NaN when the truth has no edges
    double specificity = 0.0;  // NaN when the truth has no non-edges
    double mcc = 0.0;
    bool mcc_defined = true;   // false when the MCC denominator is zero (mcc = 0)
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Edge recovery over upper off-diagonal positions. A true edge is
/// |truth_ij| > 1e-12; an estimated edge is estimated_ij != 0.
MetricReport classification_metrics(const Matrix& estimated, const Matrix& truth);
MetricReport classification_metrics(const SymmetricMatrix& estimated, const SymmetricMatrix& truth);

enum class DgpKind { general, chain, sparse, multi_covariate_s41 };
enum class DesignKind { leveled, uniform };
enum class StudyEstimator { mle, penalized };

std::string to_string(DgpKind kind);
DgpKind parse_dgp_kind(const std::string& name);

struct SimSpec {
    std::size_t p = 10;
    std::size_t n = 3000;
    std::size_t covariates = 1;
    DgpKind dgp = DgpKind::general;
    DesignKind design = DesignKind::leveled;
    std::size_t covariate_levels = 5;
    bool constant_diagonal = false;
    std::uint64_t seed = 1;
    double pd_shift_c = 1.0;
    /// Off-diagonal density for the sparse and multi-covariate generators.
    double density = 0.2;

    StudyEstimator estimator = StudyEstimator::mle;
    MleOptions mle;
    PenaltyConfig penalty;
    double gamma = 1.0;
    std::size_t grid_size = 20;
    double grid_ratio = 0.01;
    /// Skip EBIC selection and fit at this lambda.
    std::optional<double> fixed_lambda;
};

/// Validates a spec; throws InvalidArgument.
void validate(const SimSpec& spec);

/// True basis for one replicate.
PrecisionBasis generate_basis(const SimSpec& spec, Rng& rng);
CovariateDesign generate_design(const SimSpec& spec, Rng& rng);

struct ReplicateFailure {
    std::size_t replicate = 0;
    std::string message;
};

struct StudyTable {
    std::vector<std::string> columns;
    /// One row per successful replicate; the first column is the replicate index.
    std::vector<std::vector<double>> rows;
    std::vector<ReplicateFailure> failures;
    std::vector<double> mean;
    /// Absent with fewer than two successful replicates.
    std::vector<std::optional<double>> sd;
    /// Wall-clock total; not part of the deterministic table.
    double elapsed_seconds = 0.0;

    std::size_t column(const std::string& name) const;
    double mean_of(const std::string& name) const { return mean[column(name)]; }
};

/// Generates truth and data per replicate from derived seeds, fits, and
/// tabulates scaled estimation errors ||beta_hat - beta||_2 / (p(p+1)/2) per
/// matrix and, for the penalized estimator, edge-recovery metrics and the KKT
/// residual. Failed replicates are recorded; more than 30% failing throws StudyError.
StudyTable run_study(const SimSpec& spec, std::size_t replicates, std::size_t threads = 1);

}  // namespace cdexggm
