#include "cdexggm/inference.hpp"

#include "cdexggm/error.hpp"
#include "cdexggm/simulation.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <thread>

namespace cdexggm {

namespace {

const Matrix& require_covariance(const MleFitResult& fit) {
    if (!fit.asymptotic_cov) throw InvalidArgument("fit carries no asymptotic covariance");
    return *fit.asymptotic_cov;
}

std::string coordinate_name(std::size_t p, std::size_t covariates, std::size_t index) {
    const Coordinate c = ParameterLayout(p, covariates).coordinate(index);
    const std::string m = c.matrix == 0 ? "Q0" : "P" + std::to_string(c.matrix);
    return m + "(" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
}

}  // namespace

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double chi_square_upper_p(double statistic, std::size_t df) {
    if (df == 0) throw InvalidArgument("chi-square needs at least one degree of freedom");
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * statistic);
}

TestReport wald_single(const Vector& estimate, const Matrix& covariance, std::size_t index) {
    if (index >= static_cast<std::size_t>(estimate.size()) || covariance.rows() != estimate.size()) {
        throw InvalidArgument("Wald index or covariance size does not match the estimate");
    }
    const auto u = static_cast<Eigen::Index>(index);
    const double var = covariance(u, u);
    if (!(var > 0.0)) throw NumericalError("variance of the tested coordinate is not positive");
    TestReport r;
    r.se = std::sqrt(var);
    r.statistic = estimate[u] / *r.se;
    r.p_value = normal_two_sided_p(r.statistic);
    r.null_description = "coordinate " + std::to_string(index) + " equals zero";
    return r;
}

TestReport wald_single(const MleFitResult& fit, std::size_t index) {
    const ParameterVector beta = pack(fit.estimate);
    TestReport r = wald_single(beta.values, require_covariance(fit), index);
    r.null_description = coordinate_name(fit.estimate.dim(), fit.estimate.covariate_count(), index) + " = 0";
    return r;
}

TestReport wald_joint(const Vector& estimate, const Matrix& covariance, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw InvalidArgument("joint Wald test needs at least one coordinate");
    const auto k = static_cast<Eigen::Index>(indices.size());
    Vector b(k);
    Matrix v(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        if (indices[a] >= static_cast<std::size_t>(estimate.size())) throw InvalidArgument("Wald index out of range");
        b[a] = estimate[static_cast<Eigen::Index>(indices[a])];
        for (Eigen::Index c = 0; c < k; ++c) {
            v(a, c) = covariance(static_cast<Eigen::Index>(indices[a]), static_cast<Eigen::Index>(indices[c]));
        }
    }
    const Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success || !is_positive_definite(v)) {
        throw SingularityError("covariance submatrix of the tested coordinates is singular");
    }
    TestReport r;
    r.statistic = b.dot(llt.solve(b));
    r.df = indices.size();
    r.p_value = chi_square_upper_p(r.statistic, r.df);
    r.null_description = std::to_string(indices.size()) + " coordinates jointly equal zero";
    return r;
}

TestReport wald_joint(const MleFitResult& fit, const std::vector<std::size_t>& indices) {
    return wald_joint(pack(fit.estimate).values, require_covariance(fit), indices);
}

std::vector<std::size_t> slope_indices(std::size_t p, std::size_t covariates) {
    const ParameterLayout layout(p, covariates);
    std::vector<std::size_t> out;
    for (std::size_t idx = layout.block_size(); idx < layout.size(); ++idx) out.push_back(idx);
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap

BootstrapDraws bootstrap_statistics(const Dataset& data, const Statistic& statistic, const BootstrapConfig& config) {
    if (config.replicates < 2) throw InvalidArgument("bootstrap needs at least two replicates");
    const std::size_t n = data.size();
    const std::size_t reps = config.replicates;
    std::vector<std::optional<Vector>> results(reps);
    std::vector<std::string> messages(reps);

    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, reps));
    auto worker = [&](std::size_t first) {
        for (std::size_t b = first; b < reps; b += threads) {
            Rng rng(derive_seed(config.seed, b));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::vector<std::size_t> rows(n);
            for (auto& r : rows) r = pick(rng);
            try {
                results[b] = statistic(data.select_rows(rows));
            } catch (const Error& e) {
                messages[b] = std::string(category_name(e.kind())) + ": " + e.what();
            }
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& t : pool) t.join();
    }

    BootstrapDraws draws;
    std::vector<const Vector*> ok;
    for (std::size_t b = 0; b < reps; ++b) {
        if (results[b]) ok.push_back(&*results[b]);
        else draws.failure_messages.push_back("replicate " + std::to_string(b) + ": " + messages[b]);
    }
    draws.failed = reps - ok.size();
    if (5 * draws.failed > reps) {
        throw BootstrapError(std::to_string(draws.failed) + " of " + std::to_string(reps) +
                                 " bootstrap replicates failed; first: " + draws.failure_messages.front(),
                             draws.failed, reps);
    }
    const Eigen::Index width = ok.empty() ? 0 : ok.front()->size();
    draws.statistics = Matrix(static_cast<Eigen::Index>(ok.size()), width);
    for (std::size_t r = 0; r < ok.size(); ++r) draws.statistics.row(static_cast<Eigen::Index>(r)) = ok[r]->transpose();
    return draws;
}

Vector fit_packed(const Dataset& data, const EstimatorConfig& estimator, const std::optional<PrecisionBasis>& init) {
    if (const auto* mle = std::get_if<MleOptions>(&estimator)) {
        MleOptions options = *mle;
        options.compute_covariance = false;
        const MleFitResult fit = init ? fit_mle(data, *init, options) : fit_mle(data, options);
        if (!fit.converged) {
            throw ConvergenceError("maximum-likelihood fit did not converge", fit.loglik_trace);
        }
        return pack(fit.estimate).values;
    }
    const auto& penalty = std::get<PenaltyConfig>(estimator);
    const CompositeFitResult fit = init ? fit_penalized(data, penalty, *init) : fit_penalized(data, penalty);
    if (!fit.converged) throw ConvergenceError("penalized fit did not converge", fit.objective_trace);
    return pack(fit.estimate).values;
}

Vector column_sd(const Matrix& draws) {
    Vector sd = Vector::Zero(draws.cols());
    if (draws.rows() < 2) return sd;
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
        sd[c] = std::sqrt((draws.col(c).array() - mean[c]).square().sum() / static_cast<double>(draws.rows() - 1));
    }
    return sd;
}

Vector bootstrap_se(const Dataset& data, const EstimatorConfig& estimator, const std::vector<std::size_t>& indices,
                    const BootstrapConfig& config, const std::optional<PrecisionBasis>& init) {
    const BootstrapDraws draws =
        bootstrap_statistics(data, [&](const Dataset& d) { return fit_packed(d, estimator, init); }, config);
    const Vector sd = column_sd(draws.statistics);
    Vector out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= static_cast<std::size_t>(sd.size())) throw InvalidArgument("coordinate index out of range");
        out[static_cast<Eigen::Index>(k)] = sd[static_cast<Eigen::Index>(indices[k])];
    }
    return out;
}

Matrix bootstrap_covariance(const Dataset& data, const EstimatorConfig& estimator, const BootstrapConfig& config,
                            const std::optional<PrecisionBasis>& init) {
    const BootstrapDraws draws =
        bootstrap_statistics(data, [&](const Dataset& d) { return fit_packed(d, estimator, init); }, config);
    const Matrix centered = draws.statistics.rowwise() - draws.statistics.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(draws.statistics.rows() - 1);
}

// ---------------------------------------------------------------------------
// Partial correlations

double partial_correlation(const Matrix& k, std::size_t i, std::size_t j) {
    const auto p = static_cast<std::size_t>(k.rows());
    if (i == j || i >= p || j >= p || k.cols() != k.rows()) {
        throw InvalidArgument("partial correlation needs two distinct vertices of a square matrix");
    }
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    if (!(k(a, a) > 0.0 && k(b, b) > 0.0)) throw InvalidArgument("precision diagonal must be positive");
    return -k(a, b) / std::sqrt(k(a, a) * k(b, b));
}

TestReport two_sample_partial_corr_test(double rho_a, double se_a, double rho_b, double se_b) {
    const double se = std::sqrt(se_a * se_a + se_b * se_b);
    if (!(se > 0.0)) throw NumericalError("combined standard error is zero");
    TestReport r;
    r.se = se;
    r.statistic = (rho_a - rho_b) / se;
    r.p_value = normal_two_sided_p(r.statistic);
    r.null_description = "equal partial correlations in both groups";
    return r;
}

TestReport two_sample_partial_corr_test(const GroupFit& a, const GroupFit& b, std::size_t i, std::size_t j,
                                        const EstimatorConfig& estimator, const BootstrapConfig& config) {
    if (!a.data || !b.data) throw InvalidArgument("both groups need their data");
    auto group_rho = [&](const GroupFit& g) {
        return partial_correlation(assemble_precision(g.estimate, g.covariate_row), i, j);
    };
    auto group_se = [&](const GroupFit& g) {
        const std::size_t p = g.estimate.dim();
        const std::size_t covariates = g.estimate.covariate_count();
        const Statistic rho = [&](const Dataset& d) {
            const Vector packed = fit_packed(d, estimator, g.estimate);
            Vector out(1);
            out[0] = partial_correlation(assemble_precision(unpack(packed, p, covariates), g.covariate_row), i, j);
            return out;
        };
        return column_sd(bootstrap_statistics(*g.data, rho, config).statistics)[0];
    };
    TestReport r = two_sample_partial_corr_test(group_rho(a), group_se(a), group_rho(b), group_se(b));
    r.null_description = "partial correlation of (" + std::to_string(i) + "," + std::to_string(j) +
                         ") is equal in both groups";
    return r;
}

}  // namespace cdexggm
