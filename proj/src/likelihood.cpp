#include "cdexggm/likelihood.hpp"

#include "cdexggm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cdexggm {

namespace detail {

double trace_indicator_pair(const Matrix& a, std::size_t ua, std::size_t ub, std::size_t va, std::size_t vb) {
    // T^u = sum over (i,j) in pairs(u) of e_i e_j'; tr(e_i e_j' A e_k e_l' A) = A_jk A_li.
    const std::size_t u_pairs[2][2] = {{ua, ub}, {ub, ua}};
    const std::size_t v_pairs[2][2] = {{va, vb}, {vb, va}};
    const int nu = ua == ub ? 1 : 2;
    const int nv = va == vb ? 1 : 2;
    double t = 0.0;
    for (int s = 0; s < nu; ++s) {
        for (int r = 0; r < nv; ++r) {
            const auto [i, j] = u_pairs[s];
            const auto [k, l] = v_pairs[r];
            t += a(j, k) * a(l, i);
        }
    }
    return t;
}

}  // namespace detail

namespace {

constexpr double log_two_pi = 1.8378770664093454835606594728112;

/// Sufficient statistics per distinct covariate row.
struct GroupedData {
    CovariateGroups groups;
    std::vector<double> counts;
    std::vector<Matrix> second_moments;  // sum_{m in g} y_m y_m'
    std::size_t n = 0;
    std::size_t p = 0;
};

GroupedData group_data(const Dataset& data) {
    GroupedData out;
    out.groups = group_rows(data.x());
    out.n = data.size();
    out.p = data.dim();
    for (const auto& members : out.groups.members) {
        Matrix s = Matrix::Zero(out.p, out.p);
        for (std::size_t m : members) {
            const auto row = data.y().row(m);
            s.noalias() += row.transpose() * row;
        }
        out.second_moments.push_back(std::move(s));
        out.counts.push_back(static_cast<double>(members.size()));
    }
    return out;
}

double covariate_weight(const CovariateGroups& groups, std::size_t g, std::size_t matrix) {
    return matrix == 0 ? 1.0 : groups.rows(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(matrix - 1));
}

void check_dims(const PrecisionBasis& basis, const Dataset& data) {
    if (basis.dim() != data.dim() || basis.covariate_count() != data.covariate_count()) {
        throw InvalidArgument("basis is p=" + std::to_string(basis.dim()) + ", H=" +
                              std::to_string(basis.covariate_count()) + " but data is p=" +
                              std::to_string(data.dim()) + ", H=" + std::to_string(data.covariate_count()));
    }
}

/// Log-likelihood from group statistics. Returns -inf when some K_g is not PD
/// and reports that group through `bad_group`.
double grouped_loglik(const GroupedData& gd, const std::vector<Matrix>& precisions,
                      std::vector<Eigen::LLT<Matrix>>* factors, std::size_t* bad_group) {
    double total = -0.5 * static_cast<double>(gd.n * gd.p) * log_two_pi;
    for (std::size_t g = 0; g < gd.groups.count(); ++g) {
        Eigen::LLT<Matrix> llt(precisions[g]);
        if (llt.info() != Eigen::Success || !is_positive_definite(precisions[g])) {
            if (bad_group) *bad_group = g;
            return -std::numeric_limits<double>::infinity();
        }
        const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double quad = (precisions[g].cwiseProduct(gd.second_moments[g])).sum();
        total += 0.5 * gd.counts[g] * log_det - 0.5 * quad;
        if (factors) (*factors)[g] = std::move(llt);
    }
    return total;
}

std::vector<Matrix> group_precisions(const PrecisionBasis& basis, const CovariateGroups& groups) {
    std::vector<Matrix> out;
    out.reserve(groups.count());
    for (std::size_t g = 0; g < groups.count(); ++g) {
        out.push_back(assemble_precision(basis, groups.rows.row(static_cast<Eigen::Index>(g)).transpose()));
    }
    return out;
}

std::vector<Matrix> group_covariances(const PrecisionBasis& basis, const CovariateGroups& groups) {
    std::vector<Matrix> out;
    out.reserve(groups.count());
    for (std::size_t g = 0; g < groups.count(); ++g) {
        const Matrix k = assemble_precision(basis, groups.rows.row(static_cast<Eigen::Index>(g)).transpose());
        Eigen::LLT<Matrix> llt(k);
        if (llt.info() != Eigen::Success || !is_positive_definite(k)) {
            throw DomainError("precision matrix is not positive definite at observation " +
                                  std::to_string(groups.members[g].front()),
                              groups.members[g].front());
        }
        out.push_back(llt.solve(Matrix::Identity(k.rows(), k.cols())));
    }
    return out;
}

Vector grouped_score(const ParameterLayout& layout, const GroupedData& gd, const std::vector<Matrix>& covariances) {
    Vector s = Vector::Zero(layout.size());
    for (std::size_t idx = 0; idx < layout.size(); ++idx) {
        const Coordinate c = layout.coordinate(idx);
        double acc = 0.0;
        for (std::size_t g = 0; g < gd.groups.count(); ++g) {
            const double w = covariate_weight(gd.groups, g, c.matrix);
            if (w == 0.0) continue;
            acc += w * (gd.counts[g] * detail::trace_with_indicator(covariances[g], c.i, c.j) -
                        detail::trace_with_indicator(gd.second_moments[g], c.i, c.j));
        }
        s[idx] = 0.5 * acc;
    }
    return s;
}

}  // namespace

double joint_log_likelihood(const PrecisionBasis& basis, const Dataset& data) {
    check_dims(basis, data);
    const GroupedData gd = group_data(data);
    std::size_t bad = 0;
    const double value = grouped_loglik(gd, group_precisions(basis, gd.groups), nullptr, &bad);
    if (!std::isfinite(value)) {
        const std::size_t m = gd.groups.members[bad].front();
        throw DomainError("precision matrix is not positive definite at observation " + std::to_string(m), m);
    }
    return value;
}

Vector score(const ParameterVector& beta, const Dataset& data) {
    const PrecisionBasis basis = unpack(beta);
    check_dims(basis, data);
    const GroupedData gd = group_data(data);
    return grouped_score(beta.layout, gd, group_covariances(basis, gd.groups));
}

Matrix information_matrix(const ParameterVector& beta, const CovariateDesign& design) {
    const PrecisionBasis basis = unpack(beta);
    if (basis.covariate_count() != design.columns()) {
        throw InvalidArgument("design has " + std::to_string(design.columns()) + " covariates, basis has " +
                              std::to_string(basis.covariate_count()));
    }
    const CovariateGroups groups = group_rows(design);
    const std::vector<Matrix> covs = group_covariances(basis, groups);
    const ParameterLayout& layout = beta.layout;
    const std::size_t block = layout.block_size();
    const std::size_t blocks = layout.covariate_count() + 1;

    // Per-group entries of the Sigma (x) Sigma block, shared by every covariate pair.
    Matrix info = Matrix::Zero(layout.size(), layout.size());
    Matrix core(block, block);
    for (std::size_t g = 0; g < groups.count(); ++g) {
        const double count = static_cast<double>(groups.members[g].size());
        for (std::size_t u = 0; u < block; ++u) {
            const Coordinate cu = layout.coordinate(u);
            for (std::size_t v = u; v < block; ++v) {
                const Coordinate cv = layout.coordinate(v);
                const double t = 0.5 * detail::trace_indicator_pair(covs[g], cu.i, cu.j, cv.i, cv.j);
                core(u, v) = t;
                core(v, u) = t;
            }
        }
        for (std::size_t k = 0; k < blocks; ++k) {
            const double wk = covariate_weight(groups, g, k);
            if (wk == 0.0) continue;
            for (std::size_t l = k; l < blocks; ++l) {
                const double wl = covariate_weight(groups, g, l);
                if (wl == 0.0) continue;
                info.block(k * block, l * block, block, block) += (count * wk * wl) * core;
            }
        }
    }
    for (std::size_t k = 0; k < blocks; ++k) {
        for (std::size_t l = k + 1; l < blocks; ++l) {
            info.block(l * block, k * block, block, block) = info.block(k * block, l * block, block, block).transpose();
        }
    }
    return info;
}

MleFitResult fit_mle(const Dataset& data, const MleOptions& options) {
    return fit_mle(data, PrecisionBasis::identity(data.dim(), data.covariate_count()), options);
}

MleFitResult fit_mle(const Dataset& data, const PrecisionBasis& init, const MleOptions& options) {
    check_dims(init, data);
    if (data.size() < 2) throw InvalidArgument("maximum likelihood needs at least two observations");
    if (!init.is_valid()) throw InvalidArgument("initial basis is not positive definite at every endpoint");
    if (!(options.tol > 0.0)) throw InvalidArgument("tolerance must be positive");

    const GroupedData gd = group_data(data);
    const std::size_t groups = gd.groups.count();
    ParameterVector beta = pack(init);
    const ParameterLayout layout = beta.layout;

    std::vector<Matrix> precisions = group_precisions(init, gd.groups);
    std::vector<Eigen::LLT<Matrix>> factors(groups);
    double loglik = grouped_loglik(gd, precisions, &factors, nullptr);
    if (!std::isfinite(loglik)) {
        throw ConvergenceError("initial log-likelihood is not finite", {loglik});
    }
    const Matrix eye = Matrix::Identity(gd.p, gd.p);
    std::vector<Matrix> covariances(groups);
    for (std::size_t g = 0; g < groups; ++g) covariances[g] = factors[g].solve(eye);

    MleFitResult result;
    result.observations = gd.n;
    result.loglik_trace.push_back(loglik);

    std::vector<Matrix> trial(groups);
    std::vector<Eigen::LLT<Matrix>> trial_factors(groups);
    bool stopped = false;
    while (result.sweeps < options.max_sweeps) {
        double max_change = 0.0;
        for (std::size_t idx = 0; idx < layout.size(); ++idx) {
            const Coordinate c = layout.coordinate(idx);
            double delta = 0.0;
            double curvature = 0.0;
            for (std::size_t g = 0; g < groups; ++g) {
                const double w = covariate_weight(gd.groups, g, c.matrix);
                if (w == 0.0) continue;
                delta += w * (gd.counts[g] * detail::trace_with_indicator(covariances[g], c.i, c.j) -
                              detail::trace_with_indicator(gd.second_moments[g], c.i, c.j));
                curvature += gd.counts[g] * w * w *
                             detail::trace_indicator_pair(covariances[g], c.i, c.j, c.i, c.j);
            }
            if (!std::isfinite(delta)) {
                throw ConvergenceError("score became non-finite", result.loglik_trace,
                                       std::vector<double>(beta.values.data(), beta.values.data() + beta.values.size()));
            }
            const double denominator = curvature + 0.5 * delta * delta;
            if (!(denominator > 0.0)) continue;
            double step = delta / denominator;

            bool accepted = false;
            for (std::size_t attempt = 0; attempt <= options.max_halvings; ++attempt, step *= 0.5) {
                for (std::size_t g = 0; g < groups; ++g) {
                    trial[g] = precisions[g];
                    const double move = step * covariate_weight(gd.groups, g, c.matrix);
                    trial[g](c.i, c.j) += move;
                    if (c.i != c.j) trial[g](c.j, c.i) += move;
                }
                const double candidate = grouped_loglik(gd, trial, &trial_factors, nullptr);
                if (std::isfinite(candidate) && candidate >= loglik) {
                    loglik = candidate;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) continue;

            beta.values[idx] += step;
            max_change = std::max(max_change, std::abs(step));
            std::swap(precisions, trial);
            std::swap(factors, trial_factors);
            for (std::size_t g = 0; g < groups; ++g) covariances[g] = factors[g].solve(eye);
        }
        ++result.sweeps;
        result.loglik_trace.push_back(loglik);
        if (max_change < options.tol) {
            stopped = true;
            break;
        }
    }

    result.estimate = unpack(beta);
    result.max_abs_score = grouped_score(layout, gd, covariances).cwiseAbs().maxCoeff();
    result.converged = stopped && result.max_abs_score / static_cast<double>(gd.n) < options.gradient_tol;
    if (result.converged && options.compute_covariance) {
        result.asymptotic_cov = asymptotic_covariance(result, data.x());
    }
    return result;
}

Matrix asymptotic_covariance(const MleFitResult& fit, const CovariateDesign& design) {
    if (!fit.converged) throw InvalidArgument("asymptotic covariance needs a converged fit");
    const Matrix info = information_matrix(pack(fit.estimate), design);
    Eigen::LDLT<Matrix> ldlt(info);
    const double scale = info.diagonal().cwiseAbs().maxCoeff();
    const Vector d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(scale > 0.0) || (d.array() <= 1e-12 * scale).any()) {
        throw SingularityError(
            "information matrix is singular; the model is not identifiable from this design, "
            "consider the penalized composite-likelihood estimator");
    }
    Matrix cov = ldlt.solve(Matrix::Identity(info.rows(), info.cols()));
    return 0.5 * (cov + cov.transpose());
}

}  // namespace cdexggm
