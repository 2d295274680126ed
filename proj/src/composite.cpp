#include "cdexggm/composite.hpp"

#include "cdexggm/error.hpp"

#include <cmath>
#include <string>

namespace cdexggm {

namespace {

constexpr double log_two_pi = 1.8378770664093454835606594728112;

void check_dims(const PrecisionBasis& basis, const Dataset& data) {
    if (basis.dim() != data.dim() || basis.covariate_count() != data.covariate_count()) {
        throw InvalidArgument("basis is p=" + std::to_string(basis.dim()) + ", H=" +
                              std::to_string(basis.covariate_count()) + " but data is p=" +
                              std::to_string(data.dim()) + ", H=" + std::to_string(data.covariate_count()));
    }
}

Matrix without_diagonal(const SymmetricMatrix& m) {
    Matrix d = m.dense();
    d.diagonal().setZero();
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// CompositeState

CompositeState::CompositeState(const Dataset& data, PrecisionBasis basis) : data_(&data), basis_(std::move(basis)) {
    check_dims(basis_, data);
    const Matrix& y = data.y();
    const Matrix& x = data.x().values();
    const std::size_t p = data.dim();

    partial_ = y * without_diagonal(basis_.baseline());
    precision_ = Matrix(y.rows(), y.cols());
    for (std::size_t j = 0; j < p; ++j) precision_.col(j).setConstant(basis_.baseline()(j, j));
    for (std::size_t h = 0; h < basis_.covariate_count(); ++h) {
        const auto xh = x.col(h);
        partial_ += xh.asDiagonal() * (y * without_diagonal(basis_.slopes()[h]));
        for (std::size_t j = 0; j < p; ++j) precision_.col(j) += basis_.slopes()[h](j, j) * xh;
    }
    for (Eigen::Index j = 0; j < precision_.cols(); ++j) {
        for (Eigen::Index m = 0; m < precision_.rows(); ++m) {
            if (!(precision_(m, j) > 0.0)) {
                throw DomainError("conditional precision of vertex " + std::to_string(j) + " at observation " +
                                      std::to_string(m) + " is not positive",
                                  static_cast<std::size_t>(m));
            }
        }
    }
}

CompositeState::OffDiagonalTerms CompositeState::off_diagonal_terms(const Coordinate& target) const {
    std::size_t a = target.i;
    std::size_t b = target.j;
    if (a == b) throw InvalidArgument("off-diagonal target has i == j");
    if (a > b) std::swap(a, b);
    const Matrix& y = data_->y();
    const auto ya = y.col(a);
    const auto yb = y.col(b);
    const auto ra = partial_.col(a);
    const auto rb = partial_.col(b);
    const auto ka = precision_.col(a);
    const auto kb = precision_.col(b);
    const Eigen::Index n = y.rows();

    double grad = 0.0;
    double curv = 0.0;
    if (target.matrix == 0) {
        for (Eigen::Index m = 0; m < n; ++m) {
            grad += 2.0 * ya[m] * yb[m] + ra[m] * yb[m] / ka[m] + rb[m] * ya[m] / kb[m];
            curv += yb[m] * yb[m] / ka[m] + ya[m] * ya[m] / kb[m];
        }
    } else {
        const auto x = data_->x().values().col(target.matrix - 1);
        for (Eigen::Index m = 0; m < n; ++m) {
            const double w = x[m];
            grad += w * (2.0 * ya[m] * yb[m] + ra[m] * yb[m] / ka[m] + rb[m] * ya[m] / kb[m]);
            curv += w * w * (yb[m] * yb[m] / ka[m] + ya[m] * ya[m] / kb[m]);
        }
    }
    OffDiagonalTerms t;
    t.gradient = grad / static_cast<double>(n);
    t.curvature = curv / static_cast<double>(n);
    t.zero_gradient = t.gradient - basis_.matrix(target.matrix)(a, b) * t.curvature;
    return t;
}

double CompositeState::off_diagonal_update(const Coordinate& target, double lambda) const {
    const OffDiagonalTerms t = off_diagonal_terms(target);
    if (!(t.curvature > 0.0)) {
        // A covariate that is identically zero leaves its slope unidentified; keep it at zero.
        if (t.curvature == 0.0 && t.zero_gradient == 0.0) return 0.0;
        throw NumericalError("non-positive curvature for off-diagonal (" + std::to_string(target.matrix) + "," +
                             std::to_string(target.i) + "," + std::to_string(target.j) + ")");
    }
    return soft_threshold(-t.zero_gradient, lambda) / t.curvature;
}

void CompositeState::set_off_diagonal(const Coordinate& target, double value) {
    const std::size_t a = std::min(target.i, target.j);
    const std::size_t b = std::max(target.i, target.j);
    SymmetricMatrix& mat = basis_.matrix(target.matrix);
    const double delta = value - mat(a, b);
    mat.set(a, b, value);
    if (delta == 0.0) return;
    const Matrix& y = data_->y();
    if (target.matrix == 0) {
        partial_.col(a) += delta * y.col(b);
        partial_.col(b) += delta * y.col(a);
    } else {
        const auto x = data_->x().values().col(target.matrix - 1);
        partial_.col(a) += delta * x.cwiseProduct(y.col(b));
        partial_.col(b) += delta * x.cwiseProduct(y.col(a));
    }
}

Vector CompositeState::diagonal_parameters(std::size_t j) const {
    const std::size_t covariates = basis_.covariate_count();
    Vector params(covariates + 1);
    for (std::size_t k = 0; k <= covariates; ++k) params[k] = basis_.matrix(k)(j, j);
    return params;
}

Vector CompositeState::vertex_residual(std::size_t j, const Vector& params) const {
    const std::size_t covariates = basis_.covariate_count();
    const Matrix& x = data_->x().values();
    const auto yj = data_->y().col(j);
    const auto rj = partial_.col(j);
    Vector g = Vector::Zero(covariates + 1);
    for (Eigen::Index m = 0; m < yj.size(); ++m) {
        double k = params[0];
        for (std::size_t h = 0; h < covariates; ++h) k += x(m, h) * params[h + 1];
        const double inv = 1.0 / k;
        const double base = -0.5 * rj[m] * rj[m] * inv * inv - 0.5 * inv + 0.5 * yj[m] * yj[m];
        g[0] += base;
        for (std::size_t h = 0; h < covariates; ++h) g[h + 1] += x(m, h) * base;
    }
    return g;
}

bool CompositeState::vertex_feasible(const Vector& params) const {
    const Matrix& x = data_->x().values();
    for (Eigen::Index m = 0; m < x.rows(); ++m) {
        double k = params[0];
        for (Eigen::Index h = 0; h < x.cols(); ++h) k += x(m, h) * params[h + 1];
        if (!(k > 0.0)) return false;
    }
    return true;
}

void CompositeState::set_diagonal(std::size_t j, const Vector& params) {
    const std::size_t covariates = basis_.covariate_count();
    for (std::size_t k = 0; k <= covariates; ++k) basis_.matrix(k).set(j, j, params[k]);
    precision_.col(j).setConstant(params[0]);
    for (std::size_t h = 0; h < covariates; ++h) precision_.col(j) += params[h + 1] * data_->x().values().col(h);
}

double CompositeState::constant_variance_alpha(std::size_t j) const {
    const double n = static_cast<double>(data_->size());
    const double sum_y2 = data_->y().col(j).squaredNorm();
    const double sum_r2 = partial_.col(j).squaredNorm();
    if (!(sum_y2 > 0.0)) {
        throw DomainError("vertex " + std::to_string(j) + " has zero sample variance", 0);
    }
    if (sum_r2 == 0.0) return n / sum_y2;
    // Positive root of sum_y2 a^2 - n a - sum_r2 = 0; algebraically equal to
    // 2 sum_r2 / (-n + sqrt(n^2 + 4 sum_y2 sum_r2)) without its cancellation.
    return (n + std::sqrt(n * n + 4.0 * sum_y2 * sum_r2)) / (2.0 * sum_y2);
}

double CompositeState::neg_loglik() const {
    const Matrix& y = data_->y();
    double total = 0.5 * static_cast<double>(y.rows() * y.cols()) * log_two_pi;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index m = 0; m < y.rows(); ++m) {
            const double k = precision_(m, j);
            const double r = partial_(m, j);
            const double v = y(m, j);
            total += -0.5 * std::log(k) + 0.5 * k * v * v + v * r + 0.5 * r * r / k;
        }
    }
    return total;
}

double CompositeState::off_diagonal_l1() const {
    double total = 0.0;
    const std::size_t p = basis_.dim();
    for (std::size_t k = 0; k <= basis_.covariate_count(); ++k) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) total += std::abs(basis_.matrix(k)(a, b));
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Free functions

ConditionalMoments conditional_moments(const PrecisionBasis& basis, const Vector& covariate_row, std::size_t j,
                                       const Vector& y_row) {
    if (static_cast<std::size_t>(y_row.size()) != basis.dim() || j >= basis.dim()) {
        throw InvalidArgument("observation or vertex index does not match the basis dimension");
    }
    const Matrix k = assemble_precision(basis, covariate_row);
    const double kjj = k(j, j);
    if (!(kjj > 0.0)) {
        throw DomainError("conditional precision of vertex " + std::to_string(j) + " is not positive", 0);
    }
    double r = 0.0;
    for (Eigen::Index i = 0; i < y_row.size(); ++i) {
        if (static_cast<std::size_t>(i) != j) r += k(j, i) * y_row[i];
    }
    return {-r / kjj, 1.0 / kjj};
}

double neg_composite_loglik(const PrecisionBasis& basis, const Dataset& data) {
    return CompositeState(data, basis).neg_loglik();
}

double penalized_objective(const PrecisionBasis& basis, const Dataset& data, double lambda) {
    const CompositeState state(data, basis);
    return state.neg_loglik() + static_cast<double>(data.size()) * lambda * state.off_diagonal_l1();
}

Vector diagonal_residuals(const PrecisionBasis& basis, const Dataset& data) {
    const CompositeState state(data, basis);
    const std::size_t p = basis.dim();
    const std::size_t covariates = basis.covariate_count();
    Vector out(p * (covariates + 1));
    for (std::size_t j = 0; j < p; ++j) {
        const Vector g = state.vertex_residual(j, state.diagonal_parameters(j));
        for (std::size_t k = 0; k <= covariates; ++k) out[k * p + j] = g[k];
    }
    return out;
}

Vector composite_gradient(const PrecisionBasis& basis, const Dataset& data) {
    const CompositeState state(data, basis);
    const ParameterLayout layout(basis.dim(), basis.covariate_count());
    const double n = static_cast<double>(data.size());
    Vector out(layout.size());
    std::vector<Vector> vertex(basis.dim());
    for (std::size_t j = 0; j < basis.dim(); ++j) vertex[j] = state.vertex_residual(j, state.diagonal_parameters(j));
    for (std::size_t idx = 0; idx < layout.size(); ++idx) {
        const Coordinate c = layout.coordinate(idx);
        out[idx] = c.off_diagonal() ? n * state.off_diagonal_terms(c).gradient : vertex[c.i][c.matrix];
    }
    return out;
}

double update_alpha_diag_constant_variance(std::size_t j, const CompositeState& state) {
    return state.constant_variance_alpha(j);
}

PrecisionBasis default_composite_init(const Dataset& data) {
    const double n = static_cast<double>(data.size());
    Vector d(data.dim());
    for (std::size_t j = 0; j < data.dim(); ++j) {
        const double s = data.y().col(j).squaredNorm();
        if (!(s > 0.0)) throw DomainError("vertex " + std::to_string(j) + " has zero sample variance", 0);
        d[j] = n / s;
    }
    return PrecisionBasis(SymmetricMatrix::diagonal(d),
                          std::vector<SymmetricMatrix>(data.covariate_count(), SymmetricMatrix(data.dim())));
}

double lambda_max(const Dataset& data) {
    const Matrix& y = data.y();
    const double n = static_cast<double>(data.size());
    Matrix cross = y.transpose() * y;
    double best = 0.0;
    auto scan = [&](const Matrix& c) {
        for (Eigen::Index a = 0; a < c.rows(); ++a) {
            for (Eigen::Index b = a + 1; b < c.cols(); ++b) best = std::max(best, std::abs(2.0 * c(a, b) / n));
        }
    };
    scan(cross);
    for (std::size_t h = 0; h < data.covariate_count(); ++h) {
        cross = y.transpose() * data.x().values().col(h).asDiagonal() * y;
        scan(cross);
    }
    return best;
}

double kkt_violation(const PrecisionBasis& basis, const Dataset& data, double lambda) {
    const CompositeState state(data, basis);
    const std::size_t p = basis.dim();
    double worst = 0.0;
    for (std::size_t k = 0; k <= basis.covariate_count(); ++k) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                const double g = state.off_diagonal_terms({k, a, b}).gradient;
                const double v = basis.matrix(k)(a, b);
                const double violation =
                    v == 0.0 ? std::max(0.0, std::abs(g) - lambda) : std::abs(g + (v > 0.0 ? lambda : -lambda));
                worst = std::max(worst, violation);
            }
        }
    }
    return worst;
}

CompositeFitResult fit_penalized(const Dataset& data, const PenaltyConfig& config) {
    return fit_penalized(data, config, default_composite_init(data));
}

CompositeFitResult fit_penalized(const Dataset& data, const PenaltyConfig& config, const PrecisionBasis& init) {
    check_dims(init, data);
    if (!(config.lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    if (!(config.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (data.size() < 2) throw InvalidArgument("penalized estimation needs at least two observations");

    PrecisionBasis start = init;
    const std::size_t p = data.dim();
    const std::size_t covariates = data.covariate_count();
    if (config.constant_diagonal) {
        for (std::size_t h = 1; h <= covariates; ++h) {
            for (std::size_t j = 0; j < p; ++j) start.matrix(h).set(j, j, 0.0);
        }
    }
    if (!start.is_valid()) throw InvalidArgument("initial basis is not positive definite at every endpoint");

    CompositeState state(data, std::move(start));
    const double n = static_cast<double>(data.size());
    auto objective = [&] { return state.neg_loglik() + n * config.lambda * state.off_diagonal_l1(); };

    CompositeFitResult result;
    result.lambda = config.lambda;
    result.objective_trace.push_back(objective());

    while (result.sweeps < config.max_outer_sweeps) {
        double max_change = 0.0;
        for (std::size_t k = 0; k <= covariates; ++k) {
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = a + 1; b < p; ++b) {
                    const Coordinate c{k, a, b};
                    const double old = state.basis().matrix(k)(a, b);
                    const double updated = state.off_diagonal_update(c, config.lambda);
                    if (updated != old) {
                        max_change = std::max(max_change, std::abs(updated - old));
                        state.set_off_diagonal(c, updated);
                    }
                }
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            const Vector old = state.diagonal_parameters(j);
            Vector updated = old;
            if (config.constant_diagonal && config.closed_form_diagonal) {
                updated[0] = state.constant_variance_alpha(j);
            } else if (config.constant_diagonal) {
                auto residual = [&](const Vector& a) {
                    Vector full = Vector::Zero(old.size());
                    full[0] = a[0];
                    return Vector(state.vertex_residual(j, full).head(1) / n);
                };
                auto feasible = [](const Vector& a) { return a[0] > 0.0; };
                updated[0] = broyden_solve(residual, old.head(1), config.broyden, feasible).solution[0];
            } else {
                updated = broyden_solve([&](const Vector& v) { return Vector(state.vertex_residual(j, v) / n); }, old,
                                        config.broyden, [&](const Vector& v) { return state.vertex_feasible(v); })
                              .solution;
            }
            max_change = std::max(max_change, (updated - old).cwiseAbs().maxCoeff());
            state.set_diagonal(j, updated);
        }
        ++result.sweeps;
        const double q = objective();
        if (!std::isfinite(q)) {
            throw ConvergenceError("penalized objective became non-finite", result.objective_trace);
        }
        result.objective_trace.push_back(q);
        if (max_change < config.tol) {
            result.converged = true;
            break;
        }
    }

    result.estimate = state.basis();
    result.neg_loglik = state.neg_loglik();
    for (std::size_t k = 0; k <= covariates; ++k) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                if (result.estimate.matrix(k)(a, b) != 0.0) result.active_set.push_back({k, a, b});
            }
        }
    }
    return result;
}

}  // namespace cdexggm
