#include "cdexggm/broyden.hpp"

#include "cdexggm/error.hpp"

#include <cmath>

namespace cdexggm {

namespace {

Matrix finite_difference_jacobian(const ResidualFn& residual, const Vector& x, const Vector& fx,
                                  const FeasibleFn& feasible) {
    const Eigen::Index d = x.size();
    Matrix j(fx.size(), d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
        Vector probe = x;
        probe[c] += h;
        double signed_h = h;
        if (feasible && !feasible(probe)) {
            probe[c] = x[c] - h;
            signed_h = -h;
        }
        j.col(c) = (residual(probe) - fx) / signed_h;
    }
    return j;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

BroydenResult broyden_solve(const ResidualFn& residual, const Vector& init, const BroydenConfig& config,
                            const FeasibleFn& feasible) {
    if (!(config.tol > 0.0)) throw InvalidArgument("Broyden tolerance must be positive");
    if (feasible && !feasible(init)) throw InvalidArgument("Broyden starting point is infeasible");

    Vector x = init;
    Vector f = residual(x);
    if (!f.allFinite()) throw InvalidArgument("residual is not finite at the starting point");

    BroydenResult result;
    if (f.cwiseAbs().maxCoeff() < config.tol) {
        result.solution = x;
        result.residual_norm = f.cwiseAbs().maxCoeff();
        return result;
    }

    Matrix jac = finite_difference_jacobian(residual, x, f, feasible);
    std::vector<double> trace;
    bool fresh_jacobian = true;
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        result.iterations = iter + 1;
        Vector step = jac.fullPivLu().solve(-f);
        double t = iter == 0 ? config.init_damping : 1.0;
        const double norm = f.norm();
        bool accepted = false;
        Vector x_new;
        Vector f_new;
        if (step.allFinite()) {
            for (std::size_t k = 0; k <= config.max_backtracks; ++k, t *= 0.5) {
                x_new = x + t * step;
                if (feasible && !feasible(x_new)) continue;
                f_new = residual(x_new);
                if (f_new.allFinite() && f_new.norm() < (1.0 - 1e-4 * t) * norm) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            if (fresh_jacobian) break;
            // Secant approximation went stale; restart from a fresh estimate.
            jac = finite_difference_jacobian(residual, x, f, feasible);
            fresh_jacobian = true;
            continue;
        }

        const Vector s = x_new - x;
        const Vector y = f_new - f;
        const double ss = s.squaredNorm();
        if (ss > 0.0) jac += ((y - jac * s) * s.transpose()) / ss;
        fresh_jacobian = false;
        x = std::move(x_new);
        f = std::move(f_new);
        trace.push_back(f.cwiseAbs().maxCoeff());
        if (trace.back() < config.tol) {
            result.solution = x;
            result.residual_norm = trace.back();
            return result;
        }
    }
    throw ConvergenceError("Broyden iteration did not reach tolerance", std::move(trace), to_std(x),
                           f.cwiseAbs().maxCoeff());
}

}  // namespace cdexggm
