#pragma once

#include "cdexggm/model.hpp"

#include <functional>

namespace cdexggm {

struct BroydenConfig {
    /// Converged once the infinity norm of the residual falls below this.
    double tol = 1e-9;
    std::size_t max_iter = 100;
    /// Length of the first trial step as a fraction of the full quasi-Newton step.
    double init_damping = 1.0;
    /// Halvings tried per iteration before the Jacobian is re-estimated.
    std::size_t max_backtracks = 30;
};

struct BroydenResult {
    Vector solution;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using FeasibleFn = std::function<bool(const Vector&)>;

/// Solves residual(v) = 0 with Broyden's ("good") rank-one Jacobian update.
/// The initial Jacobian is a forward-difference estimate at `init`. Each step
/// backtracks by halving until the trial point is feasible and reduces the
/// residual norm. Throws ConvergenceError carrying the best iterate when
/// max_iter is exhausted.
BroydenResult broyden_solve(const ResidualFn& residual, const Vector& init, const BroydenConfig& config = {},
                            const FeasibleFn& feasible = {});

}  // namespace cdexggm
