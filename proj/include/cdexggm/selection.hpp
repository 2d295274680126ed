#pragma once

// Tuning-parameter selection for the penalized composite estimator by the
// extended BIC
//     EBIC_gamma = -2 l_c + df ln n + 4 df gamma ln p,
// where df counts nonzero off-diagonal entries across Q0, P_1..P_H.

#include "cdexggm/composite.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cdexggm {

double ebic(double neg2_composite_loglik, std::size_t df, std::size_t n, std::size_t p, double gamma);

struct LambdaFitSummary {
    double lambda = 0.0;
    std::size_t df = 0;
    double neg2_loglik = 0.0;
    bool converged = false;
    std::size_t sweeps = 0;
    /// Set when the fit at this lambda threw; the EBIC value is then +inf.
    std::optional<std::string> failure;
};

struct SelectionResult {
    /// Increasing.
    std::vector<double> grid;
    std::vector<double> ebic_values;
    std::vector<LambdaFitSummary> fits;
    std::size_t chosen_index = 0;
    double gamma = 1.0;
    /// Full fit at every grid point (empty where the fit failed).
    std::vector<std::optional<CompositeFitResult>> path;

    const CompositeFitResult& chosen() const { return *path[chosen_index]; }
};

/// `count` log-spaced values from lambda_max(data) * ratio up to lambda_max(data), increasing.
std::vector<double> default_lambda_grid(const Dataset& data, std::size_t count = 20, double ratio = 0.01);

/// Fits the penalized estimator along `grid` from the largest lambda down,
/// warm-starting each fit from the previous solution, and picks the EBIC
/// minimizer (ties go to the larger lambda). The grid is sorted internally;
/// duplicate values are rejected. `config.lambda` is ignored.
SelectionResult select_lambda(const Dataset& data, std::vector<double> grid, double gamma,
                              const PenaltyConfig& config = {});

/// Recomputes EBIC values and the choice for another gamma on an existing path.
SelectionResult reselect(const SelectionResult& path, std::size_t n, std::size_t p, double gamma);

}  // namespace cdexggm
