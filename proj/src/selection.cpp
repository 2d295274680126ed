#include "cdexggm/selection.hpp"

#include "cdexggm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdexggm {

namespace {

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("EBIC gamma must lie in [0, 1]");
}

void choose(SelectionResult& result, std::size_t n, std::size_t p) {
    result.ebic_values.assign(result.grid.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        const LambdaFitSummary& f = result.fits[i];
        if (!f.failure) result.ebic_values[i] = ebic(f.neg2_loglik, f.df, n, p, result.gamma);
    }
    // Scan from the largest lambda so that ties keep the sparser model.
    std::size_t best = result.grid.size() - 1;
    for (std::size_t i = result.grid.size(); i-- > 0;) {
        if (result.ebic_values[i] < result.ebic_values[best]) best = i;
    }
    result.chosen_index = best;
}

}  // namespace

double ebic(double neg2_composite_loglik, std::size_t df, std::size_t n, std::size_t p, double gamma) {
    check_gamma(gamma);
    if (n < 1 || p < 1) throw InvalidArgument("EBIC needs n >= 1 and p >= 1");
    const double d = static_cast<double>(df);
    return neg2_composite_loglik + d * std::log(static_cast<double>(n)) +
           4.0 * d * gamma * std::log(static_cast<double>(p));
}

std::vector<double> default_lambda_grid(const Dataset& data, std::size_t count, double ratio) {
    if (count < 1) throw InvalidArgument("lambda grid needs at least one value");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("lambda grid ratio must lie in (0, 1]");
    const double top = lambda_max(data);
    if (!(top > 0.0)) throw InvalidArgument("lambda_max is zero; data carry no off-diagonal signal");
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double lo = std::log(top * ratio);
    const double hi = std::log(top);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    grid.back() = top;
    return grid;
}

SelectionResult select_lambda(const Dataset& data, std::vector<double> grid, double gamma,
                              const PenaltyConfig& config) {
    check_gamma(gamma);
    if (grid.empty()) throw InvalidArgument("lambda grid is empty");
    std::sort(grid.begin(), grid.end());
    if (std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
        throw InvalidArgument("lambda grid contains duplicate values");
    }
    if (!(grid.front() >= 0.0)) throw InvalidArgument("lambda grid contains a negative value");

    SelectionResult result;
    result.grid = grid;
    result.gamma = gamma;
    result.fits.resize(grid.size());
    result.path.resize(grid.size());

    std::optional<PrecisionBasis> warm;
    std::vector<std::string> diagnostics;
    for (std::size_t i = grid.size(); i-- > 0;) {
        PenaltyConfig cfg = config;
        cfg.lambda = grid[i];
        LambdaFitSummary& summary = result.fits[i];
        summary.lambda = grid[i];
        try {
            CompositeFitResult fit = warm ? fit_penalized(data, cfg, *warm) : fit_penalized(data, cfg);
            summary.df = fit.df();
            summary.neg2_loglik = 2.0 * fit.neg_loglik;
            summary.converged = fit.converged;
            summary.sweeps = fit.sweeps;
            warm = fit.estimate;
            result.path[i] = std::move(fit);
        } catch (const Error& e) {
            summary.failure = std::string(category_name(e.kind())) + ": " + e.what();
            diagnostics.push_back("lambda=" + std::to_string(grid[i]) + ": " + *summary.failure);
        }
    }
    if (diagnostics.size() == grid.size()) {
        throw SelectionError("every fit on the lambda grid failed", std::move(diagnostics));
    }
    choose(result, data.size(), data.dim());
    return result;
}

SelectionResult reselect(const SelectionResult& path, std::size_t n, std::size_t p, double gamma) {
    check_gamma(gamma);
    SelectionResult result = path;
    result.gamma = gamma;
    choose(result, n, p);
    return result;
}

}  // namespace cdexggm
