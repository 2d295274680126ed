#pragma once

// Command-line front end: configuration, dispatch, and result files.

#include "cdexggm/composite.hpp"
#include "cdexggm/likelihood.hpp"
#include "cdexggm/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdexggm {

struct RunConfig {
    std::string command;
    std::string y_path;
    std::string x_path;
    std::string out_dir;
    std::string fit_dir;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool center = true;

    double mle_tol = 1e-6;
    std::size_t max_sweeps = 500;

    double lambda = 0.0;
    bool constant_diagonal = false;
    double penalty_tol = 1e-5;
    std::size_t max_outer_sweeps = 1000;

    double gamma = 1.0;
    std::size_t grid_size = 20;
    double grid_ratio = 0.01;

    /// "theta-all" or "edge:i,j,h".
    std::string null_hypothesis = "theta-all";
    /// Bootstrap replicates (test: 0 means use the asymptotic covariance).
    std::size_t bootstrap = 0;
    /// "mle" or "penalized".
    std::string estimator = "mle";

    SimSpec sim;
    std::size_t replicates = 20;

    /// Sorted key=value lines of every setting that affects results (not the
    /// output directory or thread count).
    std::string canonical() const;
};

/// Header line embedded in every output file.
std::string output_header(const RunConfig& config);

/// Q0.csv, P1.csv..PH.csv, sparsity_pattern.csv and network_long.csv.
void write_basis_files(const std::filesystem::path& dir, const PrecisionBasis& basis, const std::string& header);
/// write_basis_files plus fit_report.txt and, when available, asymptotic_cov.csv.
void write_fit(const std::filesystem::path& dir, const MleFitResult& fit, const RunConfig& config);
void write_fit(const std::filesystem::path& dir, const CompositeFitResult& fit, const RunConfig& config);

/// Reads Q0.csv, P1.csv, ... from a directory written by write_basis_files.
PrecisionBasis read_basis(const std::filesystem::path& dir);

/// Executes a parsed configuration, writing a one-line summary to `out`.
/// Throws cdexggm::Error on failure.
void run(const RunConfig& config, std::ostream& out);

/// Parses arguments and runs. Returns 0 on success, 1 on a runtime failure
/// (after printing "error: <category>: <message>" to `err`), 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdexggm
