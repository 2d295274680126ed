#include "cdexggm/cli.hpp"

#include "cdexggm/error.hpp"
#include "cdexggm/inference.hpp"
#include "cdexggm/io.hpp"
#include "cdexggm/selection.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace cdexggm {

namespace fs = std::filesystem;

namespace {

using KeyValues = std::map<std::string, std::string>;

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string join_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += format_number(values[i]);
    }
    return out;
}

KeyValues read_key_values(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    KeyValues kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[') break;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& lookup(const KeyValues& kv, const std::string& key, const fs::path& source) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("'" + source.string() + "' has no '" + key + "' entry", 0);
    return it->second;
}

double to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a number, found '" + s + "'", 0);
    }
}

fs::path prepare_out_dir(const RunConfig& config) {
    if (config.out_dir.empty()) throw InvalidArgument("an output directory (--out) is required");
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create '" + config.out_dir + "': " + ec.message());
    return config.out_dir;
}

Dataset load_data(const RunConfig& config) {
    if (config.y_path.empty()) throw InvalidArgument("a response file (--y) is required");
    std::optional<fs::path> x;
    if (!config.x_path.empty()) x = config.x_path;
    return read_dataset(config.y_path, x, config.center);
}

MleOptions mle_options(const RunConfig& c) {
    MleOptions o;
    o.tol = c.mle_tol;
    o.max_sweeps = c.max_sweeps;
    return o;
}

PenaltyConfig penalty_config(const RunConfig& c) {
    PenaltyConfig p;
    p.lambda = c.lambda;
    p.constant_diagonal = c.constant_diagonal;
    p.tol = c.penalty_tol;
    p.max_outer_sweeps = c.max_outer_sweeps;
    return p;
}

std::string report_text(const RunConfig& config, const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string text = "# " + output_header(config) + "\n";
    for (const auto& [k, v] : fields) text += k + "=" + v + "\n";
    text += "[config]\n" + config.canonical();
    return text;
}

void write_config(const fs::path& dir, const RunConfig& config) {
    write_text(dir / "config.txt", "# " + output_header(config) + "\n" + config.canonical());
}

Matrix matrix_of(const std::vector<std::vector<double>>& rows, std::size_t width) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_fit_mle(const RunConfig& config, std::ostream& out) {
    const Dataset data = load_data(config);
    const fs::path dir = prepare_out_dir(config);
    const MleFitResult fit = fit_mle(data, mle_options(config));
    write_fit(dir, fit, config);
    out << "fit-mle: converged=" << bool_text(fit.converged) << " sweeps=" << fit.sweeps
        << " loglik=" << format_number(fit.loglik_trace.back()) << "\n";
}

void cmd_fit_penalized(const RunConfig& config, std::ostream& out) {
    const Dataset data = load_data(config);
    const fs::path dir = prepare_out_dir(config);
    const CompositeFitResult fit = fit_penalized(data, penalty_config(config));
    write_fit(dir, fit, config);
    out << "fit-penalized: converged=" << bool_text(fit.converged) << " sweeps=" << fit.sweeps << " df=" << fit.df()
        << "\n";
}

void cmd_select_lambda(const RunConfig& config, std::ostream& out) {
    const Dataset data = load_data(config);
    const fs::path dir = prepare_out_dir(config);
    const SelectionResult sel = select_lambda(data, default_lambda_grid(data, config.grid_size, config.grid_ratio),
                                              config.gamma, penalty_config(config));
    write_fit(dir, sel.chosen(), config);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sel.grid.size(); ++i) {
        const LambdaFitSummary& f = sel.fits[i];
        rows.push_back({sel.grid[i], static_cast<double>(f.df), f.neg2_loglik, sel.ebic_values[i],
                        f.converged ? 1.0 : 0.0, i == sel.chosen_index ? 1.0 : 0.0});
    }
    write_csv(dir / "selection_path.csv", matrix_of(rows, 6),
              {output_header(config), "columns: lambda,df,neg2_loglik,ebic,converged,chosen"});
    out << "select-lambda: lambda=" << format_number(sel.grid[sel.chosen_index])
        << " df=" << sel.fits[sel.chosen_index].df << "\n";
}

void cmd_simulate(const RunConfig& config, std::ostream& out) {
    const fs::path dir = prepare_out_dir(config);
    const StudyTable table = run_study(config.sim, config.replicates, config.threads);
    std::string cols;
    for (std::size_t c = 0; c < table.columns.size(); ++c) cols += (c ? "," : "") + table.columns[c];
    write_csv(dir / "study_replicates.csv", matrix_of(table.rows, table.columns.size()),
              {output_header(config), "columns: " + cols});
    std::string summary = "# " + output_header(config) + "\ncolumn,mean,sd\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        summary += table.columns[c] + "," + format_number(table.mean[c]) + "," +
                   (table.sd[c] ? format_number(*table.sd[c]) : std::string("NA")) + "\n";
    }
    write_text(dir / "study_summary.csv", summary);
    std::string failures = "# " + output_header(config) + "\n";
    for (const auto& f : table.failures) failures += std::to_string(f.replicate) + ": " + f.message + "\n";
    write_text(dir / "failures.txt", failures);
    write_config(dir, config);
    out << "simulate: replicates=" << config.replicates << " succeeded=" << table.rows.size()
        << " failed=" << table.failures.size() << "\n";
}

EstimatorConfig estimator_from_fit_dir(const fs::path& fit_dir) {
    const fs::path cfg_path = fit_dir / "config.txt";
    const fs::path report_path = fit_dir / "fit_report.txt";
    const KeyValues cfg = read_key_values(cfg_path);
    const KeyValues report = read_key_values(report_path);
    if (lookup(report, "method", report_path) == "maximum-likelihood") {
        MleOptions o;
        o.tol = to_double(lookup(cfg, "mle-tol", cfg_path));
        o.max_sweeps = static_cast<std::size_t>(to_double(lookup(cfg, "max-sweeps", cfg_path)));
        return o;
    }
    PenaltyConfig p;
    p.lambda = to_double(lookup(report, "lambda", report_path));
    p.constant_diagonal = lookup(cfg, "constant-diagonal", cfg_path) == "true";
    p.tol = to_double(lookup(cfg, "penalty-tol", cfg_path));
    p.max_outer_sweeps = static_cast<std::size_t>(to_double(lookup(cfg, "max-outer-sweeps", cfg_path)));
    return p;
}

void cmd_test(const RunConfig& config, std::ostream& out) {
    if (config.fit_dir.empty()) throw InvalidArgument("a fit directory (--fit) is required");
    const fs::path fit_dir = config.fit_dir;
    const PrecisionBasis basis = read_basis(fit_dir);
    const std::size_t p = basis.dim();
    const std::size_t covariates = basis.covariate_count();
    if (covariates == 0) throw InvalidArgument("the fit has no covariates, so there is no slope to test");
    const Vector beta = pack(basis).values;

    Matrix cov;
    if (config.bootstrap > 0) {
        const fs::path cfg_path = fit_dir / "config.txt";
        const KeyValues fit_cfg = read_key_values(cfg_path);
        RunConfig data_cfg = config;
        if (data_cfg.y_path.empty()) data_cfg.y_path = lookup(fit_cfg, "y", cfg_path);
        if (data_cfg.x_path.empty()) data_cfg.x_path = lookup(fit_cfg, "x", cfg_path);
        data_cfg.center = lookup(fit_cfg, "center", cfg_path) == "true";
        const Dataset data = load_data(data_cfg);
        cov = bootstrap_covariance(data, estimator_from_fit_dir(fit_dir),
                                   {config.bootstrap, config.seed, config.threads}, basis);
    } else {
        const fs::path cov_path = fit_dir / "asymptotic_cov.csv";
        if (!fs::exists(cov_path)) {
            throw IoError("'" + cov_path.string() + "' not found; rerun with --bootstrap B");
        }
        cov = read_csv(cov_path);
    }

    TestReport report;
    const std::string& null = config.null_hypothesis;
    if (null == "theta-all") {
        report = wald_joint(beta, cov, slope_indices(p, covariates));
        report.null_description = "all slope parameters are zero (static network)";
    } else if (null.rfind("edge:", 0) == 0) {
        std::vector<std::size_t> parts;
        std::stringstream ss(null.substr(5));
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(static_cast<std::size_t>(to_double(item)));
        if (parts.size() != 3) throw InvalidArgument("edge null must be edge:i,j,h");
        const std::size_t i = parts[0], j = parts[1], h = parts[2];
        if (i >= p || j >= p || i == j || h < 1 || h > covariates) {
            throw InvalidArgument("edge null needs distinct vertices below p and 1 <= h <= H");
        }
        report = wald_single(beta, cov, ParameterLayout(p, covariates).index(h, i, j));
        report.null_description = "P" + std::to_string(h) + "(" + std::to_string(i) + "," + std::to_string(j) + ") = 0";
    } else {
        throw InvalidArgument("unknown null hypothesis '" + null + "'");
    }

    std::string line = "statistic=" + format_number(report.statistic) + " df=" + std::to_string(report.df) +
                       " p_value=" + format_number(report.p_value) +
                       (report.se ? " se=" + format_number(*report.se) : std::string()) +
                       " covariance=" + (config.bootstrap > 0 ? "bootstrap" : "asymptotic") + " null=\"" +
                       report.null_description + "\"";
    if (!config.out_dir.empty()) {
        const fs::path dir = prepare_out_dir(config);
        write_text(dir / "test_report.txt", "# " + output_header(config) + "\n" + line + "\n");
    }
    out << line << "\n";
}

void cmd_bootstrap(const RunConfig& config, std::ostream& out) {
    const Dataset data = load_data(config);
    const fs::path dir = prepare_out_dir(config);
    EstimatorConfig estimator;
    PrecisionBasis init;
    if (config.estimator == "mle") {
        const MleOptions o = mle_options(config);
        estimator = o;
        init = fit_mle(data, o).estimate;
    } else if (config.estimator == "penalized") {
        const PenaltyConfig pc = penalty_config(config);
        estimator = pc;
        init = fit_penalized(data, pc).estimate;
    } else {
        throw InvalidArgument("unknown estimator '" + config.estimator + "'");
    }
    const BootstrapDraws draws = bootstrap_statistics(
        data, [&](const Dataset& d) { return fit_packed(d, estimator, init); },
        {config.bootstrap, config.seed, config.threads});
    const Vector sd = column_sd(draws.statistics);
    const PrecisionBasis se = unpack(sd, data.dim(), data.covariate_count());
    const std::string header = output_header(config);
    write_csv(dir / "se_Q0.csv", se.baseline().dense(), {header});
    for (std::size_t h = 1; h <= se.covariate_count(); ++h) {
        write_csv(dir / ("se_P" + std::to_string(h) + ".csv"), se.matrix(h).dense(), {header});
    }
    write_csv(dir / "bootstrap_draws.csv", draws.statistics, {header, "one packed estimate per successful replicate"});
    std::string failures;
    for (const auto& m : draws.failure_messages) failures += m + "\n";
    write_text(dir / "bootstrap_report.txt",
               report_text(config, {{"replicates", std::to_string(config.bootstrap)},
                                    {"failed", std::to_string(draws.failed)},
                                    {"estimator", config.estimator}}) +
                   (failures.empty() ? "" : "[failures]\n" + failures));
    out << "bootstrap: replicates=" << config.bootstrap << " failed=" << draws.failed << "\n";
}

// ---------------------------------------------------------------------------
// Argument parsing

void add_data_options(CLI::App* app, RunConfig& c) {
    app->add_option("--y", c.y_path, "Response CSV (n x p)")->required();
    app->add_option("--x", c.x_path, "Covariate CSV (n x H)");
    app->add_flag("!--no-center", c.center, "Do not center the columns of Y");
}

void add_common_options(CLI::App* app, RunConfig& c) {
    app->add_option("--seed", c.seed, "Random seed");
    app->add_option("--threads", c.threads, "Worker threads");
}

void add_mle_options(CLI::App* app, RunConfig& c) {
    app->add_option("--tol", c.mle_tol, "Stop when no coordinate moves more than this");
    app->add_option("--max-sweeps", c.max_sweeps, "Maximum coordinate sweeps");
}

void add_penalty_options(CLI::App* app, RunConfig& c) {
    app->add_flag("--constant-diagonal", c.constant_diagonal, "Hold diagonal slopes at zero");
    app->add_option("--penalty-tol", c.penalty_tol, "Stop when no parameter moves more than this");
    app->add_option("--max-outer-sweeps", c.max_outer_sweeps, "Maximum outer cycles");
}

bool mentions_option(const std::vector<std::string>& args, const std::string& name) {
    for (const auto& a : args) {
        if (a == name || a.rfind(name + "=", 0) == 0) return true;
    }
    return false;
}

/// Appends the entries of a --config / --spec file as flags, skipping any
/// option already given on the command line (flags > file > defaults).
std::vector<std::string> merge_config_file(const std::vector<std::string>& args) {
    std::vector<std::string> out = args;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if ((args[i] == "--config" || args[i] == "--spec") && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0 || args[i].rfind("--spec=", 0) == 0) {
            path = args[i].substr(args[i].find('=') + 1);
        } else {
            continue;
        }
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(path + ":" + std::to_string(number) + ": expected key=value", number);
            }
            auto strip = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r\"");
                const auto e = s.find_last_not_of(" \t\r\"");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = "--" + strip(line.substr(0, eq));
            const std::string value = strip(line.substr(eq + 1));
            if (mentions_option(args, key)) continue;
            if (value == "true") {
                out.push_back(key);
            } else if (value != "false") {
                out.push_back(key);
                out.push_back(value);
            }
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string RunConfig::canonical() const {
    KeyValues kv;
    kv["command"] = command;
    kv["y"] = y_path;
    kv["x"] = x_path;
    kv["fit"] = fit_dir;
    kv["seed"] = std::to_string(seed);
    kv["center"] = bool_text(center);
    kv["mle-tol"] = format_number(mle_tol);
    kv["max-sweeps"] = std::to_string(max_sweeps);
    kv["lambda"] = format_number(lambda);
    kv["constant-diagonal"] = bool_text(constant_diagonal);
    kv["penalty-tol"] = format_number(penalty_tol);
    kv["max-outer-sweeps"] = std::to_string(max_outer_sweeps);
    kv["gamma"] = format_number(gamma);
    kv["grid-size"] = std::to_string(grid_size);
    kv["grid-ratio"] = format_number(grid_ratio);
    kv["null"] = null_hypothesis;
    kv["bootstrap"] = std::to_string(bootstrap);
    kv["estimator"] = estimator;
    if (command == "simulate") {
        kv["replicates"] = std::to_string(replicates);
        kv["sim.p"] = std::to_string(sim.p);
        kv["sim.n"] = std::to_string(sim.n);
        kv["sim.covariates"] = std::to_string(sim.covariates);
        kv["sim.dgp"] = to_string(sim.dgp);
        kv["sim.design"] = sim.design == DesignKind::leveled ? "leveled" : "uniform";
        kv["sim.levels"] = std::to_string(sim.covariate_levels);
        kv["sim.c"] = format_number(sim.pd_shift_c);
        kv["sim.density"] = format_number(sim.density);
        kv["sim.fixed-lambda"] = sim.fixed_lambda ? format_number(*sim.fixed_lambda) : "none";
    }
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::string output_header(const RunConfig& config) {
    return "cdexggm " + config.command + " config-digest=" + config_digest(config.canonical()) +
           " seed=" + std::to_string(config.seed);
}

void write_basis_files(const fs::path& dir, const PrecisionBasis& basis, const std::string& header) {
    const std::size_t p = basis.dim();
    const std::size_t covariates = basis.covariate_count();
    write_csv(dir / "Q0.csv", basis.baseline().dense(), {header});
    for (std::size_t h = 1; h <= covariates; ++h) {
        write_csv(dir / ("P" + std::to_string(h) + ".csv"), basis.matrix(h).dense(), {header});
    }

    std::vector<std::vector<double>> pattern;
    for (std::size_t k = 0; k <= covariates; ++k) {
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                pattern.push_back({static_cast<double>(k), static_cast<double>(i), static_cast<double>(j),
                                   basis.matrix(k)(i, j) != 0.0 ? 1.0 : 0.0});
            }
        }
    }
    write_csv(dir / "sparsity_pattern.csv", matrix_of(pattern, 4),
              {header, "columns: matrix,i,j,nonzero (matrix 0 = Q0, h = P_h)"});

    // Partial correlations along each covariate (others held at 0) at five levels.
    std::vector<std::vector<double>> network;
    const std::size_t axes = std::max<std::size_t>(covariates, 1);
    for (std::size_t h = 0; h < axes; ++h) {
        for (int level = 0; level <= 4; ++level) {
            Vector x = Vector::Zero(static_cast<Eigen::Index>(covariates));
            if (covariates > 0) x[static_cast<Eigen::Index>(h)] = level / 4.0;
            const Matrix k = assemble_precision(basis, x);
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = i + 1; j < p; ++j) {
                    const auto a = static_cast<Eigen::Index>(i);
                    const auto b = static_cast<Eigen::Index>(j);
                    if (k(a, b) == 0.0) continue;
                    const double rho = k(a, a) > 0.0 && k(b, b) > 0.0 ? -k(a, b) / std::sqrt(k(a, a) * k(b, b))
                                                                      : std::numeric_limits<double>::quiet_NaN();
                    network.push_back({static_cast<double>(h + 1), level / 4.0, static_cast<double>(i),
                                       static_cast<double>(j), k(a, b), rho});
                }
            }
        }
    }
    write_csv(dir / "network_long.csv", matrix_of(network, 6),
              {header, "columns: covariate,level,i,j,precision,partial_correlation"});
}

void write_fit(const fs::path& dir, const MleFitResult& fit, const RunConfig& config) {
    const std::string header = output_header(config);
    write_basis_files(dir, fit.estimate, header);
    if (fit.asymptotic_cov) write_csv(dir / "asymptotic_cov.csv", *fit.asymptotic_cov, {header});
    write_text(dir / "fit_report.txt",
               report_text(config, {{"method", "maximum-likelihood"},
                                    {"converged", bool_text(fit.converged)},
                                    {"sweeps", std::to_string(fit.sweeps)},
                                    {"observations", std::to_string(fit.observations)},
                                    {"max_abs_score", format_number(fit.max_abs_score)},
                                    {"loglik", format_number(fit.loglik_trace.back())},
                                    {"loglik_trace", join_numbers(fit.loglik_trace)},
                                    {"seed", std::to_string(config.seed)}}));
    write_config(dir, config);
}

void write_fit(const fs::path& dir, const CompositeFitResult& fit, const RunConfig& config) {
    const std::string header = output_header(config);
    write_basis_files(dir, fit.estimate, header);
    write_text(dir / "fit_report.txt",
               report_text(config, {{"method", "penalized-composite"},
                                    {"converged", bool_text(fit.converged)},
                                    {"sweeps", std::to_string(fit.sweeps)},
                                    {"lambda", format_number(fit.lambda)},
                                    {"active_set_size", std::to_string(fit.df())},
                                    {"neg_composite_loglik", format_number(fit.neg_loglik)},
                                    {"objective_trace", join_numbers(fit.objective_trace)},
                                    {"seed", std::to_string(config.seed)}}));
    write_config(dir, config);
}

PrecisionBasis read_basis(const fs::path& dir) {
    const Matrix q0 = read_csv(dir / "Q0.csv");
    std::vector<SymmetricMatrix> slopes;
    for (std::size_t h = 1; fs::exists(dir / ("P" + std::to_string(h) + ".csv")); ++h) {
        slopes.push_back(SymmetricMatrix::from_dense(read_csv(dir / ("P" + std::to_string(h) + ".csv"))));
    }
    return PrecisionBasis(SymmetricMatrix::from_dense(q0), std::move(slopes));
}

void run(const RunConfig& config, std::ostream& out) {
    if (config.command == "fit-mle") cmd_fit_mle(config, out);
    else if (config.command == "fit-penalized") cmd_fit_penalized(config, out);
    else if (config.command == "select-lambda") cmd_select_lambda(config, out);
    else if (config.command == "simulate") cmd_simulate(config, out);
    else if (config.command == "test") cmd_test(config, out);
    else if (config.command == "bootstrap") cmd_bootstrap(config, out);
    else throw InvalidArgument("unknown command '" + config.command + "'");
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    c.threads = std::max(1u, std::thread::hardware_concurrency());

    CLI::App app{"Covariate-dependent Gaussian graphical models", "cdexggm"};
    app.require_subcommand(1, 1);

    auto* mle = app.add_subcommand("fit-mle", "Maximum-likelihood fit");
    add_data_options(mle, c);
    mle->add_option("--out", c.out_dir, "Output directory")->required();
    add_mle_options(mle, c);
    add_common_options(mle, c);
    mle->add_option("--config", "key=value file of option defaults");

    auto* pen = app.add_subcommand("fit-penalized", "Penalized composite-likelihood fit at one lambda");
    add_data_options(pen, c);
    pen->add_option("--lambda", c.lambda, "Penalty level")->required();
    pen->add_option("--out", c.out_dir, "Output directory")->required();
    add_penalty_options(pen, c);
    add_common_options(pen, c);
    pen->add_option("--config", "key=value file of option defaults");

    auto* sel = app.add_subcommand("select-lambda", "Penalized fit with lambda chosen by EBIC");
    add_data_options(sel, c);
    sel->add_option("--gamma", c.gamma, "EBIC gamma in [0, 1]");
    sel->add_option("--grid-size", c.grid_size, "Number of lambda values");
    sel->add_option("--grid-ratio", c.grid_ratio, "Smallest lambda as a fraction of lambda_max");
    sel->add_option("--out", c.out_dir, "Output directory")->required();
    add_penalty_options(sel, c);
    add_common_options(sel, c);
    sel->add_option("--config", "key=value file of option defaults");

    std::string dgp = "general";
    std::string design = "leveled";
    std::string sim_estimator = "mle";
    std::optional<double> fixed_lambda;
    std::size_t sim_max_sweeps = 20000;
    auto* sim = app.add_subcommand("simulate", "Simulation study");
    sim->add_option("--replicates", c.replicates, "Number of replicates");
    sim->add_option("--out", c.out_dir, "Output directory")->required();
    sim->add_option("--p", c.sim.p, "Dimension");
    sim->add_option("--n", c.sim.n, "Sample size");
    sim->add_option("--covariates", c.sim.covariates, "Number of covariates H");
    sim->add_option("--dgp", dgp, "general | chain | sparse | multi_covariate");
    sim->add_option("--design", design, "leveled | uniform");
    sim->add_option("--levels", c.sim.covariate_levels, "Covariate levels of the leveled design");
    sim->add_option("--c", c.sim.pd_shift_c, "Diagonal shift of A A^T + c I");
    sim->add_option("--density", c.sim.density, "Off-diagonal density of sparse generators");
    sim->add_option("--estimator", sim_estimator, "mle | penalized");
    sim->add_option("--gamma", c.gamma, "EBIC gamma in [0, 1]");
    sim->add_option("--grid-size", c.grid_size, "Number of lambda values");
    sim->add_option("--grid-ratio", c.grid_ratio, "Smallest lambda as a fraction of lambda_max");
    sim->add_option("--lambda", fixed_lambda, "Fixed lambda instead of EBIC selection");
    sim->add_option("--tol", c.mle_tol, "Maximum-likelihood tolerance");
    sim->add_option("--max-sweeps", sim_max_sweeps, "Maximum-likelihood sweeps");
    add_penalty_options(sim, c);
    add_common_options(sim, c);
    sim->add_option("--spec", "key=value file of study settings");

    auto* test = app.add_subcommand("test", "Wald test on a fitted model");
    test->add_option("--fit", c.fit_dir, "Directory written by a fit command")->required();
    test->add_option("--null", c.null_hypothesis, "theta-all | edge:i,j,h");
    test->add_option("--bootstrap", c.bootstrap, "Use a bootstrap covariance with this many replicates");
    test->add_option("--y", c.y_path, "Response CSV (defaults to the one recorded with the fit)");
    test->add_option("--x", c.x_path, "Covariate CSV (defaults to the one recorded with the fit)");
    test->add_option("--out", c.out_dir, "Also write test_report.txt here");
    add_common_options(test, c);
    test->add_option("--config", "key=value file of option defaults");

    std::size_t boot_b = 200;
    auto* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors");
    add_data_options(boot, c);
    boot->add_option("--B", boot_b, "Bootstrap replicates");
    boot->add_option("--estimator", c.estimator, "mle | penalized");
    boot->add_option("--lambda", c.lambda, "Penalty level for the penalized estimator");
    boot->add_option("--out", c.out_dir, "Output directory")->required();
    add_mle_options(boot, c);
    add_penalty_options(boot, c);
    add_common_options(boot, c);
    boot->add_option("--config", "key=value file of option defaults");

    std::vector<std::string> merged;
    try {
        merged = merge_config_file(args);
    } catch (const Error& e) {
        err << "error: " << category_name(e.kind()) << ": " << e.what() << "\n";
        return 2;
    }
    std::vector<std::string> reversed(merged.rbegin(), merged.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: invalid-argument: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
        if (c.command == "simulate") {
            c.sim.dgp = parse_dgp_kind(dgp);
            if (design == "leveled") c.sim.design = DesignKind::leveled;
            else if (design == "uniform") c.sim.design = DesignKind::uniform;
            else throw InvalidArgument("unknown design '" + design + "'");
            if (sim_estimator == "mle") c.sim.estimator = StudyEstimator::mle;
            else if (sim_estimator == "penalized") c.sim.estimator = StudyEstimator::penalized;
            else throw InvalidArgument("unknown estimator '" + sim_estimator + "'");
            c.estimator = sim_estimator;
            c.max_sweeps = sim_max_sweeps;
            c.sim.seed = c.seed;
            c.sim.mle = mle_options(c);
            c.sim.penalty = penalty_config(c);
            c.sim.constant_diagonal = c.constant_diagonal;
            c.sim.gamma = c.gamma;
            c.sim.grid_size = c.grid_size;
            c.sim.grid_ratio = c.grid_ratio;
            c.sim.fixed_lambda = fixed_lambda;
        }
        if (c.command == "bootstrap") c.bootstrap = boot_b;
        run(c, out);
    } catch (const Error& e) {
        err << "error: " << category_name(e.kind()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: numerical: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace cdexggm
