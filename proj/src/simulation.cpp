#include "cdexggm/simulation.hpp"

#include "cdexggm/error.hpp"
#include "cdexggm/selection.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace cdexggm {

namespace {

constexpr double truth_threshold = 1e-12;

double scaled_error(const SymmetricMatrix& estimate, const SymmetricMatrix& truth) {
    const std::size_t p = truth.dim();
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) sq += std::pow(estimate(i, j) - truth(i, j), 2);
    }
    return std::sqrt(sq) / static_cast<double>(triangle_size(p));
}

SymmetricMatrix to_symmetric(const Matrix& m) { return SymmetricMatrix::from_dense(m, 1e-8); }

/// Matrices reported per replicate: Q0, endpoints Q_1..Q_H, slopes P_1..P_H.
std::vector<std::pair<std::string, SymmetricMatrix>> reported_matrices(const PrecisionBasis& b) {
    std::vector<std::pair<std::string, SymmetricMatrix>> out;
    out.emplace_back("Q0", b.baseline());
    for (std::size_t h = 1; h <= b.covariate_count(); ++h) out.emplace_back("Q" + std::to_string(h), b.endpoint(h));
    for (std::size_t h = 1; h <= b.covariate_count(); ++h) out.emplace_back("P" + std::to_string(h), b.slopes()[h - 1]);
    return out;
}

std::vector<std::string> study_columns(const SimSpec& spec) {
    std::vector<std::string> names;
    PrecisionBasis shape = PrecisionBasis::identity(spec.p, spec.covariates);
    const auto mats = reported_matrices(shape);
    names.push_back("replicate");
    for (const auto& [name, m] : mats) names.push_back("err_" + name);
    names.push_back("converged");
    names.push_back("sweeps");
    if (spec.estimator == StudyEstimator::mle) {
        names.push_back("max_abs_score");
    } else {
        names.push_back("lambda");
        names.push_back("df");
        names.push_back("kkt");
        for (const auto& [name, m] : mats) {
            names.push_back("sens_" + name);
            names.push_back("spec_" + name);
            names.push_back("mcc_" + name);
        }
    }
    return names;
}

std::vector<double> run_replicate(const SimSpec& spec, std::size_t replicate) {
    Rng truth_rng(derive_seed(spec.seed, 2 * replicate));
    Rng data_rng(derive_seed(spec.seed, 2 * replicate + 1));
    const PrecisionBasis truth = generate_basis(spec, truth_rng);
    const CovariateDesign design = generate_design(spec, data_rng);
    const Dataset data = sample_dataset(truth, design, data_rng);

    std::vector<double> row;
    row.push_back(static_cast<double>(replicate));
    if (spec.estimator == StudyEstimator::mle) {
        MleOptions options = spec.mle;
        options.compute_covariance = false;
        const MleFitResult fit = fit_mle(data, options);
        const auto est = reported_matrices(fit.estimate);
        const auto tru = reported_matrices(truth);
        for (std::size_t k = 0; k < est.size(); ++k) row.push_back(scaled_error(est[k].second, tru[k].second));
        row.push_back(fit.converged ? 1.0 : 0.0);
        row.push_back(static_cast<double>(fit.sweeps));
        row.push_back(fit.max_abs_score);
        return row;
    }

    PenaltyConfig cfg = spec.penalty;
    cfg.constant_diagonal = spec.constant_diagonal;
    CompositeFitResult fit;
    if (spec.fixed_lambda) {
        cfg.lambda = *spec.fixed_lambda;
        fit = fit_penalized(data, cfg);
    } else {
        const SelectionResult sel =
            select_lambda(data, default_lambda_grid(data, spec.grid_size, spec.grid_ratio), spec.gamma, cfg);
        fit = sel.chosen();
    }
    const auto est = reported_matrices(fit.estimate);
    const auto tru = reported_matrices(truth);
    for (std::size_t k = 0; k < est.size(); ++k) row.push_back(scaled_error(est[k].second, tru[k].second));
    row.push_back(fit.converged ? 1.0 : 0.0);
    row.push_back(static_cast<double>(fit.sweeps));
    row.push_back(fit.lambda);
    row.push_back(static_cast<double>(fit.df()));
    row.push_back(kkt_violation(fit.estimate, data, fit.lambda));
    for (std::size_t k = 0; k < est.size(); ++k) {
        const MetricReport r = classification_metrics(est[k].second, tru[k].second);
        row.push_back(r.sensitivity);
        row.push_back(r.specificity);
        row.push_back(r.mcc);
    }
    return row;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---------------------------------------------------------------------------
// Generators

Matrix gen_random_pd(std::size_t p, double c, std::optional<double> density, Rng& rng) {
    if (p < 1) throw InvalidArgument("dimension must be positive");
    if (!(c > 0.0)) throw InvalidArgument("diagonal shift c must be positive");
    double keep = 1.0;
    if (density) {
        if (!(*density > 0.0 && *density <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");
        // P(entry of A A^T nonzero) = 1 - (1 - keep^2)^p.
        keep = std::sqrt(1.0 - std::pow(1.0 - *density, 1.0 / static_cast<double>(p)));
    }
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const auto ps = static_cast<Eigen::Index>(p);
    Matrix a(ps, ps);
    for (Eigen::Index i = 0; i < ps; ++i) {
        for (Eigen::Index j = 0; j < ps; ++j) {
            const double v = unif(rng);
            a(i, j) = (!density || coin(rng) < keep) ? v : 0.0;
        }
    }
    Matrix q = a * a.transpose();
    q.diagonal().array() += c;
    q = 0.5 * (q + q.transpose());
    if (!is_positive_definite(q)) throw NumericalError("generated matrix failed the positive definiteness check");
    return q;
}

Matrix gen_random_pd(std::size_t p, double c, std::optional<double> density, std::uint64_t seed) {
    Rng rng(seed);
    return gen_random_pd(p, c, density, rng);
}

Matrix chain_precision_from_positions(const Vector& s) {
    const Eigen::Index p = s.size();
    if (p < 2) throw InvalidArgument("chain needs at least two positions");
    Matrix cov(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) cov(i, j) = std::exp(-0.5 * std::abs(s[i] - s[j]));
    }
    Matrix q = cov.llt().solve(Matrix::Identity(p, p));
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::abs(i - j) > 1) q(i, j) = 0.0;
        }
    }
    return 0.5 * (q + q.transpose());
}

Matrix gen_chain_precision(std::size_t p, Rng& rng) {
    if (p < 2) throw InvalidArgument("chain needs p >= 2");
    std::uniform_real_distribution<double> step(0.5, 1.0);
    Vector s(static_cast<Eigen::Index>(p));
    s[0] = step(rng);
    for (Eigen::Index i = 1; i < s.size(); ++i) s[i] = s[i - 1] + step(rng);
    return chain_precision_from_positions(s);
}

Matrix gen_chain_precision(std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    return gen_chain_precision(p, rng);
}

PrecisionBasis gen_multi_covariate_basis(std::size_t p, double c, double density, Rng& rng) {
    if (p < 2) throw InvalidArgument("multi-covariate basis needs p >= 2");
    for (int attempt = 0; attempt < 10; ++attempt) {
        const Matrix q0 = gen_random_pd(p, c, density, rng);
        const Vector l0 = (q0.diagonal() / 2.0).cwiseSqrt();
        std::vector<SymmetricMatrix> slopes;
        for (int h = 0; h < 2; ++h) {
            const Matrix qh = gen_random_pd(p, c, density, rng);
            const Vector lh = qh.diagonal().cwiseSqrt().cwiseInverse();
            const Vector scale = l0.cwiseProduct(lh);
            Matrix n2 = scale.asDiagonal() * qh * scale.asDiagonal();
            Matrix ph = n2 - 0.5 * q0;
            ph.diagonal().setZero();
            slopes.push_back(to_symmetric(ph));
        }
        PrecisionBasis basis(to_symmetric(q0), std::move(slopes));
        if (basis.is_valid()) return basis;
    }
    throw NumericalError("multi-covariate basis was not valid after 10 draws");
}

PrecisionBasis gen_multi_covariate_basis(std::size_t p, std::uint64_t seed, double c, double density) {
    Rng rng(seed);
    return gen_multi_covariate_basis(p, c, density, rng);
}

CovariateDesign leveled_design(std::size_t n, std::size_t covariates, std::size_t levels) {
    if (levels < 2) throw InvalidArgument("leveled design needs at least two levels");
    if (n == 0 || n % levels != 0) throw InvalidArgument("n must be a positive multiple of the number of levels");
    const auto rows = static_cast<Eigen::Index>(n);
    Matrix x(rows, static_cast<Eigen::Index>(covariates));
    std::size_t stride = n / levels;
    for (std::size_t h = 0; h < covariates; ++h) {
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t level = (m / stride) % levels;
            x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(h)) =
                static_cast<double>(level) / static_cast<double>(levels - 1);
        }
        stride = h == 0 ? 1 : stride * levels;
    }
    return CovariateDesign(std::move(x));
}

CovariateDesign uniform_design(std::size_t n, std::size_t covariates, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(covariates));
    for (Eigen::Index m = 0; m < x.rows(); ++m) {
        for (Eigen::Index h = 0; h < x.cols(); ++h) x(m, h) = unif(rng);
    }
    return CovariateDesign(std::move(x));
}

Dataset sample_dataset(const PrecisionBasis& basis, const CovariateDesign& design, Rng& rng) {
    if (design.columns() != basis.covariate_count()) {
        throw InvalidArgument("design has " + std::to_string(design.columns()) + " covariates but basis has " +
                              std::to_string(basis.covariate_count()));
    }
    const auto p = static_cast<Eigen::Index>(basis.dim());
    std::normal_distribution<double> normal;
    Matrix y(static_cast<Eigen::Index>(design.rows()), p);
    Vector z(p);
    for (std::size_t m = 0; m < design.rows(); ++m) {
        const Matrix k = assemble_precision(basis, design.row(m));
        const Eigen::LLT<Matrix> llt(k);
        if (llt.info() != Eigen::Success || !is_positive_definite(k)) {
            throw DomainError("precision is not positive definite at design row " + std::to_string(m), m);
        }
        for (Eigen::Index i = 0; i < p; ++i) z[i] = normal(rng);
        // K = L L^T, so L^{-T} z has covariance K^{-1}.
        y.row(static_cast<Eigen::Index>(m)) = llt.matrixU().solve(z).transpose();
    }
    return Dataset(std::move(y), design, Centering::assume_centered);
}

Dataset sample_dataset(const PrecisionBasis& basis, const CovariateDesign& design, std::uint64_t seed) {
    Rng rng(seed);
    return sample_dataset(basis, design, rng);
}

// ---------------------------------------------------------------------------
// Metrics

MetricReport classification_metrics(const Matrix& estimated, const Matrix& truth) {
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols() || truth.rows() != truth.cols()) {
        throw InvalidArgument("estimate and truth must be square matrices of the same size");
    }
    MetricReport r;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < truth.cols(); ++j) {
            const bool actual = std::abs(truth(i, j)) > truth_threshold;
            const bool called = estimated(i, j) != 0.0;
            if (actual && called) ++r.tp;
            else if (actual) ++r.fn;
            else if (called) ++r.fp;
            else ++r.tn;
        }
    }
    const double tp = static_cast<double>(r.tp);
    const double tn = static_cast<double>(r.tn);
    const double fp = static_cast<double>(r.fp);
    const double fn = static_cast<double>(r.fn);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.sensitivity = r.tp + r.fn > 0 ? tp / (tp + fn) : nan;
    r.specificity = r.tn + r.fp > 0 ? tn / (tn + fp) : nan;
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom > 0.0) {
        r.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
    } else {
        r.mcc = 0.0;
        r.mcc_defined = false;
    }
    return r;
}

MetricReport classification_metrics(const SymmetricMatrix& estimated, const SymmetricMatrix& truth) {
    return classification_metrics(estimated.dense(), truth.dense());
}

// ---------------------------------------------------------------------------
// Studies

std::string to_string(DgpKind kind) {
    switch (kind) {
        case DgpKind::general: return "general";
        case DgpKind::chain: return "chain";
        case DgpKind::sparse: return "sparse";
        case DgpKind::multi_covariate_s41: return "multi_covariate";
    }
    return "unknown";
}

DgpKind parse_dgp_kind(const std::string& name) {
    if (name == "general") return DgpKind::general;
    if (name == "chain") return DgpKind::chain;
    if (name == "sparse") return DgpKind::sparse;
    if (name == "multi_covariate") return DgpKind::multi_covariate_s41;
    throw InvalidArgument("unknown data-generating process '" + name + "'");
}

void validate(const SimSpec& spec) {
    if (spec.p < 2) throw InvalidArgument("simulation needs p >= 2");
    if (spec.n < 2) throw InvalidArgument("simulation needs n >= 2");
    if (spec.design == DesignKind::leveled && spec.covariates > 0 &&
        (spec.covariate_levels < 2 || spec.n % spec.covariate_levels != 0)) {
        throw InvalidArgument("n must be divisible by the number of covariate levels");
    }
    if (spec.dgp == DgpKind::multi_covariate_s41 && spec.covariates != 2) {
        throw InvalidArgument("the multi-covariate generator produces exactly two covariates");
    }
    if (!(spec.pd_shift_c > 0.0)) throw InvalidArgument("pd shift c must be positive");
    if (!(spec.density > 0.0 && spec.density <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");
    if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
}

PrecisionBasis generate_basis(const SimSpec& spec, Rng& rng) {
    const std::size_t p = spec.p;
    if (spec.dgp == DgpKind::multi_covariate_s41) {
        return gen_multi_covariate_basis(p, spec.pd_shift_c, spec.density, rng);
    }
    auto draw = [&]() -> Matrix {
        switch (spec.dgp) {
            case DgpKind::chain: return gen_chain_precision(p, rng);
            case DgpKind::sparse: return gen_random_pd(p, spec.pd_shift_c, spec.density, rng);
            default: return gen_random_pd(p, spec.pd_shift_c, std::nullopt, rng);
        }
    };
    const SymmetricMatrix q0 = to_symmetric(draw());
    std::vector<SymmetricMatrix> endpoints;
    for (std::size_t h = 0; h < spec.covariates; ++h) endpoints.push_back(to_symmetric(draw()));
    PrecisionBasis basis = PrecisionBasis::from_endpoints(q0, endpoints);
    if (!basis.is_valid()) throw NumericalError("generated basis is not valid");
    return basis;
}

CovariateDesign generate_design(const SimSpec& spec, Rng& rng) {
    if (spec.covariates == 0) return CovariateDesign::none(spec.n);
    if (spec.design == DesignKind::uniform) return uniform_design(spec.n, spec.covariates, rng);
    return leveled_design(spec.n, spec.covariates, spec.covariate_levels);
}

std::size_t StudyTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw InvalidArgument("study table has no column '" + name + "'");
}

StudyTable run_study(const SimSpec& spec, std::size_t replicates, std::size_t threads) {
    validate(spec);
    if (replicates < 1) throw InvalidArgument("study needs at least one replicate");
    threads = std::max<std::size_t>(1, std::min(threads, replicates));
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::optional<std::vector<double>>> rows(replicates);
    std::vector<std::string> messages(replicates);
    auto worker = [&](std::size_t first) {
        for (std::size_t r = first; r < replicates; r += threads) {
            try {
                rows[r] = run_replicate(spec, r);
            } catch (const Error& e) {
                messages[r] = std::string(category_name(e.kind())) + ": " + e.what();
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

    StudyTable table;
    table.columns = study_columns(spec);
    for (std::size_t r = 0; r < replicates; ++r) {
        if (rows[r]) table.rows.push_back(std::move(*rows[r]));
        else table.failures.push_back({r, messages[r]});
    }
    if (10 * table.failures.size() > 3 * replicates) {
        throw StudyError(std::to_string(table.failures.size()) + " of " + std::to_string(replicates) +
                         " replicates failed; first: " + table.failures.front().message);
    }
    const std::size_t cols = table.columns.size();
    const double count = static_cast<double>(table.rows.size());
    table.mean.assign(cols, 0.0);
    table.sd.assign(cols, std::nullopt);
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < cols; ++c) table.mean[c] += row[c];
    }
    for (double& m : table.mean) m /= count;
    if (table.rows.size() >= 2) {
        for (std::size_t c = 0; c < cols; ++c) {
            double ss = 0.0;
            for (const auto& row : table.rows) ss += std::pow(row[c] - table.mean[c], 2);
            table.sd[c] = std::sqrt(ss / (count - 1.0));
        }
    }
    table.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

}  // namespace cdexggm
