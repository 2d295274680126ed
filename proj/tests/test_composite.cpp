#include "cdexggm/composite.hpp"
#include "cdexggm/error.hpp"
#include "cdexggm/likelihood.hpp"
#include "cdexggm/simulation.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace cdexggm;

namespace {

PrecisionBasis hand_basis() {
    Matrix q0(2, 2), p1(2, 2);
    q0 << 2, 0.5, 0.5, 1;
    p1 << 0.5, -0.2, -0.2, 0.3;
    return PrecisionBasis(SymmetricMatrix::from_dense(q0), {SymmetricMatrix::from_dense(p1)});
}

Dataset hand_data() {
    Matrix y(3, 2), x(3, 1);
    y << 1, -1, 0.5, 0.2, -0.3, 0.8;
    x << 0, 0.5, 1;
    return Dataset(y, CovariateDesign(x), Centering::assume_centered);
}

// Sparse truth with H = 1 and data drawn from it.
struct Instance {
    PrecisionBasis truth;
    Dataset data;
};

Instance sparse_instance(std::size_t p, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const PrecisionBasis truth =
        PrecisionBasis::from_endpoints(SymmetricMatrix::from_dense(gen_random_pd(p, 1.0, 0.3, rng)),
                                       {SymmetricMatrix::from_dense(gen_random_pd(p, 1.0, 0.3, rng))});
    return {truth, sample_dataset(truth, leveled_design(n, 1), rng)};
}

}  // namespace

TEST_CASE("conditional_moments") {
    SUBCASE("independent coordinates") {
        const PrecisionBasis b(SymmetricMatrix::diagonal(Vector::Constant(3, 4.0)), {});
        const ConditionalMoments c = conditional_moments(b, Vector(0), 1, Vector::Ones(3));
        CHECK(c.mean == 0.0);
        CHECK(c.variance == doctest::Approx(0.25));
    }
    SUBCASE("2x2 substitution") {
        Matrix k(2, 2);
        k << 2, 1, 1, 2;
        Vector y(2);
        y << 0.0, 1.0;
        const ConditionalMoments c =
            conditional_moments(PrecisionBasis(SymmetricMatrix::from_dense(k), {}), Vector(0), 0, y);
        CHECK(c.mean == doctest::Approx(-0.5));
        CHECK(c.variance == doctest::Approx(0.5));
    }
    SUBCASE("random p = 4 against covariance blocks") {
        oracle::Rng rng(61);
        for (int t = 0; t < 10; ++t) {
            const PrecisionBasis b = oracle::random_valid_basis(4, 2, rng);
            Vector x(2);
            x << 0.3, 0.8;
            const Vector y = oracle::random_matrix(4, 1, rng).col(0);
            const Matrix sigma = oracle::lu_inverse(assemble_precision(b, x));
            for (std::size_t j = 0; j < 4; ++j) {
                const ConditionalMoments c = conditional_moments(b, x, j, y);
                const oracle::Conditional ref = oracle::covariance_conditional(sigma, j, y);
                CHECK(c.mean == doctest::Approx(ref.mean).epsilon(1e-10));
                CHECK(c.variance == doctest::Approx(ref.variance).epsilon(1e-10));
            }
        }
    }
    SUBCASE("non-positive conditional precision") {
        Matrix k = Matrix::Identity(2, 2);
        k(1, 1) = -0.5;
        CHECK_THROWS_AS(conditional_moments(PrecisionBasis(SymmetricMatrix::from_dense(k), {}), Vector(0), 1,
                                            Vector::Ones(2)),
                        DomainError);
    }
}

TEST_CASE("neg_composite_loglik") {
    SUBCASE("p = 1 equals the negative joint likelihood") {
        Matrix y(4, 1), x(4, 1);
        y << 0.3, -1.2, 0.8, 0.1;
        x << 0, 0.25, 0.5, 1;
        const Dataset d(y, CovariateDesign(x), Centering::assume_centered);
        const PrecisionBasis b(SymmetricMatrix::diagonal(Vector::Constant(1, 1.5)),
                               {SymmetricMatrix::diagonal(Vector::Constant(1, 0.7))});
        CHECK(neg_composite_loglik(b, d) == doctest::Approx(-joint_log_likelihood(b, d)).epsilon(1e-14));
    }
    SUBCASE("hand case against the conditional density oracle") {
        const PrecisionBasis b = hand_basis();
        const Dataset d = hand_data();
        CHECK(neg_composite_loglik(b, d) == doctest::Approx(oracle::neg_composite_loglik(b, d)).epsilon(1e-12));
        CHECK(neg_composite_loglik(b, d) == doctest::Approx(5.5920829426669298).epsilon(1e-12));
    }
    SUBCASE("property: random cases and additivity") {
        oracle::Rng rng(62);
        for (int t = 0; t < 15; ++t) {
            const std::size_t p = 2 + rng() % 4;
            const std::size_t h = rng() % 3;
            const PrecisionBasis b = oracle::random_valid_basis(p, h, rng);
            const Dataset d = oracle::random_dataset(7, p, h, rng);
            const double whole = neg_composite_loglik(b, d);
            CHECK(whole == doctest::Approx(oracle::neg_composite_loglik(b, d)).epsilon(1e-10));
            std::vector<std::size_t> head(6);
            std::iota(head.begin(), head.end(), 0);
            const std::size_t last[] = {6};
            CHECK(whole == doctest::Approx(neg_composite_loglik(b, d.select_rows(head)) +
                                           neg_composite_loglik(b, d.select_rows(last)))
                               .epsilon(1e-12));
        }
    }
}

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(2.0, 0.5) == 1.5);
    CHECK(soft_threshold(0.3, 0.5) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(soft_threshold(-0.5, 0.5) == 0.0);
}

TEST_CASE("off-diagonal terms on a hand-expanded p = 2 case") {
    // With p = 2 and H = 0 the normalized derivative in alpha_12 = b is
    // (2/n) sum y1 y2 + b (1/n) sum (y2^2 / a + y1^2 / d).
    Matrix y(2, 2);
    y << 0.9, -0.4, -0.3, 1.1;
    const Dataset d(y, CovariateDesign::none(2), Centering::assume_centered);
    const double a = 1.7, dd = 0.8, b = 0.25;
    Matrix k(2, 2);
    k << a, b, b, dd;
    const CompositeState state(d, PrecisionBasis(SymmetricMatrix::from_dense(k), {}));
    const double cross = (0.9 * -0.4 + -0.3 * 1.1);
    const double zero_gradient = 2.0 / 2.0 * cross;
    const double curvature = 0.5 * ((0.16 + 1.21) / a + (0.81 + 0.09) / dd);
    const auto terms = state.off_diagonal_terms({0, 0, 1});
    CHECK(terms.zero_gradient == doctest::Approx(zero_gradient).epsilon(1e-14));
    CHECK(terms.curvature == doctest::Approx(curvature).epsilon(1e-14));
    CHECK(terms.gradient == doctest::Approx(zero_gradient + b * curvature).epsilon(1e-14));
    const double lambda = 0.1;
    CHECK(state.off_diagonal_update({0, 0, 1}, lambda) ==
          doctest::Approx(soft_threshold(-zero_gradient, lambda) / curvature).epsilon(1e-14));
}

TEST_CASE("off-diagonal update is the exact coordinate minimizer") {
    oracle::Rng rng(63);
    for (int t = 0; t < 12; ++t) {
        const std::size_t h = rng() % 3;
        const PrecisionBasis b = oracle::random_valid_basis(3, h, rng);
        const Dataset d = oracle::random_dataset(12, 3, h, rng);
        const CompositeState state(d, b);
        const std::size_t k = rng() % (h + 1);
        const Coordinate c{k, 0, 2};
        const double lambda = (t % 3 == 0) ? 0.0 : 0.2;
        const double ours = state.off_diagonal_update(c, lambda);
        const auto along = [&](double v) {
            PrecisionBasis moved = b;
            moved.matrix(k).set(0, 2, v);
            return penalized_objective(moved, d, lambda);
        };
        const double golden = oracle::golden_section(along, ours - 3.0, ours + 2.0, 1e-12);
        // Golden section only resolves the location to about sqrt(eps), so
        // the value comparison carries the precision.
        CHECK(along(ours) <= along(golden) + 1e-13 * std::abs(along(golden)));
        CHECK(std::abs(golden - ours) < 1e-6);
    }
}

TEST_CASE("off-diagonal update is zero when the penalty dominates") {
    oracle::Rng rng(64);
    const PrecisionBasis b = oracle::random_valid_basis(4, 1, rng);
    const Dataset d = oracle::random_dataset(20, 4, 1, rng);
    const CompositeState state(d, b);
    CHECK(state.off_diagonal_update({0, 1, 3}, 1e6) == 0.0);
    CHECK(state.off_diagonal_update({1, 0, 2}, 1e6) == 0.0);
}

TEST_CASE("diagonal residuals") {
    SUBCASE("match finite differences of the objective") {
        oracle::Rng rng(65);
        for (int t = 0; t < 8; ++t) {
            const std::size_t p = 2 + rng() % 3;
            const std::size_t h = rng() % 3;
            const PrecisionBasis b = oracle::random_valid_basis(p, h, rng);
            const Dataset d = oracle::random_dataset(10, p, h, rng);
            const Vector r = diagonal_residuals(b, d);
            Vector fd(r.size());
            for (std::size_t k = 0; k <= h; ++k) {
                for (std::size_t j = 0; j < p; ++j) {
                    const auto f = [&](const Vector& v) {
                        PrecisionBasis moved = b;
                        moved.matrix(k).set(j, j, v[0]);
                        return penalized_objective(moved, d, 0.3);
                    };
                    fd[static_cast<Eigen::Index>(k * p + j)] =
                        oracle::fd_gradient(f, Vector::Constant(1, b.matrix(k)(j, j)), 1e-5)[0];
                }
            }
            CHECK(oracle::max_rel_error(r, fd) < 1e-6);
        }
    }
    SUBCASE("vanish where the oracle's finite-difference gradient vanishes") {
        oracle::Rng rng(66);
        const PrecisionBasis b = oracle::random_valid_basis(3, 1, rng);
        const Dataset d = oracle::random_dataset(15, 3, 1, rng);
        const auto fd_diag = [&](const Vector& diag) {
            const auto f = [&](const Vector& v) {
                PrecisionBasis moved = b;
                for (std::size_t k = 0; k < 2; ++k)
                    for (std::size_t j = 0; j < 3; ++j) moved.matrix(k).set(j, j, v[static_cast<Eigen::Index>(k * 3 + j)]);
                return oracle::neg_composite_loglik(moved, d);
            };
            return oracle::fd_gradient(f, diag, 1e-6);
        };
        Vector start(6);
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 3; ++j) start[static_cast<Eigen::Index>(k * 3 + j)] = b.matrix(k)(j, j);
        const Vector root = oracle::newton_fd(fd_diag, start, 1e-8);
        PrecisionBasis at = b;
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 3; ++j) at.matrix(k).set(j, j, root[static_cast<Eigen::Index>(k * 3 + j)]);
        CHECK(diagonal_residuals(at, d).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("scalar precision with no off-diagonals") {
        Matrix y(4, 2);
        y << 1, 0.5, -0.5, 2, 0.25, -1, 2, 0;
        const Dataset d(y, CovariateDesign::none(4), Centering::assume_centered);
        Vector diag(2);
        diag << 0.7, 1.9;
        const Vector r = diagonal_residuals(PrecisionBasis(SymmetricMatrix::diagonal(diag), {}), d);
        for (Eigen::Index j = 0; j < 2; ++j) {
            CHECK(r[j] == doctest::Approx(-2.0 / diag[j] + 0.5 * y.col(j).squaredNorm()).epsilon(1e-14));
        }
        const PrecisionBasis root = default_composite_init(d);
        CHECK(diagonal_residuals(root, d).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("property: composite gradient matches finite differences of -l_c") {
    oracle::Rng rng(67);
    for (int t = 0; t < 10; ++t) {
        const std::size_t p = 2 + rng() % 4;
        const std::size_t h = rng() % 3;
        const PrecisionBasis b = oracle::random_valid_basis(p, h, rng);
        const Dataset d = oracle::random_dataset(9, p, h, rng);
        const double n = static_cast<double>(d.size());
        const auto f = [&](const Vector& v) { return neg_composite_loglik(unpack(v, p, h), d) / n; };
        const Vector beta = pack(b).values;
        CHECK(oracle::max_rel_error(Vector(composite_gradient(b, d) / n), oracle::fd_gradient(f, beta, 1e-5)) < 1e-6);
    }
}

TEST_CASE("constant-variance diagonal update") {
    SUBCASE("no off-diagonals: scalar MLE") {
        Matrix y(3, 2);
        y << 1, 2, -1, 0.5, 0.5, -1;
        const Dataset d(y, CovariateDesign::none(3), Centering::assume_centered);
        const CompositeState state(d, PrecisionBasis::identity(2, 0));
        CHECK(update_alpha_diag_constant_variance(0, state) == doctest::Approx(3.0 / 2.25));
        CHECK(update_alpha_diag_constant_variance(1, state) == doctest::Approx(3.0 / 5.25));
    }
    SUBCASE("root of the stationarity condition, and agreement with Broyden") {
        oracle::Rng rng(68);
        PrecisionBasis b = oracle::random_valid_basis(4, 1, rng);
        for (std::size_t j = 0; j < 4; ++j) b.matrix(1).set(j, j, 0.0);
        const Dataset d = oracle::random_dataset(50, 4, 1, rng);
        CompositeState state(d, b);
        const double n = 50.0;
        BroydenConfig cfg;
        cfg.tol = 1e-13;
        for (std::size_t j = 0; j < 4; ++j) {
            const double alpha = update_alpha_diag_constant_variance(j, state);
            CHECK(alpha > 0.0);
            Vector params = Vector::Zero(2);
            params[0] = alpha;
            CHECK(std::abs(state.vertex_residual(j, params)[0]) < 1e-10);
            const auto residual = [&](const Vector& a) {
                Vector full = Vector::Zero(2);
                full[0] = a[0];
                return Vector(state.vertex_residual(j, full).head(1) / n);
            };
            const double broyden =
                broyden_solve(residual, Vector::Constant(1, b.baseline()(j, j)), cfg,
                              [](const Vector& a) { return a[0] > 0.0; })
                    .solution[0];
            CHECK(std::abs(broyden - alpha) < 1e-6);
        }
    }
}

namespace {

// Trace-form update for the constant-variance case, assembled from dense
// moment matrices and edge masks. Independent of CompositeState.
double matrix_form_update(const PrecisionBasis& b, const Dataset& d, std::size_t k, std::size_t a, std::size_t c,
                          double lambda) {
    const auto p = static_cast<Eigen::Index>(b.dim());
    const std::size_t covariates = b.covariate_count();
    const double n = static_cast<double>(d.size());
    const Matrix& y = d.y();
    const Matrix q0 = b.baseline().dense();
    const Vector alpha = q0.diagonal();

    const auto scaled_offdiag = [&](const Matrix& m) {
        Matrix out(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < p; ++j) out(i, j) = i == j ? 0.0 : -m(i, j) / alpha[j];
        return out;
    };
    const Matrix b_alpha = scaled_offdiag(q0);
    std::vector<Matrix> b_theta, xy;
    for (std::size_t h = 0; h < covariates; ++h) {
        b_theta.push_back(scaled_offdiag(b.slopes()[h].dense()));
        xy.push_back(d.x().values().col(static_cast<Eigen::Index>(h)).asDiagonal() * y);
    }

    const auto ai = static_cast<Eigen::Index>(a), ci = static_cast<Eigen::Index>(c);
    Matrix t = Matrix::Zero(p, p);
    t(ai, ci) = t(ci, ai) = 1.0;
    const Matrix t_comp = Matrix::Ones(p, p) - t;
    Matrix t_rows = Matrix::Zero(p, p);
    t_rows.row(ai).setOnes();
    t_rows.row(ci).setOnes();
    t_rows.diagonal().setZero();
    const Matrix sigma = alpha.cwiseInverse().asDiagonal();

    const Matrix c_alpha = y.transpose() * y / n;
    const auto c_theta = [&](std::size_t h) { return Matrix(xy[h].transpose() * y / n); };
    const auto g_theta = [&](std::size_t h, std::size_t l) { return Matrix(xy[l].transpose() * xy[h] / n); };

    double num = 0.0, den = 0.0;
    if (k == 0) {
        num = -(t * c_alpha).trace() + (t * t_comp.cwiseProduct(b_alpha.transpose()) * c_alpha).trace();
        for (std::size_t h = 0; h < covariates; ++h)
            num += (t * t_rows.cwiseProduct(b_theta[h].transpose()) * c_theta(h)).trace();
        den = (t * sigma * t * c_alpha).trace();
    } else {
        const std::size_t h = k - 1;
        num = -(t * c_theta(h)).trace() + (t * t_comp.cwiseProduct(b_theta[h].transpose()) * g_theta(h, h)).trace() +
              (t * t_rows.cwiseProduct(b_alpha.transpose()) * c_theta(h)).trace();
        for (std::size_t l = 0; l < covariates; ++l)
            if (l != h) num += (t * t_rows.cwiseProduct(b_theta[l].transpose()) * g_theta(h, l)).trace();
        den = (t * sigma * t * g_theta(h, h)).trace();
    }
    const double shrunk = std::copysign(std::max(std::abs(num) - lambda, 0.0), num);
    return shrunk / den;
}

}  // namespace

TEST_CASE("constant-variance off-diagonal update agrees with the trace form") {
    oracle::Rng rng(69);
    PrecisionBasis b = oracle::random_valid_basis(5, 2, rng, 3.0);
    for (std::size_t h = 1; h <= 2; ++h)
        for (std::size_t j = 0; j < 5; ++j) b.matrix(h).set(j, j, 0.0);
    REQUIRE(b.is_valid());
    const Dataset d = oracle::random_dataset(40, 5, 2, rng);
    const CompositeState state(d, b);
    for (double lambda : {0.0, 0.05}) {
        for (std::size_t k = 0; k <= 2; ++k) {
            for (std::size_t a = 0; a < 5; ++a) {
                for (std::size_t c = a + 1; c < 5; ++c) {
                    const double ours = state.off_diagonal_update({k, a, c}, lambda);
                    CHECK(ours == doctest::Approx(matrix_form_update(b, d, k, a, c, lambda)).epsilon(1e-10));
                }
            }
        }
    }
}

TEST_CASE("penalized fit with no penalty approaches the static MLE") {
    const PrecisionBasis truth(SymmetricMatrix::from_dense(gen_random_pd(3, 1.0, std::nullopt, 71)), {});
    const Dataset d = sample_dataset(truth, CovariateDesign::none(5000), 72);
    PenaltyConfig cfg;
    cfg.lambda = 0.0;
    cfg.tol = 1e-8;
    const CompositeFitResult pen = fit_penalized(d, cfg);
    REQUIRE(pen.converged);
    const MleFitResult mle = fit_mle(d);
    REQUIRE(mle.converged);
    CHECK((pen.estimate.baseline().dense() - mle.estimate.baseline().dense()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("full shrinkage leaves per-vertex scalar fits") {
    const Instance inst = sparse_instance(6, 600, 73);
    PenaltyConfig cfg;
    cfg.lambda = 10.0 * lambda_max(inst.data);
    const CompositeFitResult fit = fit_penalized(inst.data, cfg);
    REQUIRE(fit.converged);
    CHECK(fit.active_set.empty());
    for (std::size_t k = 0; k <= 1; ++k)
        for (std::size_t a = 0; a < 6; ++a)
            for (std::size_t b = a + 1; b < 6; ++b) CHECK(fit.estimate.matrix(k)(a, b) == 0.0);
    // Each vertex's diagonal pair solves its own scalar Gaussian regression on x.
    CHECK(diagonal_residuals(fit.estimate, inst.data).cwiseAbs().maxCoeff() / 600.0 < 1e-8);

    const Dataset stat(inst.data.y(), CovariateDesign::none(600), Centering::assume_centered);
    const CompositeFitResult s = fit_penalized(stat, cfg);
    for (std::size_t j = 0; j < 6; ++j)
        CHECK(s.estimate.baseline()(j, j) == doctest::Approx(600.0 / stat.y().col(j).squaredNorm()).epsilon(1e-8));
}

TEST_CASE("lambda_max is the smallest penalty keeping every off-diagonal at zero") {
    const Instance inst = sparse_instance(5, 400, 74);
    const double top = lambda_max(inst.data);
    PenaltyConfig cfg;
    cfg.lambda = top * 1.0001;
    CHECK(fit_penalized(inst.data, cfg).active_set.empty());
    cfg.lambda = top * 0.95;
    CHECK_FALSE(fit_penalized(inst.data, cfg).active_set.empty());
}

TEST_CASE("penalized fit: monotone objective, KKT certificate, exact zeros, symmetry") {
    const Instance inst = sparse_instance(8, 1000, 75);
    PenaltyConfig cfg;
    cfg.lambda = 0.1 * lambda_max(inst.data);
    cfg.tol = 1e-8;
    const CompositeFitResult fit = fit_penalized(inst.data, cfg);
    REQUIRE(fit.converged);
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s)
        CHECK(fit.objective_trace[s] <= fit.objective_trace[s - 1] + 1e-9 * std::abs(fit.objective_trace[s - 1]));
    CHECK(kkt_violation(fit.estimate, inst.data, cfg.lambda) < 1e-5);
    CHECK(fit.neg_loglik == doctest::Approx(neg_composite_loglik(fit.estimate, inst.data)).epsilon(1e-12));

    std::size_t nonzero = 0;
    for (std::size_t k = 0; k <= 1; ++k)
        for (std::size_t a = 0; a < 8; ++a)
            for (std::size_t b = a + 1; b < 8; ++b) nonzero += fit.estimate.matrix(k)(a, b) != 0.0;
    CHECK(nonzero == fit.df());
    for (const Coordinate& c : fit.active_set) CHECK(fit.estimate.matrix(c.matrix)(c.i, c.j) != 0.0);

    for (double x : {0.0, 0.35, 1.0}) {
        const Matrix k = assemble_precision(fit.estimate, Vector::Constant(1, x));
        CHECK(k == k.transpose());
    }
}

TEST_CASE("assembled sparsity pattern is the union of the active sets") {
    const Instance inst = sparse_instance(8, 1000, 76);
    PenaltyConfig cfg;
    cfg.lambda = 0.15 * lambda_max(inst.data);
    const CompositeFitResult fit = fit_penalized(inst.data, cfg);
    REQUIRE(fit.converged);
    const Matrix k = assemble_precision(fit.estimate, Vector::Constant(1, 0.6));
    for (std::size_t a = 0; a < 8; ++a) {
        for (std::size_t b = a + 1; b < 8; ++b) {
            const double q0 = fit.estimate.baseline()(a, b);
            const double p1 = fit.estimate.matrix(1)(a, b);
            if (q0 != 0.0 && std::abs(q0 + 0.6 * p1) < 1e-12) continue;  // exact cancellation
            const bool active = q0 != 0.0 || p1 != 0.0;
            CHECK((k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) != 0.0) == active);
        }
    }
}

TEST_CASE("constant-diagonal fit keeps the diagonal slopes at zero") {
    Rng rng(77);
    const PrecisionBasis truth = gen_multi_covariate_basis(6, rng(), 1.0, 0.3);
    const Dataset d = sample_dataset(truth, uniform_design(800, 2, rng), rng);
    PenaltyConfig cfg;
    cfg.lambda = 0.1 * lambda_max(d);
    cfg.constant_diagonal = true;
    const CompositeFitResult fit = fit_penalized(d, cfg);
    REQUIRE(fit.converged);
    for (std::size_t h = 1; h <= 2; ++h)
        for (std::size_t j = 0; j < 6; ++j) CHECK(fit.estimate.matrix(h)(j, j) == 0.0);
}

TEST_CASE("fit_penalized argument checks") {
    const Instance inst = sparse_instance(3, 50, 78);
    PenaltyConfig cfg;
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(fit_penalized(inst.data, cfg), InvalidArgument);
    cfg.lambda = 0.1;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(fit_penalized(inst.data, cfg), InvalidArgument);
}
