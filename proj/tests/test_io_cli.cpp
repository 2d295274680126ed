#include "cdexggm/cli.hpp"
#include "cdexggm/error.hpp"
#include "cdexggm/io.hpp"
#include "cdexggm/simulation.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace cdexggm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("cdexggm_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
    return out;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

// Writes Y.csv (and X.csv when covariates > 0) sampled from a sparse truth.
void write_inputs(const TempDir& dir, std::size_t p, std::size_t n, std::size_t covariates, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SymmetricMatrix> ends;
    for (std::size_t h = 0; h < covariates; ++h) ends.push_back(SymmetricMatrix::from_dense(gen_random_pd(p, 1.0, 0.4, rng)));
    const PrecisionBasis truth =
        PrecisionBasis::from_endpoints(SymmetricMatrix::from_dense(gen_random_pd(p, 1.0, 0.4, rng)), ends);
    const CovariateDesign x = covariates > 0 ? leveled_design(n, covariates) : CovariateDesign::none(n);
    const Dataset d = sample_dataset(truth, x, rng);
    write_csv(dir / "Y.csv", d.y(), {"responses"});
    if (covariates > 0) write_csv(dir / "X.csv", 10.0 * x.values(), {"raw covariates"});
}

}  // namespace

TEST_CASE("CSV parsing") {
    const Matrix m = parse_csv("# comment\n1,2.5,-3\n\n  4 , +5e-1, 6\n");
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 1) == 2.5);
    CHECK(m(1, 1) == 0.5);
    try {
        parse_csv("1,2\n3\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    try {
        parse_csv("1,2\n# skipped\n3,abc\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("abc") != std::string::npos);
    }
    CHECK_THROWS_AS(read_csv("/nonexistent/path/Y.csv"), IoError);
}

TEST_CASE("numbers round-trip through CSV at 17 digits") {
    TempDir dir;
    std::mt19937_64 rng(141);
    std::normal_distribution<double> z(0.0, 1e3);
    Matrix m(7, 5);
    for (auto& v : m.reshaped()) v = z(rng) * std::pow(10.0, static_cast<double>(rng() % 20) - 10.0);
    m(0, 0) = 0.1;
    m(0, 1) = -0.0;
    m(0, 2) = 1e-300;
    write_csv(dir / "m.csv", m, {"header line"});
    CHECK(read_csv(dir / "m.csv") == m);
    CHECK(slurp(dir / "m.csv").rfind("# header line\n", 0) == 0);
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("read_dataset") {
    TempDir dir;
    Matrix y(3, 2), x(3, 1);
    y << 0, 1, 1, 2, 2, 3;
    x << 10, 15, 20;
    write_csv(dir / "y.csv", y, {});
    write_csv(dir / "x.csv", x, {});
    const Dataset d = read_dataset(dir / "y.csv", dir / "x.csv");
    CHECK(std::abs(d.y().col(0).mean()) < 1e-15);
    CHECK(std::abs(d.y().col(1).mean()) < 1e-15);
    CHECK(d.x()(0, 0) == 0.0);
    CHECK(d.x()(1, 0) == 0.5);
    CHECK(d.x()(2, 0) == 1.0);
    CHECK(read_dataset(dir / "y.csv", std::nullopt, false).y() == y);

    write_csv(dir / "x4.csv", Matrix::Zero(4, 1), {});
    try {
        read_dataset(dir / "y.csv", dir / "x4.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('3') != std::string::npos);
        CHECK(msg.find('4') != std::string::npos);
    }
}

TEST_CASE("config digest is a SHA-256 prefix") {
    CHECK(config_digest("abc") == "ba7816bf8f01cfea");
    CHECK(config_digest("") == "e3b0c44298fc1c14");
}

TEST_CASE("CLI: usage errors") {
    const Run unknown = cli({"frobnicate"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("Usage") != std::string::npos);
    const Run none = cli({});
    CHECK(none.code == 2);
    const Run missing = cli({"fit-penalized", "--y", "Y.csv", "--out", "o"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--lambda") != std::string::npos);
}

TEST_CASE("CLI: runtime errors carry a category") {
    TempDir dir;
    const Run r = cli({"fit-mle", "--y", (dir / "absent.csv").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: io: ", 0) == 0);

    std::ofstream(dir / "bad.csv") << "1,2\n3\n";
    const Run p = cli({"fit-mle", "--y", (dir / "bad.csv").string(), "--out", (dir / "o").string()});
    CHECK(p.code == 1);
    CHECK(p.err.rfind("error: parse: ", 0) == 0);
}

TEST_CASE("CLI: fit-mle writes every matrix and a readable basis") {
    TempDir dir;
    write_inputs(dir, 3, 500, 2, 151);
    const fs::path out = dir / "fit";
    const Run r = cli({"fit-mle", "--y", (dir / "Y.csv").string(), "--x", (dir / "X.csv").string(), "--out",
                       out.string(), "--seed", "4"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(out / "Q0.csv"));
    CHECK(fs::exists(out / "P1.csv"));
    CHECK(fs::exists(out / "P2.csv"));
    CHECK_FALSE(fs::exists(out / "P3.csv"));
    CHECK(fs::exists(out / "asymptotic_cov.csv"));
    CHECK(fs::exists(out / "sparsity_pattern.csv"));
    CHECK(fs::exists(out / "network_long.csv"));
    const PrecisionBasis back = read_basis(out);
    CHECK(back.covariate_count() == 2);
    CHECK(back.dim() == 3);

    for (const auto& e : fs::directory_iterator(out)) {
        const std::string text = slurp(e.path());
        INFO(e.path().filename().string());
        CHECK(text.rfind("# cdexggm fit-mle config-digest=", 0) == 0);
        CHECK(text.substr(0, text.find('\n')).find(" seed=4") != std::string::npos);
    }
    const std::string report = slurp(out / "fit_report.txt");
    CHECK(report.find("converged=true") != std::string::npos);
}

TEST_CASE("CLI: write_fit and read_basis round trip bit-equal") {
    TempDir dir;
    Rng rng(152);
    const PrecisionBasis b =
        PrecisionBasis::from_endpoints(SymmetricMatrix::from_dense(gen_random_pd(4, 1.0, std::nullopt, rng)),
                                       {SymmetricMatrix::from_dense(gen_random_pd(4, 1.0, std::nullopt, rng)),
                                        SymmetricMatrix::from_dense(gen_random_pd(4, 1.0, std::nullopt, rng))});
    write_basis_files(dir.path, b, "test");
    CHECK(read_basis(dir.path) == b);
}

TEST_CASE("CLI: a fully shrunk penalized fit has an all-zero sparsity pattern") {
    TempDir dir;
    write_inputs(dir, 4, 200, 1, 153);
    const fs::path out = dir / "pen";
    const Run r = cli({"fit-penalized", "--y", (dir / "Y.csv").string(), "--x", (dir / "X.csv").string(),
                       "--lambda", "100", "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const Matrix pattern = read_csv(out / "sparsity_pattern.csv");
    CHECK(pattern.rows() == 12);
    CHECK(pattern.col(3).isZero(0.0));
    CHECK(slurp(out / "fit_report.txt").find("active_set_size=0") != std::string::npos);
}

TEST_CASE("CLI: config file values apply unless overridden by flags") {
    TempDir dir;
    write_inputs(dir, 4, 200, 1, 154);
    std::ofstream(dir / "run.cfg") << "# defaults\nlambda=100\nconstant-diagonal=true\n";
    const fs::path a = dir / "a", b = dir / "b";
    const Run ra = cli({"fit-penalized", "--config", (dir / "run.cfg").string(), "--y", (dir / "Y.csv").string(),
                        "--x", (dir / "X.csv").string(), "--out", a.string()});
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    const std::string cfg_a = slurp(a / "config.txt");
    CHECK(cfg_a.find("lambda=100") != std::string::npos);
    CHECK(cfg_a.find("constant-diagonal=true") != std::string::npos);

    const Run rb = cli({"fit-penalized", "--config", (dir / "run.cfg").string(), "--y", (dir / "Y.csv").string(),
                        "--x", (dir / "X.csv").string(), "--lambda", "0.05", "--out", b.string()});
    REQUIRE_MESSAGE(rb.code == 0, rb.err);
    CHECK(slurp(b / "config.txt").find("lambda=0.050000000000000003") != std::string::npos);
}

TEST_CASE("CLI: select-lambda, test and bootstrap") {
    TempDir dir;
    write_inputs(dir, 3, 400, 1, 155);
    const std::string y = (dir / "Y.csv").string(), x = (dir / "X.csv").string();

    const Run sel = cli({"select-lambda", "--y", y, "--x", x, "--grid-size", "6", "--out", (dir / "sel").string()});
    REQUIRE_MESSAGE(sel.code == 0, sel.err);
    CHECK(read_csv(dir / "sel" / "selection_path.csv").rows() == 6);

    const Run fit = cli({"fit-mle", "--y", y, "--x", x, "--out", (dir / "mle").string()});
    REQUIRE_MESSAGE(fit.code == 0, fit.err);
    const Run all = cli({"test", "--fit", (dir / "mle").string(), "--null", "theta-all"});
    REQUIRE_MESSAGE(all.code == 0, all.err);
    CHECK(all.out.find("df=6") != std::string::npos);
    const Run edge =
        cli({"test", "--fit", (dir / "mle").string(), "--null", "edge:0,1,1", "--out", (dir / "t").string()});
    REQUIRE_MESSAGE(edge.code == 0, edge.err);
    CHECK(fs::exists(dir / "t" / "test_report.txt"));
    const Run bad = cli({"test", "--fit", (dir / "mle").string(), "--null", "edge:0,9,1"});
    CHECK(bad.code == 1);

    const Run boot = cli({"test", "--fit", (dir / "mle").string(), "--null", "edge:0,1,1", "--bootstrap", "20"});
    REQUIRE_MESSAGE(boot.code == 0, boot.err);

    const std::vector<std::string> bargs{"bootstrap", "--y", y, "--x", x, "--B", "20", "--seed", "3", "--out"};
    auto with_out = [&](const fs::path& o) {
        auto a = bargs;
        a.push_back(o.string());
        return a;
    };
    REQUIRE(cli(with_out(dir / "b1")).code == 0);
    REQUIRE(cli(with_out(dir / "b2")).code == 0);
    CHECK(snapshot(dir / "b1") == snapshot(dir / "b2"));
    CHECK(read_csv(dir / "b1" / "bootstrap_draws.csv").rows() == 20);
}

TEST_CASE("CLI: simulate is byte-identical across reruns and thread counts") {
    TempDir dir;
    auto args = [&](const std::string& out, const std::string& threads) {
        return std::vector<std::string>{"simulate", "--p",     "3",      "--n",       "500",  "--replicates",
                                        "3",        "--seed",  "17",     "--threads", threads, "--out",
                                        (dir / out).string()};
    };
    REQUIRE(cli(args("s1", "1")).code == 0);
    REQUIRE(cli(args("s2", "1")).code == 0);
    REQUIRE(cli(args("s3", "2")).code == 0);
    const auto a = snapshot(dir / "s1");
    CHECK(a == snapshot(dir / "s2"));
    CHECK(a == snapshot(dir / "s3"));
    CHECK(a.count("study_replicates.csv") == 1);
    CHECK(a.count("study_summary.csv") == 1);
}
