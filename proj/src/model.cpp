#include "cdexggm/model.hpp"

#include "cdexggm/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace cdexggm {

std::string_view category_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::domain: return "domain";
        case ErrorKind::range: return "range";
        case ErrorKind::convergence: return "convergence-failure";
        case ErrorKind::singularity: return "singularity";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
        case ErrorKind::bootstrap: return "bootstrap-failure";
        case ErrorKind::selection: return "selection-failure";
        case ErrorKind::study: return "study-failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// SymmetricMatrix

SymmetricMatrix::SymmetricMatrix(std::size_t p, std::vector<double> packed)
    : p_(p), packed_(std::move(packed)) {
    if (packed_.size() != triangle_size(p)) {
        throw InvalidArgument("packed symmetric matrix of dimension " + std::to_string(p) + " needs " +
                              std::to_string(triangle_size(p)) + " entries, got " +
                              std::to_string(packed_.size()));
    }
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t p) {
    SymmetricMatrix m(p);
    for (std::size_t i = 0; i < p; ++i) m.set(i, i, 1.0);
    return m;
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& d) {
    SymmetricMatrix m(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
    return m;
}

SymmetricMatrix SymmetricMatrix::from_dense(const Matrix& m, double symmetry_tol) {
    if (m.rows() != m.cols()) {
        throw InvalidArgument("matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              ", expected square");
    }
    const auto p = static_cast<std::size_t>(m.rows());
    const double scale = p == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    SymmetricMatrix out(p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            const double upper = m(i, j);
            if (std::abs(upper - m(j, i)) > symmetry_tol * scale) {
                throw InvalidArgument("matrix is not symmetric at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            }
            out.set(i, j, upper);
        }
    }
    return out;
}

Matrix SymmetricMatrix::dense() const {
    Matrix m(p_, p_);
    for (std::size_t i = 0; i < p_; ++i) {
        for (std::size_t j = i; j < p_; ++j) {
            const double v = packed_[triangle_index(p_, i, j)];
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Vector SymmetricMatrix::diagonal_values() const {
    Vector d(p_);
    for (std::size_t i = 0; i < p_; ++i) d[i] = (*this)(i, i);
    return d;
}

SymmetricMatrix& SymmetricMatrix::operator+=(const SymmetricMatrix& other) {
    if (other.p_ != p_) throw InvalidArgument("symmetric matrix dimension mismatch");
    for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] += other.packed_[k];
    return *this;
}

SymmetricMatrix& SymmetricMatrix::operator-=(const SymmetricMatrix& other) {
    if (other.p_ != p_) throw InvalidArgument("symmetric matrix dimension mismatch");
    for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] -= other.packed_[k];
    return *this;
}

SymmetricMatrix& SymmetricMatrix::operator*=(double s) {
    for (double& v : packed_) v *= s;
    return *this;
}

// ---------------------------------------------------------------------------
// PrecisionBasis

PrecisionBasis::PrecisionBasis(SymmetricMatrix baseline, std::vector<SymmetricMatrix> slopes)
    : baseline_(std::move(baseline)), slopes_(std::move(slopes)) {
    for (std::size_t h = 0; h < slopes_.size(); ++h) {
        if (slopes_[h].dim() != baseline_.dim()) {
            throw InvalidArgument("slope P" + std::to_string(h + 1) + " has dimension " +
                                  std::to_string(slopes_[h].dim()) + ", baseline has " +
                                  std::to_string(baseline_.dim()));
        }
    }
}

PrecisionBasis PrecisionBasis::identity(std::size_t p, std::size_t covariates) {
    return PrecisionBasis(SymmetricMatrix::identity(p), std::vector<SymmetricMatrix>(covariates, SymmetricMatrix(p)));
}

PrecisionBasis PrecisionBasis::from_endpoints(SymmetricMatrix baseline,
                                              const std::vector<SymmetricMatrix>& endpoints) {
    const double share = endpoints.empty() ? 0.0 : 1.0 / static_cast<double>(endpoints.size());
    std::vector<SymmetricMatrix> slopes;
    slopes.reserve(endpoints.size());
    for (const auto& q : endpoints) slopes.push_back(q - baseline * share);
    return PrecisionBasis(std::move(baseline), std::move(slopes));
}

const SymmetricMatrix& PrecisionBasis::matrix(std::size_t k) const {
    if (k > slopes_.size()) throw InvalidArgument("matrix index " + std::to_string(k) + " out of range");
    return k == 0 ? baseline_ : slopes_[k - 1];
}

SymmetricMatrix& PrecisionBasis::matrix(std::size_t k) {
    if (k > slopes_.size()) throw InvalidArgument("matrix index " + std::to_string(k) + " out of range");
    return k == 0 ? baseline_ : slopes_[k - 1];
}

SymmetricMatrix PrecisionBasis::endpoint(std::size_t h) const {
    if (h == 0 || h > slopes_.size()) throw InvalidArgument("endpoint index " + std::to_string(h) + " out of range");
    return slopes_[h - 1] + baseline_ * (1.0 / static_cast<double>(slopes_.size()));
}

bool PrecisionBasis::is_valid() const {
    if (!is_positive_definite(baseline_)) return false;
    for (std::size_t h = 1; h <= slopes_.size(); ++h) {
        if (!is_positive_definite(endpoint(h))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Packing

Coordinate ParameterLayout::coordinate(std::size_t index) const {
    if (index >= size()) throw InvalidArgument("parameter index " + std::to_string(index) + " out of range");
    const std::size_t matrix = index / block_size();
    std::size_t rest = index % block_size();
    std::size_t i = 0;
    while (rest >= p_ - i) {
        rest -= p_ - i;
        ++i;
    }
    return {matrix, i, i + rest};
}

ParameterVector pack(const PrecisionBasis& basis) {
    ParameterLayout layout(basis.dim(), basis.covariate_count());
    Vector values(layout.size());
    Eigen::Index k = 0;
    for (std::size_t m = 0; m <= basis.covariate_count(); ++m) {
        for (double v : basis.matrix(m).packed()) values[k++] = v;
    }
    return {layout, std::move(values)};
}

PrecisionBasis unpack(const Vector& values, std::size_t p, std::size_t covariates) {
    ParameterLayout layout(p, covariates);
    if (static_cast<std::size_t>(values.size()) != layout.size()) {
        throw InvalidArgument("parameter vector has length " + std::to_string(values.size()) + ", expected " +
                              std::to_string(layout.size()) + " for p=" + std::to_string(p) +
                              ", H=" + std::to_string(covariates));
    }
    const std::size_t block = layout.block_size();
    auto block_at = [&](std::size_t m) {
        std::vector<double> packed(values.data() + m * block, values.data() + (m + 1) * block);
        return SymmetricMatrix(p, std::move(packed));
    };
    std::vector<SymmetricMatrix> slopes;
    slopes.reserve(covariates);
    for (std::size_t h = 1; h <= covariates; ++h) slopes.push_back(block_at(h));
    return PrecisionBasis(block_at(0), std::move(slopes));
}

PrecisionBasis unpack(const ParameterVector& beta) {
    return unpack(beta.values, beta.layout.dim(), beta.layout.covariate_count());
}

// ---------------------------------------------------------------------------
// Covariates and data

CovariateDesign::CovariateDesign(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1) throw InvalidArgument("covariate design needs at least one row");
    for (Eigen::Index m = 0; m < values_.rows(); ++m) {
        for (Eigen::Index h = 0; h < values_.cols(); ++h) {
            const double v = values_(m, h);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InvalidArgument("covariate (" + std::to_string(m) + "," + std::to_string(h) +
                                      ") = " + std::to_string(v) + " lies outside [0,1]");
            }
        }
    }
}

CovariateDesign CovariateDesign::none(std::size_t n) { return CovariateDesign(Matrix(n, 0)); }

CovariateDesign CovariateDesign::select_rows(std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), values_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = values_.row(rows[r]);
    return CovariateDesign(std::move(out));
}

CovariateGroups group_rows(const CovariateDesign& design) {
    std::map<std::vector<double>, std::size_t> seen;
    CovariateGroups groups;
    std::vector<Vector> distinct;
    for (std::size_t m = 0; m < design.rows(); ++m) {
        const Vector row = design.row(m);
        std::vector<double> key(row.data(), row.data() + row.size());
        auto [it, inserted] = seen.emplace(std::move(key), groups.members.size());
        if (inserted) {
            groups.members.emplace_back();
            distinct.push_back(row);
        }
        groups.members[it->second].push_back(m);
    }
    groups.rows.resize(static_cast<Eigen::Index>(distinct.size()), static_cast<Eigen::Index>(design.columns()));
    for (std::size_t g = 0; g < distinct.size(); ++g) groups.rows.row(g) = distinct[g].transpose();
    return groups;
}

Dataset::Dataset(Matrix y, CovariateDesign x, Centering centering) : y_(std::move(y)), x_(std::move(x)) {
    if (x_.rows() != static_cast<std::size_t>(y_.rows())) {
        throw InvalidArgument("response has " + std::to_string(y_.rows()) + " rows but covariates have " +
                              std::to_string(x_.rows()));
    }
    if (!y_.allFinite()) throw InvalidArgument("response matrix contains non-finite values");
    if (centering == Centering::center) {
        const Eigen::RowVectorXd means = y_.colwise().mean();
        y_.rowwise() -= means;
    }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Matrix y(rows.size(), y_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) y.row(r) = y_.row(rows[r]);
    return Dataset(std::move(y), x_.select_rows(rows), Centering::assume_centered);
}

// ---------------------------------------------------------------------------
// Operations

Matrix assemble_precision(const PrecisionBasis& basis, const Vector& covariate_row) {
    const std::size_t p = basis.dim();
    const std::size_t covariates = basis.covariate_count();
    if (static_cast<std::size_t>(covariate_row.size()) != covariates) {
        throw InvalidArgument("covariate row has length " + std::to_string(covariate_row.size()) +
                              ", basis has " + std::to_string(covariates) + " covariates");
    }
    Matrix k(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double v = basis.baseline()(i, j);
            for (std::size_t h = 0; h < covariates; ++h) v += covariate_row[h] * basis.slopes()[h](i, j);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

bool is_positive_definite(const Matrix& m) {
    const Eigen::Index p = m.rows();
    if (p != m.cols()) return false;
    if (p == 0) return true;
    if (!m.allFinite()) return false;
    const double max_diag = m.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) return false;
    const double tol = 1e-10 * max_diag;
    // In-place Cholesky on the lower triangle; pivots are the squared diagonal of L.
    Matrix l = m;
    for (Eigen::Index k = 0; k < p; ++k) {
        double pivot = l(k, k);
        for (Eigen::Index s = 0; s < k; ++s) pivot -= l(k, s) * l(k, s);
        if (!(pivot > tol)) return false;
        const double root = std::sqrt(pivot);
        l(k, k) = root;
        for (Eigen::Index i = k + 1; i < p; ++i) {
            double v = l(i, k);
            for (Eigen::Index s = 0; s < k; ++s) v -= l(i, s) * l(k, s);
            l(i, k) = v / root;
        }
    }
    return true;
}

bool is_positive_definite(const SymmetricMatrix& m) { return is_positive_definite(m.dense()); }

ScaledCovariates min_max_scale(const Matrix& raw,
                               const std::optional<std::vector<std::pair<double, double>>>& bounds) {
    const Eigen::Index n = raw.rows();
    const Eigen::Index cols = raw.cols();
    if (n < 1) throw InvalidArgument("cannot scale an empty covariate matrix");
    if (bounds && static_cast<Eigen::Index>(bounds->size()) != cols) {
        throw InvalidArgument("got " + std::to_string(bounds->size()) + " bounds for " + std::to_string(cols) +
                              " covariate columns");
    }
    ScaledCovariates out;
    Matrix scaled(n, cols);
    for (Eigen::Index h = 0; h < cols; ++h) {
        if (!raw.col(h).allFinite()) {
            throw RangeError("covariate column " + std::to_string(h) + " contains non-finite values",
                             static_cast<std::size_t>(h));
        }
        double lo = raw.col(h).minCoeff();
        double hi = raw.col(h).maxCoeff();
        if (bounds) {
            const auto [blo, bhi] = (*bounds)[h];
            if (!(blo < bhi)) {
                throw InvalidArgument("bounds for covariate column " + std::to_string(h) + " need min < max");
            }
            if (lo < blo || hi > bhi) {
                throw RangeError("covariate column " + std::to_string(h) + " has values outside bounds [" +
                                     std::to_string(blo) + "," + std::to_string(bhi) + "]",
                                 static_cast<std::size_t>(h));
            }
            lo = blo;
            hi = bhi;
        }
        if (!(hi > lo)) {
            scaled.col(h).setZero();
            out.degenerate_columns.push_back(static_cast<std::size_t>(h));
            continue;
        }
        const double range = hi - lo;
        for (Eigen::Index m = 0; m < n; ++m) {
            scaled(m, h) = std::clamp((raw(m, h) - lo) / range, 0.0, 1.0);
        }
    }
    out.design = CovariateDesign(std::move(scaled));
    return out;
}

}  // namespace cdexggm
