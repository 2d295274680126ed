#pragma once

// Core domain types for covariate-dependent Gaussian graphical models.
//
// The precision matrix of observation m is
//     K_m = Q0 + sum_h x_m^(h) * P_h,
// with covariates x_m^(h) in [0,1]. The endpoint precision at covariate h is
// Q_h = P_h + Q0 / H; Q0 and every Q_h positive definite makes K_m positive
// definite for every covariate row in the unit cube.
//
// Matrices are indexed by a "matrix index" k in 0..H: k = 0 is Q0 and
// k = h >= 1 is the slope P_h.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cdexggm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Number of entries in the upper triangle (diagonal included) of a p x p matrix.
constexpr std::size_t triangle_size(std::size_t p) noexcept { return p * (p + 1) / 2; }

/// Row-major upper-triangular offset of (i, j), i <= j.
constexpr std::size_t triangle_index(std::size_t p, std::size_t i, std::size_t j) noexcept {
    return i * p - i * (i - 1) / 2 + (j - i);
}

/// Symmetric matrix stored as its packed upper triangle (row-major, diagonal
/// included). Reads of (i, j) and (j, i) hit the same storage, so symmetry
/// cannot be violated.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(std::size_t p) : p_(p), packed_(triangle_size(p), 0.0) {}
    SymmetricMatrix(std::size_t p, std::vector<double> packed);

    static SymmetricMatrix identity(std::size_t p);
    static SymmetricMatrix diagonal(const Vector& d);
    /// Takes the upper triangle of `m`. Throws InvalidArgument if `m` is not
    /// square or if any |m(i,j) - m(j,i)| exceeds `symmetry_tol` times the
    /// largest absolute entry.
    static SymmetricMatrix from_dense(const Matrix& m, double symmetry_tol = 1e-10);

    std::size_t dim() const noexcept { return p_; }

    double operator()(std::size_t i, std::size_t j) const noexcept {
        return i <= j ? packed_[triangle_index(p_, i, j)] : packed_[triangle_index(p_, j, i)];
    }
    void set(std::size_t i, std::size_t j, double value) noexcept {
        if (i <= j) {
            packed_[triangle_index(p_, i, j)] = value;
        } else {
            packed_[triangle_index(p_, j, i)] = value;
        }
    }

    std::span<const double> packed() const noexcept { return packed_; }
    Matrix dense() const;
    Vector diagonal_values() const;

    SymmetricMatrix& operator+=(const SymmetricMatrix& other);
    SymmetricMatrix& operator-=(const SymmetricMatrix& other);
    SymmetricMatrix& operator*=(double s);

    friend SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) { return a += b; }
    friend SymmetricMatrix operator-(SymmetricMatrix a, const SymmetricMatrix& b) { return a -= b; }
    friend SymmetricMatrix operator*(SymmetricMatrix a, double s) { return a *= s; }
    friend SymmetricMatrix operator*(double s, SymmetricMatrix a) { return a *= s; }
    friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

private:
    std::size_t p_ = 0;
    std::vector<double> packed_;
};

/// Baseline Q0 plus slopes P_1..P_H.
class PrecisionBasis {
public:
    PrecisionBasis() = default;
    PrecisionBasis(SymmetricMatrix baseline, std::vector<SymmetricMatrix> slopes);

    /// Q0 = I, all slopes zero.
    static PrecisionBasis identity(std::size_t p, std::size_t covariates);
    /// Builds the slopes from endpoint precisions: P_h = Q_h - Q0 / H.
    static PrecisionBasis from_endpoints(SymmetricMatrix baseline,
                                         const std::vector<SymmetricMatrix>& endpoints);

    std::size_t dim() const noexcept { return baseline_.dim(); }
    std::size_t covariate_count() const noexcept { return slopes_.size(); }

    const SymmetricMatrix& baseline() const noexcept { return baseline_; }
    const std::vector<SymmetricMatrix>& slopes() const noexcept { return slopes_; }
    /// k = 0 is Q0, k >= 1 is P_k.
    const SymmetricMatrix& matrix(std::size_t k) const;
    SymmetricMatrix& matrix(std::size_t k);

    /// Q_h = P_h + Q0 / H for h in 1..H.
    SymmetricMatrix endpoint(std::size_t h) const;

    /// True iff Q0 and every endpoint Q_h are positive definite.
    bool is_valid() const;

    friend bool operator==(const PrecisionBasis&, const PrecisionBasis&) = default;

private:
    SymmetricMatrix baseline_;
    std::vector<SymmetricMatrix> slopes_;
};

/// Location of one scalar parameter: entry (i, j), i <= j, of matrix k.
struct Coordinate {
    std::size_t matrix;
    std::size_t i;
    std::size_t j;

    bool off_diagonal() const noexcept { return i != j; }
    friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

/// Packing order of the flat parameter vector: every Q0 entry in row-major
/// upper-triangular order (diagonal included), then the P_1 block in the same
/// order, then P_2, and so on. This order is part of the file formats and does
/// not change.
class ParameterLayout {
public:
    ParameterLayout() = default;
    ParameterLayout(std::size_t p, std::size_t covariates) : p_(p), h_(covariates) {}

    std::size_t dim() const noexcept { return p_; }
    std::size_t covariate_count() const noexcept { return h_; }
    std::size_t block_size() const noexcept { return triangle_size(p_); }
    std::size_t size() const noexcept { return (h_ + 1) * block_size(); }

    std::size_t index(std::size_t matrix, std::size_t i, std::size_t j) const noexcept {
        if (i > j) std::swap(i, j);
        return matrix * block_size() + triangle_index(p_, i, j);
    }
    std::size_t index(const Coordinate& c) const noexcept { return index(c.matrix, c.i, c.j); }
    Coordinate coordinate(std::size_t index) const;

    friend bool operator==(const ParameterLayout&, const ParameterLayout&) = default;

private:
    std::size_t p_ = 0;
    std::size_t h_ = 0;
};

struct ParameterVector {
    ParameterLayout layout;
    Vector values;

    double operator[](std::size_t k) const { return values[static_cast<Eigen::Index>(k)]; }
};

ParameterVector pack(const PrecisionBasis& basis);
/// Throws InvalidArgument if the length does not match (H+1) p (p+1) / 2.
PrecisionBasis unpack(const ParameterVector& beta);
PrecisionBasis unpack(const Vector& values, std::size_t p, std::size_t covariates);

/// n x H covariate matrix with every entry in [0, 1]. H may be zero.
class CovariateDesign {
public:
    CovariateDesign() = default;
    explicit CovariateDesign(Matrix values);
    /// n rows, no covariates: a static graphical model.
    static CovariateDesign none(std::size_t n);

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t columns() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    const Matrix& values() const noexcept { return values_; }
    Vector row(std::size_t m) const { return values_.row(static_cast<Eigen::Index>(m)).transpose(); }
    double operator()(std::size_t m, std::size_t h) const {
        return values_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(h));
    }

    CovariateDesign select_rows(std::span<const std::size_t> rows) const;

private:
    Matrix values_;
};

/// Observations sharing an identical covariate row. Groups appear in order of
/// first occurrence.
struct CovariateGroups {
    Matrix rows;                                  // G x H distinct covariate rows
    std::vector<std::vector<std::size_t>> members;  // observation indices per group
    std::size_t count() const noexcept { return members.size(); }
};

CovariateGroups group_rows(const CovariateDesign& design);

enum class Centering { center, assume_centered };

/// Response matrix Y (n x p) with its covariate design. With
/// Centering::center the columns of Y are shifted to mean zero on
/// construction.
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix y, CovariateDesign x, Centering centering = Centering::center);

    std::size_t size() const noexcept { return static_cast<std::size_t>(y_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(y_.cols()); }
    std::size_t covariate_count() const noexcept { return x_.columns(); }

    const Matrix& y() const noexcept { return y_; }
    const CovariateDesign& x() const noexcept { return x_; }

    /// Rows in the given order (duplicates allowed), no re-centering.
    Dataset select_rows(std::span<const std::size_t> rows) const;

private:
    Matrix y_;
    CovariateDesign x_;
};

/// K(x) = Q0 + sum_h x_h P_h, exactly symmetric.
Matrix assemble_precision(const PrecisionBasis& basis, const Vector& covariate_row);

/// Cholesky-style factorization without pivoting; true iff every pivot exceeds
/// 1e-10 times the largest diagonal entry. Non-finite input gives false.
bool is_positive_definite(const Matrix& m);
bool is_positive_definite(const SymmetricMatrix& m);

struct ScaledCovariates {
    CovariateDesign design;
    /// Columns with zero range; mapped to all zeros.
    std::vector<std::size_t> degenerate_columns;
};

/// Column-wise min-max scaling into [0, 1]. With `bounds` each column uses the
/// supplied (min, max); without, the observed column extremes. Throws
/// RangeError naming the column when a value lies outside supplied bounds.
ScaledCovariates min_max_scale(const Matrix& raw,
                               const std::optional<std::vector<std::pair<double, double>>>& bounds = {});

}  // namespace cdexggm
