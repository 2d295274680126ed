#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cdexggm {

enum class ErrorKind {
    invalid_argument,
    domain,
    range,
    convergence,
    singularity,
    numerical,
    parse,
    io,
    bootstrap,
    selection,
    study,
};

/// Machine-parsable category name, used by the CLI on failure.
std::string_view category_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

/// A precision that must be positive definite (or a conditional precision
/// that must be positive) was not, at the reported observation.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::size_t observation)
        : Error(ErrorKind::domain, what), observation_(observation) {}
    std::size_t observation() const noexcept { return observation_; }

private:
    std::size_t observation_;
};

class RangeError : public Error {
public:
    RangeError(const std::string& what, std::size_t column)
        : Error(ErrorKind::range, what), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// An iterative method failed. Carries whatever trace the method produced and
/// its best iterate so callers can inspect how far it got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace,
                     std::vector<double> best_iterate = {}, double residual_norm = 0.0)
        : Error(ErrorKind::convergence, what),
          trace_(std::move(trace)),
          best_iterate_(std::move(best_iterate)),
          residual_norm_(residual_norm) {}

    const std::vector<double>& trace() const noexcept { return trace_; }
    const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
    double residual_norm() const noexcept { return residual_norm_; }

private:
    std::vector<double> trace_;
    std::vector<double> best_iterate_;
    double residual_norm_;
};

class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& what) : Error(ErrorKind::singularity, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorKind::parse, what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class BootstrapError : public Error {
public:
    BootstrapError(const std::string& what, std::size_t failed, std::size_t total)
        : Error(ErrorKind::bootstrap, what), failed_(failed), total_(total) {}
    std::size_t failed() const noexcept { return failed_; }
    std::size_t total() const noexcept { return total_; }

private:
    std::size_t failed_;
    std::size_t total_;
};

class SelectionError : public Error {
public:
    SelectionError(const std::string& what, std::vector<std::string> diagnostics)
        : Error(ErrorKind::selection, what), diagnostics_(std::move(diagnostics)) {}
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

class StudyError : public Error {
public:
    explicit StudyError(const std::string& what) : Error(ErrorKind::study, what) {}
};

}  // namespace cdexggm
