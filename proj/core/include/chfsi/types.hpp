#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

namespace chfsi {

/// Dense column-major block. Holds H, Y, Q, W and friends.
template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;
using complex = std::complex<double>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// The two scalar fields every templated kernel is instantiated for.
template <class T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, complex>;

/// Unit-modulus factor of x (1 for x == 0).
template <Scalar T>
inline T phase_of(const T& x) {
    const double a = std::abs(x);
    if (a == 0.0) return T(1.0);
    return x / a;
}

/// Complex conjugate that stays real for real T (std::conj promotes).
template <Scalar T>
inline T conj_of(const T& x) {
    if constexpr (is_complex_v<T>) return std::conj(x);
    else return x;
}

template <Scalar T>
inline double real_part(const T& x) {
    if constexpr (is_complex_v<T>) return x.real();
    else return x;
}

// ---------------------------------------------------------------------------
// Errors. Everything thrown by the library derives from chfsi::Error.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(Index pivot)
        : Error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
          pivot_(pivot) {}
    Index pivot() const noexcept { return pivot_; }

private:
    Index pivot_;
};

class SingularTriangular : public Error {
public:
    explicit SingularTriangular(Index row)
        : Error("triangular factor is numerically singular at row " + std::to_string(row)),
          row_(row) {}
    Index row() const noexcept { return row_; }

private:
    Index row_;
};

class UndefinedResidual : public Error {
public:
    explicit UndefinedResidual(Index column)
        : Error("residual undefined for zero column " + std::to_string(column)),
          column_(column) {}
    Index column() const noexcept { return column_; }

private:
    Index column_;
};

class FilterOverflow : public Error {
public:
    explicit FilterOverflow(int step)
        : Error("non-finite value in Chebyshev filter at step " + std::to_string(step)),
          step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

class DegenerateScaling : public Error {
public:
    using Error::Error;
};

/// Convergence ratio requested for a value inside the suppressed interval.
class InsideInterval : public Error {
public:
    using Error::Error;
};

/// Degree model cannot make progress (ratio <= 1).
class Stagnation : public Error {
public:
    using Error::Error;
};

class LanczosBreakdown : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::string path)
        : Error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace chfsi
