// Independent reference computations for the test suites. Nothing here calls
// into the library's numerical kernels.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "chfsi/types.hpp"

namespace oracle {

using chfsi::complex;
using chfsi::Index;
using chfsi::Matrix;
using chfsi::RealVector;

template <class T>
T draw(std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    if constexpr (chfsi::is_complex_v<T>) {
        const double re = g(rng);
        return T(re, g(rng));
    } else {
        return g(rng);
    }
}

template <class T>
Matrix<T> gaussian(Index rows, Index cols, std::uint32_t seed) {
    std::mt19937 rng(seed);
    Matrix<T> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = draw<T>(rng);
    return m;
}

template <class T>
Matrix<T> hermitian(Index n, std::uint32_t seed) {
    const Matrix<T> g = gaussian<T>(n, n, seed);
    return (g + g.adjoint()) / 2.0;
}

template <class T>
Matrix<T> spd(Index n, std::uint32_t seed) {
    const Matrix<T> g = gaussian<T>(n, n, seed);
    return g * g.adjoint() / static_cast<double>(n) + Matrix<T>::Identity(n, n);
}

// Orthonormal columns via Eigen's Householder QR.
template <class T>
Matrix<T> orthonormal(Index rows, Index cols, std::uint32_t seed) {
    const Matrix<T> g = gaussian<T>(rows, cols, seed);
    Eigen::HouseholderQR<Matrix<T>> qr(g);
    return qr.householderQ() * Matrix<T>::Identity(rows, cols);
}

// Q diag(values) Q^H with a seeded orthonormal Q.
template <class T>
Matrix<T> with_spectrum(const RealVector& values, std::uint32_t seed) {
    const Matrix<T> q = orthonormal<T>(values.size(), values.size(), seed);
    Matrix<T> h = q * values.cast<T>().asDiagonal() * q.adjoint();
    return (h + h.adjoint()) * T(0.5);
}

// Two-regime instance: one eigenvalue below the target, the target well
// separated from the suppressed window [1, 10].
inline RealVector two_regime_spectrum(Index n) {
    RealVector v(n);
    v(0) = 0.3;
    v(1) = 0.5;
    for (Index i = 2; i < n; ++i) v(i) = 1.0 + 9.0 * static_cast<double>(i - 2) / static_cast<double>(n - 3);
    return v;
}

template <class T>
Matrix<T> triple_loop(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> c = Matrix<T>::Zero(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) {
            T s = T(0.0);
            for (Index p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
            c(i, j) = s;
        }
    return c;
}

template <class T>
struct Eig {
    RealVector values;
    Matrix<T> vectors;
};

template <class T>
Eig<T> eig(const Matrix<T>& h) {
    Eigen::SelfAdjointEigenSolver<Matrix<T>> es(h);
    return {es.eigenvalues(), es.eigenvectors()};
}

// A c = lambda B c through Eigen's own Cholesky-based driver.
template <class T>
RealVector generalized_values(const Matrix<T>& a, const Matrix<T>& b) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<T>> es(a, b);
    return es.eigenvalues();
}

inline double spectral_norm(const Eigen::MatrixXcd& h) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    return svd.singularValues()(0);
}

template <class T>
double spectral_norm(const Matrix<T>& h) {
    return spectral_norm(Eigen::MatrixXcd(h.template cast<complex>()));
}

// Number of eigenvalues of a real symmetric matrix below x, from the sign
// sequence of the leading principal minors of H - xI (Sylvester inertia).
inline Index count_below(const Eigen::MatrixXd& h, double x) {
    const Index n = h.rows();
    Index negatives = 0;
    double prev = 1.0;
    for (Index k = 1; k <= n; ++k) {
        const Eigen::MatrixXd minor = h.topLeftCorner(k, k) - x * Eigen::MatrixXd::Identity(k, k);
        const double d = minor.determinant();
        if ((d < 0.0) != (prev < 0.0)) ++negatives;
        prev = d;
    }
    return negatives;
}

// C_m(t) from the closed forms cos(m acos t) and cosh(m acosh |t|).
inline double chebyshev(int m, double t) {
    if (std::abs(t) <= 1.0) return std::cos(m * std::acos(t));
    const double v = std::cosh(m * std::acosh(std::abs(t)));
    return (t < 0.0 && m % 2 == 1) ? -v : v;
}

// Residual ||H y - lambda y|| / ||y|| with Eigen arithmetic.
template <class T>
double residual(const Matrix<T>& h, double lambda, const Eigen::Matrix<T, Eigen::Dynamic, 1>& y) {
    return (h * y - lambda * y).norm() / y.norm();
}

}  // namespace oracle
