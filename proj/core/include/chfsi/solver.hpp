#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "chfsi/degree_model.hpp"
#include "chfsi/filter.hpp"
#include "chfsi/linalg.hpp"

namespace chfsi {

struct SolverConfig {
    Index nev = 0;
    double tol = 1e-10;
    int deg0 = 8;
    int cap = kDefaultDegreeCap;
    /// Extra block columns beyond nev; negative selects max(8, ceil(0.04 nev)).
    Index buffer = -1;
    int max_loops = 50;
    int lanczos_steps = 25;
    std::uint64_t seed = 42;
    /// false keeps every active vector at deg0 on every loop.
    bool optimize_degrees = true;

    Index effective_buffer() const;
    Index block_size() const { return nev + effective_buffer(); }
    /// Throws ConfigError when the config cannot be used on an n x n problem.
    void validate(Index n) const;

    bool operator==(const SolverConfig&) const = default;
};

struct StepTimes {
    double lanczos = 0.0;
    double filter = 0.0;
    double qr = 0.0;
    double rr = 0.0;
    double lock = 0.0;
    double optimization = 0.0;
    double total = 0.0;
};

struct SolveReport {
    int loops = 0;
    std::uint64_t matvecs_total = 0;
    /// Loop 1 also carries the Lanczos and bootstrap multiplications.
    std::vector<std::uint64_t> matvecs_per_loop;
    std::uint64_t lanczos_matvecs = 0;
    std::uint64_t filter_matvecs = 0;
    std::uint64_t rr_matvecs = 0;
    std::uint64_t lock_matvecs = 0;
    StepTimes times;
    std::vector<Index> converged_per_loop;
    /// degree -> number of vectors filtered with it, one map per loop.
    std::vector<std::map<int, Index>> degree_histogram;
    Index qr_replacements = 0;
    Index capped_degrees = 0;
    /// Degree-model stagnation events (rho <= 1); those vectors got the cap.
    Index stagnations = 0;
    double upper_bound = 0.0;
    FilterInterval final_interval;
    bool converged = false;
};

template <Scalar T>
struct SolveResult {
    RealVector values;     // nev smallest, ascending
    Matrix<T> vectors;     // n x nev, orthonormal, phase-normalised
    RealVector residuals;  // at lock time
    /// Final full block (locked first, then active) and its Ritz values; the
    /// input for the next problem of a correlated sequence.
    Matrix<T> block;
    RealVector block_values;
    SolveReport report;
};

/// Thrown when max_loops is exhausted; carries whatever was locked.
template <Scalar T>
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, SolveResult<T> partial)
        : Error(what), partial_(std::move(partial)) {}
    const SolveResult<T>& partial() const noexcept { return partial_; }

private:
    SolveResult<T> partial_;
};

/// Spectrum upper bound from a short Lanczos run: largest Ritz value of the
/// tridiagonal plus the norm of the last residual vector.
template <Scalar T>
double estimate_upper_bound(const Matrix<T>& h, int steps, std::uint64_t seed);

template <Scalar T>
struct StandardForm {
    Matrix<T> h;
    Matrix<T> l;
};

/// H = L^{-1} A L^{-dagger} with B = L L^dagger.
template <Scalar T>
StandardForm<T> reduce_generalized(const Matrix<T>& a, const Matrix<T>& b);

/// Generalized eigenvectors C = L^{-dagger} Y.
template <Scalar T>
Matrix<T> back_transform(const Matrix<T>& y, const Matrix<T>& l);

template <Scalar T>
struct RitzPairs {
    RealVector values;
    Matrix<T> vectors;
    Matrix<T> h_vectors;  // H * vectors, reused for residuals
};

template <Scalar T>
RitzPairs<T> rayleigh_ritz(const Matrix<T>& h, const Matrix<T>& q);

template <Scalar T>
struct LockPartition {
    Index locked = 0;
    std::vector<Index> order;  // new column j comes from old column order[j]
    RealVector values;
    Matrix<T> vectors;
    RealVector residuals;
};

/// Converged columns (residual <= tol) move leftmost, everything else keeps
/// its relative order to the right.
template <Scalar T>
LockPartition<T> lock_partition(const RealVector& values, const Matrix<T>& y, const RealVector& residuals, double tol);

struct PreviousBounds {
    double lambda1;
    double lambda_next;  // lambda_{nev+1}
};

/// Chebyshev filtered subspace iteration for the nev smallest eigenpairs of a
/// hermitian H. `init` (n x (nev + buffer)) and `bounds` come from the previous
/// problem of a sequence; without them a seeded random block and a bootstrap
/// Rayleigh-Ritz pass are used.
template <Scalar T>
SolveResult<T> solve_standard(const Matrix<T>& h, const std::optional<Matrix<T>>& init,
                              const std::optional<PreviousBounds>& bounds, const SolverConfig& config);

template <Scalar T>
struct GeneralizedResult {
    SolveResult<T> standard;  // eigenpairs of the reduced H
    Matrix<T> vectors;        // generalized eigenvectors, B-orthonormal
    RealVector generalized_residuals;  // ||A c - lambda B c|| / ||c||
};

template <Scalar T>
GeneralizedResult<T> solve_generalized(const Matrix<T>& a, const Matrix<T>& b, const std::optional<Matrix<T>>& init,
                                       const std::optional<PreviousBounds>& bounds, const SolverConfig& config);

}  // namespace chfsi
