#pragma once

#include <cstdint>
#include <vector>

#include "chfsi/types.hpp"

namespace chfsi {

// ---------------------------------------------------------------------------
// Matvec accounting and multiply parallelism.

/// Total number of single-vector H multiplications performed process-wide.
std::uint64_t matvec_count() noexcept;
void reset_matvec_count() noexcept;

/// Worker threads used by hermitian_multiply. Initialised from CHFSI_THREADS.
int multiply_threads() noexcept;
void set_multiply_threads(int threads);

// ---------------------------------------------------------------------------

/// Largest entry magnitude; 0 for an empty matrix.
template <Scalar T>
double max_abs(const Matrix<T>& m);

/// max |H - H^dagger| relative to max |H|.
template <Scalar T>
double hermitian_defect(const Matrix<T>& h);

/// Throws ContractViolation unless `h` is square and hermitian within
/// 1e-12 * max|H|. Returns the symmetrised copy (H + H^dagger) / 2.
template <Scalar T>
Matrix<T> checked_hermitian(const Matrix<T>& h, const char* what = "matrix");

/// H * Y. Advances the matvec tally by Y.cols(). Columns are split over
/// multiply_threads() workers; the result for a fixed thread count is
/// deterministic.
template <Scalar T>
Matrix<T> hermitian_multiply(const Matrix<T>& h, const Matrix<T>& y);

/// Seeded Gaussian block (complex entries have independent real/imag parts).
template <Scalar T>
Matrix<T> random_block(Index rows, Index cols, std::uint64_t seed);

template <Scalar T>
struct QrResult {
    Matrix<T> q;
    /// Columns (in the input numbering) that were numerically dependent and
    /// were replaced by fresh random directions.
    std::vector<Index> replaced;
};

/// Orthonormalises Y keeping its first `locked` columns untouched. The active
/// columns are projected out of the locked block, then factored with
/// Householder reflectors. Dependent active columns are replaced.
template <Scalar T>
QrResult<T> qr_orthonormalize(const Matrix<T>& y, Index locked, std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

/// Lower Cholesky factor L with L L^dagger = B.
template <Scalar T>
Matrix<T> cholesky(const Matrix<T>& b);

enum class TriangularMode { forward, adjoint };

/// forward: L^{-1} X, adjoint: L^{-dagger} X.
template <Scalar T>
Matrix<T> triangular_solve(const Matrix<T>& l, const Matrix<T>& x, TriangularMode mode);

template <Scalar T>
struct EigenDecomposition {
    RealVector values;  // ascending
    Matrix<T> vectors;  // orthonormal columns aligned with values
};

/// Full-spectrum dense hermitian eigensolver: Householder tridiagonalisation
/// followed by implicit-shift QL. Eigenvectors carry the repo-wide phase
/// convention (largest-magnitude entry real positive).
template <Scalar T>
EigenDecomposition<T> reference_eigensolve(const Matrix<T>& h);

/// Rescales each column so its largest-magnitude entry is real positive.
template <Scalar T>
void normalize_phases(Matrix<T>& vectors);

/// Entry i is ||H y_i - lambda_i y_i|| / ||y_i||. Costs Y.cols() matvecs.
template <Scalar T>
RealVector residual_norms(const Matrix<T>& h, const RealVector& values, const Matrix<T>& y);

/// Same quantity given a precomputed H*Y, no multiplication by H.
template <Scalar T>
RealVector residual_norms_from_product(const Matrix<T>& hy, const RealVector& values, const Matrix<T>& y);

/// max |Q^dagger Q - I|.
template <Scalar T>
double orthonormality_defect(const Matrix<T>& q);

}  // namespace chfsi
