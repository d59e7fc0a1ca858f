#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chfsi/solver.hpp"

namespace chfsi {

enum class SpectrumKind { uniform, clustered, gapped, list };

std::string to_string(SpectrumKind kind);
SpectrumKind spectrum_kind_from_string(const std::string& name);

struct SpectrumSpec {
    SpectrumKind kind = SpectrumKind::uniform;
    double lo = -1.0;
    double hi = 1.0;
    /// Explicit eigenvalues for SpectrumKind::list (size n).
    std::vector<double> values;
    /// Eigenvalues per cluster for SpectrumKind::clustered.
    Index cluster_size = 4;
    /// Width of the gap after eigenvalue nev, in regular spacings (gapped).
    double gap_factor = 10.0;
    /// Per-step eigenvalue drift amplitude, scaled by theta_l / theta0.
    double drift = 0.0;

    bool operator==(const SpectrumSpec&) const = default;
};

struct GeneratorConfig {
    Index n = 0;
    Index length = 2;  // N, number of problems
    Index nev = 0;
    double theta0 = 1e-1;
    double thetaN = 1e-8;
    SpectrumSpec spectrum;
    bool generalized = false;
    std::uint64_t seed = 42;

    void validate() const;
    /// Rotation angle between problem ell - 1 and ell (1-based); 0 for ell = 1.
    double angle(Index ell) const;

    bool operator==(const GeneratorConfig&) const = default;
};

/// Desk-scale versions of the four production sequences: "NaClLi",
/// "TiO2-small", "AuAg", "TiO2-large". n is divided by 20, N and the nev
/// fraction are kept.
GeneratorConfig sequence_preset(const std::string& name);
std::vector<std::string> sequence_preset_names();

template <Scalar T>
struct EigenproblemSequence {
    std::vector<Matrix<T>> a;  // H, or A for generalized problems
    std::vector<Matrix<T>> b;  // empty unless generalized
    std::vector<double> schedule;         // applied angle per problem (first is 0)
    std::vector<RealVector> spectra;      // exact eigenvalues, ascending
    std::vector<Matrix<T>> bases;         // exact eigenvectors of the standard form, aligned with spectra
    GeneratorConfig config;

    Index size() const { return static_cast<Index>(a.size()); }
    bool generalized() const { return !b.empty(); }
};

/// Eigenvalues for a spectrum spec, ascending.
RealVector make_spectrum(const SpectrumSpec& spec, Index n, Index nev);

/// Unitary (orthogonal for real T) exp(theta K) with K a seeded random
/// skew-hermitian matrix scaled to spectral radius 1.
template <Scalar T>
Matrix<T> random_rotation(Index n, double theta, std::uint64_t seed);

template <Scalar T>
EigenproblemSequence<T> generate_sequence(const GeneratorConfig& config);

/// 1 - |<x, y>| / (||x|| ||y||), in [0, 1].
template <Scalar T>
double eigenvector_angle(const Vector<T>& x, const Vector<T>& y);

/// Angle in radians between the lines spanned by x and y, in [0, pi/2].
template <Scalar T>
double vector_principal_angle(const Vector<T>& x, const Vector<T>& y);

/// Largest principal angle between the spans of two orthonormal blocks.
template <Scalar T>
double subspace_angle(const Matrix<T>& x, const Matrix<T>& y);

struct CorrelationProfile {
    /// vector_angles[l][i]: eigenvector_angle between wanted vector i of
    /// problem l + 1 and problem l + 2 (1-based problems).
    std::vector<std::vector<double>> vector_angles;
    std::vector<double> subspace_angles;
};

template <Scalar T>
struct ProblemOutcome {
    bool converged = false;
    std::string error;
    SolveResult<T> result;           // standard-form eigenpairs
    Matrix<T> generalized_vectors;   // only for generalized sequences
    RealVector generalized_residuals;
};

template <Scalar T>
struct SequenceOutcome {
    std::vector<ProblemOutcome<T>> problems;
    CorrelationProfile profile;

    std::uint64_t total_matvecs() const;
    std::uint64_t total_filter_matvecs() const;
    Index failures() const;
};

/// Solves every problem in order. With `reuse` problem l >= 2 starts from the
/// final block and bounds of problem l - 1; otherwise from a fresh random
/// block. Non-convergence of one problem is recorded and the run continues.
template <Scalar T>
SequenceOutcome<T> solve_sequence(const EigenproblemSequence<T>& seq, const SolverConfig& config, bool reuse);

/// Same, over problems supplied one by one (e.g. read from disk).
template <Scalar T>
SequenceOutcome<T> solve_sequence(const std::vector<Matrix<T>>& a, const std::vector<Matrix<T>>& b,
                                  const SolverConfig& config, bool reuse);

}  // namespace chfsi
