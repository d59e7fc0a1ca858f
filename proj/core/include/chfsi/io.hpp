#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chfsi/sequence.hpp"

namespace chfsi {

inline constexpr const char* kArtifactVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Matrix Market.

enum class MatrixFormat { dense, coordinate_hermitian };
enum class Field { real, complex };

std::string to_string(Field field);
Field field_from_string(const std::string& name);

struct MatrixHeader {
    MatrixFormat format = MatrixFormat::dense;
    Field field = Field::real;
    std::string symmetry;  // general | symmetric | hermitian
    Index rows = 0;
    Index cols = 0;
    Index nnz = 0;  // coordinate files only
};

/// Parses the banner and size line only.
MatrixHeader read_matrix_header(const std::filesystem::path& path);

/// Reads `array` (dense) or `coordinate` (symmetric/hermitian, lower triangle)
/// files into a full dense matrix. Real files promote to complex; complex
/// files into a real matrix are a ParseError.
template <Scalar T>
Matrix<T> read_matrix(const std::filesystem::path& path);

/// Writes with 17 significant digits so read_matrix reproduces every bit.
template <Scalar T>
void write_matrix(const Matrix<T>& m, const std::filesystem::path& path, MatrixFormat format = MatrixFormat::dense);

// ---------------------------------------------------------------------------
// Run manifest (JSON).

struct ProblemEntry {
    Index index = 0;
    std::string matrix;    // relative to the manifest directory
    std::string b_matrix;  // empty for standard problems

    bool operator==(const ProblemEntry&) const = default;
};

struct RunManifest {
    std::string version = kArtifactVersion;
    std::uint64_t seed = 0;
    double tol = 1e-10;
    Field field = Field::real;
    GeneratorConfig generator;
    SolverConfig solver;
    std::vector<double> schedule;
    std::vector<ProblemEntry> problems;
    std::string created;  // ISO-8601 UTC

    bool operator==(const RunManifest&) const = default;
};

std::string render_manifest(const RunManifest& manifest);
RunManifest parse_manifest(const std::string& text);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Writes one file per problem plus manifest.json into `dir`.
template <Scalar T>
RunManifest write_sequence(const EigenproblemSequence<T>& seq, const std::filesystem::path& dir, const std::string& created);

template <Scalar T>
struct LoadedSequence {
    std::vector<Matrix<T>> a;
    std::vector<Matrix<T>> b;
};

template <Scalar T>
LoadedSequence<T> load_sequence(const RunManifest& manifest, const std::filesystem::path& manifest_path);

std::string utc_timestamp();

}  // namespace chfsi
