// chfsi command-line driver.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
// 4 I/O error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chfsi/io.hpp"
#include "chfsi/linalg.hpp"
#include "chfsi/metrics.hpp"
#include "chfsi/sequence.hpp"
#include "chfsi/solver.hpp"

using namespace chfsi;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

std::uint64_t default_seed() {
    if (const char* s = std::getenv("CHFSI_SEED")) {
        char* end = nullptr;
        const auto v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0') return v;
        throw ConfigError(std::string("CHFSI_SEED is not an unsigned integer: ") + s);
    }
    return 42;
}

void apply_thread_env() {
    if (const char* s = std::getenv("CHFSI_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end == s || *end != '\0' || v < 1) throw ConfigError(std::string("CHFSI_THREADS must be >= 1: ") + s);
        set_multiply_threads(static_cast<int>(v));
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Solver flags shared by the solving subcommands. Unset optionals keep the
// value from the manifest (or the library default).
struct SolverFlags {
    std::optional<Index> nev;
    std::optional<double> tol;
    std::optional<int> deg0;
    std::optional<int> cap;
    std::string buffer = "auto";
    std::optional<int> max_loops;
    std::optional<std::uint64_t> seed;
    bool fixed_degrees = false;

    void add_to(CLI::App& app, bool require_nev) {
        auto* o = app.add_option("--nev", nev, "number of wanted eigenpairs");
        if (require_nev) o->required();
        app.add_option("--tol", tol, "residual tolerance (default 1e-10)");
        app.add_option("--deg0", deg0, "initial filter degree (default 8)");
        app.add_option("--cap", cap, "maximum filter degree (default 40)");
        app.add_option("--buffer", buffer, "extra block columns, or auto")->capture_default_str();
        app.add_option("--max-loops", max_loops, "iteration limit (default 50)");
        app.add_option("--seed", seed, "random seed (default $CHFSI_SEED or 42)");
        app.add_flag("--fixed-degrees", fixed_degrees, "keep every vector at deg0");
    }

    SolverConfig resolve(SolverConfig base) const {
        if (nev) base.nev = *nev;
        if (tol) base.tol = *tol;
        if (deg0) base.deg0 = *deg0;
        if (cap) base.cap = *cap;
        if (max_loops) base.max_loops = *max_loops;
        base.seed = seed ? *seed : (std::getenv("CHFSI_SEED") ? default_seed() : base.seed);
        if (buffer == "auto") {
            base.buffer = -1;
        } else {
            try {
                std::size_t used = 0;
                base.buffer = std::stoll(buffer, &used);
                if (used != buffer.size()) throw std::invalid_argument(buffer);
            } catch (const std::exception&) {
                throw ConfigError("--buffer must be an integer or 'auto', got " + buffer);
            }
        }
        if (fixed_degrees) base.optimize_degrees = false;
        return base;
    }
};

Field parse_field(const std::string& s) {
    try {
        return field_from_string(s);
    } catch (const Error&) {
        throw ConfigError("--field must be real or complex, got " + s);
    }
}

void print_values(const RealVector& values, const RealVector& residuals) {
    std::printf("%6s %24s %12s\n", "i", "eigenvalue", "residual");
    for (Index i = 0; i < values.size(); ++i)
        std::printf("%6lld %24.16e %12.3e\n", static_cast<long long>(i + 1), values(i), residuals(i));
}

void print_summary(const SolveReport& r) {
    std::fprintf(stderr, "loops=%d matvecs=%llu (filter %llu, rr %llu, lanczos %llu) capped=%lld stagnations=%lld t=%.3fs\n",
                 r.loops, static_cast<unsigned long long>(r.matvecs_total),
                 static_cast<unsigned long long>(r.filter_matvecs), static_cast<unsigned long long>(r.rr_matvecs),
                 static_cast<unsigned long long>(r.lanczos_matvecs), static_cast<long long>(r.capped_degrees),
                 static_cast<long long>(r.stagnations), r.times.total);
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    GeneratorConfig config;
    std::string preset;
    std::string spectrum = "uniform";
    std::string out;
    std::optional<std::uint64_t> seed;
};

template <Scalar T>
int run_generate(const GenerateArgs& args) {
    GeneratorConfig c = args.config;
    if (!args.preset.empty()) {
        const GeneratorConfig p = sequence_preset(args.preset);
        c.n = p.n;
        c.length = p.length;
        c.nev = p.nev;
    }
    c.spectrum.kind = spectrum_kind_from_string(args.spectrum);
    c.seed = args.seed ? *args.seed : default_seed();
    c.validate();
    const auto seq = generate_sequence<T>(c);
    write_sequence(seq, args.out, utc_timestamp());
    std::fprintf(stderr, "wrote %lld problems (n=%lld) to %s\n", static_cast<long long>(seq.size()),
                 static_cast<long long>(c.n), args.out.c_str());
    return kOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
    std::string matrix;
    std::string b_matrix;
    std::string init;
    std::string report;
    SolverFlags flags;
};

template <Scalar T>
int run_solve(const SolveArgs& args) {
    const Matrix<T> a = read_matrix<T>(args.matrix);
    const SolverConfig c = args.flags.resolve(SolverConfig{});
    c.validate(a.rows());
    std::optional<Matrix<T>> init;
    if (!args.init.empty()) init = read_matrix<T>(args.init);

    SolveResult<T> result;
    RealVector residuals;
    int status = kOk;
    try {
        if (args.b_matrix.empty()) {
            result = solve_standard<T>(a, init, std::nullopt, c);
            residuals = result.residuals;
        } else {
            const Matrix<T> b = read_matrix<T>(args.b_matrix);
            auto g = solve_generalized<T>(a, b, init, std::nullopt, c);
            result = std::move(g.standard);
            residuals = g.generalized_residuals;
        }
    } catch (const NonConvergence<T>& e) {
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        result = e.partial();
        residuals = result.residuals;
        status = kNumerical;
    }
    print_values(result.values, residuals);
    print_summary(result.report);
    if (!args.report.empty())
        emit_report({metrics_from_report("solve", 1, a.rows(), c.nev, c.tol, result.report)}, args.report);
    return status;
}

// ---------------------------------------------------------------------------
// sequence and bench reuse/degrees

struct SequenceArgs {
    std::string manifest;
    std::string reuse = "on";
    std::string report;
    int fixed_deg = 20;
    SolverFlags flags;
};

template <Scalar T>
struct Loaded {
    RunManifest manifest;
    LoadedSequence<T> seq;
    SolverConfig config;
};

template <Scalar T>
Loaded<T> load(const SequenceArgs& args) {
    Loaded<T> out;
    out.manifest = read_manifest(args.manifest);
    out.seq = load_sequence<T>(out.manifest, args.manifest);
    if (out.seq.a.empty()) throw ConfigError("manifest lists no problems");
    out.config = args.flags.resolve(out.manifest.solver);
    out.config.validate(out.seq.a.front().rows());
    return out;
}

template <Scalar T>
std::vector<MetricsRow> rows_for(const std::string& label, const SequenceOutcome<T>& outcome, Index n,
                                 const SolverConfig& c) {
    std::vector<MetricsRow> rows;
    for (std::size_t l = 0; l < outcome.problems.size(); ++l)
        rows.push_back(metrics_from_report(label, static_cast<Index>(l) + 1, n, c.nev, c.tol,
                                           outcome.problems[l].result.report));
    return rows;
}

template <Scalar T>
void log_failures(const std::string& label, const SequenceOutcome<T>& outcome) {
    for (std::size_t l = 0; l < outcome.problems.size(); ++l)
        if (!outcome.problems[l].converged)
            std::fprintf(stderr, "chfsi: %s problem %zu: %s\n", label.c_str(), l + 1,
                         outcome.problems[l].error.c_str());
}

template <Scalar T>
int run_sequence(const SequenceArgs& args) {
    if (args.reuse != "on" && args.reuse != "off") throw ConfigError("--reuse must be on or off");
    const bool reuse = args.reuse == "on";
    const auto in = load<T>(args);
    const auto outcome = solve_sequence<T>(in.seq.a, in.seq.b, in.config, reuse);
    const Index n = in.seq.a.front().rows();
    const std::string label = reuse ? "reuse" : "random";
    std::printf("%4s %6s %8s %10s %14s\n", "ell", "loops", "matvecs", "t_total", "subspace_angle");
    for (std::size_t l = 0; l < outcome.problems.size(); ++l) {
        const auto& r = outcome.problems[l].result.report;
        const double angle = l == 0 ? 0.0 : outcome.profile.subspace_angles[l - 1];
        std::printf("%4zu %6d %8llu %10.4f %14.3e\n", l + 1, r.loops, static_cast<unsigned long long>(r.matvecs_total),
                    r.times.total, angle);
    }
    log_failures(label, outcome);
    if (!args.report.empty()) emit_report(rows_for(label, outcome, n, in.config), args.report);
    return outcome.failures() == 0 ? kOk : kNumerical;
}

// Two labelled runs over the same sequence; `variant` rows get the speed-up
// over `baseline`.
template <Scalar T>
int paired_runs(const SequenceArgs& args, const Loaded<T>& in, const std::string& baseline_label,
                const SequenceOutcome<T>& baseline, const SolverConfig& baseline_config, const std::string& variant_label,
                const SequenceOutcome<T>& variant, const SolverConfig& variant_config) {
    const Index n = in.seq.a.front().rows();
    auto base_rows = rows_for(baseline_label, baseline, n, baseline_config);
    auto var_rows = rows_for(variant_label, variant, n, variant_config);
    std::printf("%4s %12s %12s %10s %10s %8s\n", "ell", baseline_label.c_str(), variant_label.c_str(), "t_base",
                "t_var", "speedup");
    for (std::size_t l = 0; l < var_rows.size(); ++l) {
        const auto& rb = baseline.problems[l].result.report;
        const auto& rv = variant.problems[l].result.report;
        if (rb.times.total > 0.0 && rv.times.total > 0.0)
            var_rows[l].speedup = compute_speedup(rb.times.total, rv.times.total);
        std::printf("%4zu %12llu %12llu %10.4f %10.4f %8s\n", l + 1, static_cast<unsigned long long>(rb.matvecs_total),
                    static_cast<unsigned long long>(rv.matvecs_total), rb.times.total, rv.times.total,
                    var_rows[l].speedup ? std::to_string(*var_rows[l].speedup).substr(0, 6).c_str() : "-");
    }
    std::printf("total matvecs %s=%llu %s=%llu; filter matvecs %s=%llu %s=%llu\n", baseline_label.c_str(),
                static_cast<unsigned long long>(baseline.total_matvecs()), variant_label.c_str(),
                static_cast<unsigned long long>(variant.total_matvecs()), baseline_label.c_str(),
                static_cast<unsigned long long>(baseline.total_filter_matvecs()), variant_label.c_str(),
                static_cast<unsigned long long>(variant.total_filter_matvecs()));
    log_failures(baseline_label, baseline);
    log_failures(variant_label, variant);
    if (!args.report.empty()) {
        base_rows.insert(base_rows.end(), var_rows.begin(), var_rows.end());
        emit_report(base_rows, args.report);
    }
    return baseline.failures() + variant.failures() == 0 ? kOk : kNumerical;
}

template <Scalar T>
int run_bench_reuse(const SequenceArgs& args) {
    const auto in = load<T>(args);
    const auto random = solve_sequence<T>(in.seq.a, in.seq.b, in.config, false);
    const auto reuse = solve_sequence<T>(in.seq.a, in.seq.b, in.config, true);
    return paired_runs(args, in, "random", random, in.config, "reuse", reuse, in.config);
}

template <Scalar T>
int run_bench_degrees(const SequenceArgs& args) {
    const auto in = load<T>(args);
    SolverConfig fixed = in.config;
    fixed.optimize_degrees = false;
    fixed.deg0 = args.fixed_deg;
    fixed.cap = std::max(fixed.cap, args.fixed_deg);
    fixed.validate(in.seq.a.front().rows());
    SolverConfig optimized = in.config;
    optimized.optimize_degrees = true;
    const auto f = solve_sequence<T>(in.seq.a, in.seq.b, fixed, true);
    const auto o = solve_sequence<T>(in.seq.a, in.seq.b, optimized, true);
    return paired_runs(args, in, "fixed", f, fixed, "optimized", o, optimized);
}

// ---------------------------------------------------------------------------
// bench threads

struct ThreadArgs {
    std::string matrix;
    std::vector<int> threads{1, 2, 4, 8};
    std::string report;
    SolverFlags flags;
};

template <Scalar T>
int run_bench_threads(const ThreadArgs& args) {
    const Matrix<T> h = read_matrix<T>(args.matrix);
    const SolverConfig c = args.flags.resolve(SolverConfig{});
    c.validate(h.rows());
    for (int p : args.threads)
        if (p < 1) throw ConfigError("--threads entries must be >= 1");
    std::vector<MetricsRow> rows;
    double t_ref = 0.0;
    int p_ref = 0;
    std::printf("%8s %10s %10s %10s\n", "threads", "t_total", "speedup", "efficiency");
    for (int p : args.threads) {
        set_multiply_threads(p);
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = solve_standard<T>(h, std::nullopt, std::nullopt, c);
        const double t = seconds_since(t0);
        MetricsRow row = metrics_from_report("threads=" + std::to_string(p), static_cast<Index>(rows.size()) + 1,
                                             h.rows(), c.nev, c.tol, r.report);
        if (rows.empty()) {
            t_ref = t;
            p_ref = p;
        }
        row.speedup = compute_speedup(t_ref, t);
        row.efficiency = parallel_efficiency(t_ref, p_ref, t, p);
        std::printf("%8d %10.4f %10.4f %10.4f\n", p, t, *row.speedup, *row.efficiency);
        rows.push_back(row);
    }
    if (!args.report.empty()) emit_report(rows, args.report);
    return kOk;
}

// ---------------------------------------------------------------------------
// compare-oracle

struct OracleArgs {
    std::string matrix;
    SolverFlags flags;
};

template <Scalar T>
int run_compare_oracle(const OracleArgs& args) {
    const Matrix<T> h = read_matrix<T>(args.matrix);
    const SolverConfig c = args.flags.resolve(SolverConfig{});
    c.validate(h.rows());
    const auto r = solve_standard<T>(h, std::nullopt, std::nullopt, c);
    const auto ref = reference_eigensolve<T>(h);
    const double norm = std::max(std::abs(ref.values(0)), std::abs(ref.values(h.rows() - 1)));
    double worst = 0.0;
    std::printf("%6s %24s %24s %12s %12s\n", "i", "chfsi", "reference", "|delta|/|H|", "residual");
    for (Index i = 0; i < c.nev; ++i) {
        const double d = std::abs(r.values(i) - ref.values(i)) / norm;
        worst = std::max(worst, d);
        std::printf("%6lld %24.16e %24.16e %12.3e %12.3e\n", static_cast<long long>(i + 1), r.values(i),
                    ref.values(i), d, r.residuals(i));
    }
    std::printf("max |delta|/|H| = %.3e, max residual = %.3e\n", worst, r.residuals.maxCoeff());
    print_summary(r.report);
    return kOk;
}

template <class F>
int dispatch(Field field, F&& f) {
    return field == Field::complex ? f.template operator()<complex>() : f.template operator()<double>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chebyshev filtered subspace iteration for sequences of eigenproblems"};
    app.require_subcommand(1);
    std::string field_name = "complex";
    app.add_option("--field", field_name, "scalar field: real or complex")->capture_default_str();

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write a correlated sequence and its manifest");
    generate->add_option("--n", gen.config.n, "matrix size");
    generate->add_option("--N", gen.config.length, "number of problems");
    generate->add_option("--nev", gen.config.nev, "wanted eigenpairs");
    generate->add_option("--theta0", gen.config.theta0, "first rotation angle")->capture_default_str();
    generate->add_option("--thetaN", gen.config.thetaN, "last rotation angle")->capture_default_str();
    generate->add_option("--spectrum", gen.spectrum, "uniform, clustered or gapped")->capture_default_str();
    generate->add_option("--drift", gen.config.spectrum.drift, "eigenvalue drift amplitude");
    generate->add_flag("--generalized", gen.config.generalized, "emit (A, B) pairs");
    generate->add_option("--preset", gen.preset, "NaClLi, TiO2-small, AuAg or TiO2-large (sets n, N, nev)");
    generate->add_option("--seed", gen.seed, "random seed (default $CHFSI_SEED or 42)");
    generate->add_option("--out", gen.out, "output directory")->required();

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "solve one standard or generalized problem");
    solve_cmd->add_option("--matrix", solve.matrix, "Matrix Market file")->required();
    solve_cmd->add_option("--b-matrix", solve.b_matrix, "overlap matrix for a generalized problem");
    solve_cmd->add_option("--init", solve.init, "initial block, n x (nev + buffer)");
    solve_cmd->add_option("--report", solve.report, "CSV report path");
    solve.flags.add_to(*solve_cmd, true);

    SequenceArgs seq;
    auto* sequence = app.add_subcommand("sequence", "solve every problem of a manifest in order");
    sequence->add_option("--manifest", seq.manifest, "manifest.json")->required();
    sequence->add_option("--reuse", seq.reuse, "on or off")->capture_default_str();
    sequence->add_option("--report", seq.report, "CSV report path");
    seq.flags.add_to(*sequence, false);

    auto* bench = app.add_subcommand("bench", "paired benchmark runs");
    bench->require_subcommand(1);
    SequenceArgs reuse_args;
    auto* bench_reuse = bench->add_subcommand("reuse", "random start versus reuse of the previous solution");
    bench_reuse->add_option("--manifest", reuse_args.manifest, "manifest.json")->required();
    bench_reuse->add_option("--report", reuse_args.report, "CSV report path");
    reuse_args.flags.add_to(*bench_reuse, false);

    SequenceArgs deg_args;
    auto* bench_degrees = bench->add_subcommand("degrees", "optimized degrees versus one fixed degree");
    bench_degrees->add_option("--manifest", deg_args.manifest, "manifest.json")->required();
    bench_degrees->add_option("--fixed-deg", deg_args.fixed_deg, "degree of the fixed run")->capture_default_str();
    bench_degrees->add_option("--report", deg_args.report, "CSV report path");
    deg_args.flags.add_to(*bench_degrees, false);

    ThreadArgs thr;
    auto* bench_threads = bench->add_subcommand("threads", "strong scaling over multiply threads");
    bench_threads->add_option("--matrix", thr.matrix, "Matrix Market file")->required();
    bench_threads->add_option("--threads", thr.threads, "thread counts")->delimiter(',')->capture_default_str();
    bench_threads->add_option("--report", thr.report, "CSV report path");
    thr.flags.add_to(*bench_threads, true);

    OracleArgs ora;
    auto* compare = app.add_subcommand("compare-oracle", "compare against the dense reference eigensolver");
    compare->add_option("--matrix", ora.matrix, "Matrix Market file")->required();
    ora.flags.add_to(*compare, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        apply_thread_env();
        const Field field = parse_field(field_name);
        if (*generate)
            return dispatch(field, [&]<class T>() { return run_generate<T>(gen); });
        if (*solve_cmd) return dispatch(field, [&]<class T>() { return run_solve<T>(solve); });
        if (*sequence) return dispatch(field, [&]<class T>() { return run_sequence<T>(seq); });
        if (*bench_reuse) return dispatch(field, [&]<class T>() { return run_bench_reuse<T>(reuse_args); });
        if (*bench_degrees) return dispatch(field, [&]<class T>() { return run_bench_degrees<T>(deg_args); });
        if (*bench_threads) return dispatch(field, [&]<class T>() { return run_bench_threads<T>(thr); });
        if (*compare) return dispatch(field, [&]<class T>() { return run_compare_oracle<T>(ora); });
    } catch (const IoError& e) {
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        return kIo;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        return kIo;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        return kConfig;
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        return kConfig;
    } catch (const Error& e) {
        // breakdowns, non-convergence, indefinite overlap matrices
        std::fprintf(stderr, "chfsi: %s\n", e.what());
        return kNumerical;
    }
    return kOk;
}
