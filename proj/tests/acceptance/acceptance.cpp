// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chfsi/io.hpp"
#include "chfsi/metrics.hpp"
#include "chfsi/sequence.hpp"
#include "oracles.hpp"

using namespace chfsi;
namespace fs = std::filesystem;

namespace {

constexpr double kTol = 1e-10;

// Criterion 1
constexpr int kOracleProblems = 20;
constexpr double kValueTol = 1e-8;  // times ||H||_2
constexpr double kOracleBudgetSeconds = 60.0;
// Criterion 2
constexpr int kGeneralizedPairs = 5;
constexpr double kGeneralizedResidualFactor = 10.0;  // times tol * ||A||_F
constexpr double kGeneralizedValueTol = 1e-8;        // relative
// Criterion 3
constexpr double kFilterDirectionTol = 1e-9;
// Criterion 4
constexpr double kRatioTol = 1e-12;
// Criterion 5
constexpr int kRegimeSeeds = 10;
constexpr int kRegimeRequired = 9;
// Criterion 6
constexpr double kReuseRatioMid = 1.5;   // l >= 5
constexpr double kReuseRatioLast = 2.0;  // l = N
// Criterion 7
constexpr double kOptimizedShare = 0.9;
constexpr int kFixedDegree = 20;
// Criterion 8
constexpr double kFilterShare = 0.8;
constexpr Index kFilterShareMinN = 200;
// Criterion 9
constexpr int kLanczosTrials = 1000;
// Criterion 10
constexpr double kEfficiencyExpected = 100.0 * 16.0 / (60.0 * 32.0);
constexpr double kFormulaTol = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct RecordedReport {
    std::string origin;
    Index n = 0;
    SolveReport report;
};

std::vector<RecordedReport> g_reports;

void record(const std::string& origin, Index n, const SolveReport& r) { g_reports.push_back({origin, n, r}); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const Index sizes[] = {100, 300, 500};
    const double fractions[] = {0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    double worst_value = 0.0, worst_res = 0.0;
    int failures = 0;
    for (int p = 0; p < kOracleProblems; ++p) {
        const Index n = sizes[p % 3];
        const Index nev = static_cast<Index>(std::lround(fractions[p % 6] * static_cast<double>(n)));
        const Matrix<complex> h = oracle::hermitian<complex>(n, 5000 + static_cast<std::uint32_t>(p));
        SolverConfig c;
        c.nev = nev;
        c.tol = kTol;
        c.seed = 100 + static_cast<std::uint64_t>(p);
        try {
            const auto res = solve_standard<complex>(h, std::nullopt, std::nullopt, c);
            record("oracle", n, res.report);
            const auto eg = oracle::eig(h);
            const double norm2 = std::max(std::abs(eg.values(0)), std::abs(eg.values(n - 1)));
            if (res.values.size() != nev) {
                ++failures;
                continue;
            }
            const double dv = (res.values - eg.values.head(nev)).cwiseAbs().maxCoeff() / norm2;
            worst_value = std::max(worst_value, dv);
            worst_res = std::max(worst_res, res.residuals.maxCoeff());
            if (dv > kValueTol || res.residuals.maxCoeff() > kTol) ++failures;
        } catch (const Error& e) {
            ++failures;
        }
    }
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = failures == 0 && elapsed <= kOracleBudgetSeconds;
    o.detail = std::to_string(kOracleProblems - failures) + "/" + std::to_string(kOracleProblems) +
               " match; max |dlambda|/||H||=" + fmt("%.2e", worst_value) + " max res=" + fmt("%.2e", worst_res) +
               " time=" + fmt("%.1fs", elapsed);
    return o;
}

Outcome generalized_correctness() {
    double worst_res = 0.0, worst_val = 0.0;
    int failures = 0;
    for (int p = 0; p < kGeneralizedPairs; ++p) {
        const Index n = 200, nev = 10;
        const Matrix<complex> a = oracle::hermitian<complex>(n, 6000 + static_cast<std::uint32_t>(p));
        const Matrix<complex> b = oracle::spd<complex>(n, 6100 + static_cast<std::uint32_t>(p));
        SolverConfig c;
        c.nev = nev;
        c.tol = kTol;
        c.seed = 200 + static_cast<std::uint64_t>(p);
        try {
            const auto g = solve_generalized<complex>(a, b, std::nullopt, std::nullopt, c);
            record("generalized", n, g.standard.report);
            const RealVector want = oracle::generalized_values(a, b).head(nev);
            const double rel_res = g.generalized_residuals.maxCoeff() / (kTol * a.norm());
            double rel_val = 0.0;
            for (Index i = 0; i < nev; ++i)
                rel_val = std::max(rel_val, std::abs(g.standard.values(i) - want(i)) / std::abs(want(i)));
            worst_res = std::max(worst_res, rel_res);
            worst_val = std::max(worst_val, rel_val);
            if (rel_res > kGeneralizedResidualFactor || rel_val > kGeneralizedValueTol) ++failures;
        } catch (const Error&) {
            ++failures;
        }
    }
    return {failures == 0, std::to_string(kGeneralizedPairs - failures) + "/" + std::to_string(kGeneralizedPairs) +
                               " pairs; max res/(tol*||A||_F)=" + fmt("%.2e", worst_res) +
                               " max rel dlambda=" + fmt("%.2e", worst_val)};
}

Outcome filter_closed_form() {
    double worst = 0.0;
    int cases = 0;
    for (std::uint32_t s = 0; s < 6; ++s) {
        const Index n = 10 + 4 * static_cast<Index>(s);  // 10..30
        const Matrix<complex> h = oracle::hermitian<complex>(n, 7000 + s);
        const auto eg = oracle::eig(h);
        const auto iv = FilterInterval::make(eg.values(n / 4), eg.values(n - 1) + 0.05, eg.values(0));
        const Matrix<complex> y = oracle::gaussian<complex>(n, 4, 7100 + s);
        for (int m : {1, 5, 20, 40}) {
            const Matrix<complex> out = apply_filter(h, y, plan_degrees({m, m, m, m}), iv);
            for (Index j = 0; j < 4; ++j) {
                Eigen::VectorXcd coeff = eg.vectors.adjoint() * y.col(j);
                for (Index i = 0; i < n; ++i) coeff(i) *= filter_amplification(eg.values(i), m, iv);
                const Eigen::VectorXcd want = eg.vectors * coeff;
                const complex scale = want.dot(out.col(j)) / want.squaredNorm();
                worst = std::max(worst, (out.col(j) - scale * want).norm() / out.col(j).norm());
                ++cases;
            }
        }
    }
    return {worst <= kFilterDirectionTol,
            std::to_string(cases) + " columns; max relative direction error=" + fmt("%.2e", worst)};
}

Outcome degree_checkpoints() {
    const auto d27 = optimal_degree(1e-2, 1e-10, RatioEstimate{0.0, 0.5, 2.0});
    const auto dcap = optimal_degree(1e-1, 1e-10, RatioEstimate{0.0, 1.0 / 1.05, 1.05});
    const auto r = convergence_ratio(-2.0, FilterInterval::make(-1.0, 1.0, -3.0));
    const bool ok = d27.degree == 27 && !d27.capped && dcap.degree == 40 && dcap.capped &&
                    std::abs(r.tau - (2.0 - std::sqrt(3.0))) <= kRatioTol;
    return {ok, "m(1e-2,1e-10,rho=2)=" + std::to_string(d27.degree) + " m(rho=1.05)=" + std::to_string(dcap.degree) +
                    (dcap.capped ? " (capped)" : "") + " tau(-2)=" + fmt("%.15f", r.tau)};
}

Outcome two_regimes() {
    const Index n = 30;
    const RealVector spectrum = oracle::two_regime_spectrum(n);
    const Matrix<complex> h = oracle::with_spectrum<complex>(spectrum, 8000);
    const auto eg = oracle::eig(h);
    const Index target = 1;
    const auto iv = FilterInterval::make(spectrum(2), spectrum(n - 1), spectrum(0));
    int shaped = 0;
    for (int s = 0; s < kRegimeSeeds; ++s) {
        const Eigen::VectorXcd noise = oracle::gaussian<complex>(n, 1, 8100 + static_cast<std::uint32_t>(s)).col(0);
        const Eigen::VectorXcd y = eg.vectors.col(target) + 1e-4 * noise / noise.norm();
        std::vector<double> res;
        for (int m = 1; m <= 60; ++m) {
            const Matrix<complex> f = apply_filter(h, Matrix<complex>(y), plan_degrees({m}), iv);
            const Eigen::VectorXcd v = f.col(0);
            res.push_back(oracle::residual<complex>(h, spectrum(target), v));
        }
        const auto it = std::min_element(res.begin(), res.end());
        const bool interior = it != res.begin() && it != res.end() - 1;
        // a genuine descent followed by a genuine rise
        if (interior && *it < 0.5 * res.front() && res.back() > 2.0 * *it) ++shaped;
    }
    return {shaped >= kRegimeRequired, std::to_string(shaped) + "/" + std::to_string(kRegimeSeeds) +
                                           " seeds decrease then increase"};
}

struct SequenceRuns {
    SequenceOutcome<complex> reuse, random, fixed;
    bool ready = false;
};

SequenceRuns& sequence_runs() {
    static SequenceRuns runs;
    if (runs.ready) return runs;
    GeneratorConfig g;
    g.n = 300;
    g.length = 10;
    g.nev = 15;
    g.theta0 = 1e-1;
    g.thetaN = 1e-8;
    g.seed = 42;
    const auto seq = generate_sequence<complex>(g);
    SolverConfig c;
    c.nev = 15;
    c.tol = kTol;
    c.seed = 42;
    runs.reuse = solve_sequence(seq, c, true);
    runs.random = solve_sequence(seq, c, false);
    SolverConfig f = c;
    f.optimize_degrees = false;
    f.deg0 = kFixedDegree;
    runs.fixed = solve_sequence(seq, f, true);
    for (const auto* out : {&runs.reuse, &runs.random, &runs.fixed})
        for (const auto& p : out->problems) record("sequence", 300, p.result.report);
    runs.ready = true;
    return runs;
}

Outcome reuse_speedup() {
    const auto& runs = sequence_runs();
    bool ok = runs.reuse.failures() == 0 && runs.random.failures() == 0;
    std::string detail = "ratios";
    const std::size_t count = runs.reuse.problems.size();
    for (std::size_t l = 0; l < count; ++l) {
        const double ratio = static_cast<double>(runs.random.problems[l].result.report.matvecs_total) /
                             static_cast<double>(runs.reuse.problems[l].result.report.matvecs_total);
        detail += " " + fmt("%.2f", ratio);
        const Index ell = static_cast<Index>(l) + 1;
        if (ell >= 5 && ratio < kReuseRatioMid) ok = false;
        if (l + 1 == count && ratio < kReuseRatioLast) ok = false;
    }
    return {ok, detail + " (l=1..N)"};
}

Outcome optimization_saving() {
    const auto& runs = sequence_runs();
    const double opt = static_cast<double>(runs.reuse.total_filter_matvecs());
    const double fixed = static_cast<double>(runs.fixed.total_filter_matvecs());
    bool reached = runs.reuse.failures() == 0 && runs.fixed.failures() == 0;
    for (const auto* out : {&runs.reuse, &runs.fixed})
        for (const auto& p : out->problems)
            if (p.result.residuals.size() == 0 || p.result.residuals.maxCoeff() > kTol) reached = false;
    return {reached && opt <= kOptimizedShare * fixed,
            "optimized " + std::to_string(static_cast<long long>(opt)) + " vs fixed-degree " +
                std::to_string(static_cast<long long>(fixed)) + " filter matvecs (" + fmt("%.3f", opt / fixed) + ")"};
}

Outcome filter_dominance() {
    double worst = 1.0;
    int checked = 0;
    std::string where;
    for (const auto& r : g_reports) {
        if (r.n < kFilterShareMinN) continue;
        ++checked;
        const double share = static_cast<double>(r.report.filter_matvecs) / static_cast<double>(r.report.matvecs_total);
        if (share < worst) {
            worst = share;
            where = r.origin;
        }
    }
    return {checked > 0 && worst >= kFilterShare,
            std::to_string(checked) + " reports with n>=200; min filter share=" + fmt("%.3f", worst) +
                (where.empty() ? "" : " (" + where + ")")};
}

Outcome lanczos_safety() {
    int safe = 0;
    double tightest = 1e300;
    for (int t = 0; t < kLanczosTrials; ++t) {
        const Matrix<complex> h = oracle::hermitian<complex>(100, 9000 + static_cast<std::uint32_t>(t));
        const double beta = estimate_upper_bound(h, 25, static_cast<std::uint64_t>(t));
        Eigen::SelfAdjointEigenSolver<Matrix<complex>> es(h, Eigen::EigenvaluesOnly);
        const double lmax = es.eigenvalues()(99);
        if (beta >= lmax) ++safe;
        tightest = std::min(tightest, beta - lmax);
    }
    return {safe == kLanczosTrials, std::to_string(safe) + "/" + std::to_string(kLanczosTrials) +
                                         " trials beta >= lambda_max; min margin=" + fmt("%.3e", tightest)};
}

Outcome metric_formulas() {
    const double eff = parallel_efficiency(100.0, 16, 60.0, 32);
    const double sp = compute_speedup(3.3, 1.1);
    bool ok = std::abs(eff - kEfficiencyExpected) <= kFormulaTol && std::abs(sp - 3.0) <= kFormulaTol;

    const fs::path dir = fs::temp_directory_path() / "chfsi_acceptance_io";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<MetricsRow> rows;
    for (const auto& r : g_reports) {
        if (rows.size() == 6) break;
        MetricsRow row = metrics_from_report(r.origin, static_cast<Index>(rows.size()) + 1, r.n, 10, kTol, r.report);
        if (rows.size() % 2 == 0) row.speedup = 1.0 / 3.0;
        else row.efficiency = eff;
        rows.push_back(row);
    }
    emit_report(rows, dir / "report.csv");
    const bool csv = read_report(dir / "report.csv") == rows && !rows.empty();

    const Matrix<complex> h = oracle::hermitian<complex>(25, 9999);
    write_matrix(h, dir / "dense.mtx", MatrixFormat::dense);
    const bool dense = read_matrix<complex>(dir / "dense.mtx") == h;
    write_matrix(h, dir / "coord.mtx", MatrixFormat::coordinate_hermitian);
    const Matrix<complex> back = read_matrix<complex>(dir / "coord.mtx");
    // Coordinate files carry the lower triangle; the diagonal's imaginary part
    // is zero by hermiticity, so the round trip is exact as well.
    const bool coord = back == h;
    fs::remove_all(dir);
    ok = ok && csv && dense && coord;
    return {ok, "eta=" + fmt("%.6f", eff) + " speedup=" + fmt("%.15g", sp) + " csv=" + (csv ? "exact" : "MISMATCH") +
                    " dense=" + (dense ? "exact" : "MISMATCH") + " coordinate=" + (coord ? "exact" : "MISMATCH")};
}

Outcome locking_and_determinism() {
    int nonmonotone = 0;
    for (const auto& r : g_reports) {
        const auto& c = r.report.converged_per_loop;
        if (!std::is_sorted(c.begin(), c.end())) ++nonmonotone;
    }
    const Matrix<complex> h = oracle::hermitian<complex>(300, 5001);
    SolverConfig c;
    c.nev = 18;
    c.tol = kTol;
    c.seed = 101;
    const auto a = solve_standard<complex>(h, std::nullopt, std::nullopt, c);
    const auto b = solve_standard<complex>(h, std::nullopt, std::nullopt, c);
    const bool same = a.values == b.values && a.report.matvecs_per_loop == b.report.matvecs_per_loop &&
                      a.report.matvecs_total == b.report.matvecs_total && a.vectors == b.vectors;
    return {nonmonotone == 0 && same, std::to_string(g_reports.size() - static_cast<std::size_t>(nonmonotone)) + "/" +
                                          std::to_string(g_reports.size()) + " runs monotone; rerun " +
                                          (same ? "bitwise identical" : "DIFFERS")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    // Order matters: 8, 10 and 11 inspect reports collected by the others.
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", oracle_equivalence},
        {2, "generalized correctness", generalized_correctness},
        {3, "filter closed form", filter_closed_form},
        {4, "degree-model checkpoints", degree_checkpoints},
        {5, "two-regime residual", two_regimes},
        {6, "reuse speed-up", reuse_speedup},
        {7, "single optimization saving", optimization_saving},
        {8, "filter dominance", filter_dominance},
        {9, "lanczos bound safety", lanczos_safety},
        {10, "metric formulas and round trips", metric_formulas},
        {11, "locking monotonicity and determinism", locking_and_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s [%2d] %-38s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
