#include "chfsi/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace chfsi {

namespace {

using Clock = std::chrono::steady_clock;

class StopWatch {
public:
    StopWatch() : start_(Clock::now()) {}
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

private:
    Clock::time_point start_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct LanczosOutcome {
    double bound = 0.0;
    std::uint64_t matvecs = 0;
};

template <Scalar T>
LanczosOutcome lanczos_bound(const Matrix<T>& h, int steps, std::uint64_t seed) {
    if (steps < 1) throw ContractViolation("estimate_upper_bound: steps must be >= 1");
    const Index n = h.rows();
    const int m = static_cast<int>(std::min<Index>(steps, n));
    constexpr int kMaxRestarts = 3;

    Matrix<T> basis(n, m);
    std::vector<double> diag;
    std::vector<double> off;
    LanczosOutcome out;

    Vector<T> v = random_block<T>(n, 1, seed).col(0);
    v.normalize();
    Vector<T> v_prev = Vector<T>::Zero(n);
    double beta_prev = 0.0;
    int restarts = 0;
    double last_residual = 0.0;

    for (int j = 0; j < m; ++j) {
        basis.col(j) = v;
        Matrix<T> vm = v;
        Vector<T> w = hermitian_multiply(h, vm).col(0);
        ++out.matvecs;
        const double hv_norm = w.norm();
        const double a = real_part<T>(v.dot(w));
        w -= a * v;
        w -= beta_prev * v_prev;
        for (int pass = 0; pass < 2; ++pass) {
            auto used = basis.leftCols(j + 1);
            Vector<T> coeff = used.adjoint() * w;
            w.noalias() -= used * coeff;
        }
        const double b = w.norm();
        diag.push_back(a);
        if (j == m - 1) {
            last_residual = b;
            break;
        }
        if (b <= 1e-12 * std::max(hv_norm, std::abs(a))) {
            if (++restarts > kMaxRestarts) {
                throw LanczosBreakdown("estimate_upper_bound: Lanczos broke down " + std::to_string(restarts) +
                                       " times");
            }
            Vector<T> fresh = random_block<T>(n, 1, mix_seed(seed, static_cast<std::uint64_t>(restarts))).col(0);
            auto used = basis.leftCols(j + 1);
            for (int pass = 0; pass < 2; ++pass) {
                Vector<T> coeff = used.adjoint() * fresh;
                fresh.noalias() -= used * coeff;
            }
            const double fn = fresh.norm();
            if (!(fn > 1e-12)) throw LanczosBreakdown("estimate_upper_bound: cannot extend Krylov basis");
            off.push_back(0.0);
            v_prev = v;
            v = fresh / fn;
            beta_prev = 0.0;
        } else {
            off.push_back(b);
            v_prev = v;
            v = w / b;
            beta_prev = b;
        }
    }

    const Index dim = static_cast<Index>(diag.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) t(i, i) = diag[static_cast<std::size_t>(i)];
    for (Index i = 0; i + 1 < dim; ++i) t(i + 1, i) = t(i, i + 1) = off[static_cast<std::size_t>(i)];
    const auto ritz = reference_eigensolve<double>(t);
    // The rounding guard keeps the bound safe when the Krylov space is exhausted
    // and the residual is pure noise.
    const double scale = std::max(std::abs(ritz.values(0)), std::abs(ritz.values(dim - 1)));
    out.bound = ritz.values(dim - 1) + std::max(last_residual, 1e-13 * scale);
    return out;
}

FilterInterval sane_interval(double alpha, double beta, double gamma) {
    const double span = beta - gamma;
    if (!(span > 0.0)) {
        throw Error("solve_standard: degenerate spectrum estimate (upper bound " + std::to_string(beta) +
                    " not above lowest Ritz value " + std::to_string(gamma) + ")");
    }
    alpha = std::clamp(alpha, gamma + 1e-8 * span, beta - 1e-8 * span);
    return FilterInterval::make(alpha, beta, gamma);
}

}  // namespace

Index SolverConfig::effective_buffer() const {
    if (buffer >= 0) return buffer;
    return std::max<Index>(8, static_cast<Index>(std::ceil(0.04 * static_cast<double>(nev))));
}

void SolverConfig::validate(Index n) const {
    if (nev <= 0) throw ConfigError("nev must be positive");
    if (effective_buffer() < 1) throw ConfigError("buffer must provide at least one extra column");
    if (nev + effective_buffer() > n) {
        throw ConfigError("nev + buffer = " + std::to_string(nev + effective_buffer()) + " exceeds n = " +
                          std::to_string(n));
    }
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (cap < 1 || deg0 < 1 || deg0 > cap) throw ConfigError("degrees must satisfy 1 <= deg0 <= cap");
    if (max_loops < 1) throw ConfigError("max_loops must be >= 1");
    if (lanczos_steps < 1) throw ConfigError("lanczos_steps must be >= 1");
}

template <Scalar T>
double estimate_upper_bound(const Matrix<T>& h, int steps, std::uint64_t seed) {
    const Matrix<T> sym = checked_hermitian(h, "H");
    return lanczos_bound(sym, steps, seed).bound;
}

template <Scalar T>
StandardForm<T> reduce_generalized(const Matrix<T>& a, const Matrix<T>& b) {
    const Matrix<T> as = checked_hermitian(a, "A");
    if (b.rows() != as.rows() || b.cols() != as.cols()) throw ContractViolation("reduce_generalized: size mismatch");
    StandardForm<T> out;
    out.l = cholesky(b);
    const Matrix<T> x = triangular_solve(out.l, as, TriangularMode::forward);
    const Matrix<T> xt = x.adjoint();
    Matrix<T> h = triangular_solve(out.l, xt, TriangularMode::forward);
    out.h = (h + h.adjoint()) * 0.5;
    return out;
}

template <Scalar T>
Matrix<T> back_transform(const Matrix<T>& y, const Matrix<T>& l) {
    return triangular_solve(l, y, TriangularMode::adjoint);
}

template <Scalar T>
RitzPairs<T> rayleigh_ritz(const Matrix<T>& h, const Matrix<T>& q) {
    RitzPairs<T> out;
    const Matrix<T> hq = hermitian_multiply(h, q);
    Matrix<T> g = q.adjoint() * hq;
    if (hermitian_defect(g) > 1e-10) {
        throw ContractViolation("rayleigh_ritz: projected matrix is not hermitian; basis lost orthonormality");
    }
    g = (g + g.adjoint()) * 0.5;
    auto eig = reference_eigensolve(g);
    out.values = std::move(eig.values);
    out.vectors.noalias() = q * eig.vectors;
    out.h_vectors.noalias() = hq * eig.vectors;
    return out;
}

template <Scalar T>
LockPartition<T> lock_partition(const RealVector& values, const Matrix<T>& y, const RealVector& residuals, double tol) {
    const Index k = values.size();
    if (y.cols() != k || residuals.size() != k) throw ContractViolation("lock_partition: misaligned inputs");
    LockPartition<T> out;
    out.order.reserve(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j)
        if (residuals(j) <= tol) out.order.push_back(j);
    out.locked = static_cast<Index>(out.order.size());
    // Among the locked, ascending value order.
    std::stable_sort(out.order.begin(), out.order.end(), [&](Index a, Index b) { return values(a) < values(b); });
    for (Index j = 0; j < k; ++j)
        if (!(residuals(j) <= tol)) out.order.push_back(j);

    out.values.resize(k);
    out.residuals.resize(k);
    out.vectors.resize(y.rows(), k);
    for (Index j = 0; j < k; ++j) {
        const Index src = out.order[static_cast<std::size_t>(j)];
        out.values(j) = values(src);
        out.residuals(j) = residuals(src);
        out.vectors.col(j) = y.col(src);
    }
    return out;
}

template <Scalar T>
SolveResult<T> solve_standard(const Matrix<T>& h_in, const std::optional<Matrix<T>>& init,
                              const std::optional<PreviousBounds>& bounds, const SolverConfig& config) {
    StopWatch total;
    const Matrix<T> h = checked_hermitian(h_in, "H");
    const Index n = h.rows();
    config.validate(n);
    const Index nev = config.nev;
    const Index k = config.block_size();

    SolveReport report;
    std::uint64_t setup_matvecs = 0;

    {
        StopWatch sw;
        const auto lz = lanczos_bound(h, config.lanczos_steps, mix_seed(config.seed, 0x1a2c));
        report.upper_bound = lz.bound;
        report.lanczos_matvecs = lz.matvecs;
        setup_matvecs += lz.matvecs;
        report.times.lanczos = sw.seconds();
    }
    const double beta = report.upper_bound;

    Matrix<T> y;
    if (init) {
        if (init->rows() != n || init->cols() != k) {
            throw ContractViolation("solve_standard: init block must be " + std::to_string(n) + "x" +
                                    std::to_string(k));
        }
        y = *init;
    } else {
        y = random_block<T>(n, k, config.seed);
    }

    double alpha = 0.0;
    double gamma = 0.0;
    if (bounds) {
        gamma = bounds->lambda1;
        alpha = bounds->lambda_next;
    } else {
        StopWatch sw;
        auto qr = qr_orthonormalize(y, 0, mix_seed(config.seed, 0xb007));
        report.qr_replacements += static_cast<Index>(qr.replaced.size());
        auto rr = rayleigh_ritz(h, qr.q);
        setup_matvecs += static_cast<std::uint64_t>(k);
        report.rr_matvecs += static_cast<std::uint64_t>(k);
        y = std::move(rr.vectors);
        gamma = rr.values(0);
        alpha = rr.values(nev);
        report.times.rr += sw.seconds();
    }
    FilterInterval interval = sane_interval(alpha, beta, gamma);

    Index locked = 0;
    std::vector<double> locked_values;
    std::vector<double> locked_residuals;
    RealVector active_values;
    std::vector<int> degrees(static_cast<std::size_t>(k), config.deg0);

    auto finish = [&](bool converged) {
        SolveResult<T> res;
        report.converged = converged;
        report.final_interval = interval;
        report.matvecs_total = std::accumulate(report.matvecs_per_loop.begin(), report.matvecs_per_loop.end(),
                                               std::uint64_t{0});
        // Whole block sorted by value: locked pairs and remaining Ritz pairs.
        std::vector<double> vals(locked_values);
        for (Index j = 0; j < active_values.size(); ++j) vals.push_back(active_values(j));
        std::vector<double> res_all(locked_residuals);
        res_all.resize(vals.size(), std::numeric_limits<double>::infinity());
        std::vector<Index> order(vals.size());
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
            return vals[static_cast<std::size_t>(a)] < vals[static_cast<std::size_t>(b)];
        });
        res.block.resize(n, static_cast<Index>(vals.size()));
        res.block_values.resize(static_cast<Index>(vals.size()));
        for (std::size_t j = 0; j < order.size(); ++j) {
            res.block.col(static_cast<Index>(j)) = y.col(order[j]);
            res.block_values(static_cast<Index>(j)) = vals[static_cast<std::size_t>(order[j])];
        }
        normalize_phases(res.block);

        std::vector<Index> lorder(locked_values.size());
        std::iota(lorder.begin(), lorder.end(), Index{0});
        std::stable_sort(lorder.begin(), lorder.end(), [&](Index a, Index b) {
            return locked_values[static_cast<std::size_t>(a)] < locked_values[static_cast<std::size_t>(b)];
        });
        const Index take = std::min<Index>(nev, static_cast<Index>(lorder.size()));
        res.values.resize(take);
        res.residuals.resize(take);
        res.vectors.resize(n, take);
        for (Index j = 0; j < take; ++j) {
            const Index src = lorder[static_cast<std::size_t>(j)];
            res.values(j) = locked_values[static_cast<std::size_t>(src)];
            res.residuals(j) = locked_residuals[static_cast<std::size_t>(src)];
            res.vectors.col(j) = y.col(src);
        }
        normalize_phases(res.vectors);
        report.times.total = total.seconds();
        res.report = report;
        return res;
    };

    for (int loop = 1; loop <= config.max_loops; ++loop) {
        std::uint64_t loop_matvecs = loop == 1 ? setup_matvecs : 0;
        const Index active = k - locked;

        {
            StopWatch sw;
            const DegreePlan plan = plan_degrees(degrees);
            Matrix<T> sorted(n, active);
            for (Index j = 0; j < active; ++j) sorted.col(j) = y.col(locked + plan.permutation[static_cast<std::size_t>(j)]);
            const Matrix<T> filtered = apply_filter(h, sorted, plan, interval);
            for (Index j = 0; j < active; ++j)
                y.col(locked + plan.permutation[static_cast<std::size_t>(j)]) = filtered.col(j);
            const auto cost = static_cast<std::uint64_t>(plan.total());
            report.filter_matvecs += cost;
            loop_matvecs += cost;
            std::map<int, Index> hist;
            for (int d : plan.degrees) ++hist[d];
            report.degree_histogram.push_back(std::move(hist));
            report.times.filter += sw.seconds();
        }

        {
            StopWatch sw;
            auto qr = qr_orthonormalize(y, locked, mix_seed(config.seed, 0x9000 + static_cast<std::uint64_t>(loop)));
            report.qr_replacements += static_cast<Index>(qr.replaced.size());
            y = std::move(qr.q);
            report.times.qr += sw.seconds();
        }

        RitzPairs<T> rr;
        {
            StopWatch sw;
            const Matrix<T> act = y.rightCols(active);
            rr = rayleigh_ritz(h, act);
            report.rr_matvecs += static_cast<std::uint64_t>(active);
            loop_matvecs += static_cast<std::uint64_t>(active);
            report.times.rr += sw.seconds();
        }

        Index newly_locked = 0;
        RealVector active_residuals;
        {
            StopWatch sw;
            const RealVector res = residual_norms_from_product(rr.h_vectors, rr.values, rr.vectors);
            auto part = lock_partition(rr.values, rr.vectors, res, config.tol);
            y.rightCols(active) = part.vectors;
            newly_locked = part.locked;
            for (Index j = 0; j < newly_locked; ++j) {
                locked_values.push_back(part.values(j));
                locked_residuals.push_back(part.residuals(j));
            }
            locked += newly_locked;
            active_values = part.values.tail(active - newly_locked);
            active_residuals = part.residuals.tail(active - newly_locked);
            report.converged_per_loop.push_back(locked);
            report.times.lock += sw.seconds();
        }
        report.matvecs_per_loop.push_back(loop_matvecs);
        report.loops = loop;

        std::vector<double> all(locked_values);
        for (Index j = 0; j < active_values.size(); ++j) all.push_back(active_values(j));
        std::sort(all.begin(), all.end());

        if (locked >= nev) {
            std::vector<double> lv(locked_values);
            std::nth_element(lv.begin(), lv.begin() + (nev - 1), lv.end());
            const double nth_locked = lv[static_cast<std::size_t>(nev - 1)];
            const bool none_below = active_values.size() == 0 || active_values.minCoeff() >= nth_locked;
            if (none_below) return finish(true);
        }

        StopWatch sw;
        interval = sane_interval(all[static_cast<std::size_t>(nev)], beta, all.front());
        const Index remaining = k - locked;
        degrees.assign(static_cast<std::size_t>(remaining), config.deg0);
        if (config.optimize_degrees) {
            for (Index j = 0; j < remaining; ++j) {
                const double lam = active_values(j);
                // Buffer columns at or above alpha only guard the subspace; they stay at deg0.
                if (lam >= interval.alpha) continue;
                int deg = config.cap;
                try {
                    const auto ratio = convergence_ratio(lam, interval);
                    const auto dec = optimal_degree(active_residuals(j), config.tol, ratio, config.cap,
                                                    static_cast<std::size_t>(j));
                    deg = dec.degree;
                    if (dec.capped) ++report.capped_degrees;
                } catch (const Stagnation&) {
                    ++report.stagnations;
                } catch (const InsideInterval&) {
                    ++report.stagnations;
                }
                degrees[static_cast<std::size_t>(j)] = deg;
            }
        }
        report.times.optimization += sw.seconds();
    }

    auto partial = finish(false);
    throw NonConvergence<T>("solve_standard: not converged after " + std::to_string(config.max_loops) +
                                " loops (" + std::to_string(locked) + " of " + std::to_string(nev) + " locked)",
                            std::move(partial));
}

template <Scalar T>
GeneralizedResult<T> solve_generalized(const Matrix<T>& a, const Matrix<T>& b, const std::optional<Matrix<T>>& init,
                                       const std::optional<PreviousBounds>& bounds, const SolverConfig& config) {
    auto form = reduce_generalized(a, b);
    GeneralizedResult<T> out;
    out.standard = solve_standard(form.h, init, bounds, config);
    out.vectors = back_transform(out.standard.vectors, form.l);
    const Index m = out.vectors.cols();
    out.generalized_residuals.resize(m);
    const Matrix<T> ac = a * out.vectors;
    const Matrix<T> bc = b * out.vectors;
    for (Index j = 0; j < m; ++j) {
        out.generalized_residuals(j) =
            (ac.col(j) - out.standard.values(j) * bc.col(j)).norm() / out.vectors.col(j).norm();
    }
    return out;
}

#define CHFSI_INSTANTIATE_SOLVER(T)                                                                           \
    template double estimate_upper_bound<T>(const Matrix<T>&, int, std::uint64_t);                            \
    template StandardForm<T> reduce_generalized<T>(const Matrix<T>&, const Matrix<T>&);                       \
    template Matrix<T> back_transform<T>(const Matrix<T>&, const Matrix<T>&);                                 \
    template RitzPairs<T> rayleigh_ritz<T>(const Matrix<T>&, const Matrix<T>&);                               \
    template LockPartition<T> lock_partition<T>(const RealVector&, const Matrix<T>&, const RealVector&,       \
                                                double);                                                      \
    template SolveResult<T> solve_standard<T>(const Matrix<T>&, const std::optional<Matrix<T>>&,              \
                                              const std::optional<PreviousBounds>&, const SolverConfig&);     \
    template GeneralizedResult<T> solve_generalized<T>(const Matrix<T>&, const Matrix<T>&,                    \
                                                       const std::optional<Matrix<T>>&,                       \
                                                       const std::optional<PreviousBounds>&, const SolverConfig&);

CHFSI_INSTANTIATE_SOLVER(double)
CHFSI_INSTANTIATE_SOLVER(complex)

#undef CHFSI_INSTANTIATE_SOLVER

}  // namespace chfsi
