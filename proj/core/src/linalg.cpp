#include "chfsi/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

namespace chfsi {

namespace {

std::atomic<std::uint64_t> g_matvecs{0};

int threads_from_env() {
    if (const char* env = std::getenv("CHFSI_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

std::atomic<int> g_threads{threads_from_env()};

template <Scalar T>
T gaussian(std::mt19937_64& rng, std::normal_distribution<double>& dist) {
    if constexpr (is_complex_v<T>) {
        const double re = dist(rng);
        const double im = dist(rng);
        return T(re, im) / std::sqrt(2.0);
    } else {
        return dist(rng);
    }
}

}  // namespace

std::uint64_t matvec_count() noexcept { return g_matvecs.load(); }
void reset_matvec_count() noexcept { g_matvecs.store(0); }

int multiply_threads() noexcept { return g_threads.load(); }

void set_multiply_threads(int threads) {
    if (threads < 1) throw ConfigError("thread count must be >= 1");
    g_threads.store(threads);
}

template <Scalar T>
double max_abs(const Matrix<T>& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

template <Scalar T>
double hermitian_defect(const Matrix<T>& h) {
    const double scale = max_abs(h);
    if (scale == 0.0) return 0.0;
    return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

template <Scalar T>
Matrix<T> checked_hermitian(const Matrix<T>& h, const char* what) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw ContractViolation(std::string(what) + " must be square and non-empty");
    }
    if (!h.allFinite()) throw ContractViolation(std::string(what) + " has non-finite entries");
    const double defect = hermitian_defect(h);
    if (defect > 1e-12) {
        throw ContractViolation(std::string(what) + " is not hermitian (relative defect " +
                                std::to_string(defect) + ")");
    }
    Matrix<T> sym = (h + h.adjoint()) * 0.5;
    return sym;
}

template <Scalar T>
Matrix<T> hermitian_multiply(const Matrix<T>& h, const Matrix<T>& y) {
    if (h.rows() != h.cols() || h.cols() != y.rows()) {
        throw ContractViolation("hermitian_multiply: dimension mismatch (" + std::to_string(h.rows()) + "x" +
                                std::to_string(h.cols()) + " times " + std::to_string(y.rows()) + "x" +
                                std::to_string(y.cols()) + ")");
    }
    const Index k = y.cols();
    Matrix<T> out(h.rows(), k);
    const int threads = static_cast<int>(std::min<Index>(multiply_threads(), k));
    if (threads <= 1) {
        out.noalias() = h * y;
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        const Index chunk = (k + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const Index begin = t * chunk;
            const Index width = std::min(chunk, k - begin);
            if (width <= 0) break;
            pool.emplace_back([&, begin, width] {
                out.middleCols(begin, width).noalias() = h * y.middleCols(begin, width);
            });
        }
        for (auto& th : pool) th.join();
    }
    g_matvecs.fetch_add(static_cast<std::uint64_t>(k));
    return out;
}

template <Scalar T>
Matrix<T> random_block(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix<T> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = gaussian<T>(rng, dist);
    return m;
}

namespace {

template <Scalar T>
void project_out(Matrix<T>& a, const Eigen::Ref<const Matrix<T>>& basis) {
    if (basis.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) {
        Matrix<T> coeff = basis.adjoint() * a;
        a.noalias() -= basis * coeff;
    }
}

template <Scalar T>
struct Householder {
    Matrix<T> q;
    RealVector rdiag;  // |R_jj|
};

// Thin QR by Householder reflectors; Q is scaled so diag(R) is real >= 0.
template <Scalar T>
Householder<T> householder_qr(Matrix<T> a) {
    const Index n = a.rows();
    const Index p = a.cols();
    Matrix<T> vs = Matrix<T>::Zero(n, p);
    std::vector<double> taus(static_cast<std::size_t>(p), 0.0);
    Vector<T> rphase = Vector<T>::Ones(p);
    RealVector rdiag = RealVector::Zero(p);

    for (Index j = 0; j < p; ++j) {
        const Index len = n - j;
        auto x = a.col(j).tail(len);
        const double alpha = x.norm();
        if (alpha == 0.0) continue;
        const T ph = phase_of<T>(x(0));
        Vector<T> v = x;
        v(0) += ph * alpha;
        const double tau = 2.0 / v.squaredNorm();
        rdiag(j) = alpha;
        rphase(j) = -ph;
        if (j + 1 < p) {
            auto trail = a.block(j, j + 1, len, p - j - 1);
            Matrix<T> w = v.adjoint() * trail;
            trail.noalias() -= (tau * v) * w;
        }
        vs.col(j).tail(len) = v;
        taus[static_cast<std::size_t>(j)] = tau;
    }

    Matrix<T> q = Matrix<T>::Identity(n, p);
    for (Index j = p - 1; j >= 0; --j) {
        const double tau = taus[static_cast<std::size_t>(j)];
        if (tau == 0.0) continue;
        const Index len = n - j;
        auto v = vs.col(j).tail(len);
        auto blk = q.block(j, j, len, p - j);
        Matrix<T> w = v.adjoint() * blk;
        blk.noalias() -= (tau * v) * w;
    }
    for (Index j = 0; j < p; ++j) q.col(j) *= rphase(j);
    return {std::move(q), std::move(rdiag)};
}

}  // namespace

template <Scalar T>
QrResult<T> qr_orthonormalize(const Matrix<T>& y, Index locked, std::uint64_t seed) {
    const Index n = y.rows();
    const Index k = y.cols();
    if (k > n) throw ContractViolation("qr_orthonormalize: more columns than rows");
    if (locked < 0 || locked > k) throw ContractViolation("qr_orthonormalize: locked count out of range");

    QrResult<T> result;
    result.q = y;
    const Index p = k - locked;
    if (p == 0) return result;

    const auto lockedBlock = y.leftCols(locked);
    Matrix<T> a = y.rightCols(p);
    RealVector original = a.colwise().norm().transpose();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);

    constexpr int kMaxAttempts = 4;
    for (int attempt = 0;; ++attempt) {
        Matrix<T> work = a;
        project_out<T>(work, lockedBlock);
        auto hh = householder_qr<T>(std::move(work));

        std::vector<Index> deficient;
        for (Index j = 0; j < p; ++j) {
            if (!(hh.rdiag(j) > 1e-12 * original(j))) deficient.push_back(j);
        }
        if (deficient.empty()) {
            result.q.rightCols(p) = hh.q;
            break;
        }
        if (attempt + 1 == kMaxAttempts) {
            throw Error("qr_orthonormalize: could not complete a full-rank basis");
        }
        for (Index j : deficient) {
            for (Index i = 0; i < n; ++i) a(i, j) = gaussian<T>(rng, dist);
            original(j) = a.col(j).norm();
            const Index global = locked + j;
            if (std::find(result.replaced.begin(), result.replaced.end(), global) == result.replaced.end())
                result.replaced.push_back(global);
        }
    }
    std::sort(result.replaced.begin(), result.replaced.end());
    return result;
}

template <Scalar T>
Matrix<T> cholesky(const Matrix<T>& b) {
    if (b.rows() != b.cols() || b.rows() == 0) throw ContractViolation("cholesky: matrix must be square");
    if (hermitian_defect(b) > 1e-12) throw ContractViolation("cholesky: matrix is not hermitian");
    const Index n = b.rows();
    Matrix<T> l = Matrix<T>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        const double d = real_part<T>(b(j, j)) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        const Index below = n - j - 1;
        if (below > 0) {
            l.col(j).tail(below) =
                (b.col(j).tail(below) - l.block(j + 1, 0, below, j) * l.row(j).head(j).adjoint()) / ljj;
        }
    }
    return l;
}

template <Scalar T>
Matrix<T> triangular_solve(const Matrix<T>& l, const Matrix<T>& x, TriangularMode mode) {
    const Index n = l.rows();
    if (l.cols() != n || x.rows() != n) throw ContractViolation("triangular_solve: dimension mismatch");
    const double scale = max_abs(l);
    for (Index i = 0; i < n; ++i) {
        if (!(std::abs(l(i, i)) > 1e-14 * scale)) throw SingularTriangular(i);
    }
    Matrix<T> z(n, x.cols());
    if (mode == TriangularMode::forward) {
        for (Index i = 0; i < n; ++i) {
            z.row(i) = (x.row(i) - l.row(i).head(i) * z.topRows(i)) / l(i, i);
        }
    } else {
        // L^dagger is upper triangular with (L^dagger)(i, j) = conj(L(j, i)).
        for (Index i = n - 1; i >= 0; --i) {
            const Index after = n - i - 1;
            z.row(i) = (x.row(i) - l.col(i).tail(after).adjoint() * z.bottomRows(after)) / conj_of<T>(l(i, i));
        }
    }
    return z;
}

template <Scalar T>
void normalize_phases(Matrix<T>& vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index best = 0;
        double best_mag = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double mag = std::abs(vectors(i, j));
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (best_mag > 0.0) {
            const T ph = phase_of<T>(vectors(best, j));
            vectors.col(j) *= conj_of<T>(ph);
            if constexpr (is_complex_v<T>) vectors(best, j) = T(std::abs(vectors(best, j)), 0.0);
        }
    }
}

namespace {

// Implicit-shift QL on a real symmetric tridiagonal matrix. d holds the
// diagonal, e[i] the coupling between i and i+1 (e[n-1] ignored). On return d
// holds the eigenvalues (unsorted) and the columns of z the eigenvectors.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Eigen::MatrixXd& z) {
    const int n = static_cast<int>(d.size());
    if (n == 0) return;
    e[static_cast<std::size_t>(n - 1)] = 0.0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (++iter > 60) throw Error("reference_eigensolve: QL iteration did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i = m - 1;
                bool underflow = false;
                for (; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    Eigen::VectorXd zi1 = z.col(i + 1);
                    z.col(i + 1) = s * z.col(i) + c * zi1;
                    z.col(i) = c * z.col(i) - s * zi1;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

template <Scalar T>
EigenDecomposition<T> reference_eigensolve(const Matrix<T>& h) {
    Matrix<T> a = checked_hermitian(h, "reference_eigensolve input");
    const Index n = a.rows();

    // Householder tridiagonalisation, reflectors kept for back-transformation.
    Matrix<T> vs = Matrix<T>::Zero(n, std::max<Index>(n - 2, 0));
    std::vector<double> taus(static_cast<std::size_t>(std::max<Index>(n - 2, 0)), 0.0);
    for (Index k = 0; k + 2 < n; ++k) {
        const Index len = n - k - 1;
        Vector<T> x = a.col(k).tail(len);
        if (x.tail(len - 1).norm() == 0.0) continue;
        const double alpha = x.norm();
        const T ph = phase_of<T>(x(0));
        Vector<T> v = x;
        v(0) += ph * alpha;
        const double tau = 2.0 / v.squaredNorm();
        auto a22 = a.bottomRightCorner(len, len);
        Vector<T> p = tau * (a22 * v);
        const T kk = T(0.5 * tau) * v.dot(p);
        Vector<T> w = p - kk * v;
        a22.noalias() -= v * w.adjoint();
        a22.noalias() -= w * v.adjoint();
        a.col(k).tail(len).setZero();
        a(k + 1, k) = -ph * alpha;
        a.row(k).tail(len) = a.col(k).tail(len).adjoint();
        vs.col(k).tail(len) = v;
        taus[static_cast<std::size_t>(k)] = tau;
    }

    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    Vector<T> phases = Vector<T>::Ones(n);
    for (Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = real_part<T>(a(i, i));
    for (Index i = 0; i + 1 < n; ++i) {
        const T sub = a(i + 1, i);
        e[static_cast<std::size_t>(i)] = std::abs(sub);
        phases(i + 1) = phases(i) * phase_of<T>(sub);
    }

    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
    tridiagonal_ql(d, e, z);

    Matrix<T> m(n, n);
    for (Index i = 0; i < n; ++i) m.row(i) = phases(i) * z.row(i).template cast<T>();
    for (Index k = static_cast<Index>(taus.size()) - 1; k >= 0; --k) {
        const double tau = taus[static_cast<std::size_t>(k)];
        if (tau == 0.0) continue;
        const Index len = n - k - 1;
        auto v = vs.col(k).tail(len);
        auto rows = m.bottomRows(len);
        Matrix<T> w = v.adjoint() * rows;
        rows.noalias() -= (tau * v) * w;
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return d[static_cast<std::size_t>(x)] < d[static_cast<std::size_t>(y)]; });

    EigenDecomposition<T> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        out.values(j) = d[static_cast<std::size_t>(src)];
        out.vectors.col(j) = m.col(src);
    }
    normalize_phases(out.vectors);
    return out;
}

template <Scalar T>
RealVector residual_norms_from_product(const Matrix<T>& hy, const RealVector& values, const Matrix<T>& y) {
    if (hy.rows() != y.rows() || hy.cols() != y.cols() || values.size() != y.cols()) {
        throw ContractViolation("residual_norms: dimension mismatch");
    }
    RealVector out(y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
        const double ny = y.col(j).norm();
        if (ny == 0.0) throw UndefinedResidual(j);
        out(j) = (hy.col(j) - values(j) * y.col(j)).norm() / ny;
    }
    return out;
}

template <Scalar T>
RealVector residual_norms(const Matrix<T>& h, const RealVector& values, const Matrix<T>& y) {
    if (values.size() != y.cols()) throw ContractViolation("residual_norms: dimension mismatch");
    for (Index j = 0; j < y.cols(); ++j) {
        if (y.col(j).norm() == 0.0) throw UndefinedResidual(j);
    }
    const Matrix<T> hy = hermitian_multiply(h, y);
    return residual_norms_from_product(hy, values, y);
}

template <Scalar T>
double orthonormality_defect(const Matrix<T>& q) {
    if (q.cols() == 0) return 0.0;
    Matrix<T> g = q.adjoint() * q;
    g.diagonal().array() -= T(1.0);
    return g.cwiseAbs().maxCoeff();
}

#define CHFSI_INSTANTIATE_LINALG(T)                                                               \
    template double max_abs<T>(const Matrix<T>&);                                                 \
    template double hermitian_defect<T>(const Matrix<T>&);                                        \
    template Matrix<T> checked_hermitian<T>(const Matrix<T>&, const char*);                       \
    template Matrix<T> hermitian_multiply<T>(const Matrix<T>&, const Matrix<T>&);                 \
    template Matrix<T> random_block<T>(Index, Index, std::uint64_t);                              \
    template QrResult<T> qr_orthonormalize<T>(const Matrix<T>&, Index, std::uint64_t);            \
    template Matrix<T> cholesky<T>(const Matrix<T>&);                                             \
    template Matrix<T> triangular_solve<T>(const Matrix<T>&, const Matrix<T>&, TriangularMode);   \
    template EigenDecomposition<T> reference_eigensolve<T>(const Matrix<T>&);                     \
    template void normalize_phases<T>(Matrix<T>&);                                                \
    template RealVector residual_norms<T>(const Matrix<T>&, const RealVector&, const Matrix<T>&); \
    template RealVector residual_norms_from_product<T>(const Matrix<T>&, const RealVector&,       \
                                                       const Matrix<T>&);                         \
    template double orthonormality_defect<T>(const Matrix<T>&);

CHFSI_INSTANTIATE_LINALG(double)
CHFSI_INSTANTIATE_LINALG(complex)

#undef CHFSI_INSTANTIATE_LINALG

}  // namespace chfsi
