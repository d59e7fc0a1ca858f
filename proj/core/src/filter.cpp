#include "chfsi/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chfsi/linalg.hpp"

namespace chfsi {

FilterInterval FilterInterval::make(double alpha, double beta, double gamma) {
    if (!(alpha < beta) || !std::isfinite(alpha) || !std::isfinite(beta)) {
        throw ContractViolation("filter interval must satisfy alpha < beta (got [" + std::to_string(alpha) + ", " +
                                std::to_string(beta) + "])");
    }
    if (!(gamma < alpha) || !std::isfinite(gamma)) {
        throw ContractViolation("filter interval requires gamma < alpha (gamma " + std::to_string(gamma) +
                                ", alpha " + std::to_string(alpha) + ")");
    }
    return FilterInterval{alpha, beta, gamma};
}

long long DegreePlan::total() const noexcept {
    return std::accumulate(degrees.begin(), degrees.end(), 0LL);
}

std::vector<Index> DegreePlan::step_widths() const {
    std::vector<Index> widths;
    const int top = max_degree();
    widths.reserve(static_cast<std::size_t>(top));
    std::size_t s = 0;
    for (int step = 1; step <= top; ++step) {
        while (s < degrees.size() && degrees[s] < step) ++s;
        widths.push_back(static_cast<Index>(degrees.size() - s));
    }
    return widths;
}

double chebyshev_value(int m, double t) {
    if (m < 0) throw ContractViolation("chebyshev_value: negative degree");
    if (m == 0) return 1.0;
    double prev = 1.0;
    double cur = t;
    for (int i = 1; i < m; ++i) {
        const double next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

DegreePlan plan_degrees(const std::vector<int>& requested) {
    DegreePlan plan;
    plan.permutation.resize(requested.size());
    std::iota(plan.permutation.begin(), plan.permutation.end(), Index{0});
    for (std::size_t i = 0; i < requested.size(); ++i) {
        if (requested[i] < 1) {
            throw ContractViolation("plan_degrees: degree " + std::to_string(requested[i]) + " at column " +
                                    std::to_string(i) + " must be >= 1");
        }
    }
    std::stable_sort(plan.permutation.begin(), plan.permutation.end(), [&](Index a, Index b) {
        return requested[static_cast<std::size_t>(a)] < requested[static_cast<std::size_t>(b)];
    });
    plan.degrees.reserve(requested.size());
    for (Index p : plan.permutation) plan.degrees.push_back(requested[static_cast<std::size_t>(p)]);
    return plan;
}

double filter_amplification(double lambda, int m, const FilterInterval& interval) {
    if (!(interval.halfwidth() > 0.0)) throw ContractViolation("filter_amplification: degenerate interval");
    const double denom = chebyshev_value(m, interval.mapped(interval.gamma));
    if (denom == 0.0) throw DegenerateScaling("filter_amplification: C_m at gamma vanishes");
    return chebyshev_value(m, interval.mapped(lambda)) / denom;
}

template <Scalar T>
Matrix<T> apply_filter(const Matrix<T>& h, const Matrix<T>& y0, const DegreePlan& plan,
                       const FilterInterval& interval) {
    const Index k = y0.cols();
    if (static_cast<std::size_t>(k) != plan.size()) {
        throw ContractViolation("apply_filter: plan size does not match block width");
    }
    if (!std::is_sorted(plan.degrees.begin(), plan.degrees.end())) {
        throw ContractViolation("apply_filter: plan degrees must be ascending");
    }
    if (k == 0) return y0;
    if (plan.degrees.front() < 1) throw ContractViolation("apply_filter: degrees must be >= 1");
    const double c = interval.center();
    const double e = interval.halfwidth();
    if (!(e > 0.0)) throw ContractViolation("apply_filter: degenerate interval (e <= 0)");
    if (!(interval.gamma < interval.alpha)) throw ContractViolation("apply_filter: gamma must lie below alpha");

    const auto shifted = [&](const Matrix<T>& block) {
        Matrix<T> hy = hermitian_multiply(h, block);
        hy -= c * block;
        hy /= e;
        return hy;
    };

    const double sigma1 = e / (interval.gamma - c);
    double sigma = sigma1;

    Matrix<T> prev = y0;
    Matrix<T> cur = sigma1 * shifted(y0);
    if (!cur.allFinite()) throw FilterOverflow(1);

    const std::vector<int>& m = plan.degrees;
    std::size_t s = 0;
    while (s < m.size() && m[s] <= 1) ++s;

    for (int i = 1; i < plan.max_degree(); ++i) {
        const double sigma_next = 1.0 / (2.0 / sigma1 - sigma);
        const Index start = static_cast<Index>(s);
        const Index width = k - start;
        Matrix<T> tail = cur.rightCols(width);
        Matrix<T> next = (2.0 * sigma_next) * shifted(tail);
        next -= (sigma_next * sigma) * prev.rightCols(width);
        if (!next.allFinite()) throw FilterOverflow(i + 1);
        prev.rightCols(width) = std::move(tail);
        cur.rightCols(width) = std::move(next);
        sigma = sigma_next;
        while (s < m.size() && m[s] <= i + 1) ++s;
    }
    return cur;
}

template Matrix<double> apply_filter<double>(const Matrix<double>&, const Matrix<double>&, const DegreePlan&,
                                             const FilterInterval&);
template Matrix<complex> apply_filter<complex>(const Matrix<complex>&, const Matrix<complex>&, const DegreePlan&,
                                               const FilterInterval&);

}  // namespace chfsi
