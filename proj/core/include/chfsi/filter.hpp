#pragma once

#include <vector>

#include "chfsi/types.hpp"

namespace chfsi {

/// Suppressed spectral window [alpha, beta] plus the estimate gamma of the
/// smallest eigenvalue, which the filter normalises to 1.
struct FilterInterval {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    /// Validating constructor: alpha < beta and gamma < alpha.
    static FilterInterval make(double alpha, double beta, double gamma);

    double center() const noexcept { return 0.5 * (alpha + beta); }
    double halfwidth() const noexcept { return 0.5 * (beta - alpha); }
    /// Affine map of the window onto [-1, 1].
    double mapped(double lambda) const noexcept { return (lambda - center()) / halfwidth(); }
    bool contains(double lambda) const noexcept { return lambda >= alpha && lambda <= beta; }
};

/// Per-vector polynomial degrees, ascending, with the permutation back to the
/// caller's column order: degrees[i] belongs to caller column permutation[i].
struct DegreePlan {
    std::vector<int> degrees;
    std::vector<Index> permutation;

    std::size_t size() const noexcept { return degrees.size(); }
    int max_degree() const noexcept { return degrees.empty() ? 0 : degrees.back(); }
    /// Sum of degrees, i.e. the matvec cost of one filter application.
    long long total() const noexcept;
    /// Number of columns multiplied at each recurrence step 1..max_degree().
    std::vector<Index> step_widths() const;
};

/// C_m(t) via the three-term recurrence.
double chebyshev_value(int m, double t);

/// Stable ascending sort of the requested degrees. Throws ContractViolation on
/// a degree < 1.
DegreePlan plan_degrees(const std::vector<int>& requested);

/// Ideal damping factor C_m((lambda - c)/e) / C_m((gamma - c)/e).
double filter_amplification(double lambda, int m, const FilterInterval& interval);

/// Scaled Chebyshev filter. Column j of `y0` (already in plan order) is
/// replaced by p_{m_j}(H) y_j with p_m normalised so p_m(gamma) = 1. Each
/// recurrence step multiplies only the columns whose degree is not yet
/// reached, so the matvec cost is exactly plan.total().
template <Scalar T>
Matrix<T> apply_filter(const Matrix<T>& h, const Matrix<T>& y0, const DegreePlan& plan, const FilterInterval& interval);

}  // namespace chfsi
