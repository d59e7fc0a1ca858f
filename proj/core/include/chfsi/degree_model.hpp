#pragma once

#include <cstddef>
#include <limits>

#include "chfsi/filter.hpp"

namespace chfsi {

/// Geometric damping rate of the filter for one (approximate) eigenvalue.
struct RatioEstimate {
    double lambda_hat = 0.0;
    double tau = 1.0;  // in (0, 1]
    double rho = 1.0;  // 1 / tau
};

struct DegreeDecision {
    std::size_t column = 0;
    double residual = 0.0;
    double tol = 0.0;
    int degree = 1;
    bool capped = false;
};

inline constexpr double kMachineEpsilon = std::numeric_limits<double>::epsilon();
inline constexpr int kDefaultDegreeCap = 40;

/// tau = min |t +- sqrt(t^2 - 1)| with t the mapped value of lambda.
/// Throws InsideInterval when lambda lies in [alpha, beta].
RatioEstimate convergence_ratio(double lambda, const FilterInterval& interval);

/// Residual model after a degree-m filter:
///   res0 * rho_i^-m + res0 * (rho_1 / rho_i)^m * eps.
/// When `target` and `leading` are the same estimate (the first column) only
/// the geometric term is returned.
double predict_residual(int m, double res0, const RatioEstimate& target, const RatioEstimate& leading,
                        double eps = kMachineEpsilon);

/// ceil(ln(res0 / tol) / ln(rho)) clamped to [1, cap]. A residual already at
/// or below tol still gets degree 1. Throws Stagnation when rho <= 1.
DegreeDecision optimal_degree(double res0, double tol, const RatioEstimate& ratio, int cap = kDefaultDegreeCap,
                              std::size_t column = 0);

}  // namespace chfsi
