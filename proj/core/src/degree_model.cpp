#include "chfsi/degree_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chfsi {

RatioEstimate convergence_ratio(double lambda, const FilterInterval& interval) {
    if (interval.contains(lambda)) {
        throw InsideInterval("convergence_ratio: " + std::to_string(lambda) + " lies inside [" +
                             std::to_string(interval.alpha) + ", " + std::to_string(interval.beta) + "]");
    }
    const double t = interval.mapped(lambda);
    const double root = std::sqrt(t * t - 1.0);
    const double tau = std::min(std::abs(t + root), std::abs(t - root));
    return RatioEstimate{lambda, tau, 1.0 / tau};
}

double predict_residual(int m, double res0, const RatioEstimate& target, const RatioEstimate& leading, double eps) {
    if (m < 0 || !(res0 > 0.0) || eps < 0.0) throw ContractViolation("predict_residual: invalid arguments");
    const double decay = res0 * std::pow(target.rho, -m);
    const bool is_leading = target.lambda_hat == leading.lambda_hat && target.rho == leading.rho;
    if (is_leading) return decay;
    return decay + res0 * std::pow(leading.rho / target.rho, m) * eps;
}

DegreeDecision optimal_degree(double res0, double tol, const RatioEstimate& ratio, int cap, std::size_t column) {
    if (!(res0 > 0.0) || !(tol > 0.0) || cap < 1) throw ContractViolation("optimal_degree: invalid arguments");
    if (!(ratio.rho > 1.0)) {
        throw Stagnation("optimal_degree: convergence ratio " + std::to_string(ratio.rho) +
                         " <= 1, the filter cannot reduce this residual");
    }
    DegreeDecision d{column, res0, tol, 1, false};
    if (res0 <= tol) return d;
    const double raw = std::log(res0 / tol) / std::log(ratio.rho);
    const double rounded = std::ceil(raw);
    if (rounded > cap) {
        d.degree = cap;
        d.capped = true;
    } else {
        d.degree = std::max(1, static_cast<int>(rounded));
    }
    return d;
}

}  // namespace chfsi
