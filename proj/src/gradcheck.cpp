#include "camflow/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "camflow/errors.hpp"

namespace camflow {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const ScalarFn& f, std::vector<double> params,
                                  const std::vector<double>& analytic_grad,
                                  double h) {
    if (h <= 0.0) {
        throw std::invalid_argument("finite_diff_check: h must be positive");
    }
    if (params.size() != analytic_grad.size()) {
        throw std::invalid_argument("finite_diff_check: gradient length mismatch");
    }
    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double fp = f(params);
        params[i] = saved - h;
        const double fm = f(params);
        params[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("finite_diff_check: non-finite f at probe point");
        }
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = relative_error(analytic_grad[i], numeric);
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic_at_worst = analytic_grad[i];
            report.numeric_at_worst = numeric;
        }
    }
    return report;
}

}  // namespace camflow
