#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace camflow {

/// Outcome of comparing an analytic gradient against central differences.
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Central differences (f(p+h) - f(p-h)) / 2h per coordinate, compared against
// analytic_grad. Throws NumericError if f is non-finite at a probe point.
GradCheckReport finite_diff_check(const ScalarFn& f, std::vector<double> params,
                                  const std::vector<double>& analytic_grad,
                                  double h = 1e-4);

}  // namespace camflow
