#pragma once

#include <functional>

namespace pssmp {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;        // accumulated error estimate
    int subdivisions = 0;
};

// Adaptive Gauss-Kronrod 7-15 on [a, b]: bisect the interval with the worst
// Kronrod error estimate until the total satisfies
// err <= max(abs_tol, rel_tol |value|). Throws QuadratureFailure when the
// subdivision budget runs out.
QuadResult gauss_kronrod(const std::function<double(double)>& f, double a,
                         double b, double rel_tol = 1e-8,
                         double abs_tol = 1e-14, int max_subdiv = 2000);

}  // namespace pssmp
