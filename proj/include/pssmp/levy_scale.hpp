#pragma once

#include <cstddef>
#include <vector>

#include "pssmp/levy_model.hpp"

namespace pssmp {

// One summand c x^m e^{r x} of an exponential-polynomial closed form.
struct ScaleTerm {
    double coeff;
    double rate;
    int power;  // 0 for simple spectra; 1 appears at a double root of psi - q
};

// Closed form of a scale function of the Levy process, obtained by
// partial-fraction inversion of its rational Laplace transform:
//
//   kind W:  f has transform 1/(psi(lam) - q) on (phi(q), inf);
//            f = 0 on (-inf, 0).
//   kind Z:  f = e^{theta .} + (q - psi(theta)) (e^{theta .} 1_{[0,inf)}) * W^(q);
//            f(x) = e^{theta x} on (-inf, 0].
//
// On [0, inf) both are the finite term sum  sum_j c_j x^{m_j} e^{r_j x}.
class ScaleFunction {
  public:
    enum class Kind { W, Z };

    Kind kind;
    double q = 0.0;
    double theta = 0.0;  // Z only
    std::vector<ScaleTerm> terms;

    double operator()(double x) const;

    // d/dx on (0, inf).
    double derivative(double x) const;

    // Exact Laplace transform of the [0, inf) part:
    //   sum_j c_j m_j! / (lam - r_j)^{m_j+1},  lam > max_j r_j.
    double laplace(double lam) const;

    // Exact int_{x0}^inf e^{-lam x} f(x) dx, lam > max_j r_j.
    double laplace_tail(double lam, double x0) const;

    double max_rate() const;
};

// W^(q): all roots of psi = q found as companion-matrix eigenvalues of the
// numerator polynomial of psi - q; simple roots r give coefficients
// 1/psi'(r), an exact double root r (only possible at r = 0, q = 0, for
// critical drift) gives the pair (2/psi'') x e^{r x} - (2 psi'''/(3 psi''^2)) e^{r x}.
// Throws RepeatedRootError for degenerate clusters; q >= 0.
ScaleFunction w_scale(const LevyModel& m, double q);

// Z^(q,theta) by exact term-by-term convolution of the defining formula
// against the closed form of W^(q); q, theta >= 0.
ScaleFunction z_scale(const LevyModel& m, double q, double theta);

// Uniform grid x_k = k h, k = 0..n, h = x_max/n, holding sampled values of a
// function that vanishes on (-inf, 0).
struct LogGrid {
    double x_max = 0.0;
    double h = 0.0;
    std::vector<double> values;

    static LogGrid make(double x_max, std::size_t n);

    std::size_t n() const { return values.empty() ? 0 : values.size() - 1; }
    double x(std::size_t k) const {
        return x_max * static_cast<double>(k) / static_cast<double>(n());
    }
    bool same_geometry(const LogGrid& o) const {
        return values.size() == o.values.size() && x_max == o.x_max;
    }
};

// Evaluate f at the grid nodes; geometry is taken from `geometry`.
LogGrid sample(const ScaleFunction& f, const LogGrid& geometry);

// Trapezoidal discrete convolution of two functions vanishing below 0:
//   (f * g)(x_k) ~= h [ f_0 g_k / 2 + sum_{j=1}^{k-1} f_j g_{k-j} + f_k g_0 / 2 ],
// (f * g)(x_0) = 0. O(n^2). Throws GridMismatchError on geometry mismatch.
LogGrid convolve(const LogGrid& f, const LogGrid& g);

}  // namespace pssmp
