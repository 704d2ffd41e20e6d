#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace pssmp {

// Chebyshev interpolant on [a, b] built from Clenshaw-Curtis nodes
// x_j = mid + half cos(pi j / n). Degree-n fits reuse the function values of
// the degree-n/2 fit at the same nodes, which keeps refinement cheap when
// evaluations are expensive.
class ChebSeries {
  public:
    ChebSeries() = default;

    static ChebSeries fit(double a, double b, std::size_t degree,
                          const std::function<double(double)>& f);

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t degree() const { return coef_.empty() ? 0 : coef_.size() - 1; }

    double operator()(double x) const;  // Clenshaw recurrence

    // Antiderivative with F(a) = 0.
    ChebSeries antiderivative() const;

    // int_a^b of the interpolant.
    double integral() const;

    // Magnitude of the trailing coefficient pair, a standard convergence
    // diagnostic for the fit.
    double tail_estimate() const;

    static std::vector<double> nodes(double a, double b, std::size_t degree);

  private:
    double a_ = 0.0, b_ = 1.0;
    std::vector<double> coef_;
};

}  // namespace pssmp
