#pragma once

#include <utility>
#include <vector>

namespace pssmp {

// Continuous piecewise-linear function of z > 0 through tabulated nodes,
// clamped to the end values outside the table.
class PiecewiseLinear {
  public:
    explicit PiecewiseLinear(double constant);
    explicit PiecewiseLinear(std::vector<std::pair<double, double>> nodes);

    double operator()(double z) const;
    bool is_constant() const { return zs_.empty(); }
    const std::vector<double>& breakpoints() const { return zs_; }

  private:
    std::vector<double> zs_;
    std::vector<double> vs_;
    double const_ = 0.0;
};

// Drawdown threshold r(.) > 1 as a function of the running maximum.
class DrawdownSpec {
  public:
    static DrawdownSpec constant(double r);
    static DrawdownSpec table(std::vector<std::pair<double, double>> nodes);

    double operator()(double z) const { return r_(z); }
    bool is_constant() const { return r_.is_constant(); }
    const std::vector<double>& breakpoints() const { return r_.breakpoints(); }

    // Largest threshold value over [z_lo, z_hi] (attained at a breakpoint or
    // an endpoint).
    double max_on(double z_lo, double z_hi) const;

  private:
    explicit DrawdownSpec(PiecewiseLinear r) : r_(std::move(r)) {}
    PiecewiseLinear r_;
};

}  // namespace pssmp
