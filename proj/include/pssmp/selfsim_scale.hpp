#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pssmp/levy_model.hpp"
#include "pssmp/levy_scale.hpp"

namespace pssmp {

// Geometry of the log-space grid on [0, x_max]: n panels, h = x_max/n.
// Default resolution h = 2^-10 x_max.
struct GridSpec {
    double x_max = 1.0;
    std::size_t n = 1024;
};

struct BuildOptions {
    double tol = 1e-10;            // stop when sup increment < tol * sup value
    std::size_t max_terms = 10000; // series-term budget before NonConvergence
};

// Certificate attached to a built scale curve: n_terms series terms were
// accumulated; the dropped tail has sup-norm at most trunc_bound (the smaller
// of the analytic factorial envelope and the observed-ratio geometric bound).
struct BuildReport {
    std::size_t n_terms = 0;
    double trunc_bound = 0.0;
    double final_increment = 0.0;
    double sup_value = 0.0;
};

// One scale function of the self-similar process on the log grid: values
// f(e^{x_k}) and the derivative d/dy f at y = e^{x_k} (second-order
// differences in x, divided by y; one-sided at the ends so the x = 0 column
// is the right derivative).
//
// Below y = 1 the W kind vanishes and the Z kind equals y^theta.
class ScaleCurve {
  public:
    enum class Kind { W, Z };

    Kind kind = Kind::W;
    double q = 0.0;
    double theta = 0.0;  // Z only
    GridSpec spec;
    std::vector<double> val;
    std::vector<double> dval;
    BuildReport report;

    double h() const { return spec.x_max / static_cast<double>(spec.n); }
    double x(std::size_t k) const {
        return spec.x_max * static_cast<double>(k) / static_cast<double>(spec.n);
    }

    // Cubic (4-point Lagrange) interpolation in x = log y. y must satisfy
    // log y <= x_max (up to roundoff); values below y = 1 follow the kind's
    // boundary convention.
    double value(double y) const;
    double deriv(double y) const;

    LogGrid as_log_grid() const;  // geometry + values, for grid algebra
};

// Scale function of the self-similar process with index alpha and killing p
// at discount q: the monotone fixed point of
//   calW = W^(p) + q W^(p) * (e^{alpha .} 1_{[0,inf)} calW)
// on the grid. Each iteration convolves the exact exponential-polynomial
// kernel W^(p) against a locally cubic model of the iterate, so the grid
// error is O(h^4) while increments are tracked exactly as series terms.
// Throws NonConvergence if the increment tolerance is not met within
// max_terms terms.
ScaleCurve build_scale_w(const LevyModel& m, double q, const GridSpec& spec,
                         const BuildOptions& opt = {});

// Companion curve: fixed point of
//   calZ = Z^(p,theta) + q W^(p) * (e^{alpha .} 1_{[0,inf)} calZ).
ScaleCurve build_scale_z(const LevyModel& m, double q, double theta,
                         const GridSpec& spec, const BuildOptions& opt = {});

// Second-order finite differences of grid values in x: one-sided at the two
// ends, central inside.
std::vector<double> log_grid_derivative(const std::vector<double>& v, double h);

// Scale function for first passage upwards, alpha >= 0:
//   alpha > 0:  I(y) = y^{phi(p)} sum_k c_k y^{alpha k},
//               c_k = q^k / prod_{l=1..k} (psi(phi(p) + l alpha) - p);
//   alpha = 0:  I(y) = y^{phi(q+p)}.
// Truncated so the next term is below 1e-14 of the partial sum at y_max.
struct UpwardSeries {
    double alpha = 0.0;
    double q = 0.0;
    double exponent = 0.0;          // phi(p) for alpha > 0, phi(q+p) for alpha = 0
    std::vector<double> coeffs;     // empty when alpha = 0
    double y_max = 0.0;
};

UpwardSeries build_upward_series(const LevyModel& m, double q, double y_max);
double upward_value(const UpwardSeries& s, double y);

// Residuals of the defining convolution equation and of the equivalent
// rewritings in terms of W^(0) and W^(p+q) (same for Z), measured with the
// trapezoidal grid convolution. sup_rel is sup_abs over the sup of the curve.
struct FormResidual {
    std::string name;
    double sup_abs = 0.0;
    double sup_rel = 0.0;
};

std::vector<FormResidual> verify_equivalent_forms(const LevyModel& m, double q,
                                                  double theta,
                                                  const ScaleCurve& w,
                                                  const ScaleCurve& z);

// For alpha <= 0 the transform of calW (as a function of x = log y) is the
// convergent series sum_k q^k prod_{l=0..k} (psi(lam + l|alpha|) - p)^{-1}
// on (phi(p+q), inf). Returns the grid quadrature of the transform, the
// series value, and an upper bound on the neglected tail of the numeric
// integral.
struct LaplaceCheck {
    double numeric = 0.0;
    double analytic = 0.0;
    double tail_bound = 0.0;
};

LaplaceCheck laplace_check_neg_alpha(const LevyModel& m, double q, double lam);

// For alpha < 0, q > 0: the limit of calW(y) y^{-phi(p+q)} as y -> inf,
// evaluated as a ratio of two certified series.
double asymptote_infinity(const LevyModel& m, double q);

}  // namespace pssmp
