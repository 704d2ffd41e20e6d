#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "pssmp/chebyshev.hpp"
#include "pssmp/drawdown.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/selfsim_scale.hpp"

namespace pssmp {

// Two-sided exit query: start y, barriers 0 < c <= y <= d, discount q,
// Mellin exponent theta on the down-exit position.
struct ExitQuery {
    double y = 1.0;
    double c = 1.0;
    double d = 1.0;
    double q = 0.0;
    double theta = 0.0;
};

struct ErrorBudget {
    double quadrature = 0.0;     // adaptive-quadrature error estimate
    double truncation = 0.0;     // series truncation + improper-tail bound
    double interpolation = 0.0;  // Chebyshev proxy residual at probe points
};

struct EngineResult {
    double value = 0.0;
    ErrorBudget budget;
};

// Closed-form evaluation of the exit, drawdown and trailing-stop quantities
// of the self-similar process. Scale curves are built per effective rate and
// cached (rate rounded to 1e-12); the drawdown integrals interpolate the
// curve-dependent integrand factors by Chebyshev series in log z (degree 32,
// doubled on probe failure) and integrate with adaptive Gauss-Kronrod.
//
// Cache contract: lookups never observe a partially built curve. Builds run
// outside the lock; registration is single-writer.
class ExitEngine {
  public:
    explicit ExitEngine(LevyModel model, std::size_t grid_n = 1024);

    const LevyModel& model() const { return model_; }

    // P-weighted up-exit transform: calW ratio at effective rate q c^alpha.
    // Value in [0, 1]; exact 1 when y = d.
    double two_sided_up(const ExitQuery& query);

    // Down-exit transform: calZ(y/c) - [calW(y/c)/calW(d/c)] calZ(d/c).
    double two_sided_down(const ExitQuery& query);

    // First passage above d without a lower barrier; requires alpha >= 0.
    double first_passage_up(double y, double d, double q);

    // Probability-weighted survival of the up-passage against the drawdown
    // clock: exp(-int_y^d r(z) (calW'/calW)(r(z)) dz/z) at the z-dependent
    // effective rate q (z/r(z))^alpha.
    EngineResult drawdown_survival(double y, double d, double q,
                                   const DrawdownSpec& r);

    // Joint transform of the drawdown passage before hitting d (d may be
    // +infinity): outer integral of the exponential weight at rate family
    // (q+gamma) against the bracket (calW'/calW) calZ - calZ' at rate family
    // q and Mellin exponent theta.
    EngineResult drawdown_transform(double y, double d, double q, double gamma,
                                    double theta, const DrawdownSpec& r);

    // Same integral with a test function f of the running maximum inserted;
    // d is +infinity. f_breaks lists discontinuities/kinks of f;
    // f_log_growth is an upper bound on d(log f)/d(log z) far out, needed to
    // certify the improper tail when f is unbounded.
    EngineResult drawdown_density(double y, double q, double gamma,
                                  double theta, const DrawdownSpec& r,
                                  const std::function<double(double)>& f,
                                  const std::vector<double>& f_breaks = {},
                                  double f_log_growth = 0.0);

    // Expected discounted position at the first drawdown past a constant
    // threshold r_const, on the event it happens before killing. Refuses
    // models whose paths can explode (alpha < 0 with killing or psi'(0+) > 0).
    EngineResult stoploss_value(double y, double r_const, double q);

    // Cached scale curves at a given effective rate on [0, x_max]; shared
    // with the verification suites so both sides evaluate the same objects.
    std::shared_ptr<const ScaleCurve> w_curve(double rate, double x_max);
    std::shared_ptr<const ScaleCurve> z_curve(double rate, double theta,
                                              double x_max);

  private:
    struct Key {
        std::int64_t rate_q;
        std::int64_t xmax_bits;
        std::int64_t theta_bits;
        auto operator<=>(const Key&) const = default;
    };

    struct Segment {
        double a, b;
    };

    // Chebyshev proxy of an expensive integrand factor on [a, b].
    struct Proxy {
        ChebSeries fit;
        double probe_error = 0.0;
    };

    Proxy fit_proxy(double a, double b,
                    const std::function<double(double)>& f);

    // r(z) calW'(r(z))/calW(r(z)) at rate fam * (z/r(z))^alpha, z = e^t.
    std::function<double(double)> log_deriv_factor(double fam,
                                                   const DrawdownSpec& r,
                                                   double x_max);
    // r(z) [ (calW'/calW) calZ - calZ' ](r(z)) at rate q (z/r(z))^alpha.
    std::function<double(double)> bracket_factor(double q, double theta,
                                                 const DrawdownSpec& r,
                                                 double x_max);

    std::vector<Segment> segments_for(double t0, double t1,
                                      const DrawdownSpec& r,
                                      const std::vector<double>& extra_breaks);

    EngineResult drawdown_integral(double y, double d, double q, double gamma,
                                   double theta, const DrawdownSpec& r,
                                   const std::function<double(double)>& extra,
                                   const std::vector<double>& extra_breaks,
                                   double extra_growth);

    double grid_xmax_for(const DrawdownSpec& r, double y, double d) const;

    LevyModel model_;
    std::size_t grid_n_;
    mutable std::shared_mutex mu_;
    std::map<Key, std::shared_ptr<const ScaleCurve>> w_cache_;
    std::map<Key, std::shared_ptr<const ScaleCurve>> z_cache_;
};

}  // namespace pssmp
