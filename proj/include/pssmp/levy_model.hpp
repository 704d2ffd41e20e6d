#pragma once

#include <optional>
#include <vector>

namespace pssmp {

// One exponential component of the downward jump mixture: jumps of size -u,
// u > 0, arrive at rate `a` with size density b e^{-b u} du.
struct JumpComponent {
    double a;  // arrival rate, > 0
    double b;  // exponential decay of the jump size, > 0

    bool operator==(const JumpComponent&) const = default;
};

// Spectrally negative Levy process with Gaussian part sigma2, drift mu_tilde,
// hyperexponential compound-Poisson downward jumps, independent killing at
// rate p, and the self-similarity index alpha of the associated positive
// self-similar process obtained by exponentiation and time change.
//
// Laplace exponent, in the fully compensated parametrization (legitimate
// because every jump component has finite mean):
//
//   psi(lam) = sigma2/2 lam^2 + mu_tilde lam + sum_i a_i (b_i/(b_i+lam) - 1).
//
// Relative to the truncated-compensation form
//   psi(lam) = sigma2/2 lam^2 + mu lam
//              + int (e^{lam y} - 1_{[-1,0)}(y) lam y - 1) nu(dy)
// the two drifts are related by mu_tilde = mu + int_{[-1,0)} |y| nu(dy).
// In particular, for paths of finite variation (sigma2 = 0) mu_tilde equals
// the natural drift delta.
//
// Immutable value type; all member functions are pure and thread-safe.
class LevyModel {
  public:
    // Throws ModelError unless: sigma2 >= 0, p >= 0, all a_i > 0, b_i > 0,
    // b_i pairwise distinct, and (when sigma2 = 0) jumps nonempty with
    // mu_tilde > 0 so that paths are non-monotone with positive drift.
    LevyModel(double sigma2, double mu_tilde, std::vector<JumpComponent> jumps,
              double p, double alpha);

    double sigma2() const { return sigma2_; }
    double mu_tilde() const { return mu_tilde_; }
    const std::vector<JumpComponent>& jumps() const { return jumps_; }
    double killing_rate() const { return p_; }
    double alpha() const { return alpha_; }

    bool finite_variation() const { return sigma2_ == 0.0; }

    // Natural drift of the finite-variation case; nullopt encodes delta =
    // +infinity (paths of infinite variation).
    std::optional<double> drift_delta() const;

    // Laplace exponent and its derivatives, lam > -min_i b_i.
    double psi(double lam) const;
    double psi_prime(double lam) const;
    double psi_second(double lam) const;
    double psi_third(double lam) const;

    // Right inverse of psi on [phi(0), inf): the unique lam >= phi(0) with
    // psi(lam) = q, where phi(0) is the largest zero of psi. Requires q >= 0.
    // Bisection bracket + Newton polish, relative tolerance 1e-12.
    double phi(double q) const;

    // Exponential tilt: the model whose Laplace exponent is
    // psi_theta(lam) = psi(lam + theta) - psi(theta). In this
    // parametrization the map is exact:
    //   sigma2 -> sigma2, mu_tilde -> mu_tilde + sigma2 theta,
    //   (a_i, b_i) -> (a_i b_i/(b_i+theta), b_i+theta),
    // with killing rate and alpha unchanged. Requires theta >= 0.
    LevyModel esscher(double theta) const;

    // Copy with a different killing rate.
    LevyModel with_killing(double p) const;

    // Copy with a different self-similarity index.
    LevyModel with_alpha(double alpha) const;

    bool operator==(const LevyModel&) const = default;

  private:
    double sigma2_;
    double mu_tilde_;
    std::vector<JumpComponent> jumps_;
    double p_;
    double alpha_;
};

}  // namespace pssmp
