#include "pssmp/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pssmp/errors.hpp"

namespace pssmp {

LevyModel::LevyModel(double sigma2, double mu_tilde,
                     std::vector<JumpComponent> jumps, double p, double alpha)
    : sigma2_(sigma2),
      mu_tilde_(mu_tilde),
      jumps_(std::move(jumps)),
      p_(p),
      alpha_(alpha) {
    if (!(sigma2_ >= 0.0)) throw ModelError("sigma2 must be >= 0");
    if (!(p_ >= 0.0)) throw ModelError("killing rate p must be >= 0");
    if (!std::isfinite(mu_tilde_) || !std::isfinite(alpha_))
        throw ModelError("mu_tilde and alpha must be finite");
    for (const auto& j : jumps_) {
        if (!(j.a > 0.0) || !(j.b > 0.0))
            throw ModelError("jump components need a > 0 and b > 0");
    }
    for (std::size_t i = 0; i < jumps_.size(); ++i) {
        for (std::size_t k = i + 1; k < jumps_.size(); ++k) {
            double gap = std::abs(jumps_[i].b - jumps_[k].b);
            if (gap <= 1e-12 * std::max(jumps_[i].b, jumps_[k].b))
                throw ModelError("jump decay rates b_i must be pairwise distinct");
        }
    }
    if (sigma2_ == 0.0) {
        // Non-monotone paths require jumps and, for finite variation,
        // strictly positive natural drift.
        if (jumps_.empty())
            throw ModelError("sigma2 = 0 requires a nonempty jump part");
        if (!(mu_tilde_ > 0.0))
            throw ModelError("finite-variation drift delta = mu_tilde must be > 0");
    }
}

std::optional<double> LevyModel::drift_delta() const {
    if (sigma2_ > 0.0) return std::nullopt;
    return mu_tilde_;
}

double LevyModel::psi(double lam) const {
    double v = 0.5 * sigma2_ * lam * lam + mu_tilde_ * lam;
    for (const auto& j : jumps_) v += j.a * (j.b / (j.b + lam) - 1.0);
    return v;
}

double LevyModel::psi_prime(double lam) const {
    double v = sigma2_ * lam + mu_tilde_;
    for (const auto& j : jumps_) {
        double d = j.b + lam;
        v -= j.a * j.b / (d * d);
    }
    return v;
}

double LevyModel::psi_second(double lam) const {
    double v = sigma2_;
    for (const auto& j : jumps_) {
        double d = j.b + lam;
        v += 2.0 * j.a * j.b / (d * d * d);
    }
    return v;
}

double LevyModel::psi_third(double lam) const {
    double v = 0.0;
    for (const auto& j : jumps_) {
        double d = j.b + lam;
        v -= 6.0 * j.a * j.b / (d * d * d * d);
    }
    return v;
}

double LevyModel::phi(double q) const {
    if (!(q >= 0.0)) throw ModelError("phi requires q >= 0");

    // psi is strictly convex with psi(0) = 0 and psi(inf) = inf. Locate the
    // start of the increasing branch, then solve psi = q there.
    double lam_min = 0.0;
    if (psi_prime(0.0) < 0.0) {
        double lo = 0.0, hi = 1.0;
        while (psi_prime(hi) < 0.0) hi *= 2.0;
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + hi); ++it) {
            double mid = 0.5 * (lo + hi);
            (psi_prime(mid) < 0.0 ? lo : hi) = mid;
        }
        lam_min = 0.5 * (lo + hi);
    }
    if (q == 0.0 && lam_min == 0.0) return 0.0;  // largest zero is the origin

    double lo = lam_min;
    double hi = lam_min + 1.0;
    while (psi(hi) < q) hi = lam_min + 2.0 * (hi - lam_min);
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        (psi(mid) < q ? lo : hi) = mid;
    }
    double lam = 0.5 * (lo + hi);
    // Newton polish on the increasing convex branch.
    for (int it = 0; it < 4; ++it) {
        double dp = psi_prime(lam);
        if (dp <= 0.0) break;
        double step = (psi(lam) - q) / dp;
        double next = lam - step;
        if (next < lam_min) next = 0.5 * (lam + lam_min);
        lam = next;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(lam))) break;
    }
    return lam;
}

LevyModel LevyModel::esscher(double theta) const {
    if (!(theta >= 0.0)) throw ModelError("esscher requires theta >= 0");
    if (theta == 0.0) return *this;
    std::vector<JumpComponent> tilted;
    tilted.reserve(jumps_.size());
    for (const auto& j : jumps_)
        tilted.push_back({j.a * j.b / (j.b + theta), j.b + theta});
    return LevyModel(sigma2_, mu_tilde_ + sigma2_ * theta, std::move(tilted),
                     p_, alpha_);
}

LevyModel LevyModel::with_killing(double p) const {
    return LevyModel(sigma2_, mu_tilde_, jumps_, p, alpha_);
}

LevyModel LevyModel::with_alpha(double alpha) const {
    return LevyModel(sigma2_, mu_tilde_, jumps_, p_, alpha);
}

}  // namespace pssmp
