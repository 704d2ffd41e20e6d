#include "pssmp/chebyshev.hpp"

#include <cmath>
#include <numbers>

namespace pssmp {

std::vector<double> ChebSeries::nodes(double a, double b, std::size_t n) {
    std::vector<double> xs(n + 1);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t j = 0; j <= n; ++j)
        xs[j] = mid + half * std::cos(std::numbers::pi * j / n);
    return xs;
}

ChebSeries ChebSeries::fit(double a, double b, std::size_t n,
                           const std::function<double(double)>& f) {
    ChebSeries s;
    s.a_ = a;
    s.b_ = b;
    auto xs = nodes(a, b, n);
    std::vector<double> fv(n + 1);
    for (std::size_t j = 0; j <= n; ++j) fv[j] = f(xs[j]);

    // DCT-I: c_k = (2/n) sum'' f_j cos(pi j k / n), halving the j = 0 and
    // j = n contributions and the k = 0 and k = n coefficients.
    s.coef_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
        double acc = 0.5 * (fv[0] + (k % 2 == 0 ? fv[n] : -fv[n]));
        for (std::size_t j = 1; j < n; ++j)
            acc += fv[j] * std::cos(std::numbers::pi * j * k / n);
        s.coef_[k] = 2.0 * acc / static_cast<double>(n);
    }
    s.coef_[0] *= 0.5;
    s.coef_[n] *= 0.5;
    return s;
}

double ChebSeries::operator()(double x) const {
    double t = (2.0 * x - (a_ + b_)) / (b_ - a_);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = coef_.size(); k-- > 1;) {
        double b0 = 2.0 * t * b1 - b2 + coef_[k];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + coef_[0];
}

ChebSeries ChebSeries::antiderivative() const {
    ChebSeries F;
    F.a_ = a_;
    F.b_ = b_;
    const std::size_t n = coef_.size();
    F.coef_.assign(n + 1, 0.0);
    double half = 0.5 * (b_ - a_);
    auto c = [&](std::size_t k) { return k < n ? coef_[k] : 0.0; };
    for (std::size_t k = 1; k <= n; ++k)
        F.coef_[k] = half * (c(k - 1) - c(k + 1)) / (2.0 * k);
    if (n > 1) F.coef_[1] = half * (2.0 * c(0) - c(2)) / 2.0;
    // Fix F(a) = 0: T_k(-1) = (-1)^k.
    double at_a = 0.0;
    double sgn = -1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        at_a += sgn * F.coef_[k];
        sgn = -sgn;
    }
    F.coef_[0] = -at_a;
    return F;
}

double ChebSeries::integral() const {
    // int_a^b = F(b) - F(a) with F(a) = 0.
    ChebSeries F = antiderivative();
    double at_b = 0.0;
    for (double ck : F.coef_) at_b += ck;
    return at_b;
}

double ChebSeries::tail_estimate() const {
    if (coef_.size() < 2) return 0.0;
    return std::abs(coef_[coef_.size() - 1]) + std::abs(coef_[coef_.size() - 2]);
}

}  // namespace pssmp
