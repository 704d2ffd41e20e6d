#include "pssmp/levy_scale.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pssmp/errors.hpp"

namespace pssmp {

double ScaleFunction::operator()(double x) const {
    if (x < 0.0) return kind == Kind::W ? 0.0 : std::exp(theta * x);
    double v = 0.0;
    for (const auto& t : terms) {
        double term = t.coeff * std::exp(t.rate * x);
        for (int i = 0; i < t.power; ++i) term *= x;
        v += term;
    }
    return v;
}

double ScaleFunction::derivative(double x) const {
    if (x < 0.0) return kind == Kind::W ? 0.0 : theta * std::exp(theta * x);
    double v = 0.0;
    for (const auto& t : terms) {
        double e = std::exp(t.rate * x);
        double xp = 1.0;  // x^{m-1}
        for (int i = 0; i + 1 < t.power; ++i) xp *= x;
        double xm = t.power > 0 ? xp * x : 1.0;
        v += t.coeff * e * t.rate * xm;
        if (t.power > 0) v += t.coeff * e * t.power * xp;
    }
    return v;
}

double ScaleFunction::laplace(double lam) const {
    double v = 0.0;
    for (const auto& t : terms) {
        double s = lam - t.rate;
        double fact = 1.0;
        for (int i = 2; i <= t.power; ++i) fact *= i;
        v += t.coeff * fact / std::pow(s, t.power + 1);
    }
    return v;
}

double ScaleFunction::laplace_tail(double lam, double x0) const {
    // int_{x0}^inf x^m e^{-s x} dx = e^{-s x0} sum_{i=0}^m m!/(m-i)! x0^{m-i} / s^{i+1}
    double v = 0.0;
    for (const auto& t : terms) {
        double s = lam - t.rate;
        double e = std::exp(-s * x0);
        double falling = 1.0;
        double sum = 0.0;
        for (int i = 0; i <= t.power; ++i) {
            double xp = 1.0;
            for (int k = 0; k < t.power - i; ++k) xp *= x0;
            sum += falling * xp / std::pow(s, i + 1);
            falling *= (t.power - i);
        }
        v += t.coeff * e * sum;
    }
    return v;
}

double ScaleFunction::max_rate() const {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) r = std::max(r, t.rate);
    if (kind == Kind::Z) r = std::max(r, theta);
    return r;
}

namespace {

// Dense polynomials, coefficients ascending.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

void poly_add_scaled(Poly& a, const Poly& b, double s) {
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += s * b[i];
}

void poly_trim(Poly& a) {
    while (a.size() > 1 && a.back() == 0.0) a.pop_back();
}

// Numerator polynomial of psi(lam) - q over the common denominator
// prod_i (b_i + lam).
Poly numerator_poly(const LevyModel& m, double q) {
    Poly P{1.0};
    for (const auto& j : m.jumps()) P = poly_mul(P, Poly{j.b, 1.0});

    Poly quad{-q, m.mu_tilde()};
    if (m.sigma2() > 0.0) quad.push_back(0.5 * m.sigma2());

    Poly N = poly_mul(quad, P);
    for (std::size_t i = 0; i < m.jumps().size(); ++i) {
        Poly Pi{1.0};
        for (std::size_t k = 0; k < m.jumps().size(); ++k)
            if (k != i) Pi = poly_mul(Pi, Poly{m.jumps()[k].b, 1.0});
        poly_add_scaled(N, Pi, m.jumps()[i].a * m.jumps()[i].b);
        poly_add_scaled(N, P, -m.jumps()[i].a);
    }
    poly_trim(N);
    return N;
}

std::vector<double> companion_roots(const Poly& n_poly) {
    const std::size_t d = n_poly.size() - 1;
    double lead = n_poly.back();
    for (double c : n_poly)
        if (!std::isfinite(c))
            throw ModelError("non-finite polynomial coefficient in psi - q");
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i + 1 < d; ++i) comp(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < d; ++i) comp(i, d - 1) = -n_poly[i] / lead;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw RepeatedRootError("eigenvalue computation for psi - q failed");
    std::vector<double> roots(d);
    for (std::size_t i = 0; i < d; ++i) roots[i] = es.eigenvalues()[i].real();
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace

ScaleFunction w_scale(const LevyModel& m, double q) {
    if (!(q >= 0.0)) throw ModelError("w_scale requires q >= 0");

    Poly N = numerator_poly(m, q);
    std::vector<double> roots = companion_roots(N);

    ScaleFunction f;
    f.kind = ScaleFunction::Kind::W;
    f.q = q;

    std::size_t i = 0;
    while (i < roots.size()) {
        // Cluster roots closer than 5e-8 on a local scale; Rolle plus strict
        // convexity of psi on (phi(0)-side) caps genuine multiplicity at two.
        std::size_t j = i + 1;
        double scale_r = std::max(1.0, std::abs(roots[i]));
        while (j < roots.size() && roots[j] - roots[j - 1] <= 5e-8 * scale_r)
            ++j;
        std::size_t count = j - i;
        if (count == 1) {
            double r = roots[i];
            // Newton polish on psi - q.
            for (int it = 0; it < 6; ++it) {
                double dp = m.psi_prime(r);
                if (dp == 0.0) break;
                double step = (m.psi(r) - q) / dp;
                r -= step;
                if (std::abs(step) <= 1e-15 * scale_r) break;
            }
            double dp = m.psi_prime(r);
            if (dp == 0.0)
                throw RepeatedRootError(
                    "unexpected critical point at an isolated root of psi - q");
            f.terms.push_back({1.0 / dp, r, 0});
        } else if (count == 2) {
            // Candidate double root: polish the critical point of psi and
            // verify tangency. For this class that can only happen at the
            // origin with q = 0 (critical drift).
            double r = 0.5 * (roots[i] + roots[j - 1]);
            for (int it = 0; it < 60; ++it) {
                double step = m.psi_prime(r) / m.psi_second(r);
                r -= step;
                if (std::abs(step) <= 1e-15 * scale_r) break;
            }
            if (std::abs(m.psi(r) - q) > 1e-8 * std::max(1.0, std::abs(q)))
                throw RepeatedRootError(
                    "two nearly coincident roots of psi - q that do not form a "
                    "double root; perturb q by ~1e-6 relative");
            double pp = m.psi_second(r);
            double ppp = m.psi_third(r);
            f.terms.push_back({2.0 / pp, r, 1});
            double c0 = -2.0 * ppp / (3.0 * pp * pp);
            if (c0 != 0.0) f.terms.push_back({c0, r, 0});
        } else {
            throw RepeatedRootError(
                "root cluster of multiplicity >= 3 in psi - q; perturb q by "
                "~1e-6 relative");
        }
        i = j;
    }
    return f;
}

ScaleFunction z_scale(const LevyModel& m, double q, double theta) {
    if (!(q >= 0.0) || !(theta >= 0.0))
        throw ModelError("z_scale requires q >= 0 and theta >= 0");
    ScaleFunction w = w_scale(m, q);

    ScaleFunction f;
    f.kind = ScaleFunction::Kind::Z;
    f.q = q;
    f.theta = theta;
    f.terms.push_back({1.0, theta, 0});

    const double kappa = q - m.psi(theta);
    if (kappa != 0.0) {
        // kappa * int_0^x e^{theta(x-u)} c u^m e^{r u} du, term by term.
        for (const auto& t : w.terms) {
            double s = t.rate - theta;
            double tol = 1e-6 * std::max({1.0, std::abs(t.rate), theta});
            if (std::abs(s) > tol) {
                if (t.power == 0) {
                    f.terms.push_back({kappa * t.coeff / s, t.rate, 0});
                    f.terms.push_back({-kappa * t.coeff / s, theta, 0});
                } else {  // power == 1
                    f.terms.push_back({kappa * t.coeff / s, t.rate, 1});
                    f.terms.push_back({-kappa * t.coeff / (s * s), t.rate, 0});
                    f.terms.push_back({kappa * t.coeff / (s * s), theta, 0});
                }
            } else {
                // Confluent rate: int_0^x u^m e^{s u} du expanded in s.
                double sk = 1.0;
                for (int k = 0; k <= 3; ++k) {
                    f.terms.push_back(
                        {kappa * t.coeff * sk / (t.power + k + 1), theta,
                         t.power + k + 1});
                    sk *= s;
                }
            }
        }
    }

    // Merge duplicates (the e^{theta x} slot collects one term per W-term).
    std::vector<ScaleTerm> merged;
    for (const auto& t : f.terms) {
        bool found = false;
        for (auto& u : merged) {
            if (u.power == t.power && u.rate == t.rate) {
                u.coeff += t.coeff;
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(t);
    }
    f.terms = std::move(merged);
    return f;
}

LogGrid LogGrid::make(double x_max, std::size_t n) {
    if (!(x_max > 0.0) || n == 0)
        throw GridMismatchError("LogGrid requires x_max > 0 and n >= 1");
    LogGrid g;
    g.x_max = x_max;
    g.h = x_max / static_cast<double>(n);
    g.values.assign(n + 1, 0.0);
    return g;
}

LogGrid sample(const ScaleFunction& f, const LogGrid& geometry) {
    LogGrid out = geometry;
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = f(out.x(k));
    return out;
}

LogGrid convolve(const LogGrid& f, const LogGrid& g) {
    if (!f.same_geometry(g))
        throw GridMismatchError("convolve requires identical grid geometry");
    LogGrid out = f;
    const std::size_t n = f.n();
    const double* fv = f.values.data();
    const double* gv = g.values.data();
    out.values[0] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double acc = 0.5 * (fv[0] * gv[k] + fv[k] * gv[0]);
        for (std::size_t j = 1; j < k; ++j) acc += fv[j] * gv[k - j];
        out.values[k] = f.h * acc;
    }
    return out;
}

}  // namespace pssmp
