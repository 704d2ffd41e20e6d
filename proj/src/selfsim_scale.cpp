#include "pssmp/selfsim_scale.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pssmp/errors.hpp"

namespace pssmp {

namespace {

// phi_i(w) = int_0^1 s^i e^{w(1-s)} ds, i = 0..4. Series for small |w|,
// upward recurrence otherwise.
std::array<double, 6> panel_phis(double w) {
    std::array<double, 6> phi{};
    if (std::abs(w) < 0.8) {
        for (int i = 0; i <= 5; ++i) {
            // i! sum_k w^k / (i+k+1)!, starting from i!/(i+1)! = 1/(i+1)
            double term = 1.0 / (i + 1.0);
            double sum = term;
            for (int k = 1; k < 30; ++k) {
                term *= w / (i + k + 1.0);
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum)) break;
            }
            phi[i] = sum;
        }
    } else {
        phi[0] = std::expm1(w) / w;
        for (int i = 1; i <= 5; ++i) phi[i] = (i * phi[i - 1] - 1.0) / w;
    }
    return phi;
}

// Exponential-polynomial Volterra kernel prepared for one grid step h:
// K(u) = sum over rate blocks of (c0 + c1 u) e^{rho u}.
struct KernelBlock {
    double rate = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    bool has_linear = false;
    double E = 1.0;                 // e^{rho h}
    std::array<double, 4> a0{};     // P0 weights: h phi_i
    std::array<double, 4> a1{};     // P1 weights: h^2 (phi_i - phi_{i+1})
};

std::vector<KernelBlock> prepare_kernel(const ScaleFunction& K, double h) {
    std::vector<KernelBlock> blocks;
    for (const auto& t : K.terms) {
        KernelBlock* blk = nullptr;
        for (auto& b : blocks)
            if (b.rate == t.rate) blk = &b;
        if (!blk) {
            blocks.push_back({});
            blk = &blocks.back();
            blk->rate = t.rate;
        }
        if (t.power == 0) blk->c0 += t.coeff;
        else if (t.power == 1) {
            blk->c1 += t.coeff;
            blk->has_linear = true;
        } else {
            throw NonConvergence("kernel terms must have power <= 1");
        }
    }
    for (auto& b : blocks) {
        double w = b.rate * h;
        b.E = std::exp(w);
        auto phi = panel_phis(w);
        for (int i = 0; i < 4; ++i) {
            b.a0[i] = h * phi[i];
            b.a1[i] = h * h * (phi[i] - phi[i + 1]);
        }
    }
    return blocks;
}

// Inverse Vandermonde for cubic interpolation through four nodes at integer
// offsets o (in units of h) relative to the panel start.
std::array<std::array<double, 4>, 4> stencil_matrix(const std::array<int, 4>& o) {
    // Solve V gamma = g where V[j][i] = o_j^i; return V^{-1}.
    double a[4][8];
    for (int j = 0; j < 4; ++j) {
        double p = 1.0;
        for (int i = 0; i < 4; ++i) {
            a[j][i] = p;
            p *= o[j];
        }
        for (int i = 4; i < 8; ++i) a[j][i] = (i - 4 == j) ? 1.0 : 0.0;
    }
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int row = col + 1; row < 4; ++row)
            if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
        for (int i = 0; i < 8; ++i) std::swap(a[col][i], a[piv][i]);
        double d = a[col][col];
        for (int i = 0; i < 8; ++i) a[col][i] /= d;
        for (int row = 0; row < 4; ++row) {
            if (row == col) continue;
            double f = a[row][col];
            for (int i = 0; i < 8; ++i) a[row][i] -= f * a[col][i];
        }
    }
    std::array<std::array<double, 4>, 4> inv{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) inv[i][j] = a[i][j + 4];
    return inv;
}

// (K * g)(x_k) on the uniform grid for a function g given by node values,
// modeled as a locally cubic interpolant per panel. Exact in the exponential
// kernel, O(h^4) in g. out[0] = 0.
void volterra_convolve(const std::vector<KernelBlock>& blocks,
                       const std::vector<double>& g, double h,
                       std::vector<double>& out) {
    static const auto C_first = stencil_matrix({0, 1, 2, 3});
    static const auto C_mid = stencil_matrix({-1, 0, 1, 2});
    static const auto C_last = stencil_matrix({-2, -1, 0, 1});

    const std::size_t n = g.size() - 1;  // panels
    out.assign(n + 1, 0.0);

    struct State {
        double A = 0.0;
        double B = 0.0;
    };
    std::vector<State> st(blocks.size());

    for (std::size_t k = 0; k < n; ++k) {
        const auto& C = (k == 0) ? C_first : (k + 1 == n ? C_last : C_mid);
        const std::size_t base = (k == 0) ? 0 : (k + 1 == n ? k - 2 : k - 1);
        double g0 = g[base], g1 = g[base + 1], g2 = g[base + 2], g3 = g[base + 3];
        double gamma[4];
        for (int i = 0; i < 4; ++i)
            gamma[i] = C[i][0] * g0 + C[i][1] * g1 + C[i][2] * g2 + C[i][3] * g3;

        double acc = 0.0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto& blk = blocks[b];
            double P0 = gamma[0] * blk.a0[0] + gamma[1] * blk.a0[1] +
                        gamma[2] * blk.a0[2] + gamma[3] * blk.a0[3];
            double Aold = st[b].A;
            st[b].A = blk.E * Aold + P0;
            acc += blk.c0 * st[b].A;
            if (blk.has_linear) {
                double P1 = gamma[0] * blk.a1[0] + gamma[1] * blk.a1[1] +
                            gamma[2] * blk.a1[2] + gamma[3] * blk.a1[3];
                st[b].B = blk.E * (st[b].B + h * Aold) + P1;
                acc += blk.c1 * st[b].B;
            }
        }
        out[k + 1] = acc;
    }
}

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

// Analytic factorial envelope of the dropped series tail:
//   sum_{k > n} base_max (q x_max K_max e^{(alpha v 0) x_max})^k / k!,
// evaluated in log space; +inf if it overflows before decaying.
double envelope_tail(double base_max, double q, double alpha, double x_max,
                     double kernel_max, std::size_t n) {
    if (q == 0.0 || base_max == 0.0) return 0.0;
    double lr = std::log(q) + std::log(x_max) + std::max(alpha, 0.0) * x_max +
                std::log(kernel_max);
    double lbase = std::log(base_max);
    double tail = 0.0;
    for (std::size_t k = n + 1; k < n + 400000; ++k) {
        double lb = lbase + static_cast<double>(k) * lr - std::lgamma(k + 1.0);
        if (lb > 700.0) return std::numeric_limits<double>::infinity();
        double bk = std::exp(lb);
        tail += bk;
        double ratio = std::exp(lr) / static_cast<double>(k + 1);
        if (ratio < 0.5) {
            tail += bk * ratio / (1.0 - ratio) * 2.0;  // geometric remainder
            return tail;
        }
    }
    return std::numeric_limits<double>::infinity();
}

ScaleCurve build_curve(const LevyModel& m, double q, double theta,
                       ScaleCurve::Kind kind, const GridSpec& spec,
                       const BuildOptions& opt) {
    if (!(q >= 0.0)) throw ModelError("scale builds require q >= 0");
    if (spec.n < 8) throw GridMismatchError("grid needs at least 8 panels");
    const double p = m.killing_rate();
    const double alpha = m.alpha();
    const std::size_t n = spec.n;
    const double h = spec.x_max / static_cast<double>(n);

    ScaleFunction Wp = w_scale(m, p);
    auto blocks = prepare_kernel(Wp, h);

    ScaleCurve out;
    out.kind = kind;
    out.q = q;
    out.theta = theta;
    out.spec = spec;

    // Delta_0 = base; S accumulates the series.
    std::vector<double> S(n + 1), delta(n + 1);
    if (kind == ScaleCurve::Kind::W) {
        for (std::size_t k = 0; k <= n; ++k) S[k] = Wp(out.x(k));
    } else {
        ScaleFunction Zp = z_scale(m, p, theta);
        for (std::size_t k = 0; k <= n; ++k) S[k] = Zp(out.x(k));
    }
    delta = S;
    const double base_max = sup_abs(S);

    std::vector<double> ealpha(n + 1), g(n + 1), conv;
    for (std::size_t k = 0; k <= n; ++k) ealpha[k] = std::exp(alpha * out.x(k));

    double sup_delta = sup_abs(delta);
    double prev_sup = sup_delta;
    double ratio_bound = 0.0;
    std::size_t n_terms = 0;
    bool converged = (q == 0.0);
    std::array<double, 3> last_ratios{0.0, 0.0, 0.0};

    if (!converged) {
        for (std::size_t it = 1; it <= opt.max_terms; ++it) {
            for (std::size_t k = 0; k <= n; ++k) g[k] = ealpha[k] * delta[k];
            volterra_convolve(blocks, g, h, conv);
            for (std::size_t k = 0; k <= n; ++k) {
                delta[k] = q * conv[k];
                S[k] += delta[k];
            }
            prev_sup = sup_delta;
            sup_delta = sup_abs(delta);
            last_ratios = {last_ratios[1], last_ratios[2],
                           prev_sup > 0.0 ? sup_delta / prev_sup : 0.0};
            n_terms = it;
            double sup_S = sup_abs(S);
            if (sup_delta <= opt.tol * sup_S || sup_delta == 0.0) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NonConvergence(
                "scale-curve series did not meet the increment tolerance "
                "within the term budget; raise x_max resolution or the budget");
    }

    // Tail certificate: observed-ratio geometric bound vs analytic envelope.
    double rho = std::max({last_ratios[0], last_ratios[1], last_ratios[2]});
    if (rho < 1.0 && n_terms > 0)
        ratio_bound = sup_delta * rho / (1.0 - rho);
    else if (n_terms > 0)
        ratio_bound = std::numeric_limits<double>::infinity();
    double kernel_sup = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
        kernel_sup = std::max(kernel_sup, Wp(out.x(k)));
    double env = envelope_tail(base_max, q, alpha, spec.x_max, kernel_sup,
                               n_terms);
    out.report.n_terms = n_terms;
    out.report.trunc_bound = std::min(ratio_bound, env);
    out.report.final_increment = sup_delta;
    out.report.sup_value = sup_abs(S);

    out.val = std::move(S);
    auto dx = log_grid_derivative(out.val, h);
    out.dval.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        out.dval[k] = dx[k] * std::exp(-out.x(k));
    return out;
}

}  // namespace

std::vector<double> log_grid_derivative(const std::vector<double>& v, double h) {
    const std::size_t n = v.size() - 1;
    std::vector<double> d(n + 1);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for (std::size_t k = 1; k < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
    d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    return d;
}

double ScaleCurve::value(double y) const {
    if (!(y > 0.0)) throw std::domain_error("scale curves live on y > 0");
    double x = std::log(y);
    if (x < 0.0)
        return kind == Kind::W ? 0.0 : std::pow(y, theta);
    const std::size_t n = spec.n;
    const double step = h();
    if (x > spec.x_max * (1.0 + 1e-12))
        throw std::domain_error("evaluation beyond the grid's x_max");
    x = std::min(x, spec.x_max);
    // 4-point Lagrange around x.
    std::size_t k0;
    double t = x / step;
    if (t <= 1.0) k0 = 0;
    else if (t >= static_cast<double>(n) - 2.0) k0 = n - 3;
    else k0 = static_cast<std::size_t>(t) - 1;
    double s = t - static_cast<double>(k0);  // in [0,3]
    double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return l0 * val[k0] + l1 * val[k0 + 1] + l2 * val[k0 + 2] + l3 * val[k0 + 3];
}

double ScaleCurve::deriv(double y) const {
    if (!(y > 0.0)) throw std::domain_error("scale curves live on y > 0");
    double x = std::log(y);
    if (x < 0.0)
        return kind == Kind::W ? 0.0 : theta * std::pow(y, theta - 1.0);
    const std::size_t n = spec.n;
    const double step = h();
    if (x > spec.x_max * (1.0 + 1e-12))
        throw std::domain_error("evaluation beyond the grid's x_max");
    x = std::min(x, spec.x_max);
    std::size_t k0;
    double t = x / step;
    if (t <= 1.0) k0 = 0;
    else if (t >= static_cast<double>(n) - 2.0) k0 = n - 3;
    else k0 = static_cast<std::size_t>(t) - 1;
    double s = t - static_cast<double>(k0);
    double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return l0 * dval[k0] + l1 * dval[k0 + 1] + l2 * dval[k0 + 2] +
           l3 * dval[k0 + 3];
}

LogGrid ScaleCurve::as_log_grid() const {
    LogGrid g = LogGrid::make(spec.x_max, spec.n);
    g.values = val;
    return g;
}

ScaleCurve build_scale_w(const LevyModel& m, double q, const GridSpec& spec,
                         const BuildOptions& opt) {
    return build_curve(m, q, 0.0, ScaleCurve::Kind::W, spec, opt);
}

ScaleCurve build_scale_z(const LevyModel& m, double q, double theta,
                         const GridSpec& spec, const BuildOptions& opt) {
    if (!(theta >= 0.0)) throw ModelError("build_scale_z requires theta >= 0");
    return build_curve(m, q, theta, ScaleCurve::Kind::Z, spec, opt);
}

UpwardSeries build_upward_series(const LevyModel& m, double q, double y_max) {
    if (m.alpha() < 0.0)
        throw UnsupportedIndexError(
            "first-passage-upward scale functions require alpha >= 0");
    if (!(q >= 0.0)) throw ModelError("upward series requires q >= 0");
    if (!(y_max > 0.0)) throw ModelError("upward series requires y_max > 0");
    UpwardSeries s;
    s.alpha = m.alpha();
    s.q = q;
    s.y_max = y_max;
    const double p = m.killing_rate();
    if (m.alpha() == 0.0) {
        s.exponent = m.phi(q + p);
        return s;
    }
    s.exponent = m.phi(p);
    s.coeffs.push_back(1.0);
    if (q == 0.0) return s;
    double ym = std::max(y_max, 1.0);
    double c = 1.0;
    double partial = 1.0;
    double ya = std::pow(ym, m.alpha());
    double yk = 1.0;
    for (std::size_t k = 1; k < 100000; ++k) {
        c *= q / (m.psi(s.exponent + k * m.alpha()) - p);
        s.coeffs.push_back(c);
        yk *= ya;
        double term = c * yk;
        partial += term;
        if (term < 1e-14 * partial) return s;
    }
    throw NonConvergence("upward-series truncation did not certify");
}

double upward_value(const UpwardSeries& s, double y) {
    if (!(y > 0.0)) throw std::domain_error("upward series lives on y > 0");
    double lead = std::pow(y, s.exponent);
    if (s.alpha == 0.0 || s.coeffs.empty()) return lead;
    double ya = std::pow(y, s.alpha);
    double yk = 1.0;
    double sum = 0.0;
    for (double c : s.coeffs) {
        sum += c * yk;
        yk *= ya;
    }
    return lead * sum;
}

std::vector<FormResidual> verify_equivalent_forms(const LevyModel& m, double q,
                                                  double theta,
                                                  const ScaleCurve& w,
                                                  const ScaleCurve& z) {
    const double p = m.killing_rate();
    const double alpha = m.alpha();
    const std::size_t n = w.spec.n;
    LogGrid geom = LogGrid::make(w.spec.x_max, n);

    LogGrid Wp = sample(w_scale(m, p), geom);
    LogGrid W0 = sample(w_scale(m, 0.0), geom);
    LogGrid Wpq = sample(w_scale(m, p + q), geom);
    LogGrid Zp = sample(z_scale(m, p, theta), geom);
    LogGrid Z0 = sample(z_scale(m, 0.0, theta), geom);
    LogGrid Zpq = sample(z_scale(m, p + q, theta), geom);

    auto weighted = [&](const std::vector<double>& v, auto&& wgt) {
        LogGrid g = geom;
        for (std::size_t k = 0; k <= n; ++k) g.values[k] = wgt(geom.x(k)) * v[k];
        return g;
    };

    auto residual = [&](const char* name, const std::vector<double>& target,
                        const LogGrid& base, const LogGrid& convolved,
                        double scale_factor) {
        double sup = 0.0, sup_t = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            double rhs = base.values[k] + scale_factor * convolved.values[k];
            sup = std::max(sup, std::abs(target[k] - rhs));
            sup_t = std::max(sup_t, std::abs(target[k]));
        }
        return FormResidual{name, sup, sup_t > 0.0 ? sup / sup_t : 0.0};
    };

    std::vector<FormResidual> res;
    res.push_back(residual(
        "w_defining", w.val, Wp,
        convolve(Wp, weighted(w.val, [&](double x) { return std::exp(alpha * x); })),
        q));
    res.push_back(residual(
        "w_via_w0", w.val, W0,
        convolve(W0, weighted(w.val, [&](double x) {
                     return q * std::exp(alpha * x) + p;
                 })),
        1.0));
    res.push_back(residual(
        "w_via_wpq", w.val, Wpq,
        convolve(Wpq, weighted(w.val, [&](double x) {
                     return std::exp(alpha * x) - 1.0;
                 })),
        q));
    res.push_back(residual(
        "z_defining", z.val, Zp,
        convolve(Wp, weighted(z.val, [&](double x) { return std::exp(alpha * x); })),
        q));
    res.push_back(residual(
        "z_via_w0", z.val, Z0,
        convolve(W0, weighted(z.val, [&](double x) {
                     return q * std::exp(alpha * x) + p;
                 })),
        1.0));
    res.push_back(residual(
        "z_via_wpq", z.val, Zpq,
        convolve(Wpq, weighted(z.val, [&](double x) {
                     return std::exp(alpha * x) - 1.0;
                 })),
        q));
    return res;
}

LaplaceCheck laplace_check_neg_alpha(const LevyModel& m, double q, double lam) {
    if (m.alpha() > 0.0)
        throw UnsupportedIndexError("transform series requires alpha <= 0");
    const double p = m.killing_rate();
    const double phi_pq = m.phi(p + q);
    if (!(lam > phi_pq))
        throw std::invalid_argument("need lam > phi(p+q) for the transform");

    // Analytic series.
    double analytic = 0.0;
    {
        double prod = 1.0;
        double qk = 1.0;
        for (std::size_t k = 0; k < 100000; ++k) {
            prod *= m.psi(lam + k * std::abs(m.alpha())) - p;
            double term = qk / prod;
            analytic += term;
            if (std::abs(term) < 1e-16 * std::abs(analytic)) break;
            qk *= q;
        }
    }

    // Grid transform by Simpson's rule, with an exact tail bound from the
    // dominating curve W^(p+q).
    double x_max = std::min(48.0, std::max(8.0, 40.0 / (lam - phi_pq)));
    GridSpec spec{x_max, 8192};
    ScaleCurve w = build_scale_w(m, q, spec);
    const std::size_t n = spec.n;
    const double h = w.h();
    double sum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += wgt * std::exp(-lam * w.x(k)) * w.val[k];
    }
    LaplaceCheck chk;
    chk.numeric = sum * h / 3.0;
    chk.analytic = analytic;
    chk.tail_bound = w_scale(m, p + q).laplace_tail(lam, x_max);
    return chk;
}

double asymptote_infinity(const LevyModel& m, double q) {
    if (!(m.alpha() < 0.0) || !(q > 0.0))
        throw std::invalid_argument(
            "growth constant requires alpha < 0 and q > 0");
    const double p = m.killing_rate();
    const double phi_pq = m.phi(p + q);
    const double abs_a = std::abs(m.alpha());
    double prod = 1.0;
    double qk = 1.0;
    double frac_sum = 0.0;
    double A = 0.0, B = 0.0;
    for (std::size_t k = 0; k < 100000; ++k) {
        double lam = phi_pq + k * abs_a;
        double d = m.psi(lam) - p;
        prod *= d;
        frac_sum += m.psi_prime(lam) / d;
        double termA = qk / prod;
        double termB = termA * frac_sum;
        A += termA;
        B += termB;
        if (std::abs(termA) < 1e-15 * std::abs(A) &&
            std::abs(termB) < 1e-15 * std::abs(B))
            break;
        qk *= q;
    }
    return A * A / B;
}

}  // namespace pssmp
