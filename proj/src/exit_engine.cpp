#include "pssmp/exit_engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>

#include "pssmp/errors.hpp"
#include "pssmp/quadrature.hpp"

namespace pssmp {

// ---- piecewise-linear threshold ----

PiecewiseLinear::PiecewiseLinear(double constant) : const_(constant) {}

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> nodes) {
    if (nodes.empty()) throw ModelError("piecewise-linear table is empty");
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (nodes[i].first == nodes[i + 1].first)
            throw ModelError("piecewise-linear table has a duplicate abscissa");
    for (auto& [z, v] : nodes) {
        if (!(z > 0.0)) throw ModelError("piecewise-linear abscissae must be > 0");
        zs_.push_back(z);
        vs_.push_back(v);
    }
}

double PiecewiseLinear::operator()(double z) const {
    if (zs_.empty()) return const_;
    if (z <= zs_.front()) return vs_.front();
    if (z >= zs_.back()) return vs_.back();
    auto it = std::upper_bound(zs_.begin(), zs_.end(), z);
    std::size_t i = static_cast<std::size_t>(it - zs_.begin());
    double w = (z - zs_[i - 1]) / (zs_[i] - zs_[i - 1]);
    return vs_[i - 1] + w * (vs_[i] - vs_[i - 1]);
}

DrawdownSpec DrawdownSpec::constant(double r) {
    if (!(r > 1.0)) throw ModelError("drawdown threshold must satisfy r > 1");
    return DrawdownSpec(PiecewiseLinear(r));
}

DrawdownSpec DrawdownSpec::table(std::vector<std::pair<double, double>> nodes) {
    for (const auto& [z, v] : nodes)
        if (!(v > 1.0)) throw ModelError("drawdown threshold must satisfy r > 1");
    return DrawdownSpec(PiecewiseLinear(std::move(nodes)));
}

double DrawdownSpec::max_on(double z_lo, double z_hi) const {
    double m = std::max(r_(z_lo), r_(std::isfinite(z_hi) ? z_hi : z_lo));
    for (double z : r_.breakpoints())
        if (z >= z_lo && z <= z_hi) m = std::max(m, r_(z));
    if (!std::isfinite(z_hi) && !r_.breakpoints().empty())
        m = std::max(m, r_(r_.breakpoints().back()));
    return m;
}

// ---- engine ----

ExitEngine::ExitEngine(LevyModel model, std::size_t grid_n)
    : model_(std::move(model)), grid_n_(grid_n) {}

namespace {

std::int64_t quantize_rate(double rate) {
    double scaled = rate * 1e12;
    if (!(std::abs(scaled) < 9.0e18))
        throw ModelError("effective rate too large to cache");
    return static_cast<std::int64_t>(std::llround(scaled));
}

void validate_query(const ExitQuery& q) {
    if (!(q.c > 0.0) || !(q.c <= q.y) || !(q.y <= q.d))
        throw BarrierOrderError("exit query requires 0 < c <= y <= d");
    if (!(q.q >= 0.0) || !(q.theta >= 0.0))
        throw ModelError("exit query requires q >= 0 and theta >= 0");
}

}  // namespace

std::shared_ptr<const ScaleCurve> ExitEngine::w_curve(double rate,
                                                      double x_max) {
    Key key{quantize_rate(rate), std::bit_cast<std::int64_t>(x_max), 0};
    {
        std::shared_lock lock(mu_);
        auto it = w_cache_.find(key);
        if (it != w_cache_.end()) return it->second;
    }
    double rate_used = static_cast<double>(key.rate_q) * 1e-12;
    auto built = std::make_shared<const ScaleCurve>(
        build_scale_w(model_, rate_used, GridSpec{x_max, grid_n_}));
    std::unique_lock lock(mu_);
    auto [it, inserted] = w_cache_.emplace(key, built);
    return it->second;
}

std::shared_ptr<const ScaleCurve> ExitEngine::z_curve(double rate, double theta,
                                                      double x_max) {
    Key key{quantize_rate(rate), std::bit_cast<std::int64_t>(x_max),
            std::bit_cast<std::int64_t>(theta)};
    {
        std::shared_lock lock(mu_);
        auto it = z_cache_.find(key);
        if (it != z_cache_.end()) return it->second;
    }
    double rate_used = static_cast<double>(key.rate_q) * 1e-12;
    auto built = std::make_shared<const ScaleCurve>(
        build_scale_z(model_, rate_used, theta, GridSpec{x_max, grid_n_}));
    std::unique_lock lock(mu_);
    auto [it, inserted] = z_cache_.emplace(key, built);
    return it->second;
}

double ExitEngine::two_sided_up(const ExitQuery& query) {
    validate_query(query);
    if (query.y == query.d) return 1.0;
    double rate = query.q * std::pow(query.c, model_.alpha());
    double x_max = std::log(query.d / query.c);
    auto w = w_curve(rate, x_max);
    return w->value(query.y / query.c) / w->value(query.d / query.c);
}

double ExitEngine::two_sided_down(const ExitQuery& query) {
    validate_query(query);
    double rate = query.q * std::pow(query.c, model_.alpha());
    if (query.y == query.d && query.c == query.d) return 0.0;
    double x_max = std::log(query.d / query.c);
    auto w = w_curve(rate, x_max);
    auto z = z_curve(rate, query.theta, x_max);
    double ratio = w->value(query.y / query.c) / w->value(query.d / query.c);
    double v = z->value(query.y / query.c) - ratio * z->value(query.d / query.c);
    if (query.q == 0.0 && query.theta == 0.0 && model_.killing_rate() == 0.0) {
        double sum = v + ratio;  // ratio = up value here
        if (std::abs(sum - 1.0) > 1e-5)
            std::cerr << "pssmp: exit complement identity off by "
                      << sum - 1.0 << "\n";
    }
    return v;
}

double ExitEngine::first_passage_up(double y, double d, double q) {
    if (!(y > 0.0) || !(y <= d))
        throw BarrierOrderError("first passage requires 0 < y <= d");
    if (!(q >= 0.0)) throw ModelError("first passage requires q >= 0");
    if (y == d) return 1.0;
    UpwardSeries s = build_upward_series(model_, q, d);
    return upward_value(s, y) / upward_value(s, d);
}

double ExitEngine::grid_xmax_for(const DrawdownSpec& r, double y,
                                 double d) const {
    double r_max = r.max_on(y, d);
    return 1.05 * std::log(r_max) + 0.05;
}

ExitEngine::Proxy ExitEngine::fit_proxy(double a, double b,
                                        const std::function<double(double)>& f) {
    // The curve builders stop at a 1e-10 relative increment, so integrand
    // samples carry noise of that order across neighboring effective rates;
    // 3e-8 is comfortably above that floor and far below the result budgets.
    Proxy best;
    double best_err = std::numeric_limits<double>::infinity();
    double scale = 1e-12;
    for (std::size_t degree = 32; degree <= 256; degree *= 2) {
        ChebSeries fit = ChebSeries::fit(a, b, degree, f);
        double err = 0.0;
        for (int i = 0; i < 9; ++i) {
            double t = a + (b - a) * (i + 0.6180339887) / 9.6180339887;
            double direct = f(t);
            err = std::max(err, std::abs(fit(t) - direct));
            scale = std::max(scale, std::abs(direct));
        }
        if (err < best_err) {
            best = {fit, err};
            best_err = err;
        }
        if (err <= 3e-8 * scale) return best;
    }
    if (best_err <= 1e-6 * scale) return best;  // recorded in the budget
    throw QuadratureFailure(
        "Chebyshev interpolation of the drawdown integrand did not converge");
}

std::function<double(double)> ExitEngine::log_deriv_factor(
    double fam, const DrawdownSpec& r, double x_max) {
    return [this, fam, r, x_max](double t) {
        double z = std::exp(t);
        double rr = r(z);
        double rate = fam * std::pow(z / rr, model_.alpha());
        auto w = w_curve(rate, x_max);
        return rr * w->deriv(rr) / w->value(rr);
    };
}

std::function<double(double)> ExitEngine::bracket_factor(
    double q, double theta, const DrawdownSpec& r, double x_max) {
    return [this, q, theta, r, x_max](double t) {
        double z = std::exp(t);
        double rr = r(z);
        double rate = q * std::pow(z / rr, model_.alpha());
        auto w = w_curve(rate, x_max);
        auto zc = z_curve(rate, theta, x_max);
        return rr * ((w->deriv(rr) / w->value(rr)) * zc->value(rr) -
                     zc->deriv(rr));
    };
}

std::vector<ExitEngine::Segment> ExitEngine::segments_for(
    double t0, double t1, const DrawdownSpec& r,
    const std::vector<double>& extra_breaks) {
    std::vector<double> cuts{t0, t1};
    for (double z : r.breakpoints()) {
        double t = std::log(z);
        if (t > t0 && t < t1) cuts.push_back(t);
    }
    for (double z : extra_breaks) {
        if (!(z > 0.0)) continue;
        double t = std::log(z);
        if (t > t0 && t < t1) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Segment> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) segs.push_back({cuts[i], cuts[i + 1]});
    return segs;
}

EngineResult ExitEngine::drawdown_survival(double y, double d, double q,
                                           const DrawdownSpec& r) {
    if (!(y > 0.0) || !(y <= d) || !std::isfinite(d))
        throw BarrierOrderError("drawdown survival requires 0 < y <= d < inf");
    if (!(q >= 0.0)) throw ModelError("drawdown survival requires q >= 0");
    EngineResult out;
    if (y == d) {
        out.value = 1.0;
        return out;
    }
    double x_max = grid_xmax_for(r, y, d);
    double I = 0.0;
    for (const Segment& seg : segments_for(std::log(y), std::log(d), r, {})) {
        Proxy G = fit_proxy(seg.a, seg.b, log_deriv_factor(q, r, x_max));
        I += G.fit.integral();
        out.budget.interpolation =
            std::max(out.budget.interpolation, G.probe_error * (seg.b - seg.a));
    }
    out.value = std::exp(-I);
    return out;
}

EngineResult ExitEngine::drawdown_integral(
    double y, double d, double q, double gamma, double theta,
    const DrawdownSpec& r, const std::function<double(double)>& extra,
    const std::vector<double>& extra_breaks, double extra_growth) {
    if (!(y > 0.0) || !(d >= y))
        throw BarrierOrderError("drawdown transform requires 0 < y <= d");
    if (!(q >= 0.0) || !(gamma >= 0.0) || !(theta >= 0.0))
        throw ModelError("drawdown transform requires q, gamma, theta >= 0");

    EngineResult out;
    const bool finite = std::isfinite(d);
    if (finite && y == d) return out;

    const double t0 = std::log(y);
    const double x_max = grid_xmax_for(r, y, d);
    auto Gfac = log_deriv_factor(q + gamma, r, x_max);
    auto Hfac = bracket_factor(q, theta, r, x_max);

    double I_base = 0.0;
    double t_done = t0;
    std::size_t n_segments = 0;
    double H_mid = 0.0, seg_width = 1.0;

    auto process_segment = [&](double a, double b) {
        Proxy G = fit_proxy(a, b, Gfac);
        Proxy H = fit_proxy(a, b, Hfac);
        ChebSeries Iseg = G.fit.antiderivative();
        auto integrand = [&](double t) {
            return std::exp(-(I_base + Iseg(t))) * H.fit(t) * extra(std::exp(t));
        };
        QuadResult qr = gauss_kronrod(integrand, a, b, 1e-8, 1e-14, 4000);
        out.value += qr.value;
        out.budget.quadrature += qr.error;
        out.budget.interpolation = std::max(
            out.budget.interpolation,
            (G.probe_error + H.probe_error) * (b - a));
        I_base += Iseg(b);
        H_mid = H.fit(a + 0.5 * (b - a));
        seg_width = b - a;
        t_done = b;
        ++n_segments;
        return std::pair{G.fit(b), H.fit(b)};
    };

    if (finite) {
        for (const Segment& seg : segments_for(t0, std::log(d), r, extra_breaks))
            process_segment(seg.a, seg.b);
        return out;
    }

    // Improper upper limit: cover the threshold/test-function breakpoints,
    // then march unit-width segments until the integrand is exhausted and a
    // geometric closure certifies the remaining tail. Beyond the last
    // breakpoint the threshold is constant, so both curve factors are
    // monotone in the effective rate and endpoint samples bound them.
    double last_break = t0;
    for (double z : r.breakpoints())
        if (z > y) last_break = std::max(last_break, std::log(z));
    for (double z : extra_breaks)
        if (z > y) last_break = std::max(last_break, std::log(z));
    if (last_break > t0)
        for (const Segment& seg : segments_for(t0, last_break, r, extra_breaks))
            process_segment(seg.a, seg.b);

    while (true) {
        if (n_segments > 400)
            throw TailNotCertified(
                "drawdown tail did not certify within the segment budget");
        auto [G_end, H_end] = process_segment(t_done, t_done + 1.0);
        double weight = std::exp(-I_base);
        double extra_end = std::abs(extra(std::exp(t_done)));
        double scale = weight * std::abs(H_end) * extra_end;
        double floor = 1e-12 * std::max(std::abs(out.value), 1e-30);
        if (extra_end == 0.0 && t_done > last_break) {
            break;  // test function clamped to zero beyond its table
        }
        if (scale > floor) continue;

        double F_inf = G_end;
        double H_cap = std::abs(H_end);
        if (model_.alpha() < 0.0) {
            // the effective rate decays to zero far out
            F_inf = std::min(F_inf, log_deriv_factor(0.0, r, x_max)(t_done));
            H_cap = std::max(
                H_cap, std::abs(bracket_factor(0.0, theta, r, x_max)(t_done)));
        }
        double lambda_H = 0.0;
        if (std::abs(H_mid) > 0.0 && std::abs(H_end) > std::abs(H_mid))
            lambda_H = std::log(std::abs(H_end) / std::abs(H_mid)) /
                       (0.5 * seg_width);
        double denom = F_inf - extra_growth - lambda_H;
        if (denom > 0.05) {
            double tail = weight * H_cap * extra_end / denom;
            if (tail <= std::max(1e-12, 1e-9 * std::abs(out.value))) {
                out.budget.truncation += tail;
                break;
            }
        }
    }
    return out;
}

EngineResult ExitEngine::drawdown_transform(double y, double d, double q,
                                            double gamma, double theta,
                                            const DrawdownSpec& r) {
    EngineResult out = drawdown_integral(
        y, d, q, gamma, theta, r, [](double) { return 1.0; }, {}, 0.0);
    if (q == 0.0 && gamma == 0.0 && theta == 0.0 &&
        model_.killing_rate() == 0.0 && std::isfinite(d) && y < d) {
        double s = drawdown_survival(y, d, q, r).value;
        if (std::abs(s + out.value - 1.0) > 1e-5)
            std::cerr << "pssmp: drawdown complement identity off by "
                      << s + out.value - 1.0 << "\n";
    }
    return out;
}

EngineResult ExitEngine::drawdown_density(
    double y, double q, double gamma, double theta, const DrawdownSpec& r,
    const std::function<double(double)>& f, const std::vector<double>& f_breaks,
    double f_log_growth) {
    return drawdown_integral(y, std::numeric_limits<double>::infinity(), q,
                             gamma, theta, r, f, f_breaks, f_log_growth);
}

EngineResult ExitEngine::stoploss_value(double y, double r_const, double q) {
    if (!(r_const > 1.0)) throw ModelError("stop-loss requires r > 1");
    if (!(y > 0.0) || !(q >= 0.0))
        throw ModelError("stop-loss requires y > 0 and q >= 0");
    if (model_.alpha() < 0.0 &&
        (model_.killing_rate() > 0.0 || model_.psi_prime(0.0) > 0.0))
        throw ModelError(
            "stop-loss value undefined: the process can explode in finite "
            "time (alpha < 0 with killing or upward-drifting paths)");
    DrawdownSpec r = DrawdownSpec::constant(r_const);
    return drawdown_integral(
        y, std::numeric_limits<double>::infinity(), q, 0.0, 1.0, r,
        [r_const](double z) { return z / r_const; }, {}, 1.0);
}

}  // namespace pssmp
