#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "pssmp/errors.hpp"
#include "pssmp/exit_engine.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/monte_carlo.hpp"

using namespace pssmp;

namespace {
const double kE = std::exp(1.0);
const LevyModel kBm(1.0, 0.0, {}, 0.0, 0.0);
const LevyModel kFv(0.0, 1.0, {{0.6, 1.5}, {0.4, 4.0}}, 0.0, 0.0);

PathConfig quick_cfg(std::size_t paths, std::uint64_t seed, double dt = 1e-3) {
    PathConfig cfg;
    cfg.n_paths = paths;
    cfg.base_seed = seed;
    cfg.dt = dt;
    cfg.levy_horizon = 100.0;
    return cfg;
}
}  // namespace

TEST_CASE("estimates are bit-exact in the seed and move with it") {
    PathConfig cfg = quick_cfg(4000, 11);
    cfg.threads = 2;
    auto a = estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.3, 0.0, cfg);
    auto b = estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.3, 0.0, cfg);
    CHECK(a.up.mean == b.up.mean);
    CHECK(a.up.std_error == b.up.std_error);
    CHECK(a.down.mean == b.down.mean);
    cfg.base_seed = 12;
    auto c = estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.3, 0.0, cfg);
    CHECK(a.up.mean != c.up.mean);
}

TEST_CASE("degenerate start at the barrier gives a deterministic estimate") {
    PathConfig cfg = quick_cfg(500, 3);
    auto est = estimate_two_sided(kBm, 2.0, 1.0, 2.0, 0.7, 0.0, cfg);
    CHECK(est.up.mean == 1.0);
    CHECK(est.up.std_error == 0.0);
    CHECK(est.up.n_effective == 500);
}

TEST_CASE("time change is the identity when alpha = 0") {
    PathConfig cfg;
    cfg.dt = 1e-2;
    cfg.levy_horizon = 5.0;
    PathRecord rec = simulate_path(kFv, 0.0, 99, cfg);
    REQUIRE(!rec.I.empty());
    for (std::size_t k = 0; k < rec.I.size(); ++k)
        CHECK(rec.I[k] == doctest::Approx(rec.t[k]).epsilon(1e-12));
    CHECK(rec.levy_time_at(2.5) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("time change accumulates e^{alpha X} for drifting paths") {
    // pure drift (sigma = 0, no jumps in the window): I_t = (e^{alpha mu t}-1)/(alpha mu)
    LevyModel m(0.0, 1.0, {{1e-9, 1.0}}, 0.0, 1.0);  // negligible jump rate
    PathConfig cfg;
    cfg.dt = 1e-4;
    cfg.levy_horizon = 2.0;
    PathRecord rec = simulate_path(m, 0.0, 5, cfg);
    double T = rec.t.back();
    double exact = std::exp(T) - 1.0;
    CHECK(rec.I.back() == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("two-sided estimates agree with the driftless closed form") {
    PathConfig cfg = quick_cfg(20000, 21);
    auto est = estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.0, 0.0, cfg);
    CHECK(std::abs(est.up.mean - 0.5) <= 3.0 * est.up.std_error);
    CHECK(std::abs(est.down.mean - 0.5) <= 3.0 * est.down.std_error);
    CHECK(est.up.n_effective == est.up.n_paths);
}

TEST_CASE("heavy killing sends both transforms toward zero") {
    LevyModel m = kBm.with_killing(25.0);
    PathConfig cfg = quick_cfg(4000, 31);
    auto est = estimate_two_sided(m, 1.2, 1.0, 1.5, 0.0, 0.0, cfg);
    auto ref = estimate_two_sided(kBm, 1.2, 1.0, 1.5, 0.0, 0.0, cfg);
    CHECK(est.up.mean < 0.5 * ref.up.mean);
    CHECK(est.up.mean + est.down.mean < 0.8);
}

TEST_CASE("quadrupling the paths roughly halves the standard error") {
    auto se = [&](std::size_t n) {
        PathConfig cfg = quick_cfg(n, 77);
        return estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.0, 0.0, cfg)
            .up.std_error;
    };
    double ratio = se(5000) / se(20000);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("halving dt moves the estimate by less than one standard error") {
    LevyModel m = kFv.with_alpha(1.0).with_killing(0.2);
    PathConfig c1 = quick_cfg(20000, 55, 1e-3);
    PathConfig c2 = quick_cfg(20000, 55, 5e-4);
    auto e1 = estimate_two_sided(m, 1.2, 0.9, 1.8, 0.4, 0.0, c1);
    auto e2 = estimate_two_sided(m, 1.2, 0.9, 1.8, 0.4, 0.0, c2);
    CHECK(std::abs(e1.up.mean - e2.up.mean) < e1.up.std_error);
    PathConfig c3 = quick_cfg(20000, 55, 2e-4);
    PathConfig c4 = quick_cfg(20000, 55, 1e-4);
    auto d1 = estimate_drawdown(kBm, 1.0, kE, 0.0, 0.0, 0.0,
                                DrawdownSpec::constant(kE), c3);
    auto d2 = estimate_drawdown(kBm, 1.0, kE, 0.0, 0.0, 0.0,
                                DrawdownSpec::constant(kE), c4);
    CHECK(std::abs(d1.mean - d2.mean) < d1.std_error);
}

TEST_CASE("drawdown estimate matches the closed form at desk settings") {
    PathConfig cfg = quick_cfg(20000, 99, 2e-4);
    auto est = estimate_drawdown(kBm, 1.0, kE, 0.0, 0.0, 0.0,
                                 DrawdownSpec::constant(kE), cfg);
    CHECK(std::abs(est.mean - (1.0 - std::exp(-1.0))) <=
          3.0 * est.std_error);
    auto surv = estimate_drawdown_survival(kBm, 1.0, kE, 0.0,
                                           DrawdownSpec::constant(kE), cfg);
    CHECK(std::abs(surv.mean - std::exp(-1.0)) <= 3.0 * surv.std_error);
    // the two events partition the probability space here
    CHECK(est.mean + surv.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("open-ended drawdown transform matches simulation") {
    // killing mass only: P(drawdown before the exponential clock) < 1
    LevyModel m(0.6, 0.1, {{0.8, 2.0}, {0.5, 5.0}}, 0.4, 1.0);
    DrawdownSpec r = DrawdownSpec::constant(1.6);
    ExitEngine eng(m);
    double inf = std::numeric_limits<double>::infinity();
    double formula = eng.drawdown_transform(1.0, inf, 0.0, 0.0, 0.0, r).value;
    PathConfig cfg = quick_cfg(20000, 41, 5e-4);
    auto est = estimate_drawdown(m, 1.0, inf, 0.0, 0.0, 0.0, r, cfg);
    CHECK(formula < 1.0);
    CHECK(std::abs(est.mean - formula) <= 3.0 * est.std_error);

    // discounted joint transform with a last-maximum penalty
    double f2 = eng.drawdown_transform(1.0, inf, 0.4, 0.3, 1.0, r).value;
    PathConfig cfg2 = quick_cfg(20000, 43, 5e-4);
    auto est2 = estimate_drawdown(m, 1.0, inf, 0.4, 0.3, 1.0, r, cfg2);
    CHECK(std::abs(est2.mean - f2) <= 3.0 * est2.std_error);
}

TEST_CASE("a huge threshold makes the drawdown passage rare") {
    PathConfig cfg = quick_cfg(20000, 5);
    auto est = estimate_drawdown(kBm, 1.0, 1.3, 0.0, 0.0, 0.0,
                                 DrawdownSpec::constant(50.0), cfg);
    // driftless closed form: 1 - exp(-log(1.3)/log(50))
    double exact = 1.0 - std::exp(-std::log(1.3) / std::log(50.0));
    CHECK(std::abs(est.mean - exact) <= 3.0 * est.std_error);
    CHECK(est.mean < 0.1);
}

TEST_CASE("stop-loss estimate: tight threshold returns the start price") {
    PathConfig cfg = quick_cfg(20000, 7, 2e-4);
    auto est = estimate_stoploss(kBm, 1.0, 1.01, 0.0, cfg);
    CHECK(est.mean == doctest::Approx(1.0).epsilon(0.02));
    // strong discounting direction
    auto est2 = estimate_stoploss(kBm, 1.0, 1.5, 8.0, quick_cfg(3000, 8));
    auto est3 = estimate_stoploss(kBm, 1.0, 1.5, 0.5, quick_cfg(3000, 8));
    CHECK(est2.mean < 0.6);
    CHECK(est2.mean < est3.mean);
}

TEST_CASE("jump counts are Poisson: chi-square against the exact law") {
    // rate 1 over a window of length 3; 10000 paths
    PathConfig cfg;
    cfg.dt = 1e9;  // jumps are exact regardless of the mesh
    cfg.levy_horizon = 3.0;
    cfg.n_paths = 10000;
    const double lambda = 3.0;  // total rate 1.0 * T
    std::map<int, int> counts;
    for (std::uint64_t i = 0; i < cfg.n_paths; ++i) {
        PathRecord rec = simulate_path(kFv, 0.0, 1000 + i, cfg);
        int n = 0;
        for (const auto& ev : rec.events)
            if (ev.event == "jump") ++n;
        counts[std::min(n, 9)]++;
    }
    // bins 0..8 and >=9; chi-square with 9 dof, 0.001 critical value 27.877
    double chi2 = 0.0;
    double p_ge = 1.0;
    double pmf = std::exp(-lambda);
    for (int k = 0; k <= 8; ++k) {
        double expected = cfg.n_paths * pmf;
        double observed = counts.count(k) ? counts[k] : 0;
        chi2 += (observed - expected) * (observed - expected) / expected;
        p_ge -= pmf;
        pmf *= lambda / (k + 1);
    }
    double tail_expected = cfg.n_paths * p_ge;
    double tail_observed = counts.count(9) ? counts[9] : 0;
    chi2 += (tail_observed - tail_expected) * (tail_observed - tail_expected) /
            tail_expected;
    CHECK(chi2 < 27.877);
}

TEST_CASE("jump sizes follow the hyperexponential mixture: KS test") {
    // one long pure-jump path; sizes recovered from the mesh against the
    // post-jump event positions
    // between jumps the path is pure drift, so consecutive mesh entries
    // recover each jump size exactly
    PathConfig cfg;
    cfg.dt = 1e9;
    cfg.levy_horizon = 100000.0;
    PathRecord rec = simulate_path(kFv, 0.0, 12345, cfg);
    std::vector<double> sizes;
    for (std::size_t k = 0; k + 1 < rec.t.size(); ++k) {
        double drift = kFv.mu_tilde() * (rec.t[k + 1] - rec.t[k]);
        double jump = rec.x[k] + drift - rec.x[k + 1];
        if (jump > 1e-12) sizes.push_back(jump);
    }
    REQUIRE(sizes.size() > 50000);
    std::sort(sizes.begin(), sizes.end());
    double rate_sum = 0.6 + 0.4;
    auto cdf = [&](double u) {
        return (0.6 * (1.0 - std::exp(-1.5 * u)) +
                0.4 * (1.0 - std::exp(-4.0 * u))) /
               rate_sum;
    };
    double dn = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        double f = cdf(sizes[i]);
        dn = std::max(dn, std::abs(f - (i + 1.0) / sizes.size()));
        dn = std::max(dn, std::abs(f - static_cast<double>(i) / sizes.size()));
    }
    // p > 0.001 requires sqrt(n) D_n below 1.9495
    CHECK(dn * std::sqrt(static_cast<double>(sizes.size())) < 1.9495);
}

TEST_CASE("martingale sampler: exact at the time origin, consistent later") {
    LevyModel m = kBm.with_alpha(1.0);
    ExitEngine eng(m);
    double d = 2.0, q = 0.4, y = 1.4;
    auto w = eng.w_curve(q, std::log(d));
    auto z = eng.z_curve(q, 0.0, std::log(d));
    PathConfig cfg = quick_cfg(4000, 17);
    auto est = estimate_martingale(m, y, d, q, {0.0, 0.5, 40.0}, cfg, *w, *z);
    REQUIRE(est.w_process.size() == 3);
    // s = 0: deterministic value calW(y)
    CHECK(est.w_process[0].std_error <= 1e-9);
    CHECK(est.w_process[0].mean == doctest::Approx(w->value(y)));
    CHECK(est.z_process[0].mean == doctest::Approx(z->value(y)));
    // large s: terminal-value means match the exit transforms
    double up = eng.two_sided_up({y, 1.0, d, q, 0.0});
    double dn = eng.two_sided_down({y, 1.0, d, q, 0.0});
    double expected_w = w->value(d) * up;
    double expected_z = z->value(d) * up + dn;
    CHECK(std::abs(est.w_process[2].mean - expected_w) <=
          3.0 * est.w_process[2].std_error);
    CHECK(std::abs(est.z_process[2].mean - expected_z) <=
          3.0 * est.z_process[2].std_error);
    // constancy across the grid
    for (const auto& e : est.w_process)
        CHECK(std::abs(e.mean - w->value(y)) <=
              3.0 * std::max(e.std_error, 1e-12));
}

TEST_CASE("antithetic pairing keeps the estimator unbiased") {
    PathConfig cfg = quick_cfg(20000, 13);
    cfg.antithetic = true;
    auto est = estimate_two_sided(kBm, kE, 1.0, kE * kE, 0.0, 0.0, cfg);
    CHECK(std::abs(est.up.mean - 0.5) <= 4.0 * est.up.std_error);
}

TEST_CASE("event log streams exact-jump records") {
    PathConfig cfg;
    cfg.dt = 0.05;
    cfg.levy_horizon = 2.0;
    cfg.n_paths = 10;
    std::size_t jumps = 0, caps = 0;
    write_event_log(kFv, 0.0, cfg, [&](const PathEvent& ev) {
        if (ev.event == "jump") ++jumps;
        if (ev.event == "cap") ++caps;
        CHECK(ev.levy_time >= 0.0);
        CHECK(ev.lamperti_time >= 0.0);
        CHECK(ev.y_value > 0.0);
    });
    CHECK(caps == 10);  // no killing, no barriers: every path runs out the cap
    CHECK(jumps > 0);
}

TEST_CASE("mc query validation") {
    PathConfig cfg = quick_cfg(10, 1);
    CHECK_THROWS_AS(estimate_two_sided(kBm, 0.5, 1.0, 2.0, 0.0, 0.0, cfg),
                    BarrierOrderError);
    CHECK_THROWS_AS(
        estimate_drawdown(kBm, 2.0, 1.0, 0.0, 0.0, 0.0,
                          DrawdownSpec::constant(1.5), cfg),
        BarrierOrderError);
}
