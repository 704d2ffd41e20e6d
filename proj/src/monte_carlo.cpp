#include "pssmp/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "pssmp/errors.hpp"
#include "pssmp/rng.hpp"

namespace pssmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t path_seed(std::uint64_t base, std::uint64_t idx) {
    return base ^ (0x9e3779b97f4a7c15ull * (idx + 1));
}

struct Targets {
    double up_x = kInf;
    double dn_x = -kInf;
    bool drawdown = false;
    const DrawdownSpec* r = nullptr;
    const std::vector<double>* s_grid = nullptr;  // sorted time-changed clock
    // When the accumulated value is bounded by e^{-rate I}, paths whose
    // remaining contribution is below e^{-40} resolve to zero early.
    double discount_rate = 0.0;
};

struct Outcome {
    enum class Type { UpExit, DownExit, Drawdown, Killed, Discounted, Capped };
    Type type = Type::Capped;
    double levy_time = 0.0;
    double lamperti_time = 0.0;
    double x_event = 0.0;    // position at the event (overshoot for jumps)
    double xbar = 0.0;       // running max at the event
    double I_at_max = 0.0;   // time-changed clock at the last maximum
    double D = 0.0;          // drawdown size at a drawdown event
    double thr = 0.0;        // threshold s(xbar) at a drawdown event
    std::vector<double> sample_x;
    std::vector<std::uint8_t> sampled;
};

struct Recorder {
    PathRecord* rec = nullptr;
    std::uint64_t path_id = 0;
    void mesh(double t, double x, double I) {
        if (rec) {
            rec->t.push_back(t);
            rec->x.push_back(x);
            rec->I.push_back(I);
        }
    }
    void event(const char* name, double t, double I, double x) {
        if (rec) rec->events.push_back({path_id, name, t, I, std::exp(x)});
    }
};

// One path of the killed process, exact jump epochs, Gaussian filling on a dt
// mesh, optional Brownian-bridge crossing tests. Barrier positions are in
// x = log y terms.
Outcome run_path(const LevyModel& m, const PathConfig& cfg, double x0,
                 std::uint64_t seed, bool negate_normals, const Targets& tg,
                 Recorder rec = {}) {
    Rng rng(seed);
    const double sigma2 = m.sigma2();
    const double sigma = std::sqrt(sigma2);
    const double mu = m.mu_tilde();
    const double alpha = m.alpha();
    const double p = m.killing_rate();

    double jump_rate = 0.0;
    for (const auto& j : m.jumps()) jump_rate += j.a;

    Outcome out;
    if (tg.s_grid) {
        out.sample_x.assign(tg.s_grid->size(), 0.0);
        out.sampled.assign(tg.s_grid->size(), 0);
    }
    std::size_t js = 0;

    double t = 0.0, x = x0, xbar = x0, I = 0.0, I_at_max = 0.0;
    double thr = kInf;
    auto update_threshold = [&] {
        if (tg.drawdown) thr = std::log((*tg.r)(std::exp(xbar)));
    };
    update_threshold();

    auto finish = [&](Outcome::Type type, double tv, double Iv, double xe) {
        out.type = type;
        out.levy_time = tv;
        out.lamperti_time = Iv;
        out.x_event = xe;
        out.xbar = xbar;
        out.I_at_max = I_at_max;
        return out;
    };

    // record samples for s in (I_from, I_to], x linear between the clocks
    auto take_samples = [&](double I_from, double I_to, double t_from,
                            double t_to, double x_from, double x_to) {
        if (!tg.s_grid) return;
        while (js < tg.s_grid->size() && (*tg.s_grid)[js] <= I_to) {
            double s = (*tg.s_grid)[js];
            double w = I_to > I_from ? (s - I_from) / (I_to - I_from) : 1.0;
            (void)t_from;
            (void)t_to;
            out.sample_x[js] = x_from + w * (x_to - x_from);
            out.sampled[js] = 1;
            ++js;
        }
    };
    if (tg.s_grid) {  // clock-zero samples
        while (js < tg.s_grid->size() && (*tg.s_grid)[js] <= 0.0) {
            out.sample_x[js] = x0;
            out.sampled[js] = 1;
            ++js;
        }
    }

    if (x >= tg.up_x) return finish(Outcome::Type::UpExit, 0.0, 0.0, tg.up_x);
    if (x < tg.dn_x) return finish(Outcome::Type::DownExit, 0.0, 0.0, x);

    const double t_kill = p > 0.0 ? rng.exponential(p) : kInf;
    double next_jump = jump_rate > 0.0 ? rng.exponential(jump_rate) : kInf;

    rec.mesh(t, x, I);

    while (true) {
        double t_seg = std::min({next_jump, t_kill, cfg.levy_horizon});

        while (t < t_seg) {
            double dt = std::min(cfg.dt, t_seg - t);
            double x1 = x + mu * dt;
            if (sigma > 0.0) {
                double zn = rng.normal();
                if (negate_normals) zn = -zn;
                x1 += sigma * std::sqrt(dt) * zn;
            }
            const bool bridged = cfg.barrier_correction && sigma > 0.0;
            const double dx = x1 - x;

            // One bridge-maximum sample serves both the up-crossing test
            // (P(M >= b) matches the classical crossing probability) and the
            // running-max refresh for drawdown tracking.
            double M = std::max(x, x1);
            if (bridged) {
                bool near_up = std::isfinite(tg.up_x) &&
                               (tg.up_x - x) * (tg.up_x - x1) <
                                   19.0 * sigma2 * dt;
                bool near_max = false;
                if (tg.drawdown) {
                    double cap =
                        0.5 * (x + x1 + std::sqrt(dx * dx + 148.0 * sigma2 * dt));
                    near_max = cap > xbar;
                }
                if (near_up || near_max)
                    M = 0.5 * (x + x1 +
                               std::sqrt(dx * dx -
                                         2.0 * sigma2 * dt *
                                             std::log(rng.uniform())));
            }

            double tau_up = kInf, tau_lo = kInf;
            if (x1 >= tg.up_x)
                tau_up = t + dt * (tg.up_x - x) / (x1 - x);
            else if (M >= tg.up_x)
                tau_up = t + 0.5 * dt;

            // lower barrier active this step (down exit or frozen drawdown)
            double lo = tg.drawdown ? xbar - thr : tg.dn_x;
            bool lo_is_drawdown = tg.drawdown;
            if (x1 < lo) {
                tau_lo = t + dt * (x - lo) / (x - x1);
            } else if (bridged && std::isfinite(lo)) {
                double a1 = x - lo, a2 = x1 - lo;
                if (a1 * a2 < 19.0 * sigma2 * dt &&
                    rng.uniform() < std::exp(-2.0 * a1 * a2 / (sigma2 * dt)))
                    tau_lo = t + 0.5 * dt;
            }

            if (tau_up < kInf || tau_lo < kInf) {
                bool up_first = tau_up <= tau_lo;
                double tau = up_first ? tau_up : tau_lo;
                double x_t = up_first ? tg.up_x : lo;
                double I_t =
                    I + (tau - t) * 0.5 *
                            (std::exp(alpha * x) + std::exp(alpha * x_t));
                take_samples(I, I_t, t, tau, x, x_t);
                if (I_t > cfg.horizon)
                    return finish(Outcome::Type::Capped, tau, cfg.horizon, x);
                if (up_first) {
                    rec.event("up_exit", tau, I_t, tg.up_x);
                    return finish(Outcome::Type::UpExit, tau, I_t, tg.up_x);
                }
                if (lo_is_drawdown) {
                    out.D = thr;  // diffusive touch, no overshoot
                    out.thr = thr;
                    rec.event("drawdown", tau, I_t, x_t);
                    return finish(Outcome::Type::Drawdown, tau, I_t, x_t);
                }
                rec.event("down_exit", tau, I_t, x_t);
                return finish(Outcome::Type::DownExit, tau, I_t, x_t);
            }

            double I1 =
                I + dt * 0.5 * (std::exp(alpha * x) + std::exp(alpha * x1));
            take_samples(I, I1, t, t + dt, x, x1);
            if (I1 > cfg.horizon)
                return finish(Outcome::Type::Capped, t + dt, cfg.horizon, x1);
            if (tg.discount_rate * I1 > 40.0)
                return finish(Outcome::Type::Discounted, t + dt, I1, x1);
            double new_max = tg.drawdown ? M : x1;
            if (new_max > xbar) {
                xbar = new_max;
                I_at_max = tg.drawdown ? I + 0.5 * (I1 - I) : I1;
                update_threshold();
                if (tg.drawdown) {
                    double D1 = xbar - x1;
                    if (D1 > thr) {
                        // new in-step maximum followed by a dip past the
                        // refreshed threshold
                        out.D = D1;
                        out.thr = thr;
                        rec.event("drawdown", t + dt, I1, x1);
                        return finish(Outcome::Type::Drawdown, t + dt, I1, x1);
                    }
                }
            }
            x = x1;
            I = I1;
            t += dt;
            rec.mesh(t, x, I);
        }

        if (t_seg == t_kill) {
            rec.event("kill", t, I, x);
            return finish(Outcome::Type::Killed, t, I, x);
        }
        if (t_seg == cfg.levy_horizon) {
            rec.event("cap", t, I, x);
            return finish(Outcome::Type::Capped, t, I, x);
        }

        // jump epoch: pick the mixture component, exact exponential size
        double pick = rng.uniform() * jump_rate;
        double b = m.jumps().back().b;
        for (const auto& j : m.jumps()) {
            if (pick < j.a) {
                b = j.b;
                break;
            }
            pick -= j.a;
        }
        double x1 = x - rng.exponential(b);
        rec.event("jump", t, I, x1);
        if (tg.drawdown) {
            double D1 = xbar - x1;
            if (D1 > thr) {
                out.D = D1;
                out.thr = thr;
                rec.event("drawdown", t, I, x1);
                return finish(Outcome::Type::Drawdown, t, I, x1);
            }
        } else if (x1 < tg.dn_x) {
            rec.event("down_exit", t, I, x1);
            return finish(Outcome::Type::DownExit, t, I, x1);
        }
        x = x1;
        next_jump = t + rng.exponential(jump_rate);
    }
}

// Deterministic chunked map-reduce over path indices: thread k owns the
// contiguous block [k chunk, (k+1) chunk); partial states merge in thread
// order, so results do not depend on scheduling.
template <typename State, typename Body>
State run_parallel(const PathConfig& cfg, State init, Body body) {
    unsigned nt = cfg.threads ? cfg.threads
                              : std::max(1u, std::thread::hardware_concurrency());
    nt = std::max(1u, std::min<unsigned>(nt, 64));
    std::uint64_t n = cfg.n_paths;
    std::uint64_t chunk = (n + nt - 1) / nt;
    std::vector<State> states(nt, init);
    std::vector<std::thread> workers;
    for (unsigned k = 0; k < nt; ++k) {
        workers.emplace_back([&, k] {
            std::uint64_t lo = k * chunk;
            std::uint64_t hi = std::min<std::uint64_t>(n, lo + chunk);
            for (std::uint64_t i = lo; i < hi; ++i) body(i, states[k]);
        });
    }
    for (auto& w : workers) w.join();
    for (unsigned k = 1; k < nt; ++k) states[0].merge(states[k]);
    return states[0];
}

struct Accum {
    KahanSum sum, sumsq;
    std::size_t n = 0;
    std::size_t resolved = 0;

    void add(double v, bool res) {
        sum.add(v);
        sumsq.add(v * v);
        ++n;
        resolved += res ? 1 : 0;
    }
    void merge(const Accum& o) {
        sum.add(o.sum.value());
        sumsq.add(o.sumsq.value());
        n += o.n;
        resolved += o.resolved;
    }
    McEstimate finish(const PathConfig& cfg) const {
        McEstimate e;
        e.n_paths = n;
        e.n_effective = resolved;
        e.seeds = {cfg.base_seed, 0, cfg.n_paths};
        if (n == 0) return e;
        e.mean = sum.value() / static_cast<double>(n);
        double var =
            std::max(0.0, sumsq.value() / static_cast<double>(n) - e.mean * e.mean);
        e.std_error = std::sqrt(var / static_cast<double>(std::max<std::size_t>(
                                          n - 1, 1)));
        return e;
    }
};

std::pair<std::uint64_t, bool> seed_for(const PathConfig& cfg,
                                        std::uint64_t idx) {
    if (!cfg.antithetic) return {path_seed(cfg.base_seed, idx), false};
    return {path_seed(cfg.base_seed, idx / 2), (idx & 1) != 0};
}

}  // namespace

double PathRecord::levy_time_at(double s) const {
    if (I.empty() || s <= I.front()) return t.empty() ? 0.0 : t.front();
    auto it = std::lower_bound(I.begin(), I.end(), s);
    if (it == I.end()) return t.back();
    std::size_t k = static_cast<std::size_t>(it - I.begin());
    if (k == 0) return t.front();
    double w = (s - I[k - 1]) / (I[k] - I[k - 1]);
    return t[k - 1] + w * (t[k] - t[k - 1]);
}

PathRecord simulate_path(const LevyModel& m, double x0, std::uint64_t seed,
                         const PathConfig& cfg) {
    PathRecord rec;
    Recorder r{&rec, 0};
    Targets tg;
    Outcome out = run_path(m, cfg, x0, seed, false, tg, r);
    rec.killed = out.type == Outcome::Type::Killed;
    rec.capped = out.type == Outcome::Type::Capped;
    rec.final_x = out.x_event;
    rec.final_levy_time = out.levy_time;
    rec.final_lamperti_time = out.lamperti_time;
    return rec;
}

TwoSidedEstimates estimate_two_sided(const LevyModel& m, double y, double c,
                                     double d, double q, double theta,
                                     const PathConfig& cfg) {
    if (!(c > 0.0) || !(c <= y) || !(y <= d))
        throw BarrierOrderError("two-sided estimate requires 0 < c <= y <= d");
    Targets tg;
    tg.up_x = std::log(d);
    tg.dn_x = std::log(c);
    tg.discount_rate = q;
    const double a = tg.dn_x;

    struct State {
        Accum up, down;
        void merge(const State& o) {
            up.merge(o.up);
            down.merge(o.down);
        }
    };
    State res = run_parallel(cfg, State{}, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        bool resolved = o.type != Outcome::Type::Capped;
        double vu = 0.0, vd = 0.0;
        if (o.type == Outcome::Type::UpExit)
            vu = std::exp(-q * o.lamperti_time);
        else if (o.type == Outcome::Type::DownExit)
            vd = std::exp(-q * o.lamperti_time + theta * (o.x_event - a));
        st.up.add(vu, resolved);
        st.down.add(vd, resolved);
    });
    return {res.up.finish(cfg), res.down.finish(cfg)};
}

McEstimate estimate_first_passage(const LevyModel& m, double y, double d,
                                  double q, const PathConfig& cfg) {
    if (!(y > 0.0) || !(y <= d))
        throw BarrierOrderError("first-passage estimate requires 0 < y <= d");
    Targets tg;
    tg.up_x = std::log(d);
    tg.discount_rate = q;
    struct State {
        Accum acc;
        void merge(const State& o) { acc.merge(o.acc); }
    };
    State res = run_parallel(cfg, State{}, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        st.acc.add(o.type == Outcome::Type::UpExit
                       ? std::exp(-q * o.lamperti_time)
                       : 0.0,
                   o.type != Outcome::Type::Capped);
    });
    return res.acc.finish(cfg);
}

McEstimate estimate_drawdown(const LevyModel& m, double y, double d, double q,
                             double gamma, double theta, const DrawdownSpec& r,
                             const PathConfig& cfg) {
    if (!(y > 0.0) || !(d >= y))
        throw BarrierOrderError("drawdown estimate requires 0 < y <= d");
    Targets tg;
    if (std::isfinite(d)) tg.up_x = std::log(d);
    tg.drawdown = true;
    tg.r = &r;
    tg.discount_rate = q;  // the drawdown weight is bounded by e^{-q Sigma}
    struct State {
        Accum acc;
        void merge(const State& o) { acc.merge(o.acc); }
    };
    State res = run_parallel(cfg, State{}, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        double v = 0.0;
        if (o.type == Outcome::Type::Drawdown)
            v = std::exp(-q * o.lamperti_time - gamma * o.I_at_max +
                         theta * (o.thr - o.D));
        st.acc.add(v, o.type != Outcome::Type::Capped);
    });
    return res.acc.finish(cfg);
}

McEstimate estimate_drawdown_survival(const LevyModel& m, double y, double d,
                                      double q, const DrawdownSpec& r,
                                      const PathConfig& cfg) {
    if (!(y > 0.0) || !(d >= y) || !std::isfinite(d))
        throw BarrierOrderError(
            "drawdown-survival estimate requires 0 < y <= d < inf");
    Targets tg;
    tg.up_x = std::log(d);
    tg.drawdown = true;
    tg.r = &r;
    tg.discount_rate = q;
    struct State {
        Accum acc;
        void merge(const State& o) { acc.merge(o.acc); }
    };
    State res = run_parallel(cfg, State{}, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        st.acc.add(o.type == Outcome::Type::UpExit
                       ? std::exp(-q * o.lamperti_time)
                       : 0.0,
                   o.type != Outcome::Type::Capped);
    });
    return res.acc.finish(cfg);
}

McEstimate estimate_stoploss(const LevyModel& m, double y, double r_const,
                             double q, const PathConfig& cfg) {
    DrawdownSpec r = DrawdownSpec::constant(r_const);
    Targets tg;
    tg.drawdown = true;
    tg.r = &r;
    struct State {
        Accum acc;
        void merge(const State& o) { acc.merge(o.acc); }
    };
    State res = run_parallel(cfg, State{}, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        double v = 0.0;
        if (o.type == Outcome::Type::Drawdown)
            v = std::exp(-q * o.lamperti_time + o.x_event);
        st.acc.add(v, o.type != Outcome::Type::Capped);
    });
    return res.acc.finish(cfg);
}

MartingaleEstimates estimate_martingale(const LevyModel& m, double y, double d,
                                        double q,
                                        const std::vector<double>& s_grid,
                                        const PathConfig& cfg,
                                        const ScaleCurve& w,
                                        const ScaleCurve& z) {
    if (!(1.0 <= y) || !(y <= d))
        throw BarrierOrderError("martingale estimate requires 1 <= y <= d");
    std::vector<double> grid = s_grid;
    std::sort(grid.begin(), grid.end());
    Targets tg;
    tg.up_x = std::log(d);
    tg.dn_x = 0.0;
    tg.s_grid = &grid;

    const double wd = w.value(d);
    const double zd = z.value(d);

    struct State {
        std::vector<Accum> w_acc, z_acc;
        void merge(const State& o) {
            for (std::size_t j = 0; j < w_acc.size(); ++j) {
                w_acc[j].merge(o.w_acc[j]);
                z_acc[j].merge(o.z_acc[j]);
            }
        }
    };
    State init;
    init.w_acc.resize(grid.size());
    init.z_acc.resize(grid.size());

    State res = run_parallel(cfg, init, [&](std::uint64_t i, State& st) {
        auto [seed, neg] = seed_for(cfg, i);
        Outcome o = run_path(m, cfg, std::log(y), seed, neg, tg);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            double s = grid[j];
            double vw = 0.0, vz = 0.0;
            bool resolved = true;
            bool event_by_s =
                o.type != Outcome::Type::Capped && o.lamperti_time <= s;
            if (event_by_s && o.type == Outcome::Type::UpExit) {
                double disc = std::exp(-q * o.lamperti_time);
                vw = disc * wd;
                vz = disc * zd;
            } else if (event_by_s && o.type == Outcome::Type::DownExit) {
                vz = std::exp(-q * o.lamperti_time);
            } else if (event_by_s && o.type == Outcome::Type::Killed) {
                // dead by s: zero contribution
            } else if (o.sampled[j]) {
                double yv = std::exp(o.sample_x[j]);
                double disc = std::exp(-q * s);
                vw = disc * w.value(yv);
                vz = disc * z.value(yv);
            } else {
                resolved = false;  // capped before s
            }
            st.w_acc[j].add(vw, resolved);
            st.z_acc[j].add(vz, resolved);
        }
    });
    MartingaleEstimates out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out.w_process.push_back(res.w_acc[j].finish(cfg));
        out.z_process.push_back(res.z_acc[j].finish(cfg));
    }
    return out;
}

void write_event_log(const LevyModel& m, double x0, const PathConfig& cfg,
                     const std::function<void(const PathEvent&)>& sink) {
    for (std::uint64_t i = 0; i < cfg.n_paths; ++i) {
        PathRecord rec;
        Recorder r{&rec, i};
        Targets tg;
        auto [seed, neg] = seed_for(cfg, i);
        run_path(m, cfg, x0, seed, neg, tg, r);
        for (const auto& ev : rec.events) sink(ev);
    }
}

}  // namespace pssmp
