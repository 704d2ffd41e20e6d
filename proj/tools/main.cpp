// Batch front-end: model files in, CSV artifacts and verification reports
// out. Exit status: 0 success, 1 validation error, 2 numerical-certification
// failure, 3 verification-suite failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pssmp/errors.hpp"
#include "pssmp/exit_engine.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/levy_scale.hpp"
#include "pssmp/model_io.hpp"
#include "pssmp/monte_carlo.hpp"
#include "pssmp/selfsim_scale.hpp"
#include "pssmp/verification.hpp"

namespace {

using namespace pssmp;

// Numeric flags accept plain literals, "e", "e^X" and "Ce^X" so barriers can
// be placed exactly at exponential positions.
double parse_expr(std::string s) {
    auto strip = [](std::string v) {
        std::size_t b = v.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        std::size_t e = v.find_last_not_of(" \t");
        return v.substr(b, e - b + 1);
    };
    s = strip(s);
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    std::size_t caret = s.find("e^");
    if (caret != std::string::npos) {
        std::string pre = strip(s.substr(0, caret));
        if (!pre.empty() && pre.back() == '*') pre.pop_back();
        double coef = 1.0;
        if (pre == "-") coef = -1.0;
        else if (!pre.empty()) coef = std::stod(pre);
        return coef * std::exp(std::stod(s.substr(caret + 2)));
    }
    if (s == "e") return std::exp(1.0);
    if (s == "-e") return -std::exp(1.0);
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ModelError("cannot parse number '" + s + "'");
    return v;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write output file: " + path);
    out << text;
}

DrawdownSpec load_r_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open threshold table: " + path);
    std::vector<std::pair<double, double>> nodes;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream row(line);
        double z, r;
        if (row >> z >> r) nodes.push_back({z, r});
    }
    return DrawdownSpec::table(std::move(nodes));
}

// The spectrally positive case is handled through the mirror process: negate
// the drift, flip the self-similarity index, and invert the spatial query.
LevyModel mirror_model(const LevyModel& m) {
    return LevyModel(m.sigma2(), -m.mu_tilde(), m.jumps(), m.killing_rate(),
                     -m.alpha());
}

struct Options {
    std::string model_path;
    bool spectrally_positive = false;
    std::string out;
};

std::string engine_record(const std::string& name, double value,
                          const ErrorBudget& b) {
    std::ostringstream os;
    os << name << " = " << format_double(value)
       << " (quadrature " << format_double(b.quadrature) << ", truncation "
       << format_double(b.truncation) << ", interpolation "
       << format_double(b.interpolation) << ")\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scale functions and exit problems for positive self-similar "
                 "Markov processes with one-sided jumps"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--model", opt.model_path, "model file")->required();
    app.add_flag("--spectrally-positive", opt.spectrally_positive,
                 "input describes the mirror (upward-jump) process; queries "
                 "are converted through y -> 1/y and relabeled");
    app.add_option("--out", opt.out, "output file ('-' = stdout)");

    std::string s_q = "0", s_theta = "0", s_gamma = "0";
    std::string s_y, s_c, s_d = "inf", s_r, s_xmax = "3", s_rtable;
    std::size_t grid_n = 1024;
    std::string snlp_kind;

    auto* sc_scale = app.add_subcommand("scale", "tabulate scale curves as CSV");
    sc_scale->add_option("--q", s_q);
    sc_scale->add_option("--theta", s_theta);
    sc_scale->add_option("--xmax", s_xmax);
    sc_scale->add_option("--n", grid_n, "grid panels (default 1024)");
    sc_scale->add_option("--snlp", snlp_kind,
                         "dump the underlying Levy closed form instead (W or Z)");

    auto* sc_exit = app.add_subcommand("exit", "two-sided exit transforms");
    sc_exit->add_option("--y", s_y)->required();
    sc_exit->add_option("--c", s_c)->required();
    sc_exit->add_option("--d", s_d)->required();
    sc_exit->add_option("--q", s_q);
    sc_exit->add_option("--theta", s_theta);

    auto* sc_dd = app.add_subcommand("drawdown", "drawdown first-passage transforms");
    sc_dd->add_option("--y", s_y)->required();
    sc_dd->add_option("--d", s_d);
    sc_dd->add_option("--q", s_q);
    sc_dd->add_option("--gamma", s_gamma);
    sc_dd->add_option("--theta", s_theta);
    sc_dd->add_option("--r", s_r, "constant threshold > 1");
    sc_dd->add_option("--r-table", s_rtable, "piecewise-linear threshold file: z r");

    auto* sc_sl = app.add_subcommand("stoploss", "trailing-stop expected payout");
    sc_sl->add_option("--y", s_y)->required();
    sc_sl->add_option("--r", s_r)->required();
    sc_sl->add_option("--q", s_q);

    PathConfig mc_cfg;
    std::string mc_query;
    std::string event_log;
    auto* sc_mc = app.add_subcommand("mc", "Monte Carlo estimates");
    sc_mc->add_option("--query", mc_query,
                      "two_sided | first_passage | drawdown | stoploss")
        ->required();
    sc_mc->add_option("--y", s_y)->required();
    sc_mc->add_option("--c", s_c);
    sc_mc->add_option("--d", s_d);
    sc_mc->add_option("--q", s_q);
    sc_mc->add_option("--theta", s_theta);
    sc_mc->add_option("--gamma", s_gamma);
    sc_mc->add_option("--r", s_r);
    sc_mc->add_option("--r-table", s_rtable);
    sc_mc->add_option("--paths", mc_cfg.n_paths);
    sc_mc->add_option("--seed", mc_cfg.base_seed);
    sc_mc->add_option("--dt", mc_cfg.dt);
    sc_mc->add_option("--horizon", mc_cfg.horizon);
    sc_mc->add_option("--levy-horizon", mc_cfg.levy_horizon);
    sc_mc->add_option("--threads", mc_cfg.threads);
    bool no_bridge = false, antithetic = false;
    sc_mc->add_flag("--no-bridge", no_bridge);
    sc_mc->add_flag("--antithetic", antithetic);
    sc_mc->add_option("--event-log", event_log,
                      "write per-path event CSV (audit; use few paths)");

    VerifyOptions vopt;
    auto* sc_verify = app.add_subcommand(
        "verify", "closed forms vs Monte Carlo, one row per identity");
    sc_verify->add_option("--paths", vopt.n_paths);
    sc_verify->add_option("--seed", vopt.seed);
    sc_verify->add_option("--dt", vopt.dt);
    sc_verify->add_option("--threads", vopt.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (const char* env = std::getenv("PSSMP_THREADS")) {
            unsigned env_threads = static_cast<unsigned>(std::atoi(env));
            if (mc_cfg.threads == 0) mc_cfg.threads = env_threads;
            if (vopt.threads == 0) vopt.threads = env_threads;
        }
        LevyModel model = load_model_file(opt.model_path);
        const bool sp = opt.spectrally_positive;
        if (sp) model = mirror_model(model);

        auto q = parse_expr(s_q);
        auto theta = parse_expr(s_theta);
        auto gamma = parse_expr(s_gamma);

        if (sc_scale->parsed()) {
            double x_max = parse_expr(s_xmax);
            if (!snlp_kind.empty()) {
                LogGrid geom = LogGrid::make(x_max, grid_n);
                ScaleFunction f = snlp_kind == "Z"
                                      ? z_scale(model, q, theta)
                                      : w_scale(model, q);
                write_text(opt.out, log_grid_csv(sample(f, geom), f));
                return 0;
            }
            GridSpec spec{x_max, grid_n};
            ScaleCurve w = build_scale_w(model, q, spec);
            ScaleCurve z = build_scale_z(model, q, theta, spec);
            write_text(opt.out, scale_set_csv(model, w, z));
            return 0;
        }

        if (sc_exit->parsed()) {
            double y = parse_expr(s_y), c = parse_expr(s_c), d = parse_expr(s_d);
            if (sp) {
                std::swap(c, d);
                y = 1.0 / y;
                c = 1.0 / c;
                d = 1.0 / d;
            }
            ExitEngine engine(model);
            double up = engine.two_sided_up({y, c, d, q, theta});
            double dn = engine.two_sided_down({y, c, d, q, theta});
            std::ostringstream os;
            os << "# query: y = " << format_double(y) << ", c = "
               << format_double(c) << ", d = " << format_double(d) << ", q = "
               << format_double(q) << ", theta = " << format_double(theta)
               << "\n";
            if (!sp) {
                os << "continuous_up_exit = " << format_double(up) << "\n";
                os << "jump_down_exit = " << format_double(dn) << "\n";
            } else {
                os << "continuous_down_exit = " << format_double(up) << "\n";
                os << "jump_up_exit = " << format_double(dn) << "\n";
                os << "# mirror process: Mellin weight applies to the inverted "
                      "overshoot (d/Y)^theta\n";
            }
            write_text(opt.out, os.str());
            return 0;
        }

        if (sc_dd->parsed() || sc_sl->parsed() || sc_mc->parsed()) {
            // threshold spec shared by the remaining commands
            DrawdownSpec r = DrawdownSpec::constant(2.0);
            bool have_r = false;
            if (!s_rtable.empty()) {
                r = load_r_table(s_rtable);
                have_r = true;
            } else if (!s_r.empty()) {
                r = DrawdownSpec::constant(parse_expr(s_r));
                have_r = true;
            }
            if (sp && have_r && !r.is_constant()) {
                // drawup threshold given against the running infimum of the
                // mirror process; restate against the running maximum
                std::vector<std::pair<double, double>> nodes;
                for (double z : r.breakpoints()) nodes.push_back({1.0 / z, r(z)});
                r = DrawdownSpec::table(std::move(nodes));
            }

            if (sc_dd->parsed()) {
                if (!have_r) throw ModelError("drawdown needs --r or --r-table");
                double y = parse_expr(s_y), d = parse_expr(s_d);
                if (sp) {
                    y = 1.0 / y;
                    d = std::isfinite(d) ? 1.0 / d : d;
                    if (std::isfinite(d) && d > y)
                        throw ModelError("mirror barrier must satisfy d <= y");
                    // mirrored barrier is below the start; rerun as if upper
                    std::swap(y, d);
                    if (!std::isfinite(y))
                        throw ModelError("mirror drawup needs a finite barrier");
                }
                ExitEngine engine(model);
                std::ostringstream os;
                os << "# query: y = " << format_double(y) << ", d = "
                   << format_double(d) << ", q = " << format_double(q)
                   << ", gamma = " << format_double(gamma) << ", theta = "
                   << format_double(theta) << "\n";
                const char* label = sp ? "drawup" : "drawdown";
                if (std::isfinite(d)) {
                    EngineResult s = engine.drawdown_survival(y, d, q, r);
                    os << label << "_survival = " << format_double(s.value)
                       << "\n";
                }
                EngineResult tr =
                    engine.drawdown_transform(y, d, q, gamma, theta, r);
                os << engine_record(std::string(label) + "_transform", tr.value,
                                    tr.budget);
                write_text(opt.out, os.str());
                return 0;
            }

            if (sc_sl->parsed()) {
                if (sp)
                    throw ModelError(
                        "trailing stop-loss is defined for the spectrally "
                        "negative orientation only");
                ExitEngine engine(model);
                EngineResult v =
                    engine.stoploss_value(parse_expr(s_y), parse_expr(s_r), q);
                std::ostringstream os;
                os << "# query: y = " << format_double(parse_expr(s_y))
                   << ", r = " << format_double(parse_expr(s_r)) << ", q = "
                   << format_double(q) << "\n";
                os << engine_record("stoploss_value", v.value, v.budget);
                write_text(opt.out, os.str());
                return 0;
            }

            // mc
            mc_cfg.barrier_correction = !no_bridge;
            mc_cfg.antithetic = antithetic;
            double y = parse_expr(s_y);
            if (sp) throw ModelError("mc works on the spectrally negative "
                                     "representative; mirror the query manually");
            std::ostringstream os;
            if (!event_log.empty()) {
                std::ofstream log(event_log, std::ios::binary);
                if (!log) throw ModelError("cannot write event log");
                log << "path_id,event,levy_time,lamperti_time,y_value\n";
                write_event_log(model, std::log(y), mc_cfg,
                                [&](const PathEvent& ev) {
                                    log << ev.path_id << "," << ev.event << ","
                                        << format_double(ev.levy_time) << ","
                                        << format_double(ev.lamperti_time) << ","
                                        << format_double(ev.y_value) << "\n";
                                });
            }
            auto print_estimate = [&](const char* name, const McEstimate& e) {
                os << name << " = " << format_double(e.mean) << " +- "
                   << format_double(e.std_error) << " (n_eff " << e.n_effective
                   << "/" << e.n_paths << ", seed " << e.seeds.base_seed
                   << ")\n";
            };
            if (mc_query == "two_sided") {
                auto est = estimate_two_sided(model, y, parse_expr(s_c),
                                              parse_expr(s_d), q, theta, mc_cfg);
                print_estimate("up", est.up);
                print_estimate("down", est.down);
            } else if (mc_query == "first_passage") {
                print_estimate("first_passage",
                               estimate_first_passage(model, y, parse_expr(s_d),
                                                      q, mc_cfg));
            } else if (mc_query == "drawdown") {
                if (!have_r) throw ModelError("mc drawdown needs --r/--r-table");
                double d = parse_expr(s_d);
                print_estimate("drawdown",
                               estimate_drawdown(model, y, d, q, gamma, theta, r,
                                                 mc_cfg));
            } else if (mc_query == "stoploss") {
                if (s_r.empty()) throw ModelError("mc stoploss needs --r");
                print_estimate("stoploss",
                               estimate_stoploss(model, y, parse_expr(s_r), q,
                                                 mc_cfg));
            } else {
                throw ModelError("unknown mc query '" + mc_query + "'");
            }
            write_text(opt.out, os.str());
            return 0;
        }

        if (sc_verify->parsed()) {
            auto rows = verify_model(model, vopt, &std::cerr);
            write_text(opt.out, verify_report_csv(rows));
            return verify_all_ok(rows) ? 0 : 3;
        }
    } catch (const NonConvergence& e) {
        std::cerr << "numerical certification failure: " << e.what() << "\n";
        return 2;
    } catch (const TailNotCertified& e) {
        std::cerr << "numerical certification failure: " << e.what() << "\n";
        return 2;
    } catch (const QuadratureFailure& e) {
        std::cerr << "numerical certification failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
