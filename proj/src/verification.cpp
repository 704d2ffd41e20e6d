#include "pssmp/verification.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "pssmp/errors.hpp"
#include "pssmp/exit_engine.hpp"
#include "pssmp/model_io.hpp"

namespace pssmp {

namespace {

VerifyRow make_row(const std::string& name, double formula,
                   const McEstimate& mc) {
    VerifyRow row;
    row.name = name;
    row.formula = formula;
    row.mc_mean = mc.mean;
    row.mc_se = mc.std_error;
    row.z_score = mc.std_error > 0.0
                      ? (formula - mc.mean) / mc.std_error
                      : (formula == mc.mean ? 0.0
                                            : std::numeric_limits<double>::infinity());
    row.verdict = std::abs(row.z_score) <= 3.0 ? "ok" : "FAIL";
    return row;
}

}  // namespace

std::vector<VerifyRow> verify_model(const LevyModel& m,
                                    const VerifyOptions& opt,
                                    std::ostream* progress) {
    PathConfig cfg;
    cfg.n_paths = opt.n_paths;
    cfg.base_seed = opt.seed;
    cfg.dt = opt.dt;
    cfg.threads = opt.threads;
    cfg.levy_horizon = opt.levy_horizon;

    ExitEngine engine(m);
    std::vector<VerifyRow> rows;
    auto note = [&](const VerifyRow& row) {
        rows.push_back(row);
        if (progress)
            *progress << row.name << ": formula " << row.formula << " mc "
                      << row.mc_mean << " +- " << row.mc_se << " z "
                      << row.z_score << " " << row.verdict << "\n";
    };

    const double y = 1.2, c = 0.8, d = 2.0, q = 0.5;

    {
        auto mc = estimate_two_sided(m, y, c, d, q, 0.0, cfg);
        note(make_row("two_sided_up",
                      engine.two_sided_up({y, c, d, q, 0.0}), mc.up));
        note(make_row("two_sided_down_theta0",
                      engine.two_sided_down({y, c, d, q, 0.0}), mc.down));
    }
    {
        PathConfig cfg1 = cfg;
        cfg1.base_seed = opt.seed + 1;
        auto mc = estimate_two_sided(m, y, c, d, q, 1.0, cfg1);
        note(make_row("two_sided_down_theta1",
                      engine.two_sided_down({y, c, d, q, 1.0}), mc.down));
    }
    if (m.alpha() >= 0.0) {
        PathConfig cfg2 = cfg;
        cfg2.base_seed = opt.seed + 2;
        auto mc = estimate_first_passage(m, y, d, q, cfg2);
        note(make_row("first_passage_up", engine.first_passage_up(y, d, q),
                      mc));
    }
    {
        DrawdownSpec r = DrawdownSpec::constant(1.8);
        PathConfig cfg3 = cfg;
        cfg3.base_seed = opt.seed + 3;
        auto mc = estimate_drawdown(m, 1.0, 2.2, 0.3, 0.0, 0.0, r, cfg3);
        note(make_row("drawdown_const_r",
                      engine.drawdown_transform(1.0, 2.2, 0.3, 0.0, 0.0, r).value,
                      mc));
        auto mc_s = estimate_drawdown_survival(m, 1.0, 2.2, 0.3, r, cfg3);
        note(make_row("drawdown_survival",
                      engine.drawdown_survival(1.0, 2.2, 0.3, r).value, mc_s));
    }
    {
        DrawdownSpec r = DrawdownSpec::constant(1.8);
        PathConfig cfg4 = cfg;
        cfg4.base_seed = opt.seed + 4;
        auto mc = estimate_drawdown(m, 1.0, 2.2, 0.3, 0.5, 1.0, r, cfg4);
        note(make_row(
            "drawdown_const_r_gamma_theta",
            engine.drawdown_transform(1.0, 2.2, 0.3, 0.5, 1.0, r).value, mc));
    }
    {
        DrawdownSpec r = DrawdownSpec::table(
            {{0.7, 1.5}, {1.8, 2.1}, {3.5, 1.7}});
        PathConfig cfg5 = cfg;
        cfg5.base_seed = opt.seed + 5;
        auto mc = estimate_drawdown(m, 1.0, 2.5, 0.2, 0.0, 0.0, r, cfg5);
        note(make_row("drawdown_table_r",
                      engine.drawdown_transform(1.0, 2.5, 0.2, 0.0, 0.0, r).value,
                      mc));
    }
    bool stoploss_ok =
        !(m.alpha() < 0.0 &&
          (m.killing_rate() > 0.0 || m.psi_prime(0.0) > 0.0));
    if (stoploss_ok) {
        PathConfig cfg7 = cfg;
        cfg7.base_seed = opt.seed + 7;
        double qs = std::max(q, 1.0);
        try {
            double v = engine.stoploss_value(1.0, 1.5, qs).value;
            auto mc = estimate_stoploss(m, 1.0, 1.5, qs, cfg7);
            note(make_row("stoploss", v, mc));
        } catch (const TailNotCertified&) {
            // value not certifiable for this model; omit the row
        }
    }
    return rows;
}

std::string verify_report_csv(const std::vector<VerifyRow>& rows) {
    std::ostringstream out;
    out << "name,formula,mc_mean,mc_se,z_score,verdict\n";
    for (const auto& r : rows)
        out << r.name << "," << format_double(r.formula) << ","
            << format_double(r.mc_mean) << "," << format_double(r.mc_se) << ","
            << format_double(r.z_score) << "," << r.verdict << "\n";
    return out.str();
}

bool verify_all_ok(const std::vector<VerifyRow>& rows) {
    for (const auto& r : rows)
        if (r.verdict != "ok") return false;
    return !rows.empty();
}

}  // namespace pssmp
