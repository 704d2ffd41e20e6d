#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pssmp/drawdown.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/selfsim_scale.hpp"

namespace pssmp {

// Simulation controls. The jump epochs and sizes are exact in law; the
// Gaussian part is filled on a dt mesh between epochs with an optional
// Brownian-bridge test for barrier crossings inside each step. horizon caps
// the time-changed clock, levy_horizon the simulated clock itself; capped
// paths contribute zero and are counted separately.
struct PathConfig {
    double dt = 1e-4;
    double horizon = 1e9;
    double levy_horizon = 200.0;
    std::size_t n_paths = 100000;
    std::uint64_t base_seed = 1;
    bool barrier_correction = true;
    bool antithetic = false;
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct SeedRange {
    std::uint64_t base_seed = 0;
    std::uint64_t first_path = 0;
    std::uint64_t n_paths = 0;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;  // paths resolved before either horizon
    std::size_t n_paths = 0;
    SeedRange seeds;
};

struct PathEvent {
    std::uint64_t path_id;
    std::string event;  // jump, max, up_exit, down_exit, drawdown, kill, cap
    double levy_time;
    double lamperti_time;
    double y_value;
};

// Full record of one simulated path (audit and diagnostics; estimators use a
// streaming core instead).
struct PathRecord {
    std::vector<PathEvent> events;
    std::vector<double> t, x, I;  // mesh samples
    bool killed = false;
    bool capped = false;
    double final_x = 0.0;
    double final_levy_time = 0.0;
    double final_lamperti_time = 0.0;

    // phi_s by inverse interpolation of the sampled time change.
    double levy_time_at(double s) const;
};

PathRecord simulate_path(const LevyModel& m, double x0, std::uint64_t seed,
                         const PathConfig& cfg);

struct TwoSidedEstimates {
    McEstimate up;    // e^{-q T_d} on {up exit first, before killing}
    McEstimate down;  // e^{-q T_c} (Y/c)^theta on {down exit first}
};

// Simulates Y from y with barriers c < d on the time-changed clock.
TwoSidedEstimates estimate_two_sided(const LevyModel& m, double y, double c,
                                     double d, double q, double theta,
                                     const PathConfig& cfg);

// e^{-q T_d} on {Y reaches d before killing}, no lower barrier.
McEstimate estimate_first_passage(const LevyModel& m, double y, double d,
                                  double q, const PathConfig& cfg);

// e^{-q Sigma - gamma L} (r(Ybar)/R)^theta on {drawdown first passage before
// T_d and before killing}; d may be +infinity.
McEstimate estimate_drawdown(const LevyModel& m, double y, double d, double q,
                             double gamma, double theta, const DrawdownSpec& r,
                             const PathConfig& cfg);

// Complementary event: e^{-q T_d} on {Y reaches d before the drawdown
// passage and before killing}.
McEstimate estimate_drawdown_survival(const LevyModel& m, double y, double d,
                                      double q, const DrawdownSpec& r,
                                      const PathConfig& cfg);

// e^{-q Sigma} Y_Sigma on {Sigma before killing}.
McEstimate estimate_stoploss(const LevyModel& m, double y, double r_const,
                             double q, const PathConfig& cfg);

struct MartingaleEstimates {
    std::vector<McEstimate> w_process;  // stopped calW martingale at each s
    std::vector<McEstimate> z_process;  // stopped calZ martingale at each s
};

// Means of the stopped processes e^{-q(s ^ T)} calW(Y)/calZ(Y) at the given
// time-changed clock values, barriers 1 and d, evaluated through the supplied
// curves (common paths across the grid).
MartingaleEstimates estimate_martingale(const LevyModel& m, double y, double d,
                                        double q,
                                        const std::vector<double>& s_grid,
                                        const PathConfig& cfg,
                                        const ScaleCurve& w,
                                        const ScaleCurve& z);

// Per-path event log for audits: runs n_paths through the recording
// simulator and streams CSV rows (path_id, event, levy_time, lamperti_time,
// y_value) to the sink.
void write_event_log(const LevyModel& m, double x0, const PathConfig& cfg,
                     const std::function<void(const PathEvent&)>& sink);

}  // namespace pssmp
