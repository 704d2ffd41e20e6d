#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pssmp/levy_model.hpp"
#include "pssmp/monte_carlo.hpp"

namespace pssmp {

// One closed-form-vs-simulation comparison.
struct VerifyRow {
    std::string name;
    double formula = 0.0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double z_score = 0.0;
    std::string verdict;  // "ok" or "FAIL" (|formula - mc| <= 3 SE)
};

struct VerifyOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 42;
    double dt = 1e-4;
    unsigned threads = 0;
    double levy_horizon = 200.0;
};

// Battery of identities for the given model: two-sided exit (both
// directions, theta 0 and 1), first passage upwards when alpha >= 0,
// drawdown survival/transform for constant and piecewise-linear thresholds,
// and the trailing-stop value when the model admits it. `progress`, when
// non-null, receives one line per completed row.
std::vector<VerifyRow> verify_model(const LevyModel& m,
                                    const VerifyOptions& opt,
                                    std::ostream* progress = nullptr);

// Deterministic CSV report: name,formula,mc_mean,mc_se,z_score,verdict.
std::string verify_report_csv(const std::vector<VerifyRow>& rows);

bool verify_all_ok(const std::vector<VerifyRow>& rows);

}  // namespace pssmp
