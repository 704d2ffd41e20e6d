#pragma once

#include <string>

#include "pssmp/levy_model.hpp"
#include "pssmp/levy_scale.hpp"
#include "pssmp/selfsim_scale.hpp"

namespace pssmp {

// Structured key-value text form of a model:
//
//   sigma2 = 1
//   mu_tilde = 0.25
//   jumps = [[1, 2], [0.5, 3]]
//   p = 0
//   alpha = -1
//
// Values are written with 17 significant digits so that
// parse_model(format_model(m)) reproduces m bit-exactly. '#' starts a
// comment; blank lines are ignored; keys may appear in any order.
std::string format_model(const LevyModel& m);
LevyModel parse_model(const std::string& text);

LevyModel load_model_file(const std::string& path);
void save_model_file(const LevyModel& m, const std::string& path);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// FNV-1a hash of the serialized model, as fixed-width hex; used to label
// CSV artifacts.
std::string model_hash(const LevyModel& m);

// CSV dump of a pair of built curves: '#' metadata lines (model hash, q,
// theta, h, n_terms, trunc_bound) then rows y,W,Wd,Z,Zd. Deterministic: the
// same inputs produce byte-identical text.
std::string scale_set_csv(const LevyModel& m, const ScaleCurve& w,
                          const ScaleCurve& z);

// CSV dump of one sampled closed form: metadata then rows x,value.
std::string log_grid_csv(const LogGrid& g, const ScaleFunction& f);

}  // namespace pssmp
