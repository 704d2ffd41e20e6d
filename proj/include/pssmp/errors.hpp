#pragma once

#include <stdexcept>
#include <string>

namespace pssmp {

// Invalid model parameters or malformed model text.
struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Two grids with different geometry were combined.
struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The zero set of psi - q contains a cluster of roots too degenerate for the
// partial-fraction representation (multiplicity three or more, or two nearly
// coincident but distinct roots). Perturbing q by ~1e-6 relative separates
// the near-coincident case.
struct RepeatedRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A series/iteration failed to converge or to certify its truncation error
// within the term budget.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation requires alpha >= 0 (first-passage-upward scale functions have
// no known analogue for alpha < 0).
struct UnsupportedIndexError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Exit query violates 0 < c <= y <= d.
struct BarrierOrderError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Adaptive quadrature could not reach the requested tolerance.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An improper integral's tail could not be bounded below the certification
// threshold (value may be infinite or decay too slowly).
struct TailNotCertified : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pssmp
