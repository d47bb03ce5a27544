#pragma once

#include "mpcclab/pipa.hpp"
#include "mpcclab/trpipa.hpp"

namespace mpcclab::detail {

// Shared iteration for both solvers; tr == nullptr selects the plain
// feasibility-tied radius, otherwise the TrConfig's policy decides.
SolveResult run_penalty_interior_point(const MpccProblem& problem, const PipaConfig& cfg,
                                       const Point& start, const TrConfig* tr);

} // namespace mpcclab::detail
