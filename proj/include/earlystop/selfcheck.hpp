#pragma once

#include <iosfwd>

namespace earlystop {

// Runs the invariant and property suite (kernel symmetry and positivity,
// Parseval, reconstruction, filter bounds, dimension sandwich, risk
// identities, monotonicity, stopping-rule closed forms), printing one
// PASS/FAIL line per check.  Returns true iff every check passed.
bool run_self_checks(std::ostream& out);

}  // namespace earlystop
