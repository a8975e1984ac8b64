#pragma once

#include <cmath>
#include <vector>

#include "ucp/king.hpp"
#include "ucp/plasma_params.hpp"

namespace ucp::test {

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// The default plasma with the truncation at 12 sigma, solved once per process.
inline const KingEquilibrium& default_king() {
  static const KingEquilibrium eq = [] {
    PlasmaSpec spec;
    return solve_selfconsistent(spec, 7.0, 12.0 * spec.sigma);
  }();
  return eq;
}

}  // namespace ucp::test
