#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvsn::ad {

struct GradCheckResult {
  std::string op;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int coordinates = 0;
  bool passed = false;
};

// Names of all ops with a registered gradient check, in a fixed order.
std::vector<std::string> gradcheck_ops();

// Compares the float graph gradient of a random projection of the op output
// against central differences of a 64-bit forward. Inputs are drawn from
// `seed` away from kinks. Unknown names raise a lookup error that lists the
// registry.
GradCheckResult grad_check(const std::string& op, std::uint64_t seed = 0, double eps = 1e-3);

}  // namespace tvsn::ad
