#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace attrloss {

struct GradCheckRow {
  std::string target;
  std::int64_t instances = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double tolerance = 1e-5;

  bool all_pass() const;
  std::string table() const;
};

/// Central finite differences (step 1e-5) against the analytic gradients of
/// every loss and the backbone, over seeded randomized small instances.
/// Relative error uses |a - fd| / max(1, |a| + |fd|). With `corrupt` set,
/// one analytic component per target is perturbed first; the report must
/// then fail, which gives the harness a negative control.
GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t instances_per_target,
                              bool corrupt = false);

}  // namespace attrloss
