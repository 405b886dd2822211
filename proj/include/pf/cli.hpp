#pragma once

#include <string>
#include <vector>

#include "pf/elements.hpp"
#include "pf/hydrogen.hpp"
#include "pf/ritz.hpp"

namespace pf {

struct RunConfig {
  double lambda = 2.0;
  std::string taper = "smooth_cubic";
  double alpha_min = 1e-4;
  double alpha_max = 1e-1;
  int alpha_points = 12;
  std::uint64_t seed = 42;
  long budget_3d = 100000;   // tensor nodes, up to five dimensions
  long budget_6d = 1000000;  // digital-net points, six to eight dimensions
  long budget_9d = 1000000;  // nine dimensions and up
  int modes_radial = 1;
  int modes_angular = 6;
  int nmax = 4;
  std::string out = ".";
  std::string cache;  // empty: no element cache
  int jobs = 0;       // 0: available parallelism

  void validate() const;
  CutoffProfile profile() const;
  Budget budget() const;
  std::vector<double> alphas() const;
  /// Fields that determine results; paths and worker count are excluded.
  std::string to_json() const;
};

enum ExitCode : int { kOk = 0, kValidation = 2, kIdentity = 3, kConvergence = 4 };

void cmd_coefficients(const RunConfig& c);
void cmd_curve(const RunConfig& c);
void cmd_oracle(const RunConfig& c);
void cmd_hydrogen(const RunConfig& c);

/// Parses arguments, dispatches, and maps library errors to exit codes.
int run_cli(int argc, const char* const* argv);

}  // namespace pf
