#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace meik::cli {

struct CommonFlags {
  std::optional<std::uint64_t> seed;  // overrides the scenario rng seed
  int threads = 0;                    // 0 = auto
};

/// Evaluate the scenario's solution over its grid and write CSV.
/// Exit 0 if at least one point is ok, 2 if none, 1 on scenario error.
int cmd_evaluate(const std::string& scenario_path, const std::string& out_path,
                 const CommonFlags& flags);

/// Verify the selected classification row; prints per-generator max defects.
/// Exit 0 iff all defects are within tolerance, 1 on invalid row/parameters.
int cmd_verify_table(const std::string& scenario_path, const CommonFlags& flags);

/// Push the scenario's solution through exp(eps * X) for an affine generator
/// of the selected row and verify residuals on the grid.
/// Exit 0 iff FD residual <= 1e-4 at >= 95% of ok points; 1 for a non-affine
/// or unknown generator; 2 otherwise.
int cmd_flow(const std::string& scenario_path, const std::string& generator_id,
             double eps, const std::string& out_path, const CommonFlags& flags);

/// Evaluate the grid and summarize the spatial Hessian rank distribution.
/// Exit 0 if at least one point is ok, 2 if none, 1 on scenario error.
int cmd_rank(const std::string& scenario_path, const std::string& out_path,
             const CommonFlags& flags);

}  // namespace meik::cli
