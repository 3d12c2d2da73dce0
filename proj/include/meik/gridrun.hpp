#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "meik/scenario.hpp"
#include "meik/verify.hpp"

namespace meik {

enum class PointStatus {
  Ok,
  NoRoot,
  SingularJacobian,
  BranchJump,
  DomainError,
};

std::string to_string(PointStatus s);

/// One CSV row: a (grid point, root) pair, or a failed grid point.
struct GridRecord {
  double t = 0.0;
  Eigen::VectorXd x;
  int root_index = -1;
  double u = 0.0;
  double res_closed = 0.0;
  double res_fd = 0.0;
  int rank = 0;
  double jacobian_cond = 0.0;
  PointStatus status = PointStatus::NoRoot;
  bool has_values = false;
};

struct GridRunOptions {
  int threads = 0;  // 0 = hardware concurrency
};

/// Evaluate an implicit solution over the grid. Points run concurrently;
/// records are assembled in grid-major order (t slowest, x_n fastest), then
/// root order, so output is deterministic for a given seed.
std::vector<GridRecord> run_grid(const ImplicitSolution& sol, const GridSpec& grid,
                                 const NewtonConfig& cfg, const GridRunOptions& opts);

/// Evaluate the pushforward of the solution through an affine flow on the
/// same grid; residuals and rank are measured on the transformed field.
std::vector<GridRecord> run_grid_flow(const ImplicitSolution& sol, const AffineFlow& flow,
                                      const GridSpec& grid, const NewtonConfig& cfg,
                                      const GridRunOptions& opts);

/// CSV schema: t,x1..xn,root,u,res_closed,res_fd,rank,status with numbers at
/// 17 significant digits; failed points leave value fields empty.
void write_csv(std::ostream& out, const std::vector<GridRecord>& records, int n);

}  // namespace meik
