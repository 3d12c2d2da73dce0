#pragma once

#include <optional>
#include <string>
#include <vector>

#include "meik/solutions.hpp"
#include "meik/symmetry.hpp"

namespace meik {

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  int steps = 1;

  double at(int i) const {
    if (steps <= 1) return min;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
};

struct GridSpec {
  AxisSpec t;
  std::vector<AxisSpec> x;

  long long point_count() const {
    long long c = t.steps;
    for (const auto& a : x) c *= a.steps;
    return c;
  }
};

struct TableSelection {
  int row = -1;
  int samples = 100;
  double tol = 1e-9;
  TableParams params;
  std::vector<Row7Functions> row7_choices;  // row 7 only; defaults when empty
};

/// Everything a CLI run needs, loaded from one JSON file.
struct Scenario {
  int n = 0;
  int k = 0;
  FFamily family;
  BranchSelector branch = BranchSelector::principal();
  std::string psi_source = "0";
  std::vector<std::string> w_sources;
  GridSpec grid;
  NewtonConfig newton;
  std::uint64_t rng_seed = 0;
  std::optional<TableSelection> table;

  ImplicitSolution build_solution() const;

  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::string& path);
};

BranchSelector branch_from_json(const nlohmann::json& j);

}  // namespace meik
