#include "meik/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>

#include "meik/gridrun.hpp"

namespace meik::cli {

namespace {

Scenario load_with_overrides(const std::string& path, const CommonFlags& flags) {
  Scenario s = Scenario::load(path);
  if (flags.seed) {
    s.rng_seed = *flags.seed;
    s.newton.rng_seed = *flags.seed;
  }
  return s;
}

int write_records(const std::string& out_path, const std::vector<GridRecord>& records, int n) {
  std::ofstream out(out_path);
  if (!out.is_open()) {
    std::cerr << "error: cannot write output file: " << out_path << "\n";
    return 1;
  }
  write_csv(out, records, n);
  return 0;
}

long long count_ok(const std::vector<GridRecord>& records) {
  long long ok = 0;
  for (const auto& r : records) {
    if (r.status == PointStatus::Ok) ++ok;
  }
  return ok;
}

void print_summary(const std::vector<GridRecord>& records) {
  std::map<std::string, long long> by_status;
  for (const auto& r : records) ++by_status[to_string(r.status)];
  std::cout << "rows: " << records.size();
  for (const auto& [status, count] : by_status) {
    std::cout << "  " << status << ": " << count;
  }
  std::cout << "\n";
}

TableRow build_row(const Scenario& s, const TableSelection& sel,
                   const Row7Functions* row7_override) {
  TableParams params = sel.params;
  if (row7_override) params.row7 = *row7_override;
  return make_table_row(sel.row, s.n, params);
}

}  // namespace

int cmd_evaluate(const std::string& scenario_path, const std::string& out_path,
                 const CommonFlags& flags) {
  try {
    const Scenario s = load_with_overrides(scenario_path, flags);
    if (s.grid.x.empty()) throw ScenarioError("missing field 'grid'");
    const ImplicitSolution sol = s.build_solution();
    const auto records = run_grid(sol, s.grid, s.newton, {flags.threads});
    if (int rc = write_records(out_path, records, s.n)) return rc;
    print_summary(records);
    return count_ok(records) > 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_verify_table(const std::string& scenario_path, const CommonFlags& flags) {
  try {
    const Scenario s = load_with_overrides(scenario_path, flags);
    if (!s.table) throw ScenarioError("missing field 'table'");
    const TableSelection& sel = *s.table;

    std::vector<TableRow> rows;
    if (sel.row == 7) {
      auto choices = sel.row7_choices;
      if (choices.empty()) choices = row7_default_choices();
      for (const auto& c : choices) rows.push_back(build_row(s, sel, &c));
    } else {
      rows.push_back(build_row(s, sel, nullptr));
    }

    bool all_pass = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::uint64_t seed = s.rng_seed ^ (0x51ed270b1a2fce13ULL * (i + 1));
      const TableReport report = verify_table(rows[i], sel.samples, sel.tol, seed);
      std::cout << "row " << report.row_id;
      if (rows.size() > 1) std::cout << " (choice " << i + 1 << ")";
      std::cout << "  samples " << sel.samples << "  tol " << sel.tol << "\n";
      for (const auto& g : report.generators) {
        std::cout << "  " << (g.max_defect <= sel.tol ? "pass" : "FAIL") << "  "
                  << g.id << "  max defect " << g.max_defect << "\n";
      }
      all_pass = all_pass && report.pass;
    }
    return all_pass ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_flow(const std::string& scenario_path, const std::string& generator_id,
             double eps, const std::string& out_path, const CommonFlags& flags) {
  try {
    const Scenario s = load_with_overrides(scenario_path, flags);
    if (!s.table) throw ScenarioError("missing field 'table' (flow picks generators from a row)");
    if (s.grid.x.empty()) throw ScenarioError("missing field 'grid'");
    const TableRow row = build_row(s, *s.table, nullptr);

    const VectorField* generator = nullptr;
    for (const auto& g : row.generators) {
      if (g.id == generator_id) {
        generator = &g;
        break;
      }
    }
    if (!generator) {
      std::string known;
      for (const auto& g : row.generators) known += " " + g.id;
      throw ScenarioError("row " + std::to_string(row.row_id) +
                          " has no generator '" + generator_id + "'; known:" + known);
    }

    const AffineFlow flow(*generator, eps);
    const ImplicitSolution sol = s.build_solution();
    const auto records = run_grid_flow(sol, flow, s.grid, s.newton, {flags.threads});
    if (int rc = write_records(out_path, records, s.n)) return rc;

    long long ok = 0, good = 0;
    for (const auto& r : records) {
      if (r.status != PointStatus::Ok) continue;
      ++ok;
      if (r.res_fd <= 1e-4) ++good;
    }
    print_summary(records);
    std::cout << "flow " << generator_id << " eps " << eps << ": " << good << "/" << ok
              << " ok points within 1e-4\n";
    if (ok == 0) return 2;
    return (static_cast<double>(good) >= 0.95 * static_cast<double>(ok)) ? 0 : 2;
  } catch (const NonAffineGenerator& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_rank(const std::string& scenario_path, const std::string& out_path,
             const CommonFlags& flags) {
  try {
    const Scenario s = load_with_overrides(scenario_path, flags);
    if (s.grid.x.empty()) throw ScenarioError("missing field 'grid'");
    const ImplicitSolution sol = s.build_solution();
    const auto records = run_grid(sol, s.grid, s.newton, {flags.threads});
    if (int rc = write_records(out_path, records, s.n)) return rc;

    std::map<int, long long> histogram;
    for (const auto& r : records) {
      if (r.status == PointStatus::Ok) ++histogram[r.rank];
    }
    print_summary(records);
    for (const auto& [rank, count] : histogram) {
      std::cout << "rank " << rank << ": " << count << "\n";
    }
    return count_ok(records) > 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace meik::cli
