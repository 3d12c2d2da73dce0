#include "meik/gridrun.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace meik {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct GridIndexer {
  const GridSpec* grid;

  long long count() const { return grid->point_count(); }

  // t slowest, x1 .. xn with xn fastest.
  void decode(long long p, double* t, Eigen::VectorXd* x) const {
    const int n = static_cast<int>(grid->x.size());
    x->resize(n);
    for (int i = n - 1; i >= 0; --i) {
      const int steps = grid->x[i].steps;
      (*x)(i) = grid->x[i].at(static_cast<int>(p % steps));
      p /= steps;
    }
    *t = grid->t.at(static_cast<int>(p));
  }
};

GridRecord failure_record(double t, const Eigen::VectorXd& x, PointStatus status) {
  GridRecord r;
  r.t = t;
  r.x = x;
  r.status = status;
  return r;
}

PointStatus classify(const Error& e) {
  if (dynamic_cast<const NoRoot*>(&e)) return PointStatus::NoRoot;
  if (dynamic_cast<const SingularJacobian*>(&e)) return PointStatus::SingularJacobian;
  if (dynamic_cast<const BranchJump*>(&e)) return PointStatus::BranchJump;
  return PointStatus::DomainError;
}

template <typename PointFn>
std::vector<GridRecord> run_parallel(const GridSpec& grid, int threads, PointFn&& fn) {
  GridIndexer indexer{&grid};
  const long long total = indexer.count();
  std::vector<std::vector<GridRecord>> per_point(static_cast<std::size_t>(total));

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = static_cast<int>(std::min<long long>(nthreads, total));

  std::atomic<long long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long long p = next.fetch_add(1);
      if (p >= total) break;
      double t;
      Eigen::VectorXd x;
      indexer.decode(p, &t, &x);
      per_point[static_cast<std::size_t>(p)] = fn(p, t, x);
    }
  };

  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<GridRecord> records;
  for (auto& rows : per_point) {
    for (auto& r : rows) records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::string to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Ok: return "ok";
    case PointStatus::NoRoot: return "no_root";
    case PointStatus::SingularJacobian: return "singular_jacobian";
    case PointStatus::BranchJump: return "branch_jump";
    case PointStatus::DomainError: return "domain_error";
  }
  return "?";
}

std::vector<GridRecord> run_grid(const ImplicitSolution& sol, const GridSpec& grid,
                                 const NewtonConfig& cfg, const GridRunOptions& opts) {
  return run_parallel(grid, opts.threads, [&](long long p, double t, const Eigen::VectorXd& x) {
    NewtonConfig point_cfg = cfg;
    point_cfg.rng_seed = mix(cfg.rng_seed, static_cast<std::uint64_t>(p) + 1);

    std::vector<GridRecord> rows;
    EvalResult result;
    try {
      result = sol.evaluate(t, x, point_cfg);
    } catch (const Error& e) {
      rows.push_back(failure_record(t, x, classify(e)));
      return rows;
    }
    for (std::size_t i = 0; i < result.roots.size(); ++i) {
      const Root& root = result.roots[i];
      GridRecord r;
      r.t = t;
      r.x = x;
      r.root_index = static_cast<int>(i);
      r.u = root.u;
      r.jacobian_cond = root.jacobian_cond;
      r.has_values = true;
      try {
        const ResidualReport report = verify_root(sol, point_cfg, t, x, root);
        r.res_closed = report.residual_closed;
        r.res_fd = report.residual_fd;
        r.rank = report.hessian_rank;
        r.status = PointStatus::Ok;
      } catch (const Error& e) {
        r.status = classify(e);
        r.has_values = false;
      }
      rows.push_back(std::move(r));
    }
    return rows;
  });
}

std::vector<GridRecord> run_grid_flow(const ImplicitSolution& sol, const AffineFlow& flow,
                                      const GridSpec& grid, const NewtonConfig& cfg,
                                      const GridRunOptions& opts) {
  return run_parallel(grid, opts.threads, [&](long long p, double t, const Eigen::VectorXd& x) {
    NewtonConfig point_cfg = cfg;
    point_cfg.rng_seed = mix(cfg.rng_seed, static_cast<std::uint64_t>(p) + 1);

    std::vector<GridRecord> rows;
    const auto [t0, x0] = flow.backward_base(t, x);
    EvalResult result;
    try {
      result = sol.evaluate(t0, x0, point_cfg);
    } catch (const Error& e) {
      rows.push_back(failure_record(t, x, classify(e)));
      return rows;
    }
    for (std::size_t i = 0; i < result.roots.size(); ++i) {
      const Root& root = result.roots[i];
      GridRecord r;
      r.t = t;
      r.x = x;
      r.root_index = static_cast<int>(i);
      r.jacobian_cond = root.jacobian_cond;
      r.u = flow.push_value(t0, x0, root.u);
      r.has_values = true;
      try {
        SheetTracker tracker(sol, point_cfg, t0, x0, root);
        const ScalarField transformed = flow.transform(tracker.field());

        const JetPoint closed = flow.push_jet(sol.jet_closed_form(t0, x0, root), t, x);
        r.res_closed = std::abs(residual(sol.family(), closed));
        const JetPoint fd = fd_jet(transformed, t, x);
        r.res_fd = std::abs(residual(sol.family(), fd));
        auto [rank, sv] = hessian_rank(transformed, t, x);
        r.rank = rank;
        r.status = PointStatus::Ok;
      } catch (const Error& e) {
        r.status = classify(e);
        r.has_values = false;
      }
      rows.push_back(std::move(r));
    }
    return rows;
  });
}

namespace {

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<GridRecord>& records, int n) {
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << ",root,u,res_closed,res_fd,rank,status\n";
  for (const auto& r : records) {
    out << format17(r.t);
    for (int i = 0; i < n; ++i) out << "," << format17(r.x(i));
    out << "," << r.root_index;
    if (r.has_values) {
      out << "," << format17(r.u) << "," << format17(r.res_closed) << ","
          << format17(r.res_fd) << "," << r.rank;
    } else if (r.root_index >= 0) {
      // A root existed but verification failed; keep u, drop the rest.
      out << "," << format17(r.u) << ",,,";
    } else {
      out << ",,,,";
    }
    out << "," << to_string(r.status) << "\n";
  }
}

}  // namespace meik
