#include <string>

#include "CLI11.hpp"
#include "meik/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"meikonal: implicit general solutions and symmetry checks for u_a u_a = F(u_t)"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out = "out.csv";
  std::string generator;
  double eps = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
    if (with_out) cmd->add_option("--out", out, "output CSV path");
    cmd->add_option("--seed", seed, "override the scenario rng seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  };

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate the solution on the grid");
  add_common(evaluate, true);

  CLI::App* verify = app.add_subcommand("verify-table", "verify a classification row");
  add_common(verify, false);

  CLI::App* flow = app.add_subcommand("flow", "push the solution through an affine generator flow");
  add_common(flow, true);
  flow->add_option("--generator", generator, "generator id within the selected row")->required();
  flow->add_option("--eps", eps, "flow parameter")->required();

  CLI::App* rank = app.add_subcommand("rank", "evaluate and summarize Hessian ranks");
  add_common(rank, true);

  CLI11_PARSE(app, argc, argv);

  meik::cli::CommonFlags flags;
  if (seed_set) flags.seed = seed;
  flags.threads = threads;

  if (evaluate->parsed()) return meik::cli::cmd_evaluate(scenario, out, flags);
  if (verify->parsed()) return meik::cli::cmd_verify_table(scenario, flags);
  if (flow->parsed()) return meik::cli::cmd_flow(scenario, generator, eps, out, flags);
  if (rank->parsed()) return meik::cli::cmd_rank(scenario, out, flags);
  return 1;
}
