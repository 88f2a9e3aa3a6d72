#include <iostream>

#include <CLI11.hpp>

#include "synctool/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scale-free H-infinity almost synchronization toolkit"};
  std::string command;
  std::string scenario;
  double eps = 0.0;
  std::uint64_t seed = 0;
  synctool::cli::RunOptions opts;
  app.add_option("command", command, "check | synth | analyze | simulate | sweep")
      ->required()
      ->check(CLI::IsMember({"check", "synth", "analyze", "simulate", "sweep"}));
  app.add_option("scenario", scenario, "scenario JSON file")->required();
  auto* eps_opt = app.add_option("--eps", eps, "tuning parameter in (0, 1]");
  auto* seed_opt = app.add_option("--seed", seed, "seed for initial conditions");
  app.add_option("--out", opts.out_dir, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "ERROR USAGE " << e.what() << "\n";
    return 2;
  }
  if (*eps_opt) opts.eps = eps;
  if (*seed_opt) opts.seed = seed;
  try {
    synctool::cli::run(command, scenario, opts, std::cout);
  } catch (const synctool::Error& e) {
    std::cerr << "ERROR " << e.code() << " " << e.what() << "\n";
    return synctool::cli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ERROR INTERNAL " << e.what() << "\n";
    return 1;
  }
  return 0;
}
