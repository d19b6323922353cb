#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "equivar/cli/commands.hpp"

namespace {

using namespace equivar;
using namespace equivar::cli;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

int finish(const Report& r, const std::string& json_path) {
  r.print(std::cout);
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) {
      std::cerr << "equivar: cannot write '" << json_path << "'\n";
      return kExitUsage;
    }
    out << r.to_json().dump(2) << '\n';
  }
  return r.ok() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate-free Lagrangian mechanics checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Options opt;
  std::string file, json_path;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int N = 0;
  std::string csv;

  auto common = [&](CLI::App* sub, bool needs_file) {
    if (needs_file) sub->add_option("file", file, "problem file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed (overrides the file's [seed])");
    sub->add_option("--json", json_path, "write the JSON report here");
    sub->add_option("--tol", tol, "override the check tolerance")->check(CLI::PositiveNumber);
    return sub;
  };
  auto* derive = common(app.add_subcommand("derive", "Euler components, momentum, Hamiltonian, scalars"), true);
  auto* equiv = common(app.add_subcommand("equivariance", "transformation laws under diffeo sweeps"), true);
  equiv->add_option("--diffeos", opt.diffeos, "number of random diffeos")->check(CLI::NonNegativeNumber);
  auto* noether = common(app.add_subcommand("noether", "symmetry classification and charges"), true);
  auto* deeffect = common(app.add_subcommand("deeffect", "autonomization and quasi-invariance absorption"), true);
  deeffect->add_option("--mode", opt.mode, "time or quasi")->check(CLI::IsMember({"time", "quasi"}));
  auto* integ = common(app.add_subcommand("integrate", "RK4 trajectory"), true);
  integ->add_option("--csv", csv, "write the trajectory as CSV");
  auto* mub = common(app.add_subcommand("mub", "mutually unbiased Fourier pairs"), false);
  mub->add_option("--N", N, "dimension (default: 2..12)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--tol")) opt.tol = tol;
  if (sub == mub && mub->count("--N")) opt.N = N;
  if (sub == integ && integ->count("--csv")) opt.csv = csv;

  try {
    if (sub == mub) return finish(cmd_mub(opt), json_path);
    ProblemFile p = load_problem(file);
    if (sub == derive) return finish(cmd_derive(p, opt), json_path);
    if (sub == equiv) return finish(cmd_equivariance(p, opt), json_path);
    if (sub == noether) return finish(cmd_noether(p, opt), json_path);
    if (sub == deeffect) return finish(cmd_deeffect(p, opt), json_path);
    if (sub == integ) return finish(cmd_integrate(p, opt), json_path);
  } catch (const ProblemError& e) {
    std::cerr << file << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "equivar: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "equivar: precondition: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "equivar: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
