#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "asi/asdecomp.hpp"
#include "asi/experiments.hpp"
#include "asi/run_config.hpp"
#include "criteria.hpp"

namespace fs = std::filesystem;

namespace {

asi::RunConfig config_from(const std::string& path) { return path.empty() ? asi::RunConfig{} : asi::load_config(path); }

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> ids;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) ids.push_back(std::stoi(item));
  return ids;
}

void print_record(const asi::IterationRecord& r) {
  std::fprintf(stderr, "m=%3d K=%4d misfit=%.6e tau=%.4f |g|=%.3e e=%.4f\n", r.m, r.k, r.misfit, r.tau, r.grad_norm,
               r.rel_error);
}

int gen_data(const std::string& config_path, const std::string& out) {
  const asi::RunConfig config = config_from(config_path);
  const asi::DataSet data = asi::generate_data(config);
  asi::save_data(data, config, out);
  std::printf("%s data, n=%d (data mesh %d), delta_abs=%.6e, written to %s\n", asi::to_string(data.problem), data.n,
              data.n_fine, data.delta_abs, out.c_str());
  return 0;
}

int invert(const std::string& method, const std::string& config_path, const std::string& data_dir,
           const std::string& out) {
  const asi::RunConfig config = config_from(config_path);
  const asi::DataSet data = asi::load_data(data_dir);
  if (data.n != config.n) throw asi::InvalidArgument("config n differs from the data set");
  if (data.problem != config.problem) throw asi::InvalidArgument("config problem differs from the data set");
  const auto r = asi::run_inversion(config, data, asi::parse_method(method), out, print_record);
  std::printf("%s: exit %s, m*=%d, e=%.4f, %.1f s, outputs in %s\n", method.c_str(), r.exit.c_str(), r.m_star,
              r.history[r.m_star].rel_error, r.seconds, out.c_str());
  return 0;
}

int asdecomp(const std::string& medium, int k, double eps, const std::string& out) {
  const asi::FeFunction u = asi::read_grid(medium);
  const asi::FeSpace space(u.mesh);
  const asi::Basis basis = asi::as_basis(space, u.values, k, eps);
  fs::create_directories(out);
  std::ofstream csv((fs::path(out) / "eigenvalues.csv").string());
  csv << "k,lambda\n";
  for (int i = 0; i < basis.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%d,%.17g\n", i + 1, (*basis.eigenvalues)[i]);
    csv << line;
    char name[32];
    std::snprintf(name, sizeof name, "phi_%03d.grid", i + 1);
    asi::write_grid((fs::path(out) / name).string(), asi::FeFunction(u.mesh, basis.functions.col(i)), "phi");
  }
  std::printf("%d eigenpairs written to %s\n", basis.size(), out.c_str());
  return 0;
}

int verify(const std::string& suite, const std::string& expected, bool verbose) {
  using namespace asi::acceptance;
  const auto ids = criteria_in(suite == "fast" ? Suite::kFast : Suite::kAll);
  return run_criteria(ids, parse_ids(expected), std::cout, verbose ? &std::cerr : nullptr).ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive spectral inversion for inverse medium problems"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the default configuration and exit");

  std::string config_path, out, data_dir, method = "asi", medium, suite = "all", expected;
  int k = 6;
  double eps = 1e-8;

  auto* gen = app.add_subcommand("gen-data", "generate synthetic noisy data");
  gen->add_option("--config", config_path, "INI configuration")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "output directory")->required();

  auto* inv = app.add_subcommand("invert", "run an inversion on stored data");
  inv->add_option("--method", method, "asi, asi0 or tikhonov")->check(CLI::IsMember({"asi", "asi0", "tikhonov"}));
  inv->add_option("--config", config_path, "INI configuration")->check(CLI::ExistingFile);
  inv->add_option("--data", data_dir, "directory written by gen-data")->required()->check(CLI::ExistingDirectory);
  inv->add_option("--out", out, "output directory")->required();

  auto* dec = app.add_subcommand("asdecomp", "adaptive spectral basis of a medium");
  dec->add_option("--medium", medium, "medium grid file")->required()->check(CLI::ExistingFile);
  dec->add_option("--k", k, "number of eigenpairs")->check(CLI::PositiveNumber);
  dec->add_option("--eps", eps, "gradient regularization")->check(CLI::PositiveNumber);
  dec->add_option("--out", out, "output directory")->required();

  auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
  ver->add_option("--suite", suite, "fast or all")->check(CLI::IsMember({"fast", "all"}));
  ver->add_option("--expected-failures", expected, "comma-separated criteria known to fail");
  bool verbose = false;
  ver->add_flag("-v,--verbose", verbose, "log every outer iteration to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config) {
      std::cout << asi::format_config(config_path.empty() ? asi::RunConfig{} : asi::load_config(config_path));
      return 0;
    }
    if (gen->parsed()) return gen_data(config_path, out);
    if (inv->parsed()) return invert(method, config_path, data_dir, out);
    if (dec->parsed()) return asdecomp(medium, k, eps, out);
    if (ver->parsed()) return verify(suite, expected, verbose);
    std::cout << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
