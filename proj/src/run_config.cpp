#include "asi/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace asi {

namespace pt = boost::property_tree;

const char* to_string(ProblemKind kind) { return kind == ProblemKind::kWave ? "wave" : "elliptic"; }

void RunConfig::validate() const {
  if (n < 8) throw InvalidArgument("config: n must be at least 8");
  if (!(noise >= 0.0)) throw InvalidArgument("config: noise must be nonnegative");
  if (!(source > 0.0) && problem == ProblemKind::kElliptic) throw InvalidArgument("config: source must be positive");
  if (snapshot_every < 0) throw InvalidArgument("config: snapshot_every must be nonnegative");
  if (!(fine_factor >= 1.0)) throw InvalidArgument("config: fine_factor must be at least 1");
  asi.validate();
  if (problem == ProblemKind::kWave) {
    if (wave.num_sources < 1) throw InvalidArgument("config: num_sources must be positive");
    if (!(wave.final_time > 0.0)) throw InvalidArgument("config: final_time must be positive");
  }
  if (tikhonov.max_iter < 1) throw InvalidArgument("config: tikhonov max_iter must be positive");
  if (!phantom.raster_path) asi::validate(phantom);
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"problem", "n", "fine_factor", "noise", "seed", "source", "snapshot_every"}},
      {"phantom", {"name", "background", "discs", "raster"}},
      {"asi",
       {"eps_theta", "eps_psi0", "rho0", "rho1", "tau0", "k1", "m_max", "eps", "enrich",
        "as_basis_size_factor", "drop_tol", "zero_noise_grad_tol", "inner_grad_tol", "inner_max_iter", "eig_tol"}},
      {"wave",
       {"final_time", "dt", "nu", "kappa", "width", "num_sources", "source_inset", "max_medium", "checkpoint_stride",
        "memory_budget_mb", "supershot"}},
      {"tikhonov", {"max_iter", "memory", "grad_tol", "tau0"}},
  };
  return keys;
}

std::string format_discs(const std::vector<DiscInclusion>& discs) {
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < discs.size(); ++i) {
    if (i) out << "; ";
    out << discs[i].center.x << ' ' << discs[i].center.y << ' ' << discs[i].radius << ' ' << discs[i].amplitude;
  }
  return out.str();
}

template <class T>
void read(const pt::ptree& tree, const std::string& key, T& value) {
  if (auto v = tree.get_optional<std::string>(key)) {
    try {
      value = tree.get<T>(key);
    } catch (const pt::ptree_error&) {
      throw InvalidArgument("config: bad value '" + *v + "' for " + key);
    }
  }
}

void read_bool(const pt::ptree& tree, const std::string& key, bool& value) {
  if (auto v = tree.get_optional<std::string>(key)) {
    if (*v == "true" || *v == "1" || *v == "yes") value = true;
    else if (*v == "false" || *v == "0" || *v == "no") value = false;
    else throw InvalidArgument("config: bad boolean '" + *v + "' for " + key);
  }
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) throw InvalidArgument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw InvalidArgument("config: unknown key " + section + "." + key);
  }

  RunConfig c;
  if (auto p = tree.get_optional<std::string>("run.problem")) {
    if (*p == "elliptic") c.problem = ProblemKind::kElliptic;
    else if (*p == "wave") c.problem = ProblemKind::kWave;
    else throw InvalidArgument("config: unknown problem '" + *p + "'");
  }
  read(tree, "run.n", c.n);
  read(tree, "run.fine_factor", c.fine_factor);
  read(tree, "run.noise", c.noise);
  read(tree, "run.seed", c.seed);
  read(tree, "run.source", c.source);
  read(tree, "run.snapshot_every", c.snapshot_every);

  const std::string name = tree.get<std::string>("phantom.name", "six_discs");
  if (name == "six_discs") c.phantom = six_discs();
  else if (name == "three_inclusions") c.phantom = three_inclusions();
  else if (name == "discs") {
    c.phantom = PhantomSpec{};
    c.phantom.name = "discs";
    c.phantom.discs = parse_discs(tree.get<std::string>("phantom.discs", ""));
  } else if (name == "raster") {
    c.phantom = PhantomSpec{};
    c.phantom.name = "raster";
    const auto path = tree.get_optional<std::string>("phantom.raster");
    if (!path) throw InvalidArgument("config: raster phantom needs phantom.raster");
    c.phantom.raster_path = *path;
  } else if (name == "empty") {
    c.phantom = PhantomSpec{};
  } else {
    throw InvalidArgument("config: unknown phantom '" + name + "'");
  }
  if (name != "discs" && tree.get_optional<std::string>("phantom.discs"))
    throw InvalidArgument("config: phantom.discs requires name = discs");
  read(tree, "phantom.background", c.phantom.background);

  read(tree, "asi.eps_theta", c.asi.eps_theta);
  read(tree, "asi.eps_psi0", c.asi.eps_psi0);
  read(tree, "asi.rho0", c.asi.rho0);
  read(tree, "asi.rho1", c.asi.rho1);
  read(tree, "asi.tau0", c.asi.tau0);
  read(tree, "asi.k1", c.asi.k1);
  read(tree, "asi.m_max", c.asi.m_max);
  read(tree, "asi.eps", c.asi.eps);
  read_bool(tree, "asi.enrich", c.asi.enrich);
  read(tree, "asi.as_basis_size_factor", c.asi.as_basis_size_factor);
  read(tree, "asi.drop_tol", c.asi.drop_tol);
  read(tree, "asi.zero_noise_grad_tol", c.asi.zero_noise_grad_tol);
  read(tree, "asi.inner_grad_tol", c.asi.inner.grad_tol);
  read(tree, "asi.inner_max_iter", c.asi.inner.max_iter);
  read(tree, "asi.eig_tol", c.asi.eig.tol);

  read(tree, "wave.final_time", c.wave.final_time);
  read(tree, "wave.dt", c.wave.dt);
  read(tree, "wave.nu", c.wave.nu);
  read(tree, "wave.kappa", c.wave.kappa);
  read(tree, "wave.width", c.wave.width);
  read(tree, "wave.num_sources", c.wave.num_sources);
  read(tree, "wave.source_inset", c.wave.source_inset);
  read(tree, "wave.max_medium", c.wave.max_medium);
  read(tree, "wave.checkpoint_stride", c.wave.checkpoint_stride);
  if (auto mb = tree.get_optional<double>("wave.memory_budget_mb"))
    c.wave.memory_budget_bytes = static_cast<std::size_t>(*mb * 1024.0 * 1024.0);
  read_bool(tree, "wave.supershot", c.supershot);

  read(tree, "tikhonov.max_iter", c.tikhonov.max_iter);
  read(tree, "tikhonov.memory", c.tikhonov.memory);
  read(tree, "tikhonov.grad_tol", c.tikhonov.grad_tol);
  read(tree, "tikhonov.tau0", c.tikhonov.tau0);

  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  return parse_config(in);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "[run]\n"
    << "problem = " << to_string(c.problem) << "\n"
    << "n = " << c.n << "\n"
    << "fine_factor = " << c.fine_factor << "\n"
    << "noise = " << c.noise << "\n"
    << "seed = " << c.seed << "\n"
    << "source = " << c.source << "\n"
    << "snapshot_every = " << c.snapshot_every << "\n\n";
  o << "[phantom]\n";
  const auto& name = c.phantom.name;
  if (c.phantom.raster_path) {
    o << "name = raster\nraster = " << *c.phantom.raster_path << "\n";
  } else if (name == "six_discs" || name == "three_inclusions" || name == "empty") {
    o << "name = " << name << "\n";
  } else {
    if (!c.phantom.polygons.empty()) throw InvalidArgument("config: polygon inclusions have no text form");
    o << "name = discs\ndiscs = " << format_discs(c.phantom.discs) << "\n";
  }
  o << "background = " << c.phantom.background << "\n\n";
  o << "[asi]\n"
    << "eps_theta = " << c.asi.eps_theta << "\n"
    << "eps_psi0 = " << c.asi.eps_psi0 << "\n"
    << "rho0 = " << c.asi.rho0 << "\n"
    << "rho1 = " << c.asi.rho1 << "\n"
    << "tau0 = " << c.asi.tau0 << "\n"
    << "k1 = " << c.asi.k1 << "\n"
    << "m_max = " << c.asi.m_max << "\n"
    << "eps = " << c.asi.eps << "\n"
    << "enrich = " << (c.asi.enrich ? "true" : "false") << "\n"
    << "as_basis_size_factor = " << c.asi.as_basis_size_factor << "\n"
    << "drop_tol = " << c.asi.drop_tol << "\n"
    << "zero_noise_grad_tol = " << c.asi.zero_noise_grad_tol << "\n"
    << "inner_grad_tol = " << c.asi.inner.grad_tol << "\n"
    << "inner_max_iter = " << c.asi.inner.max_iter << "\n"
    << "eig_tol = " << c.asi.eig.tol << "\n\n";
  o << "[wave]\n"
    << "final_time = " << c.wave.final_time << "\n"
    << "dt = " << c.wave.dt << "\n"
    << "nu = " << c.wave.nu << "\n"
    << "kappa = " << c.wave.kappa << "\n"
    << "width = " << c.wave.width << "\n"
    << "num_sources = " << c.wave.num_sources << "\n"
    << "source_inset = " << c.wave.source_inset << "\n"
    << "max_medium = " << c.wave.max_medium << "\n"
    << "checkpoint_stride = " << c.wave.checkpoint_stride << "\n"
    << "memory_budget_mb = " << static_cast<double>(c.wave.memory_budget_bytes) / (1024.0 * 1024.0) << "\n"
    << "supershot = " << (c.supershot ? "true" : "false") << "\n\n";
  o << "[tikhonov]\n"
    << "max_iter = " << c.tikhonov.max_iter << "\n"
    << "memory = " << c.tikhonov.memory << "\n"
    << "grad_tol = " << c.tikhonov.grad_tol << "\n"
    << "tau0 = " << c.tikhonov.tau0 << "\n";
  return o.str();
}

}  // namespace asi
