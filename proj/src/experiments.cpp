#include "asi/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace asi {

namespace fs = std::filesystem;
using nlohmann::json;

DataSet generate_data(const RunConfig& config) {
  config.validate();
  DataSet d;
  d.problem = config.problem;
  d.n = config.n;
  d.seed = config.seed;
  d.delta_hat = config.noise;
  if (config.problem == ProblemKind::kElliptic) {
    EllipticData e = gen_noisy_elliptic(config.phantom, config.noise, config.fine_factor, config.seed, config.n,
                                        config.source);
    d.n_fine = e.n_fine;
    d.delta_abs = e.delta_abs;
    d.delta_rel = config.noise;
    d.truth = std::move(e.truth);
    d.observed = std::move(e.observed);
  } else {
    WaveData w = gen_noisy_wave(config.phantom, config.noise, config.wave, config.seed, config.n, config.fine_factor);
    d.n_fine = w.n_fine;
    d.delta_abs = w.delta_abs;
    d.delta_rel = w.delta_rel;
    d.truth = std::move(w.truth);
    d.grid = w.grid;
    d.traces = std::move(w.observed);
  }
  return d;
}

void write_traces(const std::string& path, const Traces& traces) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot write " + path);
  std::fprintf(f, "%lld %lld\n", static_cast<long long>(traces.rows()), static_cast<long long>(traces.cols()));
  for (Eigen::Index i = 0; i < traces.rows(); ++i) {
    for (Eigen::Index j = 0; j < traces.cols(); ++j) std::fprintf(f, j ? " %.17g" : "%.17g", traces(i, j));
    std::fputc('\n', f);
  }
  std::fclose(f);
}

Traces read_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  long long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw InvalidArgument("bad trace header in " + path);
  Traces t(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j)
      if (!(in >> t(i, j))) throw InvalidArgument("truncated trace file " + path);
  return t;
}

namespace {

std::string trace_name(size_t l) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traces_%03zu.txt", l);
  return buf;
}

}  // namespace

void save_data(const DataSet& data, const RunConfig& config, const std::string& dir) {
  fs::create_directories(dir);
  write_grid((fs::path(dir) / "truth.grid").string(), data.truth, "u_true");
  json meta{{"problem", to_string(data.problem)},
            {"n", data.n},
            {"n_fine", data.n_fine},
            {"seed", data.seed},
            {"delta_hat", data.delta_hat},
            {"delta_abs", data.delta_abs},
            {"delta_rel", data.delta_rel},
            {"phantom", config.phantom.name},
            {"config", format_config(config)}};
  if (data.problem == ProblemKind::kElliptic) {
    write_grid((fs::path(dir) / "observation.grid").string(), data.observed, "y_delta");
  } else {
    meta["dt"] = data.grid.dt;
    meta["steps"] = data.grid.steps;
    meta["num_sources"] = data.traces.size();
    for (size_t l = 0; l < data.traces.size(); ++l)
      write_traces((fs::path(dir) / trace_name(l)).string(), data.traces[l]);
  }
  std::ofstream((fs::path(dir) / "metadata.json").string()) << meta.dump(2) << "\n";
}

DataSet load_data(const std::string& dir) {
  std::ifstream in((fs::path(dir) / "metadata.json").string());
  if (!in) throw InvalidArgument("no metadata.json in " + dir);
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad metadata.json: ") + e.what());
  }
  DataSet d;
  d.problem = meta.at("problem").get<std::string>() == "wave" ? ProblemKind::kWave : ProblemKind::kElliptic;
  d.n = meta.at("n");
  d.n_fine = meta.at("n_fine");
  d.seed = meta.at("seed");
  d.delta_hat = meta.at("delta_hat");
  d.delta_abs = meta.at("delta_abs");
  d.delta_rel = meta.at("delta_rel");
  d.truth = read_grid((fs::path(dir) / "truth.grid").string());
  if (d.problem == ProblemKind::kElliptic) {
    d.observed = read_grid((fs::path(dir) / "observation.grid").string());
  } else {
    d.grid.dt = meta.at("dt");
    d.grid.steps = meta.at("steps");
    const size_t count = meta.at("num_sources");
    for (size_t l = 0; l < count; ++l) d.traces.push_back(read_traces((fs::path(dir) / trace_name(l)).string()));
  }
  return d;
}

Method parse_method(const std::string& name) {
  if (name == "asi") return Method::kAsi;
  if (name == "asi0") return Method::kAsi0;
  if (name == "tikhonov") return Method::kTikhonov;
  throw InvalidArgument("unknown method '" + name + "'");
}

const char* to_string(Method method) {
  switch (method) {
    case Method::kAsi: return "asi";
    case Method::kAsi0: return "asi0";
    case Method::kTikhonov: return "tikhonov";
  }
  return "unknown";
}

std::unique_ptr<MisfitModel> make_model(const RunConfig& config, const DataSet& data) {
  if (data.n != config.n) throw InvalidArgument("data mesh size differs from config n");
  if (data.problem != config.problem) throw InvalidArgument("data problem kind differs from config");
  auto space = make_space(config.n);
  if (data.problem == ProblemKind::kElliptic) {
    auto problem = EllipticProblem::with_constant_source(space, config.source);
    problem.observation = data.observed.values;
    return std::make_unique<EllipticModel>(problem);
  }
  auto sources = wave_sources(space->mesh(), config.wave);
  if (sources.size() != data.traces.size()) throw InvalidArgument("source count differs from stored traces");
  return std::make_unique<WaveModel>(space, config.wave, data.grid, std::move(sources), data.traces, config.seed,
                                     config.supershot);
}

InversionOutcome run_inversion(const RunConfig& config, const DataSet& data, Method method, const std::string& out_dir,
                               const std::function<void(const IterationRecord&)>& progress,
                               const std::function<void()>& interrupt) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto model = make_model(config, data);
  const FeSpace& space = model->space();
  const MeshPtr mesh = space.mesh_ptr();
  const Vector background = Vector::Ones(space.num_nodes());
  const Vector& truth = data.truth.values;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  auto snapshot = [&](int m, const Vector& u) {
    if (out_dir.empty() || config.snapshot_every <= 0 || m % config.snapshot_every != 0) return;
    char name[32];
    std::snprintf(name, sizeof name, "iterate_%03d.grid", m);
    write_grid((fs::path(out_dir) / name).string(), FeFunction(mesh, u), "u");
  };
  auto write_outputs = [&](const InversionOutcome& r) {
    if (out_dir.empty()) return;
    std::ofstream hist((fs::path(out_dir) / "history.csv").string());
    write_history(hist, r.history);
    if (r.medium.mesh) write_grid((fs::path(out_dir) / "final.grid").string(), r.medium, "u");
    json summary{{"method", to_string(method)},
                 {"problem", to_string(config.problem)},
                 {"n", config.n},
                 {"m_star", r.m_star},
                 {"exit", r.exit},
                 {"delta_abs", data.delta_abs},
                 {"iterations", r.history.size()},
                 {"seconds", r.seconds}};
    if (!r.history.empty() && r.m_star < static_cast<int>(r.history.size()))
      summary["rel_error"] = r.history[r.m_star].rel_error;
    std::ofstream((fs::path(out_dir) / "summary.json").string()) << summary.dump(2) << "\n";
  };

  InversionOutcome out;
  try {
    if (method == Method::kTikhonov) {
      const auto* elliptic = dynamic_cast<const EllipticModel*>(model.get());
      if (!elliptic) throw InvalidArgument("the Tikhonov baseline supports the elliptic problem only");
      TikhonovConfig tcfg = config.tikhonov;
      auto on_record = [&](const IterationRecord& r) {
        if (progress) progress(r);
      };
      TikhonovResult r = tikhonov_invert(*elliptic, data.delta_abs, background, tcfg, &truth, on_record);
      out.medium = FeFunction(mesh, r.u);
      out.history = std::move(r.history);
      out.m_star = r.m_star;
      out.exit = to_string(r.exit);
    } else {
      AsiConfig acfg = config.asi;
      acfg.enrich = method == Method::kAsi ? config.asi.enrich : false;
      AsiInputs in;
      in.model = model.get();
      in.delta = data.delta_abs;
      in.background = background;
      in.initial = laplace_initial_space(space, acfg.k1, acfg.eig);
      in.truth = &truth;
      in.on_record = progress;
      in.on_iterate = snapshot;
      in.interrupt = interrupt;
      AsiResult r = asi_run(acfg, in);
      out.medium = FeFunction(mesh, r.u);
      out.history = std::move(r.history);
      out.m_star = r.m_star;
      out.exit = to_string(r.exit);
    }
  } catch (const AsiRunError& e) {
    out.history = e.history();
    out.exit = std::string("error: ") + e.what();
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(out);
    throw;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(out);
  return out;
}

}  // namespace asi
