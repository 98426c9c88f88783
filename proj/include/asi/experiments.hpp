#pragma once

#include <functional>
#include <string>
#include <vector>

#include "asi/data_gen.hpp"
#include "asi/run_config.hpp"

namespace asi {

/// Synthetic data for one run, on the inversion mesh.
struct DataSet {
  ProblemKind problem = ProblemKind::kElliptic;
  int n = 0;
  int n_fine = 0;
  std::uint64_t seed = 0;
  double delta_hat = 0.0;
  double delta_abs = 0.0;
  double delta_rel = 0.0;
  FeFunction truth;
  FeFunction observed;          // elliptic
  TimeGrid grid;                // wave
  std::vector<Traces> traces;   // wave, one per source
};

DataSet generate_data(const RunConfig& config);

/// truth.grid, observation.grid or traces_<l>.txt, and metadata.json.
void save_data(const DataSet& data, const RunConfig& config, const std::string& dir);
DataSet load_data(const std::string& dir);

void write_traces(const std::string& path, const Traces& traces);
Traces read_traces(const std::string& path);

enum class Method { kAsi, kAsi0, kTikhonov };
Method parse_method(const std::string& name);
const char* to_string(Method method);

struct InversionOutcome {
  FeFunction medium;
  std::vector<IterationRecord> history;
  int m_star = 0;
  std::string exit;
  double seconds = 0.0;
};

/// Runs one method from u = 1 on `data`. With a non-empty `out_dir`, writes
/// history.csv, final.grid, summary.json and every snapshot_every-th iterate.
InversionOutcome run_inversion(const RunConfig& config, const DataSet& data, Method method,
                               const std::string& out_dir = "",
                               const std::function<void(const IterationRecord&)>& progress = {},
                               const std::function<void()>& interrupt = {});

/// Misfit model for `data` on a fresh inversion-mesh space.
std::unique_ptr<MisfitModel> make_model(const RunConfig& config, const DataSet& data);

}  // namespace asi
