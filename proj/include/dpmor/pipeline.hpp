#pragma once

#include "dpmor/fem.hpp"
#include "dpmor/mor.hpp"
#include "dpmor/postproc.hpp"
#include "dpmor/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace dpmor {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct DirichletSpec {
  std::string set;
  int component = 0;
  double value = 0.0;  // per unit load factor
};

/// Parsed run configuration. Units: mm, MPa, N.
struct RunConfig {
  nlohmann::json raw;
  nlohmann::json mesh;  // {"generator": "plate"|"notched", ...} or {"file": path}
  MaterialParams material;
  LoadSpec load;
  std::vector<DirichletSpec> dirichlet;
  MonitorSpec monitor;
  std::string reaction_set;  // load measure under displacement control
  ControlSpec control;
  bool snapshots = true;
  std::vector<Index> m_list;
  std::vector<Index> k_list;
  std::filesystem::path output = "out";
  bool timing = true;
  int threads = 1;
};

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64-bit, hex.
std::string fnv1a_hex(const std::string& bytes);
std::string config_hash(const RunConfig& cfg);
std::string params_hash(const MaterialParams& p);

Mesh build_mesh(const RunConfig& cfg);
std::unique_ptr<FemModel> build_model(const RunConfig& cfg, const Mesh& mesh);

struct FomRun {
  PathResult path;
  DenseMatrix snapshots;        // free DOFs x steps
  DenseMatrix force_snapshots;  // R(U_t) - K_lin U_t, same layout
  Vec final_full;               // all DOFs at the last accepted step
};

/// Full-order path with snapshot capture. The model's history is reset first.
FomRun run_full(FemModel& model, const ControlSpec& ctl, bool capture, const SparseMatrix* K_lin = nullptr);

struct RomRun {
  PathResult path;
  bool stable = false;
  std::string failure;
  Vec final_full;
  std::size_t max_elements_per_iteration = 0;
};

/// Reduced path with the same control settings. The model's history is reset.
RomRun run_rom(FemModel& model, const PodBasis& basis, const DeimOperators& ops, const ControlSpec& ctl);

/// Metrics of one sweep cell against the full-order reference.
RunMetrics cell_metrics(Index m, Index k, const FomRun& fom, const RomRun& rom);

/// Dbar values of all nodes from a full DOF vector.
Vec nodal_dbar(const Vec& U_full);

}  // namespace dpmor
