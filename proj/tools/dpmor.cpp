// dpmor: mesh generation, full-order runs with snapshot capture, POD/DEIM
// builds, reduced-order sweeps and metric tables.

#include "dpmor/pipeline.hpp"
#include "dpmor/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dpmor;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitSolver = 2;
constexpr int kExitMismatch = 3;

// Artifacts that do not belong to the configured mesh or material.
class MismatchError : public Error {
public:
  using Error::Error;
};

struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 1;
};

RunConfig load(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(c.config);
  if (c.threads > 0) cfg.threads = c.threads;
  if (!c.out.empty()) cfg.output = c.out;
  return cfg;
}

Provenance provenance(const RunConfig& cfg, const Mesh& mesh) {
  return {fnv1a_hex(mesh_to_json(mesh)), params_hash(cfg.material), config_hash(cfg)};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

// Snapshot directory written by solve-full.
struct SnapshotSet {
  DenseMatrix U, F;
  json manifest;
};

SnapshotSet read_snapshots(const fs::path& dir) {
  SnapshotSet s;
  s.manifest = read_json(dir / "manifest.json");
  if (s.manifest.value("kind", "") != "snapshots") throw MorError(dir.string() + " is not a snapshot directory");
  s.U = numerics::read_snp1(dir / "U.snp1");
  s.F = numerics::read_snp1(dir / "F.snp1");
  return s;
}

void check_provenance(const json& manifest, const Provenance& expect, const std::string& what) {
  const std::string mh = manifest.value("mesh_hash", ""), ph = manifest.value("params_hash", "");
  if (mh != expect.mesh_hash || ph != expect.params_hash)
    throw MismatchError(what + " was built for a different mesh or material (mesh " + mh + " vs " + expect.mesh_hash +
                   ", params " + ph + " vs " + expect.params_hash + ")");
}

int cmd_mesh_gen(const Common& c) {
  const RunConfig cfg = load(c);
  const Mesh mesh = build_mesh(cfg);
  const fs::path out = c.out.empty() ? fs::path("mesh.json") : fs::path(c.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_mesh(out, mesh);
  std::printf("%zu nodes, %zu elements -> %s\n", mesh.num_nodes(), mesh.num_elements(), out.string().c_str());
  return 0;
}

int cmd_solve_full(const Common& c) {
  const RunConfig cfg = load(c);
  const Mesh mesh = build_mesh(cfg);
  auto model = build_model(cfg, mesh);
  const std::string hash = config_hash(cfg);
  const fs::path out = cfg.output;
  fs::create_directories(out);

  const SparseMatrix K_lin = model->linear_stiffness();
  const FomRun run = run_full(*model, cfg.control, cfg.snapshots, &K_lin);
  write_path_csv(out / "path.csv", run.path.points, hash, cfg.timing);
  if (run.final_full.size()) {
    write_node_csv(out / "nodes_final.csv", model->mesh(), run.final_full, config_hash_line(hash));
    write_gp_csv(out / "gp_final.csv", model->assembler().states(), config_hash_line(hash));
  }
  if (cfg.snapshots) {
    const fs::path sd = out / "snapshots";
    fs::create_directories(sd);
    numerics::write_snp1(sd / "U.snp1", run.snapshots);
    numerics::write_snp1(sd / "F.snp1", run.force_snapshots);
    const Provenance prov = provenance(cfg, model->mesh());
    json lambdas = json::array();
    for (const auto& p : run.path.points) lambdas.push_back(p.lambda);
    json iter_ms = json::array();
    for (double t : run.path.iter_ms) iter_ms.push_back(cfg.timing ? t : 0.0);
    write_json(sd / "manifest.json", {{"kind", "snapshots"},
                                      {"config_hash", hash},
                                      {"mesh_hash", prov.mesh_hash},
                                      {"params_hash", prov.params_hash},
                                      {"training_hash", prov.training_hash},
                                      {"n_free", model->size()},
                                      {"steps", run.path.points.size()},
                                      {"lambdas", lambdas},
                                      {"iter_ms", iter_ms}});
  }
  if (!run.path.completed) {
    std::ofstream diag(out / "failure.txt");
    diag << config_hash_line(hash) << '\n' << run.path.failure << '\n';
    std::fprintf(stderr, "solve-full: %s\n", run.path.failure.c_str());
    return kExitSolver;
  }
  std::printf("%zu steps, %zu Newton iterations -> %s\n", run.path.points.size(), run.path.iter_ms.size(),
              out.string().c_str());
  return 0;
}

int cmd_pod_build(const Common& c, const std::string& snapshots, Index m) {
  const SnapshotSet s = read_snapshots(snapshots);
  const PodBasis basis = pod_build(s.U, m);
  const Provenance prov{s.manifest.value("mesh_hash", ""), s.manifest.value("params_hash", ""),
                        s.manifest.value("training_hash", "")};
  const fs::path out = c.out.empty() ? fs::path(snapshots).parent_path() / "pod" : fs::path(c.out);
  save_pod(out, basis, prov);
  std::printf("POD basis m=%lld of rank %lld -> %s\n", static_cast<long long>(m),
              static_cast<long long>(numerical_rank(basis.sigma)), out.string().c_str());
  return 0;
}

int cmd_deim_build(const Common& c, const std::string& snapshots, const std::string& pod_dir, Index k) {
  const RunConfig cfg = load(c);
  const Mesh mesh = build_mesh(cfg);
  auto model = build_model(cfg, mesh);
  const Provenance expect = provenance(cfg, model->mesh());
  const SnapshotSet s = read_snapshots(snapshots);
  check_provenance(s.manifest, expect, "force snapshots");
  Provenance pod_prov;
  const PodBasis basis = load_pod(pod_dir, &pod_prov);
  if (pod_prov.mesh_hash != expect.mesh_hash || pod_prov.params_hash != expect.params_hash)
    throw MismatchError("POD basis was built for a different mesh or material");
  const DeimOperators ops = deim_build(s.F, k, basis, model->linear_stiffness(), model.get());
  const fs::path out = c.out.empty() ? fs::path(snapshots).parent_path() / ("deim_k" + std::to_string(k))
                                     : fs::path(c.out);
  save_deim(out, ops, pod_prov);
  std::printf("DEIM k=%lld, %zu elements, cond(Z^T Omega)=%.3g -> %s\n", static_cast<long long>(k),
              ops.elem_subset.size(), ops.cond_ZtOmega, out.string().c_str());
  return 0;
}

int cmd_rom_sweep(const Common& c, const std::string& artifacts) {
  const RunConfig cfg = load(c);
  if (cfg.m_list.empty() || cfg.k_list.empty()) throw ConfigError("rom-sweep needs nonempty mor.m and mor.k lists");
  const Mesh mesh = build_mesh(cfg);
  auto model = build_model(cfg, mesh);
  const fs::path art = artifacts;
  const SnapshotSet s = read_snapshots(art / "snapshots");
  check_provenance(s.manifest, provenance(cfg, model->mesh()), "artifacts in " + art.string());
  if (s.U.rows() != model->size()) throw MorError("snapshot size does not match the model");

  // Reference path from the full-order run.
  FomRun fom;
  fom.path.points = read_path_csv(art / "path.csv");
  if (static_cast<Index>(fom.path.points.size()) != s.U.cols())
    throw MorError("path.csv and snapshots disagree on the step count");
  for (std::size_t t = 0; t < fom.path.points.size(); ++t) fom.path.points[t].x = s.U.col(static_cast<Index>(t));
  fom.path.iter_ms = s.manifest.value("iter_ms", std::vector<double>{});
  fom.snapshots = s.U;
  fom.force_snapshots = s.F;
  const PathPoint& last = fom.path.points.back();
  fom.final_full = model->dofs().expand(last.x, last.lambda);

  const std::string hash = config_hash(cfg);
  const fs::path out = cfg.output;
  fs::create_directories(out);
  const SparseMatrix K_lin = model->linear_stiffness();
  const ForceModes fm = force_modes(s.F);
  std::vector<RunMetrics> rows;
  for (Index m : cfg.m_list) {
    PodBasis basis;
    try {
      basis = pod_build(s.U, m);
    } catch (const MorError& ex) {
      for (Index k : cfg.k_list) rows.push_back({m, k, -1, -1, -1, 0, false, false, ex.what()});
      continue;
    }
    for (Index k : cfg.k_list) {
      RunMetrics r;
      try {
        const DeimOperators ops = deim_build(fm, k, basis, K_lin, model.get());
        const RomRun rom = run_rom(*model, basis, ops, cfg.control);
        r = cell_metrics(m, k, fom, rom);
        write_path_csv(out / ("rom_m" + std::to_string(m) + "_k" + std::to_string(k) + ".csv"), rom.path.points,
                       hash, cfg.timing);
      } catch (const Error& ex) {
        r = RunMetrics{m, k, -1, -1, -1, 0, false, false, ex.what()};
      }
      if (!cfg.timing) r.speedup = 0.0;
      std::printf("m=%lld k=%lld stable=%d eps_uA=%.3e eps_pmax=%.3e%s%s\n", static_cast<long long>(m),
                  static_cast<long long>(k), r.stable ? 1 : 0, r.eps_uA, r.eps_pmax, r.note.empty() ? "" : "  ",
                  r.note.substr(0, 120).c_str());
      rows.push_back(r);
    }
  }
  write_metrics_csv(out / "metrics.csv", rows, hash);
  return 0;
}

int cmd_metrics(const std::string& fom_csv, const std::string& rom_csv) {
  const auto fom = read_path_csv(fom_csv);
  const auto rom = read_path_csv(rom_csv);
  json j;
  j["eps_uA"] = eps_uA(fom, rom);
  try {
    j["eps_pmax"] = eps_pmax(fom, rom);
  } catch (const NoLimitLoadError& ex) {
    j["eps_pmax"] = nullptr;
    j["eps_pmax_note"] = ex.what();
  }
  j["artificial_unloading"] = artificial_unloading(rom, fom);
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int cmd_verify(const Common& c, bool full) {
  const auto results = verify::run_all(c.seed, full);
  const std::string report = verify::to_json(results);
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    f << report << '\n';
  }
  std::printf("%s\n", report.c_str());
  for (const auto& r : results)
    if (!r.pass) return kExitFailure;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POD/DEIM reduced-order modelling of finite-strain elasto-plasticity with gradient damage"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "run configuration (JSON)");
  app.add_option("--out", common.out, "output file or directory");
  app.add_option("--threads", common.threads, "assembly threads (results do not depend on it)");
  app.add_option("--seed", common.seed, "seed for the randomized verification suites");

  app.add_subcommand("mesh-gen", "write the configured mesh as JSON");
  app.add_subcommand("solve-full", "full-order path with snapshot capture");

  auto* pod = app.add_subcommand("pod-build", "POD basis from displacement snapshots");
  std::string snapshots;
  Index m = 0;
  pod->add_option("--snapshots", snapshots, "snapshot directory from solve-full")->required();
  pod->add_option("-m", m, "number of POD modes")->required();

  auto* deim = app.add_subcommand("deim-build", "DEIM operators from force snapshots");
  std::string force_snapshots, pod_dir;
  Index k = 0;
  deim->add_option("--force-snapshots", force_snapshots, "snapshot directory from solve-full")->required();
  deim->add_option("--pod", pod_dir, "POD artifact directory")->required();
  deim->add_option("-k", k, "number of DEIM indices")->required();

  auto* sweep = app.add_subcommand("rom-sweep", "reduced runs over the configured (m, k) grid");
  std::string artifacts;
  sweep->add_option("--artifacts", artifacts, "output directory of solve-full")->required();

  auto* metrics = app.add_subcommand("metrics", "compare two path CSV files");
  std::string fom_csv, rom_csv;
  metrics->add_option("--fom", fom_csv, "reference path CSV")->required();
  metrics->add_option("--rom", rom_csv, "reduced path CSV")->required();

  auto* ver = app.add_subcommand("verify", "run the invariant suites and print a JSON report");
  bool full = false;
  ver->add_flag("--full", full, "acceptance-size samples");

  // Global options may follow the subcommand name as well.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "mesh-gen") return cmd_mesh_gen(common);
    if (name == "solve-full") return cmd_solve_full(common);
    if (name == "pod-build") return cmd_pod_build(common, snapshots, m);
    if (name == "deim-build") return cmd_deim_build(common, force_snapshots, pod_dir, k);
    if (name == "rom-sweep") return cmd_rom_sweep(common, artifacts);
    if (name == "metrics") return cmd_metrics(fom_csv, rom_csv);
    if (name == "verify") return cmd_verify(common, full);
  } catch (const MismatchError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitMismatch;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitFailure;
  }
  return kExitFailure;
}
