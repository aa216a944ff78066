#include "dpmor/pipeline.hpp"

#include <cstdio>
#include <fstream>

namespace dpmor {

using nlohmann::json;

namespace {

// Value used for a switched-off loading threshold.
constexpr double kDisabledThreshold = 1e12;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void apply_override(MaterialParams& p, const std::string& key, double v) {
  if (key == "lambda") p.lambda = v;
  else if (key == "mu") p.mu = v;
  else if (key == "sigma0") p.sigma0 = v;
  else if (key == "a") p.a = v;
  else if (key == "b") p.b = v;
  else if (key == "e") p.e = v;
  else if (key == "f") p.f = v;
  else if (key == "Y0") p.Y0 = v;
  else if (key == "r") p.r = v;
  else if (key == "s") p.s = v;
  else if (key == "A") p.A = v;
  else if (key == "H") p.H = v;
  else if (key == "dam_exponent") p.dam_exponent = v;
  else throw ConfigError("unknown material parameter '" + key + "'");
}

MaterialParams parse_material(const json& j) {
  const std::string preset = get_or<std::string>(j, "preset", "plate");
  MaterialParams p;
  if (preset == "plate") p = MaterialParams::plate();
  else if (preset == "notched") p = MaterialParams::notched();
  else throw ConfigError("unknown material preset '" + preset + "'");
  if (j.contains("overrides"))
    for (const auto& [k, v] : j.at("overrides").items()) apply_override(p, k, v.get<double>());
  std::vector<std::string> off;
  if (j.contains("disable")) {
    if (j.at("disable").is_string()) off.push_back(j.at("disable").get<std::string>());
    else off = j.at("disable").get<std::vector<std::string>>();
  }
  for (const auto& what : off) {
    if (what == "plasticity") p.sigma0 = kDisabledThreshold;
    else if (what == "damage") p.Y0 = kDisabledThreshold;
    else throw ConfigError("material.disable accepts 'plasticity' or 'damage', got '" + what + "'");
  }
  p.validate();
  return p;
}

ControlSpec parse_control(const json& j) {
  ControlSpec c;
  c.type = parse_control_type(get_or<std::string>(j, "type", "arclength"));
  c.steps = get_or(j, "steps", c.steps);
  if (j.contains("ds0") && !(j.at("ds0").is_string() && j.at("ds0").get<std::string>() == "auto"))
    c.ds0 = j.at("ds0").get<double>();
  c.dlambda0 = get_or(j, "dlambda0", c.dlambda0);
  c.lambdas = get_or(j, "lambdas", c.lambdas);
  c.solver.tol_energy = get_or(j, "tol_energy", c.solver.tol_energy);
  c.solver.tol_residual = get_or(j, "tol_residual", c.solver.tol_residual);
  c.solver.max_iter = get_or(j, "max_iter", c.solver.max_iter);
  c.retry_halvings = get_or(j, "retry_halvings", c.retry_halvings);
  if (c.steps < 1) throw ConfigError("control.steps must be >= 1");
  if (c.ds0 < 0.0) throw ConfigError("control.ds0 must be positive or \"auto\"");
  return c;
}

std::vector<DirichletSpec> default_dirichlet(const json& mesh) {
  const std::string gen = get_or<std::string>(mesh, "generator", "");
  if (gen == "plate") return {{"sym_x", 0, 0.0}, {"sym_y", 1, 0.0}, {"back_z", 2, 0.0}};
  if (gen == "notched") return {{"bottom", 0, 0.0}, {"bottom", 1, 0.0}, {"back_z", 2, 0.0}};
  throw ConfigError("dirichlet conditions are required for mesh files");
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.raw = j;
  c.mesh = j.value("mesh", json{{"generator", "plate"}});
  if (c.mesh.contains("file")) {
    std::filesystem::path f = c.mesh.at("file").get<std::string>();
    if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
    if (!std::filesystem::exists(f)) throw ConfigError("mesh file not found: " + f.string());
    c.mesh["file"] = f.string();
  } else if (!c.mesh.contains("generator")) {
    throw ConfigError("mesh needs either 'file' or 'generator'");
  }
  c.material = parse_material(j.value("material", json::object()));

  const json load = j.value("loading", json::object());
  c.load.side_set = get_or<std::string>(load, "side_set", "");
  if (load.contains("total_force")) {
    const auto f = load.at("total_force").get<std::vector<double>>();
    if (f.size() != 3) throw ConfigError("loading.total_force needs three components");
    c.load.total_force = Eigen::Vector3d(f[0], f[1], f[2]);
  }

  if (j.contains("dirichlet")) {
    for (const auto& d : j.at("dirichlet"))
      c.dirichlet.push_back({d.at("set").get<std::string>(), d.at("component").get<int>(), d.value("value", 0.0)});
  } else {
    c.dirichlet = default_dirichlet(c.mesh);
  }
  for (const auto& d : c.dirichlet)
    if (d.component < 0 || d.component >= kDofsPerNode) throw ConfigError("dirichlet component out of range");

  const json mon = j.value("monitor", json::object());
  c.monitor.node_set = get_or<std::string>(mon, "node_set", c.monitor.node_set);
  c.monitor.component = get_or(mon, "component", c.monitor.component);
  c.reaction_set = get_or<std::string>(j, "reaction_set", "");

  c.control = parse_control(j.value("control", json::object()));
  c.snapshots = get_or(j, "snapshots", true);
  const json mor = j.value("mor", json::object());
  c.m_list = get_or(mor, "m", std::vector<Index>{});
  c.k_list = get_or(mor, "k", std::vector<Index>{});
  c.output = get_or<std::string>(j, "output", "out");
  c.timing = get_or(j, "timing", true);
  c.threads = get_or(j, "threads", 1);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("config " + path.string() + ": " + ex.what());
  }
  return parse_config(j, path.parent_path());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& cfg) {
  // Where results go and how many threads compute them do not change them.
  json j = cfg.raw;
  j.erase("output");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

std::string params_hash(const MaterialParams& p) {
  const json j = {{"lambda", p.lambda}, {"mu", p.mu}, {"sigma0", p.sigma0}, {"a", p.a},   {"b", p.b},
                  {"e", p.e},           {"f", p.f},   {"Y0", p.Y0},         {"r", p.r},   {"s", p.s},
                  {"A", p.A},           {"H", p.H},   {"dam_exponent", p.dam_exponent}};
  return fnv1a_hex(j.dump());
}

Mesh build_mesh(const RunConfig& cfg) {
  const json& m = cfg.mesh;
  Mesh mesh;
  if (m.contains("file")) {
    mesh = read_mesh(m.at("file").get<std::string>());
  } else {
    const std::string gen = m.at("generator").get<std::string>();
    if (gen == "plate") {
      PlateSpec s;
      s.width = get_or(m, "width", s.width);
      s.height = get_or(m, "height", s.height);
      s.radius = get_or(m, "radius", s.radius);
      s.thickness = get_or(m, "thickness", s.thickness);
      s.nx = get_or(m, "nx", s.nx);
      s.ny = get_or(m, "ny", s.ny);
      s.nr = get_or(m, "nr", s.nr);
      s.nz = get_or(m, "nz", s.nz);
      s.radial_grading = get_or(m, "radial_grading", s.radial_grading);
      mesh = gen_plate_with_hole(s);
    } else if (gen == "notched") {
      NotchedSpec s;
      s.height = get_or(m, "height", s.height);
      s.width = get_or(m, "width", s.width);
      s.thickness = get_or(m, "thickness", s.thickness);
      s.notch_radius = get_or(m, "notch_radius", s.notch_radius);
      s.notch_offset = get_or(m, "notch_offset", s.notch_offset);
      s.refinement = get_or(m, "refinement", s.refinement);
      mesh = gen_asym_notched(s);
    } else {
      throw ConfigError("unknown mesh generator '" + gen + "'");
    }
  }
  validate(mesh);
  return mesh;
}

std::unique_ptr<FemModel> build_model(const RunConfig& cfg, const Mesh& mesh) {
  std::vector<Dirichlet> bc;
  for (const auto& d : cfg.dirichlet) {
    const auto part = fix_component(mesh, d.set, d.component, d.value);
    bc.insert(bc.end(), part.begin(), part.end());
  }
  DofMap dofs(mesh.num_nodes(), bc);
  return std::make_unique<FemModel>(mesh, std::move(dofs), cfg.material, cfg.load, cfg.monitor, cfg.threads,
                                    cfg.reaction_set, cfg.monitor.component);
}

FomRun run_full(FemModel& model, const ControlSpec& ctl, bool capture, const SparseMatrix* K_lin) {
  model.assembler().reset_states();
  SparseMatrix K_own;
  if (capture && !K_lin) {
    K_own = model.linear_stiffness();
    K_lin = &K_own;
  }
  FullSystem sys(model);
  std::vector<Vec> snaps, forces;
  StepObserver obs;
  if (capture)
    obs = [&](const PathPoint& pt, DiscreteSystem& s) {
      snaps.push_back(pt.x);
      forces.push_back(s.internal_force() - (*K_lin) * pt.x);
    };
  FomRun run;
  run.path = run_path(sys, ctl, obs);
  const Index n = model.size();
  run.snapshots.resize(n, static_cast<Index>(snaps.size()));
  run.force_snapshots.resize(n, static_cast<Index>(forces.size()));
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    run.snapshots.col(static_cast<Index>(i)) = snaps[i];
    run.force_snapshots.col(static_cast<Index>(i)) = forces[i];
  }
  if (!run.path.points.empty()) {
    const PathPoint& last = run.path.points.back();
    run.final_full = model.dofs().expand(last.x, last.lambda);
  }
  return run;
}

RomRun run_rom(FemModel& model, const PodBasis& basis, const DeimOperators& ops, const ControlSpec& ctl) {
  model.assembler().reset_states();
  RomSystem rom(model, basis, ops);
  RomRun run;
  run.path = run_path(rom, ctl);
  run.stable = run.path.completed;
  run.failure = run.path.failure;
  for (std::size_t e : run.path.elements_per_iteration)
    run.max_elements_per_iteration = std::max(run.max_elements_per_iteration, e);
  if (!run.path.points.empty()) {
    const PathPoint& last = run.path.points.back();
    run.final_full = model.dofs().expand(basis.Phi * last.x, last.lambda);
  }
  return run;
}

Vec nodal_dbar(const Vec& U_full) {
  const Index nn = U_full.size() / kDofsPerNode;
  Vec d(nn);
  for (Index i = 0; i < nn; ++i) d[i] = U_full[kDofsPerNode * i + 3];
  return d;
}

RunMetrics cell_metrics(Index m, Index k, const FomRun& fom, const RomRun& rom) {
  RunMetrics r;
  r.m = m;
  r.k = k;
  r.stable = rom.stable;
  if (!rom.stable) r.note = rom.failure;
  const auto& fp = fom.path.points;
  const auto& rp = rom.path.points;
  if (rom.stable) {
    try {
      r.eps_uA = eps_uA(fp, rp);
    } catch (const MetricError& ex) {
      r.note = ex.what();
    }
    try {
      r.eps_DbarB = eps_DbarB(nodal_dbar(fom.final_full), nodal_dbar(rom.final_full));
    } catch (const MetricError&) {
    }
  }
  try {
    r.eps_pmax = eps_pmax(fp, rp);
  } catch (const MetricError&) {
  }
  try {
    r.speedup = speedup(fom.path.iter_ms, rom.path.iter_ms);
  } catch (const MetricError&) {
  }
  r.artificial_unloading = artificial_unloading(rp, fp);
  return r;
}

}  // namespace dpmor
