#include "dpmor/postproc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dpmor {

double eps_uA(const std::vector<PathPoint>& fom, const std::vector<PathPoint>& rom) {
  if (fom.empty() || rom.empty()) throw MetricError("eps_uA: missing monitor data");
  const double ref = fom.back().u_A;
  if (ref == 0.0) throw MetricError("eps_uA: reference monitor displacement is zero");
  return std::abs(ref - rom.back().u_A) / std::abs(ref);
}

std::optional<std::size_t> limit_point(const std::vector<PathPoint>& path) {
  if (path.empty()) return std::nullopt;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].p > path[imax].p) imax = i;
    if (path[i].p < path[imax].p - 1e-3 * std::abs(path[imax].p)) return imax;
  }
  return std::nullopt;
}

double eps_pmax(const std::vector<PathPoint>& fom, const std::vector<PathPoint>& rom) {
  const auto lf = limit_point(fom);
  if (!lf) throw NoLimitLoadError("no limit load in the reference path");
  const auto lr = limit_point(rom);
  if (!lr) throw NoLimitLoadError("no limit load in the reduced path");
  const double pf = fom[*lf].p, pr = rom[*lr].p;
  return std::abs(pf - pr) / std::abs(pf);
}

double eps_DbarB(const Vec& fom_dbar, const Vec& rom_dbar) {
  if (fom_dbar.size() == 0 || rom_dbar.size() == 0) throw MetricError("eps_DbarB: missing fields");
  const double f = fom_dbar.maxCoeff(), r = rom_dbar.maxCoeff();
  if (!(f > 0.0)) throw MetricError("eps_DbarB: reference has no damage");
  return std::abs(f - r) / f;
}

double speedup(const std::vector<double>& fom_iter_ms, const std::vector<double>& rom_iter_ms) {
  if (fom_iter_ms.empty() || rom_iter_ms.empty()) throw MetricError("speedup: missing timings");
  const double tf = std::accumulate(fom_iter_ms.begin(), fom_iter_ms.end(), 0.0) / fom_iter_ms.size();
  const double tr = std::accumulate(rom_iter_ms.begin(), rom_iter_ms.end(), 0.0) / rom_iter_ms.size();
  if (!(tr > 0.0)) throw MetricError("speedup: reduced timings are zero");
  return tf / tr;
}

bool artificial_unloading(const std::vector<PathPoint>& rom, const std::vector<PathPoint>& reference) {
  int run = 0;
  for (std::size_t i = 1; i < rom.size(); ++i) {
    const bool rom_down = rom[i].lambda < rom[i - 1].lambda && rom[i].x_norm < rom[i - 1].x_norm;
    const bool ref_up = i < reference.size() && reference[i].lambda > reference[i - 1].lambda;
    run = (rom_down && ref_up) ? run + 1 : 0;
    if (run >= 3) return true;
  }
  return false;
}

std::string config_hash_line(const std::string& config_hash) { return "# config_hash=" + config_hash; }

void write_path_csv(const std::filesystem::path& path, const std::vector<PathPoint>& pts,
                    const std::string& config_hash, bool timing) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write " + path.string());
  std::fprintf(f, "%s\n", config_hash_line(config_hash).c_str());
  std::fprintf(f, "t,lambda,u_A,p,p_over_pmax,n_iters,wall_ms\n");
  double pmax = 0.0;
  for (const auto& p : pts) pmax = std::max(pmax, std::abs(p.p));
  for (const auto& p : pts)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%d,%.6f\n", p.t, p.lambda, p.u_A, p.p,
                 pmax > 0.0 ? p.p / pmax : 0.0, p.n_iters, timing ? p.wall_ms : 0.0);
  std::fclose(f);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows,
                       const std::string& config_hash) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write " + path.string());
  std::fprintf(f, "%s\n", config_hash_line(config_hash).c_str());
  std::fprintf(f, "m,k,eps_uA,eps_pmax,eps_DbarB,speedup,stable,artificial_unloading\n");
  for (const auto& r : rows)
    std::fprintf(f, "%lld,%lld,%.10g,%.10g,%.10g,%.6g,%d,%d\n", static_cast<long long>(r.m),
                 static_cast<long long>(r.k), r.eps_uA, r.eps_pmax, r.eps_DbarB, r.speedup, r.stable ? 1 : 0,
                 r.artificial_unloading ? 1 : 0);
  std::fclose(f);
}

std::vector<PathPoint> read_path_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricError("cannot read " + path.string());
  std::vector<PathPoint> pts;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 7) throw MetricError("malformed path CSV row in " + path.string());
    PathPoint p;
    p.t = std::stoi(cells[0]);
    p.lambda = std::stod(cells[1]);
    p.u_A = std::stod(cells[2]);
    p.p = std::stod(cells[3]);
    p.n_iters = std::stoi(cells[5]);
    p.wall_ms = std::stod(cells[6]);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace dpmor
