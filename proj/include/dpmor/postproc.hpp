#pragma once

#include "dpmor/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dpmor {

class MetricError : public Error {
public:
  using Error::Error;
};

/// Path has no load maximum to compare.
class NoLimitLoadError : public MetricError {
public:
  using MetricError::MetricError;
};

/// Relative monitor-displacement error at the last step, FOM value as reference.
double eps_uA(const std::vector<PathPoint>& fom, const std::vector<PathPoint>& rom);

/// Index of the first load maximum: the first point after which p falls more
/// than 0.1 % below the running maximum. Empty for a monotone path.
std::optional<std::size_t> limit_point(const std::vector<PathPoint>& path);

double eps_pmax(const std::vector<PathPoint>& fom, const std::vector<PathPoint>& rom);

/// Relative error of the maximum nodal Dbar at the final step.
double eps_DbarB(const Vec& fom_dbar, const Vec& rom_dbar);

/// Ratio of mean per-iteration wall times.
double speedup(const std::vector<double>& fom_iter_ms, const std::vector<double>& rom_iter_ms);

/// Both lambda and |U| fall for three consecutive accepted steps while the
/// reference path keeps loading at the same steps.
bool artificial_unloading(const std::vector<PathPoint>& rom, const std::vector<PathPoint>& reference);

struct RunMetrics {
  Index m = 0, k = 0;
  double eps_uA = -1.0;
  double eps_pmax = -1.0;
  double eps_DbarB = -1.0;
  double speedup = 0.0;
  bool stable = false;
  bool artificial_unloading = false;
  std::string note;
};

/// Every output file begins with this comment line.
std::string config_hash_line(const std::string& config_hash);

void write_path_csv(const std::filesystem::path& path, const std::vector<PathPoint>& pts,
                    const std::string& config_hash, bool timing);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows,
                       const std::string& config_hash);
std::vector<PathPoint> read_path_csv(const std::filesystem::path& path);

}  // namespace dpmor
