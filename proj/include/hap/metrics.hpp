#pragma once

// Purity, per-level cluster statistics and scaling tables.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hap/run.hpp"

namespace hap::metrics {

// counts[r][c]: points in cluster clusters[r] with class classes[c]. Both id
// lists are sorted ascending.
struct Contingency {
  std::vector<int> clusters;
  std::vector<int> classes;
  std::vector<std::vector<std::size_t>> counts;
};

// Throws LengthMismatch on unequal or empty inputs.
Contingency contingency(std::span<const int> clusters, std::span<const int> labels);

// Sum over clusters of the majority-class count, divided by N.
double purity(std::span<const int> clusters, std::span<const int> labels);

struct PurityReport {
  std::vector<double> purity;          // per level, index 0 = level 1
  std::vector<std::size_t> exemplars;  // per level
  std::vector<Contingency> tables;     // per level

  // Aligned plain-text table.
  std::string to_table() const;
  // `level TAB purity TAB exemplars` lines.
  std::string to_lines() const;
};

PurityReport purity_report(const AssignmentTable& table, std::span<const int> labels);

struct LevelStats {
  int level = 1;
  std::size_t exemplars = 0;
  std::map<std::size_t, std::size_t> size_histogram;  // cluster size -> number of clusters
};

std::vector<LevelStats> level_stats(const AssignmentTable& table);
std::string format_level_stats(std::span<const LevelStats> stats);
// Reported, never enforced.
bool exemplar_counts_non_increasing(std::span<const LevelStats> stats);

struct ScalingRow {
  int workers = 1;
  double wall_ms = 0.0;
  double speedup = 1.0;       // wall(baseline) / wall(workers)
  double decrease_pct = 0.0;  // 100 * (1 - wall(workers) / wall(baseline))
};

struct ScalingReport {
  std::vector<ScalingRow> rows;  // ascending worker count; the first row is the baseline
  bool wall_non_increasing = true;
  bool speedup_non_decreasing = true;

  std::string to_table() const;
};

// Baseline is the smallest worker count. Throws InvalidConfig on fewer than
// two entries, duplicate worker counts or non-positive values.
ScalingReport scaling_report(std::span<const std::pair<int, double>> timings);
// One-row report with speedup 1.0.
ScalingReport single_worker_report(int workers, double wall_ms);

}  // namespace hap::metrics
