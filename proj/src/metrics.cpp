#include "hap/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "hap/error.hpp"

namespace hap::metrics {
namespace {

std::vector<int> distinct(std::span<const int> ids) {
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t slot(const std::vector<int>& sorted, int id) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), id) - sorted.begin());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Contingency contingency(std::span<const int> clusters, std::span<const int> labels) {
  if (clusters.size() != labels.size() || clusters.empty()) {
    throw Error(ErrorCode::LengthMismatch, "purity needs equal, non-empty inputs (got " +
                                               std::to_string(clusters.size()) + " and " +
                                               std::to_string(labels.size()) + ")");
  }
  Contingency t;
  t.clusters = distinct(clusters);
  t.classes = distinct(labels);
  t.counts.assign(t.clusters.size(), std::vector<std::size_t>(t.classes.size(), 0));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    ++t.counts[slot(t.clusters, clusters[i])][slot(t.classes, labels[i])];
  }
  return t;
}

double purity(std::span<const int> clusters, std::span<const int> labels) {
  const Contingency t = contingency(clusters, labels);
  std::size_t hit = 0;
  for (const auto& row : t.counts) hit += *std::max_element(row.begin(), row.end());
  return static_cast<double>(hit) / static_cast<double>(clusters.size());
}

PurityReport purity_report(const AssignmentTable& table, std::span<const int> labels) {
  PurityReport r;
  for (int l = 1; l <= table.levels(); ++l) {
    r.purity.push_back(purity(table.level(l), labels));
    r.exemplars.push_back(table.exemplar_count(l));
    r.tables.push_back(contingency(table.level(l), labels));
  }
  return r;
}

std::string PurityReport::to_table() const {
  std::ostringstream os;
  os << "level  purity   exemplars\n";
  for (std::size_t l = 0; l < purity.size(); ++l) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%5zu  %.4f  %9zu\n", l + 1, purity[l], exemplars[l]);
    os << buf;
  }
  return os.str();
}

std::string PurityReport::to_lines() const {
  std::ostringstream os;
  for (std::size_t l = 0; l < purity.size(); ++l) {
    os << l + 1 << '\t' << fixed(purity[l], 6) << '\t' << exemplars[l] << '\n';
  }
  return os.str();
}

std::vector<LevelStats> level_stats(const AssignmentTable& table) {
  std::vector<LevelStats> out;
  for (int l = 1; l <= table.levels(); ++l) {
    std::map<int, std::size_t> sizes;
    for (int e : table.level(l)) ++sizes[e];
    LevelStats st;
    st.level = l;
    st.exemplars = sizes.size();
    for (const auto& [e, size] : sizes) ++st.size_histogram[size];
    out.push_back(std::move(st));
  }
  return out;
}

std::string format_level_stats(std::span<const LevelStats> stats) {
  std::ostringstream os;
  os << "level\texemplars\tsizes\n";
  for (const auto& st : stats) {
    os << st.level << '\t' << st.exemplars << '\t';
    bool first = true;
    for (const auto& [size, count] : st.size_histogram) {
      os << (first ? "" : ",") << size << 'x' << count;
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

bool exemplar_counts_non_increasing(std::span<const LevelStats> stats) {
  for (std::size_t k = 1; k < stats.size(); ++k) {
    if (stats[k].exemplars > stats[k - 1].exemplars) return false;
  }
  return true;
}

ScalingReport scaling_report(std::span<const std::pair<int, double>> timings) {
  if (timings.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "scaling report needs at least two timings");
  }
  std::vector<std::pair<int, double>> sorted(timings.begin(), timings.end());
  std::sort(sorted.begin(), sorted.end());
  ScalingReport r;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto [w, ms] = sorted[k];
    if (w < 1 || !(ms > 0.0)) throw Error(ErrorCode::InvalidConfig, "timings must be positive");
    if (k > 0 && sorted[k - 1].first == w) {
      throw Error(ErrorCode::InvalidConfig, "duplicate worker count " + std::to_string(w));
    }
    const double base = sorted.front().second;
    r.rows.push_back({w, ms, base / ms, 100.0 * (1.0 - ms / base)});
    if (k > 0) {
      if (ms > sorted[k - 1].second) r.wall_non_increasing = false;
      if (r.rows[k].speedup < r.rows[k - 1].speedup) r.speedup_non_decreasing = false;
    }
  }
  return r;
}

ScalingReport single_worker_report(int workers, double wall_ms) {
  ScalingReport r;
  r.rows.push_back({workers, wall_ms, 1.0, 0.0});
  return r;
}

std::string ScalingReport::to_table() const {
  std::ostringstream os;
  os << "workers     wall_ms  speedup  decrease%\n";
  for (const auto& row : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%7d  %10.1f  %7.3f  %9.1f\n", row.workers, row.wall_ms, row.speedup,
                  row.decrease_pct);
    os << buf;
  }
  os << "wall_non_increasing\t" << (wall_non_increasing ? "yes" : "no") << '\n'
     << "speedup_non_decreasing\t" << (speedup_non_decreasing ? "yes" : "no") << '\n';
  return os.str();
}

}  // namespace hap::metrics
