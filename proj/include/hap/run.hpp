#pragma once

// Run configuration and per-level cluster assignments shared by both engines.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hap/kernels.hpp"
#include "hap/similarity.hpp"
#include "hap/tensors.hpp"

namespace hap {

enum class Engine { Sequential, MapReduce };

// Gauss-Seidel updates level by level in place and reads the freshest
// values; Jacobi reproduces the MapReduce dataflow, where every
// cross-level read sees the previous iteration.
enum class Schedule { GaussSeidel, Jacobi };

std::string_view to_string(Engine engine) noexcept;
std::string_view to_string(Schedule schedule) noexcept;
Engine parse_engine(std::string_view text);
Schedule parse_schedule(std::string_view text);

struct RunConfig {
  int levels = 1;
  int iterations = 30;
  DampingFactor lambda{0.5};
  KappaFactor kappa;
  std::uint64_t seed = 0;
  PreferenceStrategy preference;
  Engine engine = Engine::Sequential;
  Schedule schedule = Schedule::GaussSeidel;
  int workers = 1;

  // Throws InvalidConfig.
  void validate() const;
};

// e[l][i]: exemplar chosen by point i at level l (levels 1-indexed).
class AssignmentTable {
 public:
  AssignmentTable() = default;
  AssignmentTable(int levels, std::size_t n);

  int levels() const noexcept { return levels_; }
  std::size_t n() const noexcept { return n_; }

  int exemplar(int level, std::size_t i) const {
    return e_[static_cast<std::size_t>(level - 1) * n_ + i];
  }
  void set(int level, std::size_t i, int exemplar);
  std::span<const int> level(int level) const {
    return {e_.data() + static_cast<std::size_t>(level - 1) * n_, n_};
  }

  // Sorted distinct exemplar indices at one level.
  std::vector<int> exemplars(int level) const;
  std::size_t exemplar_count(int level) const { return exemplars(level).size(); }
  std::vector<std::size_t> exemplar_counts() const;

  friend bool operator==(const AssignmentTable&, const AssignmentTable&) = default;

 private:
  int levels_ = 0;
  std::size_t n_ = 0;
  std::vector<int> e_;
};

// argmax_j(alpha_ij + rho_ij) for every point and level.
AssignmentTable extract_assignments(const MessageState& state);

struct RunResult {
  MessageState state;
  AssignmentTable assignments;
};

}  // namespace hap
