#pragma once

// The three MapReduce jobs of the parallel engine and the iteration driver.
//
// Boundary formats:
//   seed, job2 output : exemplar-based S/alpha/rho columns; tau/phi/c as
//                       per-index scalars (the seed carries whole vectors)
//   job1 output       : node-based S/alpha/rho rows; tau/phi/c scalars; an
//                       Aux scalar per (i, l < L) with the similarity shift
//                       when the level-to-level update is active
//   job3 output       : node-based Aux scalar per (i, l) holding e_i^l
//
// Every cross-level read inside one iteration sees the previous iteration,
// which is the Jacobi schedule of the sequential engine.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hap/mapreduce.hpp"
#include "hap/run.hpp"

namespace hap::mr {

struct IntermediateKey {
  int level = 1;
  int index = 0;

  friend auto operator<=>(const IntermediateKey&, const IntermediateKey&) = default;
};

std::string to_string(const IntermediateKey& key);

template <>
struct KeyHash<IntermediateKey> {
  std::size_t operator()(const IntermediateKey& k) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.level)) << 32) |
                      static_cast<std::uint32_t>(k.index);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

// Matrix/vector tensor elements plus the auxiliary scalars that carry data
// across levels.
enum class ValueKind : std::uint8_t {
  S,
  Alpha,
  Rho,
  Tau,
  Phi,
  C,
  TauPositiveSum,  // sum_{k != j} max(0, rho_kj) of column j, level below
  TauRhoDiag,      // rho_jj, level below
  TauClusterPref,  // c_j, level below
  PhiAlpha,        // alpha row element, level above
  PhiSimilarity,   // s row element, level above
  SimShift,        // similarity shift of row i, level below
  SimBelow,        // s element of the level below
};

inline constexpr std::size_t kValueKinds = 13;

std::string_view to_string(ValueKind kind) noexcept;

struct IntermediateValue {
  ValueKind kind = ValueKind::S;
  std::int32_t source = 0;
  double value = 0.0;

  // (kind, source, bit pattern of value): a total order.
  friend bool operator<(const IntermediateValue& a, const IntermediateValue& b) noexcept;
};

using HapJob = JobSpec<IntermediateKey, IntermediateValue>;

struct JobShape {
  int levels = 1;
  std::size_t n = 0;
  int iteration = 1;
  DampingFactor lambda{0.5};
  KappaFactor kappa;
};

// rho, c and tau. Exemplar-based in, node-based out. At iteration 1 tau and c
// pass through unchanged.
HapJob job1_rho_c_tau(const JobShape& shape);
// phi, alpha and the optional similarity update. Node-based in, exemplar-based out.
HapJob job2_alpha_phi(const JobShape& shape);
// Exemplar extraction. Exemplar-based in, Aux assignment scalars out.
HapJob job3_extract(const JobShape& shape);

// Job 3 output to an assignment table. Throws MissingRecord.
AssignmentTable assignments_from_records(std::span<const KeyedRecord> records, int levels,
                                         std::size_t n);

struct JobTiming {
  int iteration = 0;  // 0 for the extraction job
  std::string job;
  double wall_ms = 0.0;
};

// `iter TAB job TAB wall_ms` lines.
std::string format_timings(std::span<const JobTiming> timings);

struct DriveOptions {
  // Empty: a private directory under the system temp dir, removed afterwards.
  std::filesystem::path spill_dir;
  // Continue from the latest complete boundary in spill_dir. The stored run
  // description must match (InvalidConfig otherwise).
  bool resume = false;
  // Called after each job's output has been persisted; index counts jobs
  // from 0 in chain order (job1, job2 per iteration, then extraction).
  std::function<void(std::size_t index, const std::string& name)> after_job;
  // Full state after every job2 boundary.
  std::function<void(const MessageState&)> on_iteration;
};

struct DriveResult {
  MessageState state;
  AssignmentTable assignments;
  ChainReport report;
  std::vector<JobTiming> timings;
};

// Seeds exemplar-based records from s, loops [job1, job2] cfg.iterations
// times and runs job3. cfg.schedule is ignored. Throws InvalidConfig,
// ShapeMismatch and job errors.
DriveResult drive(const SimilarityTensor& s, const RunConfig& cfg, const DriveOptions& options = {});

}  // namespace hap::mr
