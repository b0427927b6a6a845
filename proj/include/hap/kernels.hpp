#pragma once

// Message update equations of hierarchical affinity propagation, written
// against single rows or columns so the sequential engine and the MapReduce
// reducers share one math core.
//
// All arithmetic is binary64. Sums run left to right over ascending index;
// inner loops dispatch through hap::simd and are bitwise identical across
// backends.

#include <cstddef>
#include <span>
#include <vector>

namespace hap {

// Message damping weight, strictly inside (0, 1).
class DampingFactor {
 public:
  explicit DampingFactor(double lambda);
  double value() const noexcept { return lambda_; }

 private:
  double lambda_;
};

// Weight of the level-to-level similarity update; disabled by default.
class KappaFactor {
 public:
  KappaFactor() = default;
  explicit KappaFactor(double kappa);

  static KappaFactor disabled() noexcept { return {}; }

  bool enabled() const noexcept { return enabled_; }
  double value() const noexcept { return kappa_; }

 private:
  double kappa_ = 0.0;
  bool enabled_ = false;
};

namespace kernels {

// out[j] = s[j] + min(tau, -max_{k != j}(alpha[k] + s[k])). With a single
// entry the max runs over an empty set and is taken as -inf.
std::vector<double> responsibility_row(std::span<const double> s_row,
                                       std::span<const double> alpha_row, double tau);
void responsibility_row(std::span<const double> s_row, std::span<const double> alpha_row,
                        double tau, std::span<double> out);

// Sum over k != j of max(0, col[k]), k ascending.
double positive_sum_excluding(std::span<const double> col, std::size_t j);

// Availability of candidate j to every point, given the responsibilities
// column rho[., j]:
//   out[j] = c_j + phi_j + S
//   out[i] = min(0, c_j + phi_j + rho[j] + (S - max(0, rho[i])))   for i != j
// where S = positive_sum_excluding(rho, j). Throws IndexOutOfRange.
std::vector<double> availability_column(std::span<const double> rho_col, std::size_t j,
                                        double c_j, double phi_j);
void availability_column(std::span<const double> rho_col, std::size_t j, double c_j, double phi_j,
                         std::span<double> out);

// Upward message for level l + 1 from level l data: c + rho[j] + positive sum.
double tau_from_parts(double c_below, double rho_diag, double positive_sum) noexcept;
double tau_next(std::span<const double> rho_col_below, std::size_t j, double c_below);

// Downward message for level l - 1: max_k(alpha[k] + s[k]), k over all entries.
double phi_prev(std::span<const double> alpha_row_above, std::span<const double> s_row_above);

// max_j(alpha[j] + rho[j]).
double cluster_preference(std::span<const double> alpha_row, std::span<const double> rho_row);

// kappa * max_{k != i}(alpha[k] + rho[k]); 0 when kappa is 0 or the row has one entry.
double similarity_shift(std::span<const double> alpha_row, std::span<const double> rho_row,
                        std::size_t i, KappaFactor kappa);

// s[j] + shift clamped to <= 0, for every j.
double shifted_similarity(double s, double shift) noexcept;
void apply_similarity_shift(std::span<const double> s_row, double shift, std::span<double> out);

std::vector<double> similarity_level_update(std::span<const double> s_row, std::size_t i,
                                            std::span<const double> alpha_row,
                                            std::span<const double> rho_row, KappaFactor kappa);

// argmax_j(alpha[j] + rho[j]), lowest index on ties.
std::size_t extract_exemplar(std::span<const double> alpha_row, std::span<const double> rho_row);

// lambda * old + (1 - lambda) * fresh; equal entries pass through unchanged.
// `out` may alias `old_v`.
std::vector<double> damp(std::span<const double> old_v, std::span<const double> fresh,
                         DampingFactor lambda);
void damp(std::span<const double> old_v, std::span<const double> fresh, DampingFactor lambda,
          std::span<double> out);

}  // namespace kernels
}  // namespace hap
