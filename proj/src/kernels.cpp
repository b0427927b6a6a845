#include "hap/kernels.hpp"

#include <string>

#include "hap/error.hpp"
#include "hap/simd/kernel_set.hpp"

namespace hap {

DampingFactor::DampingFactor(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "damping factor must lie in (0, 1), got " + std::to_string(lambda));
  }
}

KappaFactor::KappaFactor(double kappa) : kappa_(kappa), enabled_(true) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "kappa must lie in [0, 1], got " + std::to_string(kappa));
  }
}

namespace kernels {
namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::string(what) + ": lengths " + std::to_string(a) +
                                               " and " + std::to_string(b));
  }
}

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw Error(ErrorCode::LengthMismatch, std::string(what) + ": empty input");
}

}  // namespace

void responsibility_row(std::span<const double> s_row, std::span<const double> alpha_row,
                        double tau, std::span<double> out) {
  require_same(s_row.size(), alpha_row.size(), "responsibility_row");
  require_same(s_row.size(), out.size(), "responsibility_row");
  require_nonempty(s_row.size(), "responsibility_row");
  const auto& k = simd::active_kernels();
  const simd::Top2 top = k.add_top2(alpha_row.data(), s_row.data(), s_row.size());
  k.responsibility_fill(s_row.data(), s_row.size(), tau, top, out.data());
}

std::vector<double> responsibility_row(std::span<const double> s_row,
                                       std::span<const double> alpha_row, double tau) {
  std::vector<double> out(s_row.size());
  responsibility_row(s_row, alpha_row, tau, out);
  return out;
}

double positive_sum_excluding(std::span<const double> col, std::size_t j) {
  if (j >= col.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "positive_sum_excluding: j = " + std::to_string(j));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < col.size(); ++k) {
    if (k != j) sum = sum + simd::max_sel(col[k], 0.0);
  }
  return sum;
}

void availability_column(std::span<const double> rho_col, std::size_t j, double c_j, double phi_j,
                         std::span<double> out) {
  require_same(rho_col.size(), out.size(), "availability_column");
  if (j >= rho_col.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "availability_column: j = " + std::to_string(j) +
                                                " with N = " + std::to_string(rho_col.size()));
  }
  const double total = positive_sum_excluding(rho_col, j);
  const double evidence = c_j + phi_j;
  simd::active_kernels().availability_fill(rho_col.data(), rho_col.size(), evidence + rho_col[j],
                                           total, out.data());
  out[j] = evidence + total;
}

std::vector<double> availability_column(std::span<const double> rho_col, std::size_t j,
                                        double c_j, double phi_j) {
  std::vector<double> out(rho_col.size());
  availability_column(rho_col, j, c_j, phi_j, out);
  return out;
}

double tau_from_parts(double c_below, double rho_diag, double positive_sum) noexcept {
  return c_below + rho_diag + positive_sum;
}

double tau_next(std::span<const double> rho_col_below, std::size_t j, double c_below) {
  if (j >= rho_col_below.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "tau_next: j = " + std::to_string(j));
  }
  return tau_from_parts(c_below, rho_col_below[j], positive_sum_excluding(rho_col_below, j));
}

double phi_prev(std::span<const double> alpha_row_above, std::span<const double> s_row_above) {
  require_same(alpha_row_above.size(), s_row_above.size(), "phi_prev");
  require_nonempty(s_row_above.size(), "phi_prev");
  return simd::active_kernels()
      .add_top2(alpha_row_above.data(), s_row_above.data(), s_row_above.size())
      .first;
}

double cluster_preference(std::span<const double> alpha_row, std::span<const double> rho_row) {
  require_same(alpha_row.size(), rho_row.size(), "cluster_preference");
  require_nonempty(rho_row.size(), "cluster_preference");
  return simd::active_kernels().add_top2(alpha_row.data(), rho_row.data(), rho_row.size()).first;
}

double similarity_shift(std::span<const double> alpha_row, std::span<const double> rho_row,
                        std::size_t i, KappaFactor kappa) {
  require_same(alpha_row.size(), rho_row.size(), "similarity_shift");
  if (i >= rho_row.size()) throw Error(ErrorCode::IndexOutOfRange, "similarity_shift: i");
  if (!kappa.enabled() || kappa.value() == 0.0 || rho_row.size() < 2) return 0.0;
  const simd::Top2 top =
      simd::active_kernels().add_top2(alpha_row.data(), rho_row.data(), rho_row.size());
  const double best_other = top.first_index == i ? top.second : top.first;
  return kappa.value() * best_other;
}

double shifted_similarity(double s, double shift) noexcept {
  return simd::min_sel(s + shift, 0.0);
}

void apply_similarity_shift(std::span<const double> s_row, double shift, std::span<double> out) {
  require_same(s_row.size(), out.size(), "apply_similarity_shift");
  simd::active_kernels().shift_clamp(s_row.data(), s_row.size(), shift, out.data());
}

std::vector<double> similarity_level_update(std::span<const double> s_row, std::size_t i,
                                            std::span<const double> alpha_row,
                                            std::span<const double> rho_row, KappaFactor kappa) {
  require_same(s_row.size(), rho_row.size(), "similarity_level_update");
  std::vector<double> out(s_row.size());
  apply_similarity_shift(s_row, similarity_shift(alpha_row, rho_row, i, kappa), out);
  return out;
}

std::size_t extract_exemplar(std::span<const double> alpha_row, std::span<const double> rho_row) {
  require_same(alpha_row.size(), rho_row.size(), "extract_exemplar");
  require_nonempty(rho_row.size(), "extract_exemplar");
  return simd::active_kernels()
      .add_top2(alpha_row.data(), rho_row.data(), rho_row.size())
      .first_index;
}

void damp(std::span<const double> old_v, std::span<const double> fresh, DampingFactor lambda,
          std::span<double> out) {
  require_same(old_v.size(), fresh.size(), "damp");
  require_same(old_v.size(), out.size(), "damp");
  simd::active_kernels().damp(old_v.data(), fresh.data(), old_v.size(), lambda.value(),
                              out.data());
}

std::vector<double> damp(std::span<const double> old_v, std::span<const double> fresh,
                         DampingFactor lambda) {
  std::vector<double> out(old_v.size());
  damp(old_v, fresh, lambda, out);
  return out;
}

}  // namespace kernels
}  // namespace hap
