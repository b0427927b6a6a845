#include <cmath>
#include <limits>

#include "hap/simd/kernel_set.hpp"
#include "simd/top2_merge.hpp"

namespace hap::simd {
namespace {

Top2 add_top2(const double* a, const double* b, std::size_t n) {
  Top2 top{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  if (n == 0) return top;
  top.first = a[0] + b[0];
  for (std::size_t k = 1; k < n; ++k) top2_push(top, a[k] + b[k], k);
  return top2_finish(top);
}

void responsibility_fill(const double* s, std::size_t n, double tau, Top2 top, double* out) {
  const double shift = min_sel(tau, -top.first);
  for (std::size_t j = 0; j < n; ++j) out[j] = s[j] + shift;
  if (n > 0) out[top.first_index] = s[top.first_index] + min_sel(tau, -top.second);
}

void availability_fill(const double* rho, std::size_t n, double base, double total, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = min_sel(base + (total - max_sel(rho[i], 0.0)), 0.0);
}

void damp(const double* old_v, const double* fresh, std::size_t n, double lambda, double* out) {
  const double keep = 1.0 - lambda;
  // equal inputs pass through so a converged message is an exact fixed point
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = old_v[k] == fresh[k] ? old_v[k] : lambda * old_v[k] + keep * fresh[k];
  }
}

void shift_clamp(const double* s, std::size_t n, double shift, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = min_sel(s[k] + shift, 0.0);
}

void neg_distances(const double* coords, std::size_t n, std::size_t dim, const double* x, bool root,
                   double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - coords[d * n + j];
      acc = acc + diff * diff;
    }
    out[j] = root ? -std::sqrt(acc) : -acc;
  }
}

}  // namespace

const KernelSet& scalar_kernels() noexcept {
  static const KernelSet set{"scalar",           add_top2, responsibility_fill, availability_fill,
                             damp,               shift_clamp, neg_distances};
  return set;
}

}  // namespace hap::simd
