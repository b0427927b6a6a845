#pragma once

// Low-level inner loops behind the hap_kernels API. Every backend must
// produce bitwise-identical results to the scalar reference: only
// order-independent operations (elementwise arithmetic, max/argmax) live
// here. Order-sensitive reductions (positive-part sums) stay scalar.
//
// Selection semantics mirror the x86 instructions so that scalar and vector
// code agree on ties: max_sel(a, b) == (a > b ? a : b) like maxpd,
// min_sel(a, b) == (a < b ? a : b) like minpd.

#include <cstddef>
#include <string_view>

namespace hap::simd {

inline double max_sel(double a, double b) noexcept { return a > b ? a : b; }
inline double min_sel(double a, double b) noexcept { return a < b ? a : b; }

// Largest and second-largest of a[k] + b[k]. `first_index` is the lowest index
// attaining `first`; `second` is the max over every other index (-inf when
// n == 1). Zeros are returned as +0.0.
struct Top2 {
  double first;
  double second;
  std::size_t first_index;
};

struct KernelSet {
  std::string_view name;

  Top2 (*add_top2)(const double* a, const double* b, std::size_t n);

  // out[j] = s[j] + min(tau, -m) with m = top.second at j == top.first_index
  // and m = top.first elsewhere.
  void (*responsibility_fill)(const double* s, std::size_t n, double tau, Top2 top, double* out);

  // out[i] = min(0, base + (total - max(rho[i], 0))).
  void (*availability_fill)(const double* rho, std::size_t n, double base, double total,
                            double* out);

  // out[k] = lambda * old[k] + (1 - lambda) * fresh[k], or old[k] when the two are
  // equal; out may alias either input.
  void (*damp)(const double* old_v, const double* fresh, std::size_t n, double lambda,
               double* out);

  // out[k] = min(s[k] + shift, 0).
  void (*shift_clamp)(const double* s, std::size_t n, double shift, double* out);

  // coords is dimension-major (coords[d * n + j]). out[j] = -sum_d (x[d] - coords[d][j])^2,
  // or its negated square root when `root` is set.
  void (*neg_distances)(const double* coords, std::size_t n, std::size_t dim, const double* x,
                        bool root, double* out);
};

enum class Backend { Scalar, Avx2 };

const KernelSet& scalar_kernels() noexcept;

// nullptr when the build or the CPU lacks AVX2.
const KernelSet* avx2_kernels() noexcept;

// Defaults to the widest available backend; HAP_SIMD=scalar|avx2 overrides.
const KernelSet& active_kernels() noexcept;
Backend active_backend() noexcept;

// Returns false (and leaves the selection unchanged) if unavailable.
bool select_backend(Backend backend) noexcept;

}  // namespace hap::simd
