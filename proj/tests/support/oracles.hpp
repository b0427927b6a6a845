#pragma once

// Independent reference computations for the tests. Everything here is
// written straight from the update equations with naive loops and fresh
// sums, sharing no code with the library kernels.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "hap/similarity.hpp"
#include "hap/tensors.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat affinity propagation responsibility of one row.
inline std::vector<double> flat_responsibility(const std::vector<double>& s, const std::vector<double>& a) {
  const std::size_t n = s.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double best = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) best = std::max(best, a[k] + s[k]);
    }
    out[j] = s[j] - best;
  }
  return out;
}

inline std::vector<double> responsibility(const std::vector<double>& s, const std::vector<double>& a, double tau) {
  const std::size_t n = s.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double best = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) best = std::max(best, a[k] + s[k]);
    }
    out[j] = s[j] + std::min(tau, -best);
  }
  return out;
}

// Availability with the positive-part sum recomputed for every entry.
inline std::vector<double> availability(const std::vector<double>& rho, std::size_t j, double c, double phi) {
  const std::size_t n = rho.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j && (i == j || k != i)) sum += std::max(0.0, rho[k]);
    }
    out[i] = i == j ? c + phi + sum : std::min(0.0, c + phi + rho[j] + sum);
  }
  return out;
}

inline double purity(const std::vector<int>& clusters, const std::vector<int>& labels) {
  std::map<int, std::map<int, int>> counts;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++counts[clusters[i]][labels[i]];
  int hit = 0;
  for (const auto& [cl, row] : counts) {
    int best = 0;
    for (const auto& [lab, k] : row) best = std::max(best, k);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(clusters.size());
}

// Dense naive HAP state, indexed [l][i][j] with levels 0-based.
struct State {
  int L = 0;
  std::size_t n = 0;
  std::vector<std::vector<std::vector<double>>> s, a, r;
  std::vector<std::vector<double>> tau, phi, c;
};

inline State initial(const hap::SimilarityTensor& st) {
  State x;
  x.L = st.levels();
  x.n = st.n();
  x.s.assign(x.L, std::vector<std::vector<double>>(x.n, std::vector<double>(x.n)));
  for (int l = 0; l < x.L; ++l)
    for (std::size_t i = 0; i < x.n; ++i)
      for (std::size_t j = 0; j < x.n; ++j) x.s[l][i][j] = st.values().at(l + 1, i, j);
  x.a = x.r = std::vector<std::vector<std::vector<double>>>(
      x.L, std::vector<std::vector<double>>(x.n, std::vector<double>(x.n, 0.0)));
  x.tau.assign(x.L, std::vector<double>(x.n, kInf));
  x.phi.assign(x.L, std::vector<double>(x.n, 0.0));
  x.c.assign(x.L, std::vector<double>(x.n, 0.0));
  return x;
}

inline double damp(double old_v, double fresh, double lambda) { return lambda * old_v + (1.0 - lambda) * fresh; }

inline double max_plus(const std::vector<double>& a, const std::vector<double>& b, std::size_t skip) {
  double best = -kInf;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k != skip) best = std::max(best, a[k] + b[k]);
  }
  return best;
}

inline double tau_up(const State& x, int l, std::size_t j) {
  double sum = 0.0;
  for (std::size_t k = 0; k < x.n; ++k) {
    if (k != j) sum += std::max(0.0, x.r[l][k][j]);
  }
  return x.c[l][j] + x.r[l][j][j] + sum;
}

// One Gauss-Seidel iteration: per level rho, alpha, tau above, phi below, c, s above.
inline void gauss_seidel_step(State& x, double lambda, double kappa, bool kappa_on) {
  const std::size_t n = x.n;
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  for (int l = 0; l < x.L; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto fresh = responsibility(x.s[l][i], x.a[l][i], x.tau[l][i]);
      for (std::size_t j = 0; j < n; ++j) x.r[l][i][j] = damp(x.r[l][i][j], fresh[j], lambda);
    }
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = x.r[l][i][j];
      const auto fresh = availability(col, j, x.c[l][j], x.phi[l][j]);
      for (std::size_t i = 0; i < n; ++i) x.a[l][i][j] = damp(x.a[l][i][j], fresh[i], lambda);
    }
    if (l + 1 < x.L)
      for (std::size_t j = 0; j < n; ++j) x.tau[l + 1][j] = tau_up(x, l, j);
    if (l > 0)
      for (std::size_t i = 0; i < n; ++i) x.phi[l - 1][i] = max_plus(x.a[l][i], x.s[l][i], none);
    for (std::size_t i = 0; i < n; ++i) x.c[l][i] = max_plus(x.a[l][i], x.r[l][i], none);
    if (kappa_on && l + 1 < x.L) {
      for (std::size_t i = 0; i < n; ++i) {
        const double shift = n < 2 ? 0.0 : kappa * max_plus(x.a[l][i], x.r[l][i], i);
        for (std::size_t j = 0; j < n; ++j) x.s[l + 1][i][j] = std::min(0.0, x.s[l][i][j] + shift);
      }
    }
  }
}

// One Jacobi iteration: every cross-level read sees the previous iteration;
// tau, c and the similarity shift are frozen at iteration 1.
inline void jacobi_step(State& x, int iteration, double lambda, double kappa, bool kappa_on) {
  const std::size_t n = x.n;
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  const State old = x;
  const bool cross = iteration >= 2;
  if (cross) {
    for (int l = 0; l < x.L; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        x.c[l][i] = max_plus(old.a[l][i], old.r[l][i], none);
        if (l > 0) x.tau[l][i] = tau_up(old, l - 1, i);
      }
  }
  for (int l = 0; l < x.L; ++l)
    for (std::size_t i = 0; i < n; ++i) {
      const auto fresh = responsibility(x.s[l][i], x.a[l][i], x.tau[l][i]);
      for (std::size_t j = 0; j < n; ++j) x.r[l][i][j] = damp(x.r[l][i][j], fresh[j], lambda);
    }
  for (int l = 0; l < x.L; ++l)
    for (std::size_t j = 0; j < n; ++j) x.phi[l][j] = l + 1 < x.L ? max_plus(old.a[l + 1][j], old.s[l + 1][j], none) : 0.0;
  for (int l = 0; l < x.L; ++l)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = x.r[l][i][j];
      const auto fresh = availability(col, j, x.c[l][j], x.phi[l][j]);
      for (std::size_t i = 0; i < n; ++i) x.a[l][i][j] = damp(x.a[l][i][j], fresh[i], lambda);
    }
  if (cross && kappa_on) {
    for (int l = 1; l < x.L; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        const double shift = n < 2 ? 0.0 : kappa * max_plus(old.a[l - 1][i], old.r[l - 1][i], i);
        for (std::size_t j = 0; j < n; ++j) x.s[l][i][j] = std::min(0.0, old.s[l - 1][i][j] + shift);
      }
  }
}

inline std::size_t argmax_plus(const std::vector<double>& a, const std::vector<double>& r) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (a[k] + r[k] > a[best] + r[best]) best = k;
  }
  return best;
}

// Largest |difference| between the oracle state and a library state.
inline double max_diff(const State& x, const hap::MessageState& st) {
  double d = 0.0;
  auto upd = [&](double u, double v) {
    if (std::isinf(u) || std::isinf(v)) {
      if (u != v) d = kInf;
      return;
    }
    d = std::max(d, std::abs(u - v));
  };
  for (int l = 0; l < x.L; ++l)
    for (std::size_t i = 0; i < x.n; ++i) {
      upd(x.tau[l][i], st.tau.at(l + 1, i));
      upd(x.phi[l][i], st.phi.at(l + 1, i));
      upd(x.c[l][i], st.c.at(l + 1, i));
      for (std::size_t j = 0; j < x.n; ++j) {
        upd(x.s[l][i][j], st.s.values().at(l + 1, i, j));
        upd(x.a[l][i][j], st.alpha.at(l + 1, i, j));
        upd(x.r[l][i][j], st.rho.at(l + 1, i, j));
      }
    }
  return d;
}

inline bool same_bits(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::bit_cast<std::uint64_t>(a[k]) != std::bit_cast<std::uint64_t>(b[k])) return false;
  }
  return true;
}

inline bool same_bits(const hap::MessageState& a, const hap::MessageState& b) {
  return same_bits(a.s.values().data(), b.s.values().data()) && same_bits(a.alpha.data(), b.alpha.data()) &&
         same_bits(a.rho.data(), b.rho.data()) && same_bits(a.tau.data(), b.tau.data()) &&
         same_bits(a.phi.data(), b.phi.data()) && same_bits(a.c.data(), b.c.data());
}

// Seeded random 2-D points with a few clusters, for equivalence suites.
inline hap::PointSet random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> centre(0.0, 20.0), jitter(-1.5, 1.5);
  const std::size_t k = 2 + seed % 4;
  std::vector<std::pair<double, double>> centres(k);
  for (auto& c : centres) c = {centre(gen), centre(gen)};
  hap::PointSet ps;
  ps.dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centres[i % k];
    ps.coords.push_back(c.first + jitter(gen));
    ps.coords.push_back(c.second + jitter(gen));
    ps.labels.push_back(static_cast<int>(i % k));
  }
  return ps;
}

}  // namespace oracle
