#include "hap/sequential.hpp"

#include <algorithm>
#include <string>

#include "hap/error.hpp"

namespace hap {
namespace {

// Row-major N x N transpose in 32x32 tiles; `out` must not alias `src`.
void transpose_level(std::span<const double> src, std::size_t n, std::span<double> out) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
    const std::size_t i1 = std::min(n, i0 + kTile);
    for (std::size_t j0 = 0; j0 < n; j0 += kTile) {
      const std::size_t j1 = std::min(n, j0 + kTile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) out[j * n + i] = src[i * n + j];
      }
    }
  }
}

std::span<double> row_of(std::vector<double>& m, std::size_t n, std::size_t r) {
  return {m.data() + r * n, n};
}

// In-place order: for each level, rho then alpha, then tau^{l+1},
// phi^{l-1}, c^l and the optional s^{l+1}, each reading the freshest values.
void gauss_seidel_iteration(MessageState& st, const RunConfig& cfg) {
  const std::size_t n = st.n();
  const int levels = st.levels();
  Tensor3& s = st.s.mutable_values();
  std::vector<double> fresh(n), rho_t(n * n), alpha_t(n * n);

  for (int l = 1; l <= levels; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      kernels::responsibility_row(s.row(l, i), st.alpha.row(l, i), st.tau.at(l, i), fresh);
      kernels::damp(st.rho.row(l, i), fresh, cfg.lambda, st.rho.row(l, i));
    }

    transpose_level(st.rho.level(l), n, rho_t);
    transpose_level(st.alpha.level(l), n, alpha_t);
    for (std::size_t j = 0; j < n; ++j) {
      kernels::availability_column(row_of(rho_t, n, j), j, st.c.at(l, j), st.phi.at(l, j), fresh);
      kernels::damp(row_of(alpha_t, n, j), fresh, cfg.lambda, row_of(alpha_t, n, j));
    }
    transpose_level(alpha_t, n, st.alpha.level(l));

    if (l < levels) {
      // c^l has not been refreshed yet in this pass
      for (std::size_t j = 0; j < n; ++j) {
        st.tau.at(l + 1, j) = kernels::tau_next(row_of(rho_t, n, j), j, st.c.at(l, j));
      }
    }
    if (l > 1) {
      for (std::size_t i = 0; i < n; ++i) {
        st.phi.at(l - 1, i) = kernels::phi_prev(st.alpha.row(l, i), s.row(l, i));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      st.c.at(l, i) = kernels::cluster_preference(st.alpha.row(l, i), st.rho.row(l, i));
    }
    if (cfg.kappa.enabled() && l < levels) {
      for (std::size_t i = 0; i < n; ++i) {
        const double shift =
            kernels::similarity_shift(st.alpha.row(l, i), st.rho.row(l, i), i, cfg.kappa);
        kernels::apply_similarity_shift(s.row(l, i), shift, s.row(l + 1, i));
      }
    }
  }
}

// Same schedule as one [job1, job2] round of the MapReduce pipeline. Phase 1
// (rows) refreshes c, tau and rho; phase 2 (columns) refreshes phi, alpha and
// the shifted similarities. Cross-level reads see the previous iteration.
void jacobi_iteration(MessageState& st, const RunConfig& cfg, int iteration) {
  const std::size_t n = st.n();
  const int levels = st.levels();
  Tensor3& s = st.s.mutable_values();
  std::vector<double> fresh(n), rho_t(n * n), alpha_t(n * n);

  const bool refresh_cross = iteration >= 2;
  const bool shift_levels = refresh_cross && cfg.kappa.enabled() && levels > 1;
  LevelVectors shift;
  if (shift_levels) shift = LevelVectors(levels, n, 0.0);

  if (refresh_cross) {
    LevelVectors next_c = st.c;
    LevelVectors next_tau = st.tau;
    for (int l = 1; l <= levels; ++l) {
      if (l > 1) transpose_level(st.rho.level(l - 1), n, rho_t);
      for (std::size_t i = 0; i < n; ++i) {
        next_c.at(l, i) = kernels::cluster_preference(st.alpha.row(l, i), st.rho.row(l, i));
        if (l > 1) {
          const auto col = row_of(rho_t, n, i);
          next_tau.at(l, i) = kernels::tau_from_parts(st.c.at(l - 1, i), col[i],
                                                      kernels::positive_sum_excluding(col, i));
        }
        if (shift_levels && l < levels) {
          shift.at(l, i) = kernels::similarity_shift(st.alpha.row(l, i), st.rho.row(l, i), i, cfg.kappa);
        }
      }
    }
    st.c = std::move(next_c);
    st.tau = std::move(next_tau);
  }
  for (int l = 1; l <= levels; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      kernels::responsibility_row(s.row(l, i), st.alpha.row(l, i), st.tau.at(l, i), fresh);
      kernels::damp(st.rho.row(l, i), fresh, cfg.lambda, st.rho.row(l, i));
    }
  }

  for (int l = 1; l <= levels; ++l) {
    for (std::size_t j = 0; j < n; ++j) {
      st.phi.at(l, j) = l < levels ? kernels::phi_prev(st.alpha.row(l + 1, j), s.row(l + 1, j)) : 0.0;
    }
  }
  for (int l = 1; l <= levels; ++l) {
    transpose_level(st.rho.level(l), n, rho_t);
    transpose_level(st.alpha.level(l), n, alpha_t);
    for (std::size_t j = 0; j < n; ++j) {
      kernels::availability_column(row_of(rho_t, n, j), j, st.c.at(l, j), st.phi.at(l, j), fresh);
      kernels::damp(row_of(alpha_t, n, j), fresh, cfg.lambda, row_of(alpha_t, n, j));
    }
    transpose_level(alpha_t, n, st.alpha.level(l));
  }
  if (shift_levels) {
    // top-down so each level still reads the unshifted level below
    for (int l = levels; l >= 2; --l) {
      for (std::size_t i = 0; i < n; ++i) {
        kernels::apply_similarity_shift(s.row(l - 1, i), shift.at(l - 1, i), s.row(l, i));
      }
    }
  }
}

}  // namespace

void sequential_iteration(MessageState& state, const RunConfig& cfg) {
  const int iteration = state.iteration + 1;
  if (cfg.schedule == Schedule::GaussSeidel) {
    gauss_seidel_iteration(state, cfg);
  } else {
    jacobi_iteration(state, cfg, iteration);
  }
  state.iteration = iteration;
}

RunResult run_sequential(const SimilarityTensor& s, const RunConfig& cfg,
                         const IterationObserver& on_iteration) {
  cfg.validate();
  if (cfg.levels != s.levels()) {
    throw Error(ErrorCode::ShapeMismatch, "config asks for " + std::to_string(cfg.levels) +
                                              " levels, similarity tensor has " +
                                              std::to_string(s.levels()));
  }
  MessageState state = MessageState::initial(s);
  for (int t = 1; t <= cfg.iterations; ++t) {
    sequential_iteration(state, cfg);
    if (on_iteration) on_iteration(state);
  }
  AssignmentTable table = extract_assignments(state);
  return {std::move(state), std::move(table)};
}

std::vector<MessageState> replay_iterations(const SimilarityTensor& s, const RunConfig& cfg,
                                            int snapshot_every) {
  if (snapshot_every < 1) throw Error(ErrorCode::InvalidConfig, "snapshot_every must be >= 1");
  std::vector<MessageState> snapshots;
  run_sequential(s, cfg, [&](const MessageState& st) {
    if (st.iteration % snapshot_every == 0 || st.iteration == cfg.iterations) {
      snapshots.push_back(st);
    }
  });
  return snapshots;
}

}  // namespace hap
