#pragma once

// Single-threaded reference engine. Serves as the correctness oracle for the
// MapReduce backend (Schedule::Jacobi) and as the scaling baseline.

#include <functional>
#include <vector>

#include "hap/run.hpp"

namespace hap {

using IterationObserver = std::function<void(const MessageState&)>;

// Runs cfg.iterations full passes and extracts assignments. cfg.engine is
// ignored; cfg.schedule picks the update order. Throws InvalidConfig or
// ShapeMismatch (levels disagree with the tensor).
RunResult run_sequential(const SimilarityTensor& s, const RunConfig& cfg,
                         const IterationObserver& on_iteration = {});

// One pass over all levels; `state.iteration` is incremented.
void sequential_iteration(MessageState& state, const RunConfig& cfg);

// Snapshots after every `snapshot_every`-th iteration, plus the final state
// when the iteration count is not a multiple.
std::vector<MessageState> replay_iterations(const SimilarityTensor& s, const RunConfig& cfg,
                                            int snapshot_every);

}  // namespace hap
