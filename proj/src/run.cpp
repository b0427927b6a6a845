#include "hap/run.hpp"

#include <algorithm>
#include <string>

#include "hap/error.hpp"

namespace hap {

std::string_view to_string(Engine engine) noexcept {
  return engine == Engine::Sequential ? "sequential" : "mapreduce";
}

std::string_view to_string(Schedule schedule) noexcept {
  return schedule == Schedule::GaussSeidel ? "gauss-seidel" : "jacobi";
}

Engine parse_engine(std::string_view text) {
  if (text == "sequential") return Engine::Sequential;
  if (text == "mapreduce") return Engine::MapReduce;
  throw Error(ErrorCode::InvalidConfig, "unknown engine '" + std::string(text) + "'");
}

Schedule parse_schedule(std::string_view text) {
  if (text == "gauss-seidel") return Schedule::GaussSeidel;
  if (text == "jacobi") return Schedule::Jacobi;
  throw Error(ErrorCode::InvalidConfig, "unknown schedule '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  if (levels < 1) throw Error(ErrorCode::InvalidConfig, "levels must be >= 1");
  if (iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 1");
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
}

AssignmentTable::AssignmentTable(int levels, std::size_t n)
    : levels_(levels), n_(n), e_(static_cast<std::size_t>(levels) * n, 0) {}

void AssignmentTable::set(int level, std::size_t i, int exemplar) {
  if (level < 1 || level > levels_ || i >= n_ || exemplar < 0 ||
      static_cast<std::size_t>(exemplar) >= n_) {
    throw Error(ErrorCode::IndexOutOfRange, "assignment (" + std::to_string(i) + "," +
                                                std::to_string(level) + ") -> " +
                                                std::to_string(exemplar));
  }
  e_[static_cast<std::size_t>(level - 1) * n_ + i] = exemplar;
}

std::vector<int> AssignmentTable::exemplars(int level) const {
  auto row = this->level(level);
  std::vector<int> out(row.begin(), row.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> AssignmentTable::exemplar_counts() const {
  std::vector<std::size_t> out;
  for (int l = 1; l <= levels_; ++l) out.push_back(exemplar_count(l));
  return out;
}

AssignmentTable extract_assignments(const MessageState& state) {
  AssignmentTable table(state.levels(), state.n());
  for (int l = 1; l <= state.levels(); ++l) {
    for (std::size_t i = 0; i < state.n(); ++i) {
      table.set(l, i,
                static_cast<int>(kernels::extract_exemplar(state.alpha.row(l, i), state.rho.row(l, i))));
    }
  }
  return table;
}

}  // namespace hap
