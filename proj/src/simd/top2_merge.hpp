#pragma once

// Shared top-2 update rules. Both backends fold elements with top2_push in
// ascending index order, so the lowest index wins ties for `first`.

#include "hap/simd/kernel_set.hpp"

namespace hap::simd {

inline void top2_push(Top2& top, double v, std::size_t k) noexcept {
  if (v > top.first) {
    top.second = top.first;
    top.first = v;
    top.first_index = k;
  } else {
    top.second = max_sel(top.second, v);
  }
}

// Combines two partial results covering disjoint index sets.
inline Top2 top2_merge(const Top2& a, const Top2& b) noexcept {
  const bool a_wins = a.first > b.first || (a.first == b.first && a.first_index < b.first_index);
  const Top2& win = a_wins ? a : b;
  const Top2& lose = a_wins ? b : a;
  return {win.first, max_sel(max_sel(win.second, lose.first), lose.second), win.first_index};
}

inline Top2 top2_finish(Top2 top) noexcept {
  // max over a set containing both zeros may come back as either sign
  if (top.first == 0.0) top.first = 0.0;
  if (top.second == 0.0) top.second = 0.0;
  return top;
}

}  // namespace hap::simd
