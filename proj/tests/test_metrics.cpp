#include <doctest.h>

#include <random>
#include <set>

#include "hap/error.hpp"
#include "hap/metrics.hpp"
#include "oracles.hpp"

using namespace hap;
using namespace hap::metrics;

namespace {

AssignmentTable table_of(std::vector<std::vector<int>> levels) {
  AssignmentTable t(static_cast<int>(levels.size()), levels[0].size());
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (std::size_t i = 0; i < levels[l].size(); ++i) t.set(static_cast<int>(l + 1), i, levels[l][i]);
  return t;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("purity examples") {
  CHECK(purity(std::vector<int>{0, 0, 1}, std::vector<int>{7, 7, 8}) == 1.0);
  CHECK(purity(std::vector<int>{0, 0, 0}, std::vector<int>{7, 8, 8}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(purity(std::vector<int>{0, 1, 2, 3}, std::vector<int>{1, 1, 2, 2}) == 1.0);
}

TEST_CASE("purity errors") {
  try {
    (void)purity(std::vector<int>{0, 1}, std::vector<int>{0});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  CHECK_THROWS_AS((void)purity(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("purity matches the oracle and is relabeling invariant") {
  std::mt19937_64 gen(99);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 1 + gen() % 60;
    std::vector<int> cl(n), lab(n);
    for (auto& v : cl) v = static_cast<int>(gen() % 7);
    for (auto& v : lab) v = static_cast<int>(gen() % 4);
    const double p = purity(cl, lab);
    CHECK(p == doctest::Approx(oracle::purity(cl, lab)).epsilon(1e-15));
    std::vector<int> cl2 = cl, lab2 = lab;
    for (auto& v : cl2) v = 100 - 3 * v;
    for (auto& v : lab2) v = (v + 2) % 4 + 10;
    CHECK(purity(cl2, lab2) == p);
    CHECK(purity(cl, cl) == 1.0);
    std::size_t classes = std::set<int>(lab.begin(), lab.end()).size();
    CHECK(p >= 1.0 / static_cast<double>(classes) - 1e-12);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("contingency counts") {
  const Contingency c = contingency(std::vector<int>{5, 5, 2, 2, 2}, std::vector<int>{1, 0, 0, 0, 1});
  CHECK(c.clusters == std::vector<int>{2, 5});
  CHECK(c.classes == std::vector<int>{0, 1});
  CHECK(c.counts == std::vector<std::vector<std::size_t>>{{2, 1}, {1, 1}});
}

TEST_CASE("purity report lines") {
  const auto t = table_of({{0, 0, 2, 2}, {0, 0, 0, 0}});
  const PurityReport r = purity_report(t, std::vector<int>{1, 1, 2, 2});
  CHECK(r.to_lines() == "1\t1.000000\t2\n2\t0.500000\t1\n");
  CHECK(r.to_table().find("level") == 0);
}

TEST_CASE("level stats") {
  const auto t = table_of({{0, 0, 2, 2}, {0, 0, 0, 0}});
  const auto st = level_stats(t);
  REQUIRE(st.size() == 2);
  CHECK(st[0].exemplars == 2);
  CHECK(st[0].size_histogram == std::map<std::size_t, std::size_t>{{2, 2}});
  CHECK(st[1].exemplars == 1);
  CHECK(st[1].size_histogram == std::map<std::size_t, std::size_t>{{4, 1}});
  CHECK(exemplar_counts_non_increasing(st));
  CHECK(format_level_stats(st) == "level\texemplars\tsizes\n1\t2\t2x2\n2\t1\t4x1\n");
  const auto up = level_stats(table_of({{0, 0, 0, 0}, {0, 1, 2, 2}}));
  CHECK_FALSE(exemplar_counts_non_increasing(up));
}

TEST_CASE("scaling report") {
  const std::vector<std::pair<int, double>> two{{2, 50}, {1, 100}};
  const ScalingReport r = scaling_report(two);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].workers == 1);
  CHECK(r.rows[1].speedup == 2.0);
  CHECK(r.wall_non_increasing);
  CHECK(r.speedup_non_decreasing);

  const std::vector<std::pair<int, double>> cloud{{1, 320}, {5, 115}};
  const ScalingReport c = scaling_report(cloud);
  CHECK(c.rows[1].decrease_pct == doctest::Approx(64.0625));
  CHECK(c.to_table().find("   64.1") != std::string::npos);

  const std::vector<std::pair<int, double>> worse{{1, 100}, {2, 120}};
  CHECK_FALSE(scaling_report(worse).wall_non_increasing);

  const std::vector<std::pair<int, double>> one{{1, 100}};
  try {
    (void)scaling_report(one);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  const std::vector<std::pair<int, double>> dup{{1, 100}, {1, 90}};
  CHECK_THROWS_AS((void)scaling_report(dup), Error);
  CHECK(single_worker_report(1, 12.5).rows.size() == 1);
}

}  // TEST_SUITE
