#include <doctest.h>

#include <map>
#include <stdexcept>

#include "hap/error.hpp"
#include "hap/fixtures.hpp"
#include "hap/mr_jobs.hpp"
#include "hap/sequential.hpp"
#include "hap/similarity.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace hap;
using namespace hap::mr;

namespace {

SimilarityTensor random_tensor(std::size_t n, int levels, std::uint64_t seed) {
  return similarity_from_points(oracle::random_points(n, seed), Metric::NegSqEuclidean, levels,
                                PreferenceStrategy::random_uniform(-80, -1), seed);
}

RunConfig mr_config(int levels, int iterations, int workers = 2) {
  RunConfig cfg;
  cfg.levels = levels;
  cfg.iterations = iterations;
  cfg.engine = Engine::MapReduce;
  cfg.workers = workers;
  return cfg;
}

RunResult jacobi(const SimilarityTensor& s, RunConfig cfg) {
  cfg.engine = Engine::Sequential;
  cfg.schedule = Schedule::Jacobi;
  return run_sequential(s, cfg);
}

// map, group, sort and reduce in one loop with no pool
std::vector<KeyedRecord> run_inline(const HapJob& job, std::span<const KeyedRecord> input) {
  std::vector<std::vector<std::pair<IntermediateKey, IntermediateValue>>> sink(1);
  Emitter<IntermediateKey, IntermediateValue> em(sink);
  for (const auto& r : input) job.mapper(r, em);
  std::map<IntermediateKey, std::vector<IntermediateValue>> groups;
  for (const auto& [k, v] : sink[0]) groups[k].push_back(v);
  std::vector<KeyedRecord> out;
  for (auto& [k, vs] : groups) {
    std::sort(vs.begin(), vs.end());
    job.reducer(k, vs, out);
  }
  std::sort(out.begin(), out.end(), [](const KeyedRecord& a, const KeyedRecord& b) { return a.key < b.key; });
  return out;
}

std::vector<KeyedRecord> seed_records(const SimilarityTensor& s) {
  return to_records(MessageState::initial(s), Orientation::ExemplarBased);
}

// Every tensor present in full exactly once and every record in `want` orientation.
void check_boundary(std::span<const KeyedRecord> records, Orientation want, int levels, std::size_t n) {
  std::map<std::tuple<int, Tag, int>, int> seen;
  for (const auto& r : records) {
    CHECK(r.key.orientation == want);
    if (r.key.tag == Tag::Aux) continue;
    if (const auto* v = std::get_if<std::vector<double>>(&r.value)) {
      if (is_matrix_tag(r.key.tag)) {
        CHECK(v->size() == n);
        ++seen[{r.key.level, r.key.tag, r.key.index}];
      } else {
        REQUIRE(v->size() == n);
        for (std::size_t i = 0; i < n; ++i) ++seen[{r.key.level, r.key.tag, static_cast<int>(i)}];
      }
    } else {
      const auto& p = std::get<ScalarPayload>(r.value);
      CHECK(p.tag == r.key.tag);
      ++seen[{r.key.level, r.key.tag, p.source}];
    }
  }
  CHECK(seen.size() == 6 * static_cast<std::size_t>(levels) * n);
  for (const auto& [key, count] : seen) CHECK(count == 1);
}

}  // namespace

TEST_SUITE("mr_jobs") {

TEST_CASE("job1 at iteration 1 leaves tau and c alone") {
  const auto s = random_tensor(7, 3, 4);
  WorkerPool pool(3);
  const auto seed = seed_records(s);
  const auto out = execute(job1_rho_c_tau({3, 7, 1, DampingFactor(0.5), KappaFactor(0.5)}),
                           std::span<const KeyedRecord>(seed), pool);
  const MessageState st = from_records(out.records, Orientation::NodeBased);
  const MessageState init = MessageState::initial(s);
  CHECK(oracle::same_bits(st.tau.data(), init.tau.data()));
  CHECK(oracle::same_bits(st.c.data(), init.c.data()));
  CHECK(st.s == init.s);
}

TEST_CASE("job1 rho rows match the sequential first update") {
  const auto s = random_tensor(3, 1, 9);
  WorkerPool pool(2);
  const auto seed = seed_records(s);
  const auto out = execute(job1_rho_c_tau({1, 3, 1, DampingFactor(0.5), {}}), std::span<const KeyedRecord>(seed), pool);
  MessageState ref = MessageState::initial(s);
  RunConfig cfg = mr_config(1, 1);
  cfg.schedule = Schedule::Jacobi;
  sequential_iteration(ref, cfg);
  CHECK(oracle::same_bits(from_records(out.records, Orientation::NodeBased).rho.data(), ref.rho.data()));
}

TEST_CASE("jobs through the pool equal an inline evaluation") {
  const auto s = random_tensor(8, 2, 21);
  const JobShape shape{2, 8, 3, DampingFactor(0.5), KappaFactor(0.2)};
  // a state past the first iteration so tau, c and the shift are live
  MessageState st = MessageState::initial(s);
  RunConfig cfg = mr_config(2, 2);
  cfg.schedule = Schedule::Jacobi;
  cfg.kappa = KappaFactor(0.2);
  sequential_iteration(st, cfg);
  sequential_iteration(st, cfg);
  const auto in = to_records(st, Orientation::ExemplarBased);
  WorkerPool pool(8);
  const auto mid = execute(job1_rho_c_tau(shape), std::span<const KeyedRecord>(in), pool).records;
  CHECK(mid == run_inline(job1_rho_c_tau(shape), in));
  const auto last = execute(job2_alpha_phi(shape), std::span<const KeyedRecord>(mid), pool).records;
  CHECK(last == run_inline(job2_alpha_phi(shape), mid));
  const auto ex = execute(job3_extract(shape), std::span<const KeyedRecord>(last), pool).records;
  CHECK(ex == run_inline(job3_extract(shape), last));
}

TEST_CASE("job2: top-level phi is zero, off-diagonal alpha non-positive") {
  const auto s = random_tensor(9, 3, 2);
  WorkerPool pool(4);
  std::vector<KeyedRecord> rec = seed_records(s);
  for (int t = 1; t <= 3; ++t) {
    const JobShape shape{3, 9, t, DampingFactor(0.5), {}};
    rec = execute(job1_rho_c_tau(shape), std::span<const KeyedRecord>(rec), pool).records;
    rec = execute(job2_alpha_phi(shape), std::span<const KeyedRecord>(rec), pool).records;
    const MessageState st = from_records(rec, Orientation::ExemplarBased);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(st.phi.at(3, i) == 0.0);
      for (int l = 1; l <= 3; ++l)
        for (std::size_t j = 0; j < 9; ++j)
          if (i != j) CHECK(st.alpha.at(l, i, j) <= 0.0);
    }
  }
}

TEST_CASE("job3 picks the strict maximum") {
  const auto s = random_tensor(8, 1, 3);
  MessageState st = MessageState::initial(s);
  for (std::size_t j = 0; j < 8; ++j) st.alpha.at(1, 2, j) = -100.0;
  st.alpha.at(1, 2, 5) = 50.0;
  const auto in = to_records(st, Orientation::ExemplarBased);
  WorkerPool pool(2);
  const auto out = execute(job3_extract({1, 8, 1, DampingFactor(0.5), {}}), std::span<const KeyedRecord>(in), pool);
  const AssignmentTable table = assignments_from_records(out.records, 1, 8);
  CHECK(table.exemplar(1, 2) == 5);
  CHECK(table == extract_assignments(st));
}

TEST_CASE("single point drives to exemplar 0") {
  const auto s = SimilarityTensor::replicate(std::vector<double>{-3.0}, 1, 3);
  const DriveResult r = drive(s, mr_config(3, 4));
  for (int l = 1; l <= 3; ++l) CHECK(r.assignments.exemplar(l, 0) == 0);
}

TEST_CASE("drive equals sequential Jacobi bit for bit") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const std::size_t n = 3 + seed * 3;
    const int levels = 1 + static_cast<int>(seed % 3);
    const auto s = random_tensor(n, levels, seed);
    RunConfig cfg = mr_config(levels, 4 + static_cast<int>(seed), 1 + static_cast<int>(seed % 4));
    if (seed % 2 == 0) cfg.kappa = KappaFactor(0.25);
    std::vector<MessageState> steps;
    RunConfig seq = cfg;
    seq.engine = Engine::Sequential;
    seq.schedule = Schedule::Jacobi;
    const RunResult ref = run_sequential(s, seq, [&](const MessageState& st) { steps.push_back(st); });
    std::size_t k = 0;
    DriveOptions opts;
    opts.on_iteration = [&](const MessageState& st) {
      REQUIRE(k < steps.size());
      CAPTURE(seed);
      CAPTURE(k);
      CHECK(oracle::same_bits(st, steps[k]));
      ++k;
    };
    const DriveResult r = drive(s, cfg, opts);
    CAPTURE(seed);
    CHECK(k == steps.size());
    CHECK(oracle::same_bits(r.state, ref.state));
    CHECK(r.assignments == ref.assignments);
  }
}

TEST_CASE("three blobs through the pipeline") {
  const PointSet ps = fixtures::three_blobs();
  const auto s = similarity_from_points(ps, Metric::NegSqEuclidean, 1, PreferenceStrategy::median());
  const DriveResult r = drive(s, mr_config(1, 30, 4));
  CHECK(r.assignments == jacobi(s, mr_config(1, 30)).assignments);
  CHECK(r.assignments.exemplar_count(1) == 3);
  RunConfig gs = mr_config(1, 30);
  gs.engine = Engine::Sequential;
  const AssignmentTable g = run_sequential(s, gs).assignments;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) agree += g.exemplar(1, i) == r.assignments.exemplar(1, i);
  CHECK(agree >= 57);
}

TEST_CASE("worker count does not change the result") {
  const auto s = random_tensor(20, 2, 13);
  RunConfig cfg = mr_config(2, 6, 1);
  cfg.kappa = KappaFactor(0.5);
  const DriveResult a = drive(s, cfg);
  cfg.workers = 8;
  const DriveResult b = drive(s, cfg);
  CHECK(oracle::same_bits(a.state, b.state));
  CHECK(a.assignments == b.assignments);
}

TEST_CASE("boundaries alternate format and conserve every tensor") {
  ScratchDir dir("boundaries");
  const auto s = random_tensor(6, 2, 8);
  DriveOptions opts;
  opts.spill_dir = dir.path;
  const RunConfig cfg = mr_config(2, 3);
  const DriveResult r = drive(s, cfg, opts);
  WorkerPool pool(1);
  check_boundary(read_spill_set(dir.path / "seed", pool), Orientation::ExemplarBased, 2, 6);
  for (int t = 1; t <= 3; ++t) {
    const std::size_t k = static_cast<std::size_t>(2 * (t - 1));
    CAPTURE(t);
    check_boundary(read_spill_set(boundary_dir(dir.path, k, "job1-it" + std::to_string(t)), pool),
                   Orientation::NodeBased, 2, 6);
    check_boundary(read_spill_set(boundary_dir(dir.path, k + 1, "job2-it" + std::to_string(t)), pool),
                   Orientation::ExemplarBased, 2, 6);
  }
  CHECK(r.report.jobs.size() == 7);
  CHECK(r.timings.size() == 7);
  CHECK(format_timings(r.timings).rfind("1\tjob1\t", 0) == 0);
}

TEST_CASE("restart after job1 of iteration 7") {
  ScratchDir dir("restart");
  const auto s = random_tensor(12, 2, 31);
  RunConfig cfg = mr_config(2, 10, 3);
  cfg.kappa = KappaFactor(0.3);
  const DriveResult whole = drive(s, cfg);

  DriveOptions opts;
  opts.spill_dir = dir.path;
  opts.after_job = [](std::size_t index, const std::string& name) {
    if (name == "job1-it7") throw std::runtime_error("killed at " + std::to_string(index));
  };
  CHECK_THROWS_WITH(drive(s, cfg, opts), "killed at 12");
  opts.after_job = nullptr;
  opts.resume = true;
  const DriveResult resumed = drive(s, cfg, opts);
  CHECK(resumed.report.skipped.size() == 13);
  CHECK(oracle::same_bits(resumed.state, whole.state));
  CHECK(resumed.assignments == whole.assignments);

  RunConfig other = cfg;
  other.lambda = DampingFactor(0.6);
  try {
    (void)drive(s, other, opts);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("12x12 image end to end, random preferences") {
  const PixelGrid img = fixtures::four_color_image(12, 12);
  const auto s = similarity_from_image(img, Metric::NegSqEuclidean, 1, PreferenceStrategy::random_uniform(-1e6, 0), 5);
  const DriveResult r = drive(s, mr_config(1, 30, 4));
  CHECK(r.assignments.n() == 144);
  CHECK(r.assignments == jacobi(s, mr_config(1, 30)).assignments);
}

TEST_CASE("drive rejects the wrong engine and shape") {
  const auto s = random_tensor(4, 2, 1);
  RunConfig cfg = mr_config(2, 2);
  cfg.engine = Engine::Sequential;
  try {
    (void)drive(s, cfg);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  try {
    (void)drive(s, mr_config(3, 2));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("job mappers refuse the wrong orientation") {
  const auto s = random_tensor(4, 1, 1);
  const auto in = to_records(MessageState::initial(s), Orientation::NodeBased);
  WorkerPool pool(1);
  try {
    (void)execute(job1_rho_c_tau({1, 4, 1, DampingFactor(0.5), {}}), std::span<const KeyedRecord>(in), pool);
    FAIL("expected MapperFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MapperFailure);
  }
}

}  // TEST_SUITE
