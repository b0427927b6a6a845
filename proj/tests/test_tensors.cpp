#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "hap/error.hpp"
#include "hap/spill.hpp"
#include "hap/tensors.hpp"

using namespace hap;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A state with distinct, non-trivial values everywhere.
MessageState busy_state(int levels, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-5, 5);
  Tensor3 s(levels, n);
  for (auto& v : s.data()) v = -std::abs(d(gen));
  MessageState st = MessageState::initial(SimilarityTensor(std::move(s)));
  for (auto& v : st.alpha.data()) v = d(gen);
  for (auto& v : st.rho.data()) v = d(gen);
  for (int l = 2; l <= levels; ++l)
    for (auto& v : st.tau.level(l)) v = d(gen);
  for (int l = 1; l <= levels; ++l) {
    for (auto& v : st.c.level(l)) v = d(gen);
    if (l < levels)
      for (auto& v : st.phi.level(l)) v = d(gen);
  }
  st.rho.at(1, 0, 0) = -0.0;
  return st;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hap-test-" + name);
}

}  // namespace

TEST_SUITE("tensors") {

TEST_CASE("initial state: zero messages, infinite tau") {
  const MessageState st = MessageState::initial(SimilarityTensor(Tensor3(2, 3, -1.0)));
  for (double v : st.alpha.data()) CHECK(v == 0.0);
  for (double v : st.rho.data()) CHECK(v == 0.0);
  for (double v : st.tau.data()) CHECK(v == kInf);
  for (double v : st.phi.data()) CHECK(v == 0.0);
  for (double v : st.c.data()) CHECK(v == 0.0);
  CHECK(st.iteration == 0);
}

TEST_CASE("similarity tensor rejects positive and non-finite entries") {
  Tensor3 t(1, 2, -1.0);
  t.at(1, 0, 1) = 0.5;
  CHECK_THROWS_AS((void)SimilarityTensor{t}, Error);
  try {
    SimilarityTensor bad(t);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PositiveSimilarity);
  }
  t.at(1, 0, 1) = -kInf;
  CHECK_THROWS_AS((void)SimilarityTensor{t}, Error);
  SimilarityTensor ok(Tensor3(1, 2, 0.0));
  CHECK_THROWS_AS(ok.set_preference(1, 0, 1.0), Error);
}

TEST_CASE("exemplar-based records hold columns") {
  Tensor3 s(1, 2, -1.0);
  MessageState st = MessageState::initial(SimilarityTensor(s));
  st.rho.at(1, 0, 0) = 1.0;
  st.rho.at(1, 1, 1) = 1.0;
  st.rho.at(1, 1, 0) = 0.5;
  const auto recs = to_records(st, Orientation::ExemplarBased);
  std::vector<KeyedRecord> rho;
  for (const auto& r : recs)
    if (r.key.tag == Tag::Rho) rho.push_back(r);
  REQUIRE(rho.size() == 2);
  CHECK(rho[0].key.index == 0);
  CHECK(rho[1].key.index == 1);
  CHECK(std::get<std::vector<double>>(rho[0].value) == std::vector<double>{1.0, 0.5});
  CHECK(std::get<std::vector<double>>(rho[1].value) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("record count is 3LN + 3L") {
  const MessageState st = busy_state(2, 3, 1);
  CHECK(to_records(st, Orientation::NodeBased).size() == 24);
  CHECK(to_records(st, Orientation::ExemplarBased).size() == 24);
  CHECK(state_record_count(2, 3) == 24);
}

TEST_CASE("round trip and transpose consistency") {
  for (int levels : {1, 3}) {
    const MessageState st = busy_state(levels, 5, 2 + levels);
    for (auto o : {Orientation::NodeBased, Orientation::ExemplarBased}) {
      CHECK(from_records(to_records(st, o), o) == st);
    }
    const auto node = to_records(st, Orientation::NodeBased);
    const auto ex = to_records(st, Orientation::ExemplarBased);
    for (const auto& rn : node) {
      if (rn.key.tag != Tag::Rho) continue;
      const auto& row = std::get<std::vector<double>>(rn.value);
      for (const auto& re : ex) {
        if (re.key.tag != Tag::Rho || re.key.level != rn.key.level) continue;
        const auto& col = std::get<std::vector<double>>(re.value);
        CHECK(bitwise_equal(std::span(&row[static_cast<std::size_t>(re.key.index)], 1),
                            std::span(&col[static_cast<std::size_t>(rn.key.index)], 1)));
      }
    }
  }
}

TEST_CASE("from_records is order independent") {
  const MessageState st = busy_state(2, 4, 9);
  auto recs = to_records(st, Orientation::ExemplarBased);
  std::mt19937_64 gen(3);
  std::shuffle(recs.begin(), recs.end(), gen);
  CHECK(from_records(recs, Orientation::ExemplarBased) == st);
}

TEST_CASE("from_records error paths") {
  const MessageState st = busy_state(1, 3, 4);
  auto recs = to_records(st, Orientation::NodeBased);

  auto missing = recs;
  missing.erase(std::find_if(missing.begin(), missing.end(), [](const KeyedRecord& r) {
    return r.key.tag == Tag::Alpha && r.key.index == 1 && r.key.level == 1;
  }));
  try {
    (void)from_records(missing, Orientation::NodeBased);
    FAIL("expected MissingRecord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingRecord);
    CHECK(std::string(e.what()).find("(1,1,alpha)") != std::string::npos);
  }

  auto dup = recs;
  dup.push_back(recs.front());
  try {
    (void)from_records(dup, Orientation::NodeBased);
    FAIL("expected DuplicateKey");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateKey);
  }

  auto short_row = recs;
  for (auto& r : short_row) {
    if (r.key.tag == Tag::S && r.key.index == 2) std::get<std::vector<double>>(r.value).pop_back();
  }
  try {
    (void)from_records(short_row, Orientation::NodeBased);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  CHECK_THROWS_AS((void)from_records(recs, Orientation::ExemplarBased), Error);
}

TEST_CASE("scalar form of vector tensors reconstructs the same state") {
  const MessageState st = busy_state(2, 3, 5);
  std::vector<KeyedRecord> recs;
  for (auto& r : to_records(st, Orientation::ExemplarBased)) {
    if (!is_vector_tag(r.key.tag)) {
      recs.push_back(r);
      continue;
    }
    const auto& v = std::get<std::vector<double>>(r.value);
    for (std::size_t i = 0; i < v.size(); ++i) {
      recs.push_back({{r.key.orientation, r.key.level, r.key.tag, static_cast<int>(i)},
                      ScalarPayload{static_cast<int>(i), r.key.tag, v[i]}});
    }
  }
  recs.push_back({{Orientation::ExemplarBased, 1, Tag::Aux, 0}, ScalarPayload{0, Tag::Aux, 42.0}});
  CHECK(from_records(recs, Orientation::ExemplarBased) == st);
}

}  // TEST_SUITE

TEST_SUITE("spill") {

TEST_CASE("record lines round-trip bitwise, including infinities and signed zero") {
  const MessageState st = busy_state(2, 4, 6);
  for (auto o : {Orientation::NodeBased, Orientation::ExemplarBased}) {
    for (const auto& rec : to_records(st, o)) {
      const std::string line = format_record(rec);
      CHECK(line.find('\n') == line.size() - 1);
      CHECK(parse_record(line) == rec);
    }
  }
  const KeyedRecord tau{{Orientation::ExemplarBased, 1, Tag::Tau, 0}, std::vector<double>{kInf, -kInf, -0.0}};
  CHECK(format_record(tau) == "exemplar\t0\t1\ttau\tinf,-inf,-0\n");
  CHECK(parse_record(format_record(tau)) == tau);
  const KeyedRecord scalar{{Orientation::NodeBased, 2, Tag::C, 3}, ScalarPayload{3, Tag::C, 0.1}};
  CHECK(format_record(scalar) == "node\t3\t2\tc\t@3:c:0.1\n");
  CHECK(parse_record(format_record(scalar)) == scalar);
}

TEST_CASE("malformed lines raise ParseError with the line number") {
  for (const char* bad : {"node\t0\t1\trho", "sideways\t0\t1\trho\t1", "node\tx\t1\trho\t1",
                          "node\t0\t1\tkappa\t1", "node\t0\t1\trho\t1,,2", "node\t0\t1\tc\t@1:c"}) {
    try {
      (void)parse_record(bad, 17);
      FAIL("accepted: " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
  }
}

TEST_CASE("spill file round trip reproduces the state") {
  const MessageState st = busy_state(3, 6, 7);
  const auto path = temp_path("spill-roundtrip.tsv");
  const auto recs = to_records(st, Orientation::ExemplarBased);
  write_spill_file(path, recs);
  const auto back = read_spill_file(path);
  CHECK(back == recs);
  CHECK(from_records(back, Orientation::ExemplarBased) == st);
  std::filesystem::remove(path);
  try {
    (void)read_spill_file(temp_path("does-not-exist"));
    FAIL("expected SpillIOFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpillIOFailure);
  }
}

}  // TEST_SUITE
