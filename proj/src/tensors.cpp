#include "hap/tensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "hap/error.hpp"

namespace hap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingRecord: return "MissingRecord";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingAux: return "MissingAux";
    case ErrorCode::MapperFailure: return "MapperFailure";
    case ErrorCode::ReducerFailure: return "ReducerFailure";
    case ErrorCode::SpillIOFailure: return "SpillIOFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::PositiveSimilarity: return "PositiveSimilarity";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

std::string_view to_string(Tag tag) noexcept {
  switch (tag) {
    case Tag::S: return "S";
    case Tag::Alpha: return "alpha";
    case Tag::Rho: return "rho";
    case Tag::Tau: return "tau";
    case Tag::Phi: return "phi";
    case Tag::C: return "c";
    case Tag::Aux: return "aux";
  }
  return "?";
}

std::string_view to_string(Orientation orientation) noexcept {
  return orientation == Orientation::NodeBased ? "node" : "exemplar";
}

std::optional<Tag> parse_tag(std::string_view text) noexcept {
  for (Tag t : {Tag::S, Tag::Alpha, Tag::Rho, Tag::Tau, Tag::Phi, Tag::C, Tag::Aux}) {
    if (text == to_string(t)) return t;
  }
  return std::nullopt;
}

std::optional<Orientation> parse_orientation(std::string_view text) noexcept {
  if (text == "node") return Orientation::NodeBased;
  if (text == "exemplar") return Orientation::ExemplarBased;
  return std::nullopt;
}

Tensor3::Tensor3(int levels, std::size_t n, double fill)
    : levels_(levels), n_(n), data_(static_cast<std::size_t>(levels) * n * n, fill) {
  if (levels < 1 || n < 1) {
    throw Error(ErrorCode::ShapeMismatch, "tensor needs L >= 1 and N >= 1");
  }
}

void Tensor3::copy_column(int level, std::size_t j, std::span<double> out) const {
  const double* base = data_.data() + offset(level, 0) + j;
  for (std::size_t i = 0; i < n_; ++i) out[i] = base[i * n_];
}

void Tensor3::set_column(int level, std::size_t j, std::span<const double> values) {
  double* base = data_.data() + offset(level, 0) + j;
  for (std::size_t i = 0; i < n_; ++i) base[i * n_] = values[i];
}

bool operator==(const Tensor3& a, const Tensor3& b) noexcept {
  return a.levels_ == b.levels_ && a.n_ == b.n_ && bitwise_equal(a.data_, b.data_);
}

LevelVectors::LevelVectors(int levels, std::size_t n, double fill)
    : levels_(levels), n_(n), data_(static_cast<std::size_t>(levels) * n, fill) {
  if (levels < 1 || n < 1) {
    throw Error(ErrorCode::ShapeMismatch, "level vectors need L >= 1 and N >= 1");
  }
}

bool operator==(const LevelVectors& a, const LevelVectors& b) noexcept {
  return a.levels_ == b.levels_ && a.n_ == b.n_ && bitwise_equal(a.data_, b.data_);
}

namespace {

void check_similarity(double v, int level, std::size_t i, std::size_t j) {
  if (!(v <= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::PositiveSimilarity,
                "entry (" + std::to_string(level) + "," + std::to_string(i) + "," +
                    std::to_string(j) + ") = " + std::to_string(v) + " must be finite and <= 0");
  }
}

}  // namespace

SimilarityTensor::SimilarityTensor(Tensor3 values) : values_(std::move(values)) {
  const std::size_t n = values_.n();
  for (int l = 1; l <= values_.levels(); ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) check_similarity(values_.at(l, i, j), l, i, j);
    }
  }
}

SimilarityTensor SimilarityTensor::replicate(std::span<const double> matrix, std::size_t n,
                                             int levels) {
  if (matrix.size() != n * n) {
    throw Error(ErrorCode::ShapeMismatch, "matrix has " + std::to_string(matrix.size()) +
                                              " entries, expected " + std::to_string(n * n));
  }
  Tensor3 values(levels, n);
  for (int l = 1; l <= levels; ++l) std::copy(matrix.begin(), matrix.end(), values.level(l).begin());
  return SimilarityTensor(std::move(values));
}

void SimilarityTensor::set_preference(int level, std::size_t j, double value) {
  check_similarity(value, level, j, j);
  values_.at(level, j, j) = value;
}

MessageState MessageState::initial(SimilarityTensor s) {
  const int levels = s.levels();
  const std::size_t n = s.n();
  MessageState state;
  state.s = std::move(s);
  state.alpha = Tensor3(levels, n, 0.0);
  state.rho = Tensor3(levels, n, 0.0);
  state.tau = LevelVectors(levels, n, std::numeric_limits<double>::infinity());
  state.phi = LevelVectors(levels, n, 0.0);
  state.c = LevelVectors(levels, n, 0.0);
  return state;
}

bool operator==(const KeyedRecord& a, const KeyedRecord& b) noexcept {
  if (a.key != b.key || a.value.index() != b.value.index()) return false;
  if (const auto* va = std::get_if<std::vector<double>>(&a.value)) {
    return bitwise_equal(*va, std::get<std::vector<double>>(b.value));
  }
  const auto& sa = std::get<ScalarPayload>(a.value);
  const auto& sb = std::get<ScalarPayload>(b.value);
  return sa.source == sb.source && sa.tag == sb.tag &&
         bitwise_equal(std::span(&sa.value, 1), std::span(&sb.value, 1));
}

namespace {

const Tensor3& matrix_of(const MessageState& st, Tag tag) {
  switch (tag) {
    case Tag::S: return st.s.values();
    case Tag::Alpha: return st.alpha;
    default: return st.rho;
  }
}

const LevelVectors& vector_of(const MessageState& st, Tag tag) {
  switch (tag) {
    case Tag::Tau: return st.tau;
    case Tag::Phi: return st.phi;
    default: return st.c;
  }
}

std::string describe(int index, int level, Tag tag) {
  return "(" + std::to_string(index) + "," + std::to_string(level) + "," +
         std::string(to_string(tag)) + ")";
}

constexpr std::size_t tag_slot(Tag tag) noexcept { return static_cast<std::size_t>(tag); }

}  // namespace

std::size_t state_record_count(int levels, std::size_t n) noexcept {
  return 3 * static_cast<std::size_t>(levels) * n + 3 * static_cast<std::size_t>(levels);
}

std::vector<KeyedRecord> to_records(const MessageState& state, Orientation orientation) {
  const std::size_t n = state.n();
  const int levels = state.levels();
  std::vector<KeyedRecord> out;
  out.reserve(state_record_count(levels, n));
  for (int l = 1; l <= levels; ++l) {
    for (Tag tag : kMatrixTags) {
      const Tensor3& m = matrix_of(state, tag);
      for (std::size_t idx = 0; idx < n; ++idx) {
        std::vector<double> v(n);
        if (orientation == Orientation::NodeBased) {
          std::copy_n(m.row(l, idx).begin(), n, v.begin());
        } else {
          m.copy_column(l, idx, v);
        }
        out.push_back({{orientation, l, tag, static_cast<int>(idx)}, std::move(v)});
      }
    }
  }
  for (int l = 1; l <= levels; ++l) {
    for (Tag tag : kVectorTags) {
      auto lv = vector_of(state, tag).level(l);
      out.push_back({{orientation, l, tag, 0}, std::vector<double>(lv.begin(), lv.end())});
    }
  }
  return out;
}

MessageState from_records(std::span<const KeyedRecord> records, Orientation orientation,
                          int iteration) {
  std::size_t n = 0;
  int levels = 0;
  for (const auto& rec : records) {
    if (rec.key.tag == Tag::Aux) continue;
    levels = std::max(levels, rec.key.level);
    if (n == 0 && is_matrix_tag(rec.key.tag)) {
      if (const auto* v = std::get_if<std::vector<double>>(&rec.value)) n = v->size();
    }
  }
  if (n == 0 || levels < 1) {
    throw Error(ErrorCode::ShapeMismatch, "record stream holds no matrix rows");
  }

  Tensor3 s(levels, n), alpha(levels, n), rho(levels, n);
  LevelVectors tau(levels, n), phi(levels, n), c(levels, n);
  Tensor3* matrices[] = {&s, &alpha, &rho};
  LevelVectors* vectors[] = {&tau, &phi, &c};

  // seen[level][tag][index]; vector tensors use index n for the whole-vector form.
  const std::size_t stride = n + 1;
  std::vector<unsigned char> seen(static_cast<std::size_t>(levels) * 6 * stride, 0);
  auto mark = [&](int level, Tag tag, std::size_t idx) {
    unsigned char& flag = seen[(static_cast<std::size_t>(level - 1) * 6 + tag_slot(tag)) * stride + idx];
    if (flag) {
      throw Error(ErrorCode::DuplicateKey,
                  describe(idx == n ? 0 : static_cast<int>(idx), level, tag));
    }
    flag = 1;
  };
  auto seen_at = [&](int level, Tag tag, std::size_t idx) {
    return seen[(static_cast<std::size_t>(level - 1) * 6 + tag_slot(tag)) * stride + idx] != 0;
  };

  for (const auto& rec : records) {
    const RecordKey& key = rec.key;
    if (key.tag == Tag::Aux) continue;
    const std::string where = describe(key.index, key.level, key.tag);
    if (key.orientation != orientation) {
      throw Error(ErrorCode::ShapeMismatch, "record " + where + " has orientation " +
                                                std::string(to_string(key.orientation)));
    }
    if (key.level < 1 || key.index < 0 || static_cast<std::size_t>(key.index) >= n) {
      throw Error(ErrorCode::ShapeMismatch, "record key " + where + " out of range");
    }
    const auto idx = static_cast<std::size_t>(key.index);
    if (is_matrix_tag(key.tag)) {
      const auto* v = std::get_if<std::vector<double>>(&rec.value);
      if (v == nullptr || v->size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "record " + where + " needs a length-" +
                                                  std::to_string(n) + " vector");
      }
      mark(key.level, key.tag, idx);
      Tensor3& m = *matrices[tag_slot(key.tag)];
      if (orientation == Orientation::NodeBased) {
        std::copy(v->begin(), v->end(), m.row(key.level, idx).begin());
      } else {
        m.set_column(key.level, idx, *v);
      }
      continue;
    }
    LevelVectors& lv = *vectors[tag_slot(key.tag) - tag_slot(Tag::Tau)];
    if (const auto* v = std::get_if<std::vector<double>>(&rec.value)) {
      if (v->size() != n || key.index != 0) {
        throw Error(ErrorCode::ShapeMismatch, "vector record " + where + " malformed");
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (seen_at(key.level, key.tag, i)) throw Error(ErrorCode::DuplicateKey, where);
      }
      mark(key.level, key.tag, n);
      std::copy(v->begin(), v->end(), lv.level(key.level).begin());
    } else {
      const auto& sp = std::get<ScalarPayload>(rec.value);
      if (sp.source != key.index || sp.tag != key.tag) {
        throw Error(ErrorCode::ShapeMismatch, "scalar record " + where + " payload mismatch");
      }
      if (seen_at(key.level, key.tag, n)) throw Error(ErrorCode::DuplicateKey, where);
      mark(key.level, key.tag, idx);
      lv.at(key.level, idx) = sp.value;
    }
  }

  for (int l = 1; l <= levels; ++l) {
    for (Tag tag : kMatrixTags) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!seen_at(l, tag, i)) {
          throw Error(ErrorCode::MissingRecord, describe(static_cast<int>(i), l, tag));
        }
      }
    }
    for (Tag tag : kVectorTags) {
      if (seen_at(l, tag, n)) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (!seen_at(l, tag, i)) {
          throw Error(ErrorCode::MissingRecord, describe(static_cast<int>(i), l, tag));
        }
      }
    }
  }

  MessageState state;
  state.s = SimilarityTensor(std::move(s));
  state.alpha = std::move(alpha);
  state.rho = std::move(rho);
  state.tau = std::move(tau);
  state.phi = std::move(phi);
  state.c = std::move(c);
  state.iteration = iteration;
  return state;
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) noexcept {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "max_abs_diff size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;  // covers matching infinities
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace hap
