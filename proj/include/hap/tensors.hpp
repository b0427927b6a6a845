#pragma once

// Dense tensor data model for hierarchical affinity propagation and the two
// key-value layouts used by the MapReduce backend.
//
// Levels are 1-indexed (1 = finest, L = coarsest); data indices are 0-indexed.
// Matrix tensors (S, alpha, rho) are L x N x N, stored level-major then
// row-major. Vector tensors (tau, phi, c) are L x N.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace hap {

enum class Tag : std::uint8_t { S, Alpha, Rho, Tau, Phi, C, Aux };

enum class Orientation : std::uint8_t { NodeBased, ExemplarBased };

inline constexpr std::array<Tag, 3> kMatrixTags{Tag::S, Tag::Alpha, Tag::Rho};
inline constexpr std::array<Tag, 3> kVectorTags{Tag::Tau, Tag::Phi, Tag::C};

constexpr bool is_matrix_tag(Tag t) noexcept {
  return t == Tag::S || t == Tag::Alpha || t == Tag::Rho;
}
constexpr bool is_vector_tag(Tag t) noexcept {
  return t == Tag::Tau || t == Tag::Phi || t == Tag::C;
}

std::string_view to_string(Tag tag) noexcept;
std::string_view to_string(Orientation orientation) noexcept;
std::optional<Tag> parse_tag(std::string_view text) noexcept;
std::optional<Orientation> parse_orientation(std::string_view text) noexcept;

class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int levels, std::size_t n, double fill = 0.0);

  int levels() const noexcept { return levels_; }
  std::size_t n() const noexcept { return n_; }

  double& at(int level, std::size_t i, std::size_t j) { return data_[offset(level, i) + j]; }
  double at(int level, std::size_t i, std::size_t j) const { return data_[offset(level, i) + j]; }

  std::span<double> row(int level, std::size_t i) { return {data_.data() + offset(level, i), n_}; }
  std::span<const double> row(int level, std::size_t i) const {
    return {data_.data() + offset(level, i), n_};
  }

  // Full N x N slab of one level.
  std::span<double> level(int level) { return {data_.data() + offset(level, 0), n_ * n_}; }
  std::span<const double> level(int level) const {
    return {data_.data() + offset(level, 0), n_ * n_};
  }

  void copy_column(int level, std::size_t j, std::span<double> out) const;
  void set_column(int level, std::size_t j, std::span<const double> values);

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Bitwise comparison: +0.0 and -0.0 differ.
  friend bool operator==(const Tensor3& a, const Tensor3& b) noexcept;

 private:
  std::size_t offset(int level, std::size_t i) const noexcept {
    return (static_cast<std::size_t>(level - 1) * n_ + i) * n_;
  }

  int levels_ = 0;
  std::size_t n_ = 0;
  std::vector<double> data_;
};

class LevelVectors {
 public:
  LevelVectors() = default;
  LevelVectors(int levels, std::size_t n, double fill = 0.0);

  int levels() const noexcept { return levels_; }
  std::size_t n() const noexcept { return n_; }

  double& at(int level, std::size_t i) { return data_[static_cast<std::size_t>(level - 1) * n_ + i]; }
  double at(int level, std::size_t i) const {
    return data_[static_cast<std::size_t>(level - 1) * n_ + i];
  }

  std::span<double> level(int level) {
    return {data_.data() + static_cast<std::size_t>(level - 1) * n_, n_};
  }
  std::span<const double> level(int level) const {
    return {data_.data() + static_cast<std::size_t>(level - 1) * n_, n_};
  }

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const LevelVectors& a, const LevelVectors& b) noexcept;

 private:
  int levels_ = 0;
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// L x N x N similarities with preferences on the diagonal. Every entry is
// finite and <= 0.
class SimilarityTensor {
 public:
  SimilarityTensor() = default;
  // Throws PositiveSimilarity on any entry > 0 or non-finite.
  explicit SimilarityTensor(Tensor3 values);

  // Copies one row-major N x N matrix into every level.
  static SimilarityTensor replicate(std::span<const double> matrix, std::size_t n, int levels);

  int levels() const noexcept { return values_.levels(); }
  std::size_t n() const noexcept { return values_.n(); }
  const Tensor3& values() const noexcept { return values_; }

  double preference(int level, std::size_t j) const { return values_.at(level, j, j); }
  void set_preference(int level, std::size_t j, double value);

  // Writers through this handle must keep every entry <= 0.
  Tensor3& mutable_values() noexcept { return values_; }

  friend bool operator==(const SimilarityTensor&, const SimilarityTensor&) = default;

 private:
  Tensor3 values_;
};

struct MessageState {
  SimilarityTensor s;
  Tensor3 alpha;
  Tensor3 rho;
  LevelVectors tau;
  LevelVectors phi;
  LevelVectors c;
  int iteration = 0;

  // alpha = rho = 0, tau = +inf, phi = 0, c = 0.
  static MessageState initial(SimilarityTensor s);

  int levels() const noexcept { return s.levels(); }
  std::size_t n() const noexcept { return s.n(); }

  friend bool operator==(const MessageState&, const MessageState&) = default;
};

struct RecordKey {
  Orientation orientation = Orientation::ExemplarBased;
  int level = 1;
  Tag tag = Tag::S;
  int index = 0;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

// Self-describing scalar: carries the index and tensor it belongs to so that
// reconstruction never depends on arrival order.
struct ScalarPayload {
  int source = 0;
  Tag tag = Tag::Aux;
  double value = 0.0;
};

using RecordValue = std::variant<std::vector<double>, ScalarPayload>;

struct KeyedRecord {
  RecordKey key;
  RecordValue value;

  friend bool operator==(const KeyedRecord& a, const KeyedRecord& b) noexcept;
};

// Matrix tensors become one vector per (index, level, tag): rows for
// node-based, columns for exemplar-based. Vector tensors become one length-N
// vector per (level, tag), keyed with index 0. Total 3LN + 3L records.
std::vector<KeyedRecord> to_records(const MessageState& state, Orientation orientation);
std::size_t state_record_count(int levels, std::size_t n) noexcept;

// Inverse of to_records. Vector tensors may alternatively arrive as N scalar
// records keyed (i, level, tag), which is how the MapReduce jobs emit them.
// Records tagged Aux carry job-local data and are ignored. N is taken from
// the matrix payload length and L from the highest level present.
MessageState from_records(std::span<const KeyedRecord> records, Orientation orientation,
                          int iteration = 0);

// Bitwise equality helpers used by the determinism checks.
bool bitwise_equal(std::span<const double> a, std::span<const double> b) noexcept;
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace hap
