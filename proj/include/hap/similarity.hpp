#pragma once

// Data ingestion and similarity construction.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hap/tensors.hpp"

namespace hap {

// N points of uniform dimension, stored row-major. Labels are optional class
// ids (dense, in order of first appearance) with their original names.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<int> labels;
  std::vector<std::string> label_names;

  std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  bool has_labels() const noexcept { return !labels.empty(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }

  // Throws DimensionMismatch when `p` does not match the set's dimension.
  void add(std::span<const double> p);
};

using Rgb = std::array<std::uint8_t, 3>;

struct PixelGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Rgb> pixels;  // row-major

  std::size_t size() const noexcept { return pixels.size(); }
};

enum class Metric { NegEuclidean, NegSqEuclidean };

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view text);  // throws InvalidConfig

class PreferenceStrategy {
 public:
  struct RandomUniform {
    double lo;
    double hi;
  };
  struct Constant {
    double value;
  };
  struct Median {};

  PreferenceStrategy() : variant_(RandomUniform{-1e6, 0.0}) {}
  // Each throws InvalidRange unless lo <= hi <= 0 (or value <= 0).
  static PreferenceStrategy random_uniform(double lo, double hi);
  static PreferenceStrategy constant(double value);
  static PreferenceStrategy median() { return PreferenceStrategy(Median{}); }

  // "random:LO:HI", "constant:V" or "median". Throws InvalidConfig / InvalidRange.
  static PreferenceStrategy parse(std::string_view text);
  std::string to_string() const;

  const std::variant<RandomUniform, Constant, Median>& variant() const noexcept { return variant_; }

 private:
  template <class V>
  explicit PreferenceStrategy(V v) : variant_(v) {}

  std::variant<RandomUniform, Constant, Median> variant_;
};

// s_ij = -|x_i - x_j| or -|x_i - x_j|^2, replicated across `levels`, with the
// diagonal filled by `pref`.
SimilarityTensor similarity_from_points(const PointSet& points, Metric metric, int levels,
                                        const PreferenceStrategy& pref, std::uint64_t seed = 0);

// Flattens pixels row-major into RGB points.
PointSet points_from_image(const PixelGrid& image);
SimilarityTensor similarity_from_image(const PixelGrid& image, Metric metric, int levels,
                                       const PreferenceStrategy& pref, std::uint64_t seed = 0);

// Overwrites the diagonal of every level. Random draws are i.i.d. from the
// seeded generator in (level, index) order; median uses the median
// off-diagonal entry of each level (0 when N = 1).
SimilarityTensor apply_preferences(SimilarityTensor s, const PreferenceStrategy& pref,
                                   std::uint64_t seed);

// Points CSV: one point per line, comma-separated decimals, optional final
// `#label` column. Throws ParseError with the line number.
PointSet parse_points_csv(std::string_view text);
PointSet load_points_csv(const std::filesystem::path& path);

// P3 or P6 with maxval 255. Throws ParseError with the byte offset.
PixelGrid parse_ppm(std::string_view bytes);
PixelGrid load_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const PixelGrid& image);  // binary P6

// First line `N L`, then L blocks of N lines holding N decimals each
// (commas or whitespace). Throws ParseError or PositiveSimilarity.
SimilarityTensor parse_similarity_matrix(std::string_view text);
SimilarityTensor load_similarity_matrix(const std::filesystem::path& path);

// Reads a whole file; throws IOFailure naming the path.
std::string read_file(const std::filesystem::path& path);

}  // namespace hap
