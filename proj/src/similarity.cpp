#include "hap/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "hap/error.hpp"
#include "hap/simd/kernel_set.hpp"

namespace hap {

void PointSet::add(std::span<const double> p) {
  if (dim == 0) dim = p.size();
  if (p.size() != dim || dim == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "point of dimension " + std::to_string(p.size()) + " in a set of dimension " +
                    std::to_string(dim));
  }
  coords.insert(coords.end(), p.begin(), p.end());
}

std::string_view to_string(Metric metric) noexcept {
  return metric == Metric::NegEuclidean ? "neg-euclidean" : "neg-sq-euclidean";
}

Metric parse_metric(std::string_view text) {
  if (text == "neg-euclidean") return Metric::NegEuclidean;
  if (text == "neg-sq-euclidean") return Metric::NegSqEuclidean;
  throw Error(ErrorCode::InvalidConfig, "unknown metric '" + std::string(text) + "'");
}

PreferenceStrategy PreferenceStrategy::random_uniform(double lo, double hi) {
  if (!(lo <= hi && hi <= 0.0) || !std::isfinite(lo)) {
    throw Error(ErrorCode::InvalidRange, "random preference range needs lo <= hi <= 0");
  }
  return PreferenceStrategy(RandomUniform{lo, hi});
}

PreferenceStrategy PreferenceStrategy::constant(double value) {
  if (!(value <= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidRange, "constant preference must be finite and <= 0");
  }
  return PreferenceStrategy(Constant{value});
}

namespace {

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  // from_chars rejects a leading '+'
  const char* begin = text.data();
  if (begin != end && *begin == '+') ++begin;
  auto res = std::from_chars(begin, end, v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw Error(ErrorCode::ParseError,
                std::string(context) + ": bad number '" + std::string(text) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

PreferenceStrategy PreferenceStrategy::parse(std::string_view text) {
  if (text == "median") return median();
  if (text.starts_with("constant:")) {
    return constant(parse_double(text.substr(9), "preference"));
  }
  if (text.starts_with("random:")) {
    const auto body = text.substr(7);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "expected random:LO:HI, got '" + std::string(text) + "'");
    }
    return random_uniform(parse_double(body.substr(0, colon), "preference"),
                          parse_double(body.substr(colon + 1), "preference"));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown preference strategy '" + std::string(text) + "'");
}

std::string PreferenceStrategy::to_string() const {
  if (const auto* r = std::get_if<RandomUniform>(&variant_)) {
    return "random:" + format_double(r->lo) + ":" + format_double(r->hi);
  }
  if (const auto* c = std::get_if<Constant>(&variant_)) return "constant:" + format_double(c->value);
  return "median";
}

SimilarityTensor apply_preferences(SimilarityTensor s, const PreferenceStrategy& pref,
                                   std::uint64_t seed) {
  const std::size_t n = s.n();
  const auto& v = pref.variant();
  if (const auto* r = std::get_if<PreferenceStrategy::RandomUniform>(&v)) {
    std::mt19937_64 gen(seed);
    for (int l = 1; l <= s.levels(); ++l) {
      for (std::size_t j = 0; j < n; ++j) {
        // 53 random mantissa bits; the engine's output is fixed by the
        // standard, unlike uniform_real_distribution's.
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        s.set_preference(l, j, std::min(r->lo + (r->hi - r->lo) * u, r->hi));
      }
    }
  } else if (const auto* c = std::get_if<PreferenceStrategy::Constant>(&v)) {
    for (int l = 1; l <= s.levels(); ++l) {
      for (std::size_t j = 0; j < n; ++j) s.set_preference(l, j, c->value);
    }
  } else {
    for (int l = 1; l <= s.levels(); ++l) {
      double median = 0.0;
      if (n > 1) {
        std::vector<double> off;
        off.reserve(n * (n - 1));
        for (std::size_t i = 0; i < n; ++i) {
          auto row = s.values().row(l, i);
          for (std::size_t j = 0; j < n; ++j) {
            if (i != j) off.push_back(row[j]);
          }
        }
        const std::size_t mid = off.size() / 2;
        std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid), off.end());
        const double upper = off[mid];
        if (off.size() % 2 == 1) {
          median = upper;
        } else {
          const double lower = *std::max_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid));
          median = (lower + upper) / 2.0;
        }
      }
      for (std::size_t j = 0; j < n; ++j) s.set_preference(l, j, median);
    }
  }
  return s;
}

SimilarityTensor similarity_from_points(const PointSet& points, Metric metric, int levels,
                                        const PreferenceStrategy& pref, std::uint64_t seed) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "point set is empty");
  if (points.coords.size() != n * dim) {
    throw Error(ErrorCode::DimensionMismatch, "coordinate buffer is not N x d");
  }
  if (levels < 1) throw Error(ErrorCode::InvalidConfig, "levels must be >= 1");

  std::vector<double> soa(n * dim);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < dim; ++d) soa[d * n + j] = points.coords[j * dim + d];
  }
  std::vector<double> matrix(n * n);
  const auto& k = simd::active_kernels();
  const bool root = metric == Metric::NegEuclidean;
  for (std::size_t i = 0; i < n; ++i) {
    k.neg_distances(soa.data(), n, dim, points.coords.data() + i * dim, root, matrix.data() + i * n);
    matrix[i * n + i] = 0.0;
  }
  return apply_preferences(SimilarityTensor::replicate(matrix, n, levels), pref, seed);
}

PointSet points_from_image(const PixelGrid& image) {
  if (image.pixels.size() != image.width * image.height || image.pixels.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer is not width x height");
  }
  PointSet ps;
  ps.dim = 3;
  ps.coords.reserve(image.pixels.size() * 3);
  for (const Rgb& p : image.pixels) {
    ps.coords.push_back(p[0]);
    ps.coords.push_back(p[1]);
    ps.coords.push_back(p[2]);
  }
  return ps;
}

SimilarityTensor similarity_from_image(const PixelGrid& image, Metric metric, int levels,
                                       const PreferenceStrategy& pref, std::uint64_t seed) {
  return similarity_from_points(points_from_image(image), metric, levels, pref, seed);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto pos = text.find('\n');
    fn(text.substr(0, pos), line_no);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

PointSet parse_points_csv(std::string_view text) {
  PointSet ps;
  std::unordered_map<std::string, int> label_ids;
  int labelled = -1;  // unknown until the first data line
  std::vector<double> p;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto line = trim(raw);
    if (line.empty()) return;
    p.clear();
    std::string_view label;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const auto field = trim(rest.substr(0, comma));
      const bool last = comma == std::string_view::npos;
      if (!field.empty() && field.front() == '#') {
        if (!last) throw Error(ErrorCode::ParseError, at_line(line_no) + ": label must be the final column");
        label = field.substr(1);
      } else {
        p.push_back(parse_double(field, at_line(line_no)));
      }
      if (last) break;
      rest.remove_prefix(comma + 1);
    }
    const int has_label = label.empty() ? 0 : 1;
    if (labelled == -1) labelled = has_label;
    if (labelled != has_label) {
      throw Error(ErrorCode::ParseError, at_line(line_no) + ": label column present on some lines only");
    }
    if (ps.dim != 0 && p.size() != ps.dim) {
      throw Error(ErrorCode::ParseError, at_line(line_no) + ": expected " + std::to_string(ps.dim) +
                                             " coordinates, found " + std::to_string(p.size()));
    }
    if (p.empty()) throw Error(ErrorCode::ParseError, at_line(line_no) + ": no coordinates");
    ps.add(p);
    if (has_label) {
      auto [it, fresh] = label_ids.try_emplace(std::string(label), static_cast<int>(ps.label_names.size()));
      if (fresh) ps.label_names.emplace_back(label);
      ps.labels.push_back(it->second);
    }
  });
  if (ps.size() == 0) throw Error(ErrorCode::ParseError, "points file holds no points");
  return ps;
}

PointSet load_points_csv(const std::filesystem::path& path) {
  try {
    return parse_points_csv(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IOFailure) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

namespace {

class PpmReader {
 public:
  explicit PpmReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    if (start == pos_) fail(start, "unexpected end of header");
    return bytes_.substr(start, pos_ - start);
  }

  std::size_t number() {
    const std::size_t at = pos_;
    const auto t = token();
    std::size_t v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) fail(at, "bad number '" + std::string(t) + "'");
    return v;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t k) noexcept { pos_ += k; }
  std::string_view bytes() const noexcept { return bytes_; }

  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw Error(ErrorCode::ParseError, "ppm byte " + std::to_string(at) + ": " + what);
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PixelGrid parse_ppm(std::string_view bytes) {
  PpmReader in(bytes);
  const auto magic = in.token();
  if (magic != "P3" && magic != "P6") in.fail(0, "unsupported magic '" + std::string(magic) + "'");
  PixelGrid img;
  img.width = in.number();
  img.height = in.number();
  const std::size_t maxval_at = in.pos();
  const std::size_t maxval = in.number();
  if (maxval != 255) in.fail(maxval_at, "only maxval 255 is supported");
  if (img.width == 0 || img.height == 0) in.fail(0, "empty image");
  const std::size_t count = img.width * img.height;
  img.pixels.resize(count);

  if (magic == "P3") {
    for (std::size_t p = 0; p < count; ++p) {
      for (int ch = 0; ch < 3; ++ch) {
        const std::size_t at = in.pos();
        const std::size_t v = in.number();
        if (v > 255) in.fail(at, "channel value " + std::to_string(v) + " exceeds 255");
        img.pixels[p][static_cast<std::size_t>(ch)] = static_cast<std::uint8_t>(v);
      }
    }
    return img;
  }
  // exactly one whitespace byte separates maxval from the raster
  in.advance(1);
  const std::size_t start = in.pos();
  if (start + count * 3 > bytes.size()) in.fail(start, "raster truncated");
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      img.pixels[p][ch] = static_cast<std::uint8_t>(bytes[start + p * 3 + ch]);
    }
  }
  return img;
}

PixelGrid load_ppm(const std::filesystem::path& path) {
  try {
    return parse_ppm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IOFailure) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void write_ppm(const std::filesystem::path& path, const PixelGrid& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (const Rgb& p : image.pixels) out.write(reinterpret_cast<const char*>(p.data()), 3);
  if (!out) throw Error(ErrorCode::IOFailure, "write failed for " + path.string());
}

SimilarityTensor parse_similarity_matrix(std::string_view text) {
  std::vector<std::string_view> lines;
  for_each_line(text, [&](std::string_view raw, std::size_t) { lines.push_back(trim(raw)); });

  auto split = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',') ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
  };

  std::size_t cursor = 0;
  auto next_line = [&]() -> std::pair<std::string_view, std::size_t> {
    while (cursor < lines.size() && lines[cursor].empty()) ++cursor;
    if (cursor == lines.size()) throw Error(ErrorCode::ParseError, "similarity matrix truncated");
    ++cursor;
    return {lines[cursor - 1], cursor};
  };

  auto [header, header_no] = next_line();
  const auto head = split(header);
  if (head.size() != 2) throw Error(ErrorCode::ParseError, at_line(header_no) + ": expected 'N L'");
  const double n_real = parse_double(head[0], at_line(header_no));
  const double l_real = parse_double(head[1], at_line(header_no));
  if (n_real < 1 || l_real < 1 || n_real != std::floor(n_real) || l_real != std::floor(l_real)) {
    throw Error(ErrorCode::ParseError, at_line(header_no) + ": N and L must be positive integers");
  }
  const auto n = static_cast<std::size_t>(n_real);
  const auto levels = static_cast<int>(l_real);

  Tensor3 values(levels, n);
  for (int l = 1; l <= levels; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      auto [line, line_no] = next_line();
      const auto fields = split(line);
      if (fields.size() != n) {
        throw Error(ErrorCode::ParseError, at_line(line_no) + ": expected " + std::to_string(n) +
                                               " values, found " + std::to_string(fields.size()));
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double v = parse_double(fields[j], at_line(line_no));
        if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, at_line(line_no) + ": non-finite value");
        if (v > 0.0) {
          throw Error(ErrorCode::PositiveSimilarity, at_line(line_no) + ", column " +
                                                         std::to_string(j + 1) + ": " +
                                                         std::string(fields[j]) + " > 0");
        }
        values.at(l, i, j) = v;
      }
    }
  }
  return SimilarityTensor(std::move(values));
}

SimilarityTensor load_similarity_matrix(const std::filesystem::path& path) {
  try {
    return parse_similarity_matrix(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IOFailure) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace hap
