#include "hap/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hap::fixtures {
namespace {

double unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

// Box-Muller; one draw per call.
double normal(std::mt19937_64& gen) {
  double u = unit(gen);
  while (u <= 0.0) u = unit(gen);
  const double v = unit(gen);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace

PointSet gaussian_blobs(std::size_t per_blob, std::span<const std::array<double, 2>> centers,
                        double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  PointSet ps;
  ps.dim = 2;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    ps.label_names.push_back("blob" + std::to_string(b));
    for (std::size_t k = 0; k < per_blob; ++k) {
      const double x = centers[b][0] + sigma * normal(gen);
      const double y = centers[b][1] + sigma * normal(gen);
      ps.coords.push_back(x);
      ps.coords.push_back(y);
      ps.labels.push_back(static_cast<int>(b));
    }
  }
  return ps;
}

PointSet three_blobs(std::uint64_t seed) {
  const std::array<std::array<double, 2>, 3> centers{{{0.0, 0.0}, {10.0, 0.0}, {5.0, 10.0}}};
  return gaussian_blobs(20, centers, 0.1, seed);
}

PointSet blob_workload(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  PointSet ps;
  ps.dim = 2;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
  for (std::size_t b = 0; b < k; ++b) ps.label_names.push_back("blob" + std::to_string(b));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = i % k;
    ps.coords.push_back(5.0 * static_cast<double>(b % side) + 0.5 * normal(gen));
    ps.coords.push_back(5.0 * static_cast<double>(b / side) + 0.5 * normal(gen));
    ps.labels.push_back(static_cast<int>(b));
  }
  return ps;
}

PointSet aggregation_like(std::uint64_t seed) {
  struct Disc {
    std::size_t count;
    double x, y, r;
  };
  static constexpr std::array<Disc, 7> discs{{{45, 7.0, 8.0, 2.5},
                                              {170, 11.0, 22.0, 5.0},
                                              {102, 20.0, 8.0, 3.5},
                                              {273, 32.0, 22.0, 6.5},
                                              {34, 20.5, 20.0, 1.8},
                                              {130, 31.0, 8.0, 4.0},
                                              {34, 23.5, 23.0, 1.5}}};
  std::mt19937_64 gen(seed);
  PointSet ps;
  ps.dim = 2;
  for (std::size_t c = 0; c < discs.size(); ++c) {
    ps.label_names.push_back("class" + std::to_string(c + 1));
    for (std::size_t k = 0; k < discs[c].count; ++k) {
      const double radius = discs[c].r * std::sqrt(unit(gen));
      const double angle = 2.0 * std::numbers::pi * unit(gen);
      ps.coords.push_back(discs[c].x + radius * std::cos(angle));
      ps.coords.push_back(discs[c].y + radius * std::sin(angle));
      ps.labels.push_back(static_cast<int>(c));
    }
  }
  return ps;
}

PixelGrid four_color_image(std::size_t w, std::size_t h) {
  static constexpr std::array<Rgb, 4> colors{{{200, 30, 30}, {30, 180, 40}, {40, 60, 210}, {230, 220, 60}}};
  PixelGrid img{w, h, {}};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.pixels.push_back(colors[(y >= h / 2 ? 2 : 0) + (x >= w / 2 ? 1 : 0)]);
    }
  }
  return img;
}

PixelGrid checker_image(std::size_t w, std::size_t h, Rgb a, Rgb b) {
  PixelGrid img{w, h, {}};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) img.pixels.push_back((x + y) % 2 == 0 ? a : b);
  }
  return img;
}

PixelGrid uniform_image(std::size_t w, std::size_t h, Rgb color) {
  return {w, h, std::vector<Rgb>(w * h, color)};
}

}  // namespace hap::fixtures
