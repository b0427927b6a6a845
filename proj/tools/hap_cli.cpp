// hap: hierarchical affinity propagation from the command line.
//
//   hap cluster POINTS.csv|MATRIX.txt [flags]
//   hap segment-image IMAGE.ppm [flags]
//   hap bench-scaling [--points FILE | --n N] --workers-list 1,2,4 [flags]
//   hap purity ASSIGNMENTS.tsv LABELS
//   hap --manifest OUT/run-manifest [SUBCOMMAND --out OTHER]
//
// Exit status: 0 success, 1 runtime failure, 2 usage or input error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hap/error.hpp"
#include "hap/fixtures.hpp"
#include "hap/metrics.hpp"
#include "hap/mr_jobs.hpp"
#include "hap/sequential.hpp"
#include "hap/similarity.hpp"

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  int levels = 1;
  int iterations = 30;
  double lambda = 0.5;
  std::optional<double> kappa;
  std::string preference;  // empty: default for the input kind
  std::string metric;      // empty: default for the input kind
  std::uint64_t seed = 0;
  std::string engine = "sequential";
  std::string schedule;  // empty: gauss-seidel for sequential
  int workers = 1;
  std::string out = "hap-out";
  std::string spill_dir;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--levels", f.levels, "hierarchy depth L")->capture_default_str();
  sub->add_option("--iterations", f.iterations, "message-passing iterations")->capture_default_str();
  sub->add_option("--lambda", f.lambda, "damping factor in (0,1)")->capture_default_str();
  sub->add_option("--kappa", f.kappa, "enables the level-to-level similarity update");
  sub->add_option("--preference", f.preference, "random:LO:HI | constant:V | median");
  sub->add_option("--metric", f.metric, "neg-euclidean | neg-sq-euclidean");
  sub->add_option("--seed", f.seed, "preference seed")->capture_default_str();
  sub->add_option("--engine", f.engine, "sequential | mapreduce")->capture_default_str();
  sub->add_option("--schedule", f.schedule, "gauss-seidel | jacobi (sequential engine only)");
  sub->add_option("--workers", f.workers, "MapReduce worker threads")->capture_default_str();
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--spill-dir", f.spill_dir, "MapReduce spill directory (default: temporary)");
}

hap::RunConfig make_config(const RunFlags& f, const std::string& default_pref) {
  hap::RunConfig cfg;
  cfg.levels = f.levels;
  cfg.iterations = f.iterations;
  cfg.lambda = hap::DampingFactor(f.lambda);
  if (f.kappa) cfg.kappa = hap::KappaFactor(*f.kappa);
  cfg.seed = f.seed;
  cfg.preference = hap::PreferenceStrategy::parse(f.preference.empty() ? default_pref : f.preference);
  cfg.engine = hap::parse_engine(f.engine);
  cfg.workers = f.workers;
  if (cfg.engine == hap::Engine::MapReduce) {
    if (!f.schedule.empty() && hap::parse_schedule(f.schedule) != hap::Schedule::Jacobi) {
      throw UsageError("--schedule gauss-seidel is not available with --engine mapreduce");
    }
    cfg.schedule = hap::Schedule::Jacobi;
  } else {
    cfg.schedule = f.schedule.empty() ? hap::Schedule::GaussSeidel : hap::parse_schedule(f.schedule);
  }
  cfg.validate();
  return cfg;
}

std::string config_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + '"';
}

// CLI11 config syntax, loadable with --manifest.
void write_manifest(const fs::path& dir, const std::string& command, const std::string& input,
                    const RunFlags& f, const std::string& pref, const std::string& metric,
                    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::ofstream out(dir / "run-manifest");
  out << "# hap " << command << "\n[" << command << "]\n";
  if (!input.empty()) out << "input=" << config_quote(fs::absolute(input).string()) << '\n';
  out << "levels=" << f.levels << '\n'
      << "iterations=" << f.iterations << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", f.lambda);
  out << "lambda=" << buf << '\n';
  if (f.kappa) {
    std::snprintf(buf, sizeof buf, "%.17g", *f.kappa);
    out << "kappa=" << buf << '\n';
  }
  out << "preference=" << config_quote(pref) << '\n'
      << "metric=" << config_quote(metric) << '\n'
      << "seed=" << f.seed << '\n'
      << "engine=" << config_quote(f.engine) << '\n';
  if (!f.schedule.empty()) out << "schedule=" << config_quote(f.schedule) << '\n';
  out << "workers=" << f.workers << '\n';
  for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
  if (!out) throw hap::Error(hap::ErrorCode::IOFailure, (dir / "run-manifest").string() + ": cannot write");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw hap::Error(hap::ErrorCode::IOFailure, dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw hap::Error(hap::ErrorCode::IOFailure, path.string() + ": cannot write");
}

struct Outcome {
  hap::AssignmentTable assignments;
  std::vector<hap::mr::JobTiming> timings;
  double wall_ms = 0.0;
};

// Rough peak: three dense L x N x N tensors, times the shuffle copies for
// the MapReduce engine. Refuses runs that cannot fit in physical memory.
void check_memory(std::size_t n, const hap::RunConfig& cfg) {
  const double dense = 3.0 * cfg.levels * static_cast<double>(n) * static_cast<double>(n) * sizeof(double);
  const double need = cfg.engine == hap::Engine::MapReduce ? 8.0 * dense : 1.2 * dense;
  const long pages = ::sysconf(_SC_PHYS_PAGES);
  const long page = ::sysconf(_SC_PAGE_SIZE);
  if (pages <= 0 || page <= 0) return;
  const double have = static_cast<double>(pages) * static_cast<double>(page);
  if (need > have) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "N=%zu, L=%d needs about %.1f GiB, host has %.1f GiB", n, cfg.levels,
                  need / (1 << 30), have / (1 << 30));
    throw ResourceError(buf);
  }
}

Outcome run_engine(const hap::SimilarityTensor& s, const hap::RunConfig& cfg, const std::string& spill_dir) {
  check_memory(s.n(), cfg);
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  if (cfg.engine == hap::Engine::MapReduce) {
    hap::mr::DriveOptions opts;
    opts.spill_dir = spill_dir;
    auto r = hap::mr::drive(s, cfg, opts);
    o.assignments = std::move(r.assignments);
    o.timings = std::move(r.timings);
  } else {
    o.assignments = hap::run_sequential(s, cfg).assignments;
  }
  o.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return o;
}

std::string format_assignments(const hap::AssignmentTable& t) {
  std::string out = "# point\tlevel\texemplar\n";
  for (int l = 1; l <= t.levels(); ++l) {
    for (std::size_t i = 0; i < t.n(); ++i) {
      out += std::to_string(i) + '\t' + std::to_string(l) + '\t' + std::to_string(t.exemplar(l, i)) + '\n';
    }
  }
  return out;
}

std::string format_stats(const hap::AssignmentTable& t) {
  const auto stats = hap::metrics::level_stats(t);
  return hap::metrics::format_level_stats(stats) + "non_increasing\t" +
         (hap::metrics::exemplar_counts_non_increasing(stats) ? "yes" : "no") + '\n';
}

void write_common(const fs::path& dir, const Outcome& o) {
  write_text(dir / "assignments.tsv", format_assignments(o.assignments));
  write_text(dir / "stats.txt", format_stats(o.assignments));
  if (!o.timings.empty()) write_text(dir / "timings.tsv", hap::mr::format_timings(o.timings));
}

void print_counts(const hap::AssignmentTable& t) {
  for (int l = 1; l <= t.levels(); ++l) {
    std::cout << "level " << l << ": " << t.exemplar_count(l) << " exemplars\n";
  }
}

bool has_extension(const std::string& path, const char* ext) {
  return fs::path(path).extension() == ext;
}

// ---- cluster ---------------------------------------------------------------

struct ClusterArgs {
  RunFlags run;
  std::string input;
  std::string format = "auto";
};

int cmd_cluster(const ClusterArgs& a) {
  const bool points = a.format == "points" || (a.format == "auto" && has_extension(a.input, ".csv"));
  const std::string metric_text = a.run.metric.empty() ? "neg-sq-euclidean" : a.run.metric;
  const std::string pref_text = a.run.preference.empty() ? "random:-1e6:0" : a.run.preference;
  const hap::RunConfig cfg = make_config(a.run, pref_text);

  hap::SimilarityTensor s;
  std::vector<int> labels;
  if (points) {
    const hap::PointSet ps = hap::load_points_csv(a.input);
    labels = ps.labels;
    check_memory(ps.size(), cfg);
    s = hap::similarity_from_points(ps, hap::parse_metric(metric_text), cfg.levels, cfg.preference, cfg.seed);
  } else {
    s = hap::load_similarity_matrix(a.input);
    if (s.levels() == 1 && cfg.levels > 1) {
      s = hap::SimilarityTensor::replicate(s.values().level(1), s.n(), cfg.levels);
    } else if (s.levels() != cfg.levels) {
      throw UsageError("--levels " + std::to_string(cfg.levels) + " but " + a.input + " holds " +
                       std::to_string(s.levels()) + " levels");
    }
    // the file's diagonal is kept unless a preference strategy is given
    if (!a.run.preference.empty()) s = hap::apply_preferences(std::move(s), cfg.preference, cfg.seed);
  }

  const fs::path out(a.run.out);
  ensure_dir(out);
  const Outcome o = run_engine(s, cfg, a.run.spill_dir);
  write_common(out, o);
  if (!labels.empty()) {
    const auto report = hap::metrics::purity_report(o.assignments, labels);
    write_text(out / "purity.txt", "# level\tpurity\texemplars\n" + report.to_lines());
    std::cout << report.to_table();
  } else {
    print_counts(o.assignments);
  }
  write_manifest(out, "cluster", a.input, a.run, a.run.preference.empty() && !points ? "" : pref_text,
                 points ? metric_text : "", std::vector<std::pair<std::string, std::string>>{{"format", config_quote(points ? "points" : "matrix")}});
  return 0;
}

// ---- segment-image ---------------------------------------------------------

int cmd_segment(const ClusterArgs& a) {
  const std::string metric_text = a.run.metric.empty() ? "neg-euclidean" : a.run.metric;
  const std::string pref_text = a.run.preference.empty() ? "random:-1e6:0" : a.run.preference;
  const hap::RunConfig cfg = make_config(a.run, pref_text);
  const hap::PixelGrid image = hap::load_ppm(a.input);
  check_memory(image.size(), cfg);
  const auto s = hap::similarity_from_image(image, hap::parse_metric(metric_text), cfg.levels,
                                            cfg.preference, cfg.seed);
  const fs::path out(a.run.out);
  ensure_dir(out);
  const Outcome o = run_engine(s, cfg, a.run.spill_dir);
  write_common(out, o);
  for (int l = 1; l <= cfg.levels; ++l) {
    hap::PixelGrid recolored = image;
    for (std::size_t i = 0; i < image.size(); ++i) {
      recolored.pixels[i] = image.pixels[static_cast<std::size_t>(o.assignments.exemplar(l, i))];
    }
    hap::write_ppm(out / ("level-" + std::to_string(l) + ".ppm"), recolored);
  }
  print_counts(o.assignments);
  write_manifest(out, "segment-image", a.input, a.run, pref_text, metric_text);
  return 0;
}

// ---- bench-scaling ---------------------------------------------------------

struct BenchArgs {
  RunFlags run;
  std::string points;
  std::size_t n = 400;
  std::vector<int> workers_list{1, 2, 4};
};

int cmd_bench(BenchArgs a) {
  if (a.workers_list.empty()) throw UsageError("--workers-list is empty");
  a.run.engine = "mapreduce";
  const std::string metric_text = a.run.metric.empty() ? "neg-sq-euclidean" : a.run.metric;
  const std::string pref_text = a.run.preference.empty() ? "median" : a.run.preference;
  hap::RunConfig cfg = make_config(a.run, pref_text);
  const hap::PointSet ps =
      a.points.empty() ? hap::fixtures::blob_workload(a.n, 8, cfg.seed) : hap::load_points_csv(a.points);
  check_memory(ps.size(), cfg);
  const auto s =
      hap::similarity_from_points(ps, hap::parse_metric(metric_text), cfg.levels, cfg.preference, cfg.seed);

  const fs::path out(a.run.out);
  ensure_dir(out);
  std::vector<std::pair<int, double>> walls;
  std::optional<hap::AssignmentTable> reference;
  std::string raw = "# workers\titer\tjob\twall_ms\n";
  for (int w : a.workers_list) {
    cfg.workers = w;
    cfg.validate();
    const Outcome o = run_engine(s, cfg, a.run.spill_dir);
    if (!reference) {
      reference = o.assignments;
    } else if (!(o.assignments == *reference)) {
      std::cerr << "hap: assignments differ between worker counts " << a.workers_list.front() << " and "
                << w << '\n';
      return kExitRuntime;
    }
    walls.emplace_back(w, o.wall_ms);
    std::istringstream lines(hap::mr::format_timings(o.timings));
    for (std::string line; std::getline(lines, line);) raw += std::to_string(w) + '\t' + line + '\n';
  }
  const auto report = walls.size() == 1 ? hap::metrics::single_worker_report(walls[0].first, walls[0].second)
                                        : hap::metrics::scaling_report(walls);
  write_text(out / "scaling.txt", report.to_table());
  write_text(out / "timings.tsv", raw);
  write_text(out / "assignments.tsv", format_assignments(*reference));
  std::cout << "n\t" << s.n() << "\tlevels\t" << cfg.levels << "\titerations\t" << cfg.iterations << '\n'
            << report.to_table();
  std::string list;
  for (int w : a.workers_list) list += (list.empty() ? "" : ",") + std::to_string(w);
  write_manifest(out, "bench-scaling", a.points, a.run, pref_text, metric_text,
                 {std::pair<std::string, std::string>("n", std::to_string(a.n)),
                  std::pair<std::string, std::string>("workers-list", config_quote(list))});
  return 0;
}

// ---- purity ----------------------------------------------------------------

hap::AssignmentTable read_assignments(const std::string& path) {
  const std::string text = hap::read_file(path);
  std::map<std::pair<int, long>, int> rows;
  int levels = 0;
  long n = 0;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long i = -1;
    int l = 0, e = -1;
    if (!(fields >> i >> l >> e) || i < 0 || l < 1 || e < 0) {
      throw hap::Error(hap::ErrorCode::ParseError, path + ": line " + std::to_string(line_no) +
                                                       ": expected `point TAB level TAB exemplar`");
    }
    rows[{l, i}] = e;
    levels = std::max(levels, l);
    n = std::max(n, i + 1);
  }
  if (rows.size() != static_cast<std::size_t>(levels) * static_cast<std::size_t>(n) || n == 0) {
    throw hap::Error(hap::ErrorCode::ParseError, path + ": incomplete assignment table");
  }
  hap::AssignmentTable t(levels, static_cast<std::size_t>(n));
  for (const auto& [key, e] : rows) t.set(key.first, static_cast<std::size_t>(key.second), e);
  return t;
}

// Points CSV with a label column, or one label per line.
std::vector<int> read_labels(const std::string& path) {
  const std::string text = hap::read_file(path);
  if (text.find(',') != std::string::npos) {
    try {
      const auto ps = hap::parse_points_csv(text);
      if (!ps.has_labels()) {
        throw hap::Error(hap::ErrorCode::ParseError, "no label column");
      }
      return ps.labels;
    } catch (const hap::Error& e) {
      throw hap::Error(e.code(), path + ": " + e.message());
    }
  }
  std::map<std::string, int> ids;
  std::vector<int> labels;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    const auto [it, inserted] = ids.emplace(line.substr(b, e - b + 1), static_cast<int>(ids.size()));
    labels.push_back(it->second);
  }
  return labels;
}

int cmd_purity(const std::string& assignments_path, const std::string& labels_path) {
  const auto table = read_assignments(assignments_path);
  const auto labels = read_labels(labels_path);
  const auto report = hap::metrics::purity_report(table, labels);
  std::cout << report.to_table() << "# level\tpurity\texemplars\n" << report.to_lines();
  return 0;
}

bool is_input_error(hap::ErrorCode code) {
  using hap::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidRange:
    case ErrorCode::ParseError:
    case ErrorCode::PositiveSimilarity:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::IOFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical affinity propagation"};
  app.require_subcommand(1);
  // a manifest names its subcommand in a [section]
  app.set_config("--manifest", "", "re-run from a run-manifest");

  ClusterArgs cluster;
  auto* c = app.add_subcommand("cluster", "cluster a points CSV or a similarity matrix");
  c->configurable();
  c->add_option("input", cluster.input, "points CSV or similarity matrix file")->required();
  c->add_option("--format", cluster.format, "auto | points | matrix")
      ->check(CLI::IsMember({"auto", "points", "matrix"}))
      ->capture_default_str();
  add_run_flags(c, cluster.run);

  ClusterArgs segment;
  auto* sg = app.add_subcommand("segment-image", "segment a PPM image and write recoloured levels");
  sg->configurable();
  sg->add_option("input", segment.input, "P3 or P6 image")->required();
  add_run_flags(sg, segment.run);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench-scaling", "time the MapReduce engine over worker counts");
  b->configurable();
  b->add_option("--points", bench.points, "points CSV (default: synthetic blobs)");
  b->add_option("--n", bench.n, "synthetic fixture size")->capture_default_str();
  b->add_option("--workers-list", bench.workers_list, "worker counts")->delimiter(',')->capture_default_str();
  add_run_flags(b, bench.run);

  std::string assignments_path, labels_path;
  auto* p = app.add_subcommand("purity", "purity of an assignments.tsv against class labels");
  p->add_option("assignments", assignments_path, "assignments.tsv")->required();
  p->add_option("labels", labels_path, "labelled points CSV or one label per line")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c->parsed()) return cmd_cluster(cluster);
    if (sg->parsed()) return cmd_segment(segment);
    if (b->parsed()) return cmd_bench(bench);
    if (p->parsed()) return cmd_purity(assignments_path, labels_path);
  } catch (const UsageError& e) {
    std::cerr << "hap: " << e.what() << '\n';
    return kExitUsage;
  } catch (const hap::Error& e) {
    std::cerr << "hap: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "hap: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
