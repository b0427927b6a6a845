#include "hap/mr_jobs.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "hap/error.hpp"
#include "hap/kernels.hpp"

namespace fs = std::filesystem;

namespace hap::mr {

std::string to_string(const IntermediateKey& key) {
  return "(" + std::to_string(key.index) + "," + std::to_string(key.level) + ")";
}

std::string_view to_string(ValueKind kind) noexcept {
  static constexpr std::array<std::string_view, kValueKinds> names{
      "S",      "alpha",    "rho",           "tau",       "phi",       "c",        "tau-sum",
      "tau-diag", "tau-c", "phi-alpha", "phi-s", "sim-shift", "sim-below"};
  return names[static_cast<std::size_t>(kind)];
}

bool operator<(const IntermediateValue& a, const IntermediateValue& b) noexcept {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.source != b.source) return a.source < b.source;
  return std::bit_cast<std::uint64_t>(a.value) < std::bit_cast<std::uint64_t>(b.value);
}

namespace {

using Key = IntermediateKey;
using Value = IntermediateValue;
using Out = std::vector<KeyedRecord>;
using Em = Emitter<Key, Value>;

constexpr bool is_scalar_kind(ValueKind k) noexcept {
  return k == ValueKind::Tau || k == ValueKind::Phi || k == ValueKind::C ||
         k == ValueKind::TauPositiveSum || k == ValueKind::TauRhoDiag ||
         k == ValueKind::TauClusterPref;
}

ValueKind kind_of(Tag tag) {
  switch (tag) {
    case Tag::S: return ValueKind::S;
    case Tag::Alpha: return ValueKind::Alpha;
    case Tag::Rho: return ValueKind::Rho;
    case Tag::Tau: return ValueKind::Tau;
    case Tag::Phi: return ValueKind::Phi;
    case Tag::C: return ValueKind::C;
    case Tag::Aux: break;
  }
  throw Error(ErrorCode::InvalidConfig, "aux records have no element kind");
}

// One reducer group unpacked into per-kind vectors (indexed by source) and
// scalars. Values arrive sorted by (kind, source).
class Gathered {
 public:
  Gathered(const Key& key, std::span<const Value> values, std::size_t n) : key_(key), n_(n) {
    for (const Value& v : values) {
      const auto k = static_cast<std::size_t>(v.kind);
      if (is_scalar_kind(v.kind)) {
        if (count_[k]++ != 0) {
          throw Error(ErrorCode::DuplicateKey, std::string(to_string(v.kind)) + " at " + to_string(key));
        }
        scalar_[k] = v.value;
        continue;
      }
      if (v.source < 0 || static_cast<std::size_t>(v.source) >= n) {
        throw Error(ErrorCode::IndexOutOfRange, std::string(to_string(v.kind)) + " source " +
                                                    std::to_string(v.source));
      }
      auto& vec = vec_[k];
      if (vec.empty()) {
        vec.assign(n, 0.0);
        prev_[k] = -1;
      }
      if (v.source == prev_[k]) {
        throw Error(ErrorCode::DuplicateKey, std::string(to_string(v.kind)) + " source " +
                                                 std::to_string(v.source) + " at " + to_string(key));
      }
      prev_[k] = v.source;
      vec[static_cast<std::size_t>(v.source)] = v.value;
      ++count_[k];
    }
  }

  bool has(ValueKind kind) const { return count_[static_cast<std::size_t>(kind)] != 0; }

  const std::vector<double>& full(ValueKind kind, ErrorCode missing = ErrorCode::MissingRecord) const {
    const auto k = static_cast<std::size_t>(kind);
    if (count_[k] != n_) {
      throw Error(missing, std::string(to_string(kind)) + " at " + to_string(key_) + " has " +
                               std::to_string(count_[k]) + " of " + std::to_string(n_) + " elements");
    }
    return vec_[k];
  }

  double scalar(ValueKind kind, ErrorCode missing = ErrorCode::MissingRecord) const {
    const auto k = static_cast<std::size_t>(kind);
    if (count_[k] != 1) {
      throw Error(missing, std::string(to_string(kind)) + " absent at " + to_string(key_));
    }
    return scalar_[k];
  }

 private:
  Key key_;
  std::size_t n_;
  std::array<std::vector<double>, kValueKinds> vec_;
  std::array<double, kValueKinds> scalar_{};
  std::array<std::size_t, kValueKinds> count_{};
  std::array<int, kValueKinds> prev_{};
};

void require_orientation(const KeyedRecord& rec, Orientation want) {
  if (rec.key.orientation != want) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::string(to_string(want)) + " input, got " +
                                              std::string(to_string(rec.key.orientation)));
  }
}

const std::vector<double>& vector_payload(const KeyedRecord& rec, std::size_t n) {
  const auto* v = std::get_if<std::vector<double>>(&rec.value);
  if (v == nullptr || v->size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "expected a length-" + std::to_string(n) + " vector");
  }
  return *v;
}

// Routes a tau/phi/c record (whole vector or scalar) to keys (i, l); calls
// `extra(i, value)` for every element.
template <class Extra>
void emit_vector_tensor(const KeyedRecord& rec, std::size_t n, Em& em, Extra&& extra) {
  const ValueKind kind = kind_of(rec.key.tag);
  const int l = rec.key.level;
  if (const auto* sp = std::get_if<ScalarPayload>(&rec.value)) {
    if (sp->tag != rec.key.tag || sp->source != rec.key.index) {
      throw Error(ErrorCode::ShapeMismatch, "scalar payload does not match its key");
    }
    em.emit({l, sp->source}, {kind, sp->source, sp->value});
    extra(sp->source, sp->value);
    return;
  }
  const auto& v = vector_payload(rec, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<int>(i);
    em.emit({l, ii}, {kind, ii, v[i]});
    extra(ii, v[i]);
  }
}

KeyedRecord vector_record(Orientation o, int l, Tag tag, int index, std::vector<double> v) {
  return {{o, l, tag, index}, std::move(v)};
}

KeyedRecord scalar_record(Orientation o, int l, Tag tag, int index, double value) {
  return {{o, l, tag, index}, ScalarPayload{index, tag, value}};
}

void check_shape(const JobShape& shape) {
  if (shape.levels < 1 || shape.n == 0 || shape.iteration < 1) {
    throw Error(ErrorCode::InvalidConfig, "job shape needs levels >= 1, n >= 1, iteration >= 1");
  }
}

// Similarity update is active from iteration 2 on, when there is a level above.
bool shift_active(const JobShape& shape) {
  return shape.kappa.enabled() && shape.iteration >= 2 && shape.levels > 1;
}

}  // namespace

HapJob job1_rho_c_tau(const JobShape& shape) {
  check_shape(shape);
  HapJob job;
  job.name = "job1-it" + std::to_string(shape.iteration);

  job.mapper = [shape](const KeyedRecord& rec, Em& em) {
    require_orientation(rec, Orientation::ExemplarBased);
    const int l = rec.key.level;
    const bool cross = shape.iteration >= 2 && l < shape.levels;
    if (rec.key.tag == Tag::Aux) {
      throw Error(ErrorCode::ShapeMismatch, "unexpected aux record");
    }
    if (is_matrix_tag(rec.key.tag)) {
      const auto& col = vector_payload(rec, shape.n);
      const ValueKind kind = kind_of(rec.key.tag);
      const int j = rec.key.index;
      for (std::size_t i = 0; i < shape.n; ++i) em.emit({l, static_cast<int>(i)}, {kind, j, col[i]});
      if (cross && rec.key.tag == Tag::Rho) {
        const auto jj = static_cast<std::size_t>(j);
        em.emit({l + 1, j}, {ValueKind::TauPositiveSum, j, kernels::positive_sum_excluding(col, jj)});
        em.emit({l + 1, j}, {ValueKind::TauRhoDiag, j, col[jj]});
      }
      return;
    }
    const bool route_c = cross && rec.key.tag == Tag::C;
    emit_vector_tensor(rec, shape.n, em, [&](int i, double v) {
      if (route_c) em.emit({l + 1, i}, {ValueKind::TauClusterPref, i, v});
    });
  };

  job.reducer = [shape](const Key& key, std::span<const Value> values, Out& out) {
    const Gathered g(key, values, shape.n);
    const int l = key.level;
    const int i = key.index;
    const auto ii = static_cast<std::size_t>(i);
    const auto& s = g.full(ValueKind::S);
    const auto& alpha = g.full(ValueKind::Alpha);
    const auto& rho = g.full(ValueKind::Rho);
    double tau = g.scalar(ValueKind::Tau);
    double c = g.scalar(ValueKind::C);
    const double phi = g.scalar(ValueKind::Phi);
    bool has_shift = false;
    double shift = 0.0;

    if (shape.iteration >= 2) {
      c = kernels::cluster_preference(alpha, rho);
      if (l > 1) {
        tau = kernels::tau_from_parts(g.scalar(ValueKind::TauClusterPref, ErrorCode::MissingAux),
                                      g.scalar(ValueKind::TauRhoDiag, ErrorCode::MissingAux),
                                      g.scalar(ValueKind::TauPositiveSum, ErrorCode::MissingAux));
      }
      if (shift_active(shape) && l < shape.levels) {
        has_shift = true;
        shift = kernels::similarity_shift(alpha, rho, ii, shape.kappa);
      }
    }

    std::vector<double> fresh(shape.n);
    kernels::responsibility_row(s, alpha, tau, fresh);
    kernels::damp(rho, fresh, shape.lambda, fresh);

    constexpr auto node = Orientation::NodeBased;
    out.push_back(vector_record(node, l, Tag::S, i, s));
    out.push_back(vector_record(node, l, Tag::Alpha, i, alpha));
    out.push_back(vector_record(node, l, Tag::Rho, i, std::move(fresh)));
    out.push_back(scalar_record(node, l, Tag::Tau, i, tau));
    out.push_back(scalar_record(node, l, Tag::Phi, i, phi));
    out.push_back(scalar_record(node, l, Tag::C, i, c));
    if (has_shift) out.push_back(scalar_record(node, l, Tag::Aux, i, shift));
  };
  return job;
}

HapJob job2_alpha_phi(const JobShape& shape) {
  check_shape(shape);
  HapJob job;
  job.name = "job2-it" + std::to_string(shape.iteration);
  const bool shifting = shift_active(shape);

  job.mapper = [shape, shifting](const KeyedRecord& rec, Em& em) {
    require_orientation(rec, Orientation::NodeBased);
    const int l = rec.key.level;
    const int i = rec.key.index;
    if (rec.key.tag == Tag::Aux) {
      if (!shifting || l >= shape.levels) throw Error(ErrorCode::ShapeMismatch, "unexpected aux record");
      const auto* sp = std::get_if<ScalarPayload>(&rec.value);
      if (sp == nullptr) throw Error(ErrorCode::ShapeMismatch, "aux record without scalar payload");
      for (std::size_t j = 0; j < shape.n; ++j) {
        em.emit({l + 1, static_cast<int>(j)}, {ValueKind::SimShift, i, sp->value});
      }
      return;
    }
    if (is_matrix_tag(rec.key.tag)) {
      const auto& row = vector_payload(rec, shape.n);
      const ValueKind kind = kind_of(rec.key.tag);
      for (std::size_t j = 0; j < shape.n; ++j) em.emit({l, static_cast<int>(j)}, {kind, i, row[j]});
      if (l > 1 && (rec.key.tag == Tag::Alpha || rec.key.tag == Tag::S)) {
        const ValueKind up = rec.key.tag == Tag::Alpha ? ValueKind::PhiAlpha : ValueKind::PhiSimilarity;
        for (std::size_t k = 0; k < shape.n; ++k) em.emit({l - 1, i}, {up, static_cast<int>(k), row[k]});
      }
      if (shifting && l < shape.levels && rec.key.tag == Tag::S) {
        for (std::size_t j = 0; j < shape.n; ++j) {
          em.emit({l + 1, static_cast<int>(j)}, {ValueKind::SimBelow, i, row[j]});
        }
      }
      return;
    }
    emit_vector_tensor(rec, shape.n, em, [](int, double) {});
  };

  job.reducer = [shape, shifting](const Key& key, std::span<const Value> values, Out& out) {
    const Gathered g(key, values, shape.n);
    const int l = key.level;
    const int j = key.index;
    const auto jj = static_cast<std::size_t>(j);
    const auto& rho = g.full(ValueKind::Rho);
    const auto& alpha = g.full(ValueKind::Alpha);
    const double c = g.scalar(ValueKind::C);
    const double tau = g.scalar(ValueKind::Tau);
    g.scalar(ValueKind::Phi);  // required even though it is recomputed

    const double phi =
        l < shape.levels ? kernels::phi_prev(g.full(ValueKind::PhiAlpha, ErrorCode::MissingAux),
                                             g.full(ValueKind::PhiSimilarity, ErrorCode::MissingAux))
                         : 0.0;

    std::vector<double> fresh(shape.n);
    kernels::availability_column(rho, jj, c, phi, fresh);
    kernels::damp(alpha, fresh, shape.lambda, fresh);

    std::vector<double> s_col;
    if (shifting && l > 1) {
      const auto& below = g.full(ValueKind::SimBelow, ErrorCode::MissingAux);
      const auto& shift = g.full(ValueKind::SimShift, ErrorCode::MissingAux);
      s_col.resize(shape.n);
      for (std::size_t i = 0; i < shape.n; ++i) s_col[i] = kernels::shifted_similarity(below[i], shift[i]);
    } else {
      s_col = g.full(ValueKind::S);
    }

    constexpr auto ex = Orientation::ExemplarBased;
    out.push_back(vector_record(ex, l, Tag::S, j, std::move(s_col)));
    out.push_back(vector_record(ex, l, Tag::Alpha, j, std::move(fresh)));
    out.push_back(vector_record(ex, l, Tag::Rho, j, rho));
    out.push_back(scalar_record(ex, l, Tag::Tau, j, tau));
    out.push_back(scalar_record(ex, l, Tag::Phi, j, phi));
    out.push_back(scalar_record(ex, l, Tag::C, j, c));
  };
  return job;
}

HapJob job3_extract(const JobShape& shape) {
  check_shape(shape);
  HapJob job;
  job.name = "job3-extract";

  job.mapper = [shape](const KeyedRecord& rec, Em& em) {
    require_orientation(rec, Orientation::ExemplarBased);
    if (rec.key.tag != Tag::Alpha && rec.key.tag != Tag::Rho) return;
    const auto& col = vector_payload(rec, shape.n);
    const ValueKind kind = kind_of(rec.key.tag);
    for (std::size_t i = 0; i < shape.n; ++i) {
      em.emit({rec.key.level, static_cast<int>(i)}, {kind, rec.key.index, col[i]});
    }
  };

  job.reducer = [shape](const Key& key, std::span<const Value> values, Out& out) {
    const Gathered g(key, values, shape.n);
    const auto e = kernels::extract_exemplar(g.full(ValueKind::Alpha), g.full(ValueKind::Rho));
    out.push_back(scalar_record(Orientation::NodeBased, key.level, Tag::Aux, key.index,
                                static_cast<double>(e)));
  };
  return job;
}

AssignmentTable assignments_from_records(std::span<const KeyedRecord> records, int levels,
                                         std::size_t n) {
  AssignmentTable table(levels, n);
  std::vector<unsigned char> seen(static_cast<std::size_t>(levels) * n, 0);
  for (const auto& rec : records) {
    const auto* sp = std::get_if<ScalarPayload>(&rec.value);
    if (rec.key.tag != Tag::Aux || sp == nullptr) continue;
    const int l = rec.key.level;
    const int i = rec.key.index;
    if (l < 1 || l > levels || i < 0 || static_cast<std::size_t>(i) >= n) {
      throw Error(ErrorCode::ShapeMismatch, "assignment record out of range");
    }
    table.set(l, static_cast<std::size_t>(i), static_cast<int>(sp->value));
    seen[static_cast<std::size_t>(l - 1) * n + static_cast<std::size_t>(i)] = 1;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::MissingRecord, "no assignment for (" + std::to_string(k % n) + "," +
                                                std::to_string(k / n + 1) + ")");
    }
  }
  return table;
}

std::string format_timings(std::span<const JobTiming> timings) {
  std::ostringstream os;
  for (const auto& t : timings) os << t.iteration << '\t' << t.job << '\t' << t.wall_ms << '\n';
  return os.str();
}

namespace {

std::string describe_run(const SimilarityTensor& s, const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : s.values().data()) {
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << "levels\t" << cfg.levels << '\n'
     << "n\t" << s.n() << '\n'
     << "iterations\t" << cfg.iterations << '\n'
     << "lambda\t" << std::bit_cast<std::uint64_t>(cfg.lambda.value()) << '\n'
     << "kappa\t" << (cfg.kappa.enabled() ? std::to_string(std::bit_cast<std::uint64_t>(cfg.kappa.value()))
                                          : std::string("off"))
     << '\n'
     << "similarity\t" << h << '\n';
  return os.str();
}

fs::path private_spill_dir() {
  static std::atomic<unsigned> counter{0};
  return fs::temp_directory_path() /
         ("hap-spill-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

// Drops boundary directories from an earlier run: names start with four digits and a dash.
void clear_boundaries(const fs::path& dir) {
  std::error_code ec;
  std::vector<fs::path> doomed;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    const std::string name = it->path().filename().string();
    const bool boundary = name.size() > 5 && name[4] == '-' &&
                          std::all_of(name.begin(), name.begin() + 4, [](char ch) { return ch >= '0' && ch <= '9'; });
    if (boundary || name == "seed" || name == "seed.tmp") doomed.push_back(it->path());
  }
  for (const auto& p : doomed) fs::remove_all(p, ec);
}

struct TempDirGuard {
  fs::path path;
  ~TempDirGuard() {
    if (!path.empty()) {
      std::error_code ec;
      fs::remove_all(path, ec);
    }
  }
};

}  // namespace

DriveResult drive(const SimilarityTensor& s, const RunConfig& cfg, const DriveOptions& options) {
  cfg.validate();
  if (cfg.engine != Engine::MapReduce) {
    throw Error(ErrorCode::InvalidConfig, "drive needs engine = mapreduce");
  }
  if (cfg.levels != s.levels()) {
    throw Error(ErrorCode::ShapeMismatch, "config asks for " + std::to_string(cfg.levels) +
                                              " levels, similarity tensor has " +
                                              std::to_string(s.levels()));
  }

  TempDirGuard guard;
  fs::path spill = options.spill_dir;
  if (spill.empty()) {
    if (options.resume) throw Error(ErrorCode::InvalidConfig, "resume needs a spill directory");
    spill = private_spill_dir();
    guard.path = spill;
  }
  std::error_code ec;
  fs::create_directories(spill, ec);
  if (ec) throw Error(ErrorCode::SpillIOFailure, spill.string() + ": " + ec.message());

  const std::string description = describe_run(s, cfg);
  const fs::path run_file = spill / "run-config";
  if (options.resume) {
    std::ifstream in(run_file);
    std::stringstream stored;
    stored << in.rdbuf();
    if (!in || stored.str() != description) {
      throw Error(ErrorCode::InvalidConfig,
                  "spill directory " + spill.string() + " belongs to a different run");
    }
  } else {
    clear_boundaries(spill);
    std::ofstream out(run_file, std::ios::trunc);
    out << description;
    if (!out) throw Error(ErrorCode::SpillIOFailure, run_file.string() + ": cannot write");
  }

  WorkerPool pool(cfg.workers);
  const fs::path seed_dir = spill / "seed";
  if (!spill_set_complete(seed_dir)) {
    const auto seed = to_records(MessageState::initial(s), Orientation::ExemplarBased);
    write_spill_set(seed_dir, seed, pool);
  }
  const std::vector<KeyedRecord> input = read_spill_set(seed_dir, pool);

  std::vector<HapJob> jobs;
  JobShape shape{cfg.levels, s.n(), 1, cfg.lambda, cfg.kappa};
  for (int t = 1; t <= cfg.iterations; ++t) {
    shape.iteration = t;
    jobs.push_back(job1_rho_c_tau(shape));
    jobs.push_back(job2_alpha_phi(shape));
  }
  jobs.push_back(job3_extract(shape));

  ChainOptions chain_options;
  chain_options.spill_dir = spill;
  chain_options.resume = options.resume;
  chain_options.after_job = [&](std::size_t index, const std::string& name) {
    if (options.on_iteration && index % 2 == 1) {
      const auto records = read_spill_set(boundary_dir(spill, index, name), pool);
      options.on_iteration(
          from_records(records, Orientation::ExemplarBased, static_cast<int>(index / 2) + 1));
    }
    if (options.after_job) options.after_job(index, name);
  };

  ChainOutput result = chain<IntermediateKey, IntermediateValue>(jobs, input, pool, chain_options);

  DriveResult out;
  const std::size_t last_job2 = jobs.size() - 2;
  out.state = from_records(read_spill_set(boundary_dir(spill, last_job2, jobs[last_job2].name), pool),
                           Orientation::ExemplarBased, cfg.iterations);
  out.assignments = assignments_from_records(result.records, cfg.levels, s.n());

  std::size_t r = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (std::find(result.report.skipped.begin(), result.report.skipped.end(), k) !=
        result.report.skipped.end()) {
      continue;
    }
    const int iteration = k + 1 == jobs.size() ? 0 : static_cast<int>(k / 2) + 1;
    const std::string job = k + 1 == jobs.size() ? "job3" : (k % 2 == 0 ? "job1" : "job2");
    out.timings.push_back({iteration, job, result.report.jobs[r++].wall_ms});
  }
  out.report = std::move(result.report);
  return out;
}

}  // namespace hap::mr
