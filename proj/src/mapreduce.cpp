#include "hap/mapreduce.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "hap/spill.hpp"

namespace fs = std::filesystem;

namespace hap::mr {
namespace {

constexpr std::size_t kSpillParts = 8;
constexpr const char* kSuccessMarker = "_SUCCESS";

std::string part_name(std::size_t p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "part-%05zu", p);
  return buf;
}

[[noreturn]] void spill_failure(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::SpillIOFailure, path.string() + ": " + what);
}

}  // namespace

WorkerPool::WorkerPool(int workers) : workers_(workers) {
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  // the calling thread is never a worker; with one worker tasks run inline
  if (workers > 1) {
    threads_.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads_.emplace_back([this] { worker_loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::worker_loop() {
  std::size_t seen = 0;
  std::unique_lock lock(mu_);
  for (;;) {
    work_cv_.wait(lock, [&] { return stopping_ || (generation_ != seen && next_ < tasks_); });
    if (stopping_) return;
    while (next_ < tasks_) {
      const std::size_t task = next_++;
      const auto* fn = fn_;
      lock.unlock();
      std::exception_ptr err;
      try {
        (*fn)(task);
      } catch (...) {
        err = std::current_exception();
      }
      lock.lock();
      if (err) errors_[task] = err;
      if (++finished_ == tasks_) done_cv_.notify_all();
    }
    seen = generation_;
  }
}

void WorkerPool::run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
  if (tasks == 0) return;
  if (threads_.empty()) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::unique_lock lock(mu_);
  fn_ = &fn;
  tasks_ = tasks;
  next_ = 0;
  finished_ = 0;
  errors_.assign(tasks, nullptr);
  ++generation_;
  work_cv_.notify_all();
  done_cv_.wait(lock, [&] { return finished_ == tasks_; });
  tasks_ = 0;
  fn_ = nullptr;
  for (auto& e : errors_) {
    if (e) {
      auto first = e;
      errors_.clear();
      std::rethrow_exception(first);
    }
  }
}

std::string JobReport::to_text() const {
  std::ostringstream os;
  os << "job\t" << name << '\n'
     << "map_tasks\t" << map_tasks << '\n'
     << "reduce_tasks\t" << reduce_tasks << '\n'
     << "records_in\t" << records_in << '\n'
     << "intermediate\t" << intermediate << '\n'
     << "groups\t" << groups << '\n'
     << "records_out\t" << records_out << '\n'
     << "wall_ms\t" << wall_ms << '\n';
  return os.str();
}

std::string ChainReport::to_text() const {
  std::ostringstream os;
  for (const auto& j : jobs) os << j.to_text() << '\n';
  os << "skipped\t" << skipped.size() << '\n' << "total_ms\t" << total_ms << '\n';
  return os.str();
}

fs::path boundary_dir(const fs::path& spill_dir, std::size_t index, const std::string& job_name) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu-", index);
  return spill_dir / (buf + job_name);
}

bool spill_set_complete(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / kSuccessMarker, ec);
}

void write_spill_set(const fs::path& dir, std::span<const KeyedRecord> records, WorkerPool& pool) {
  fs::path tmp = dir;
  tmp += ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::remove_all(dir, ec);
  if (!fs::create_directories(tmp, ec) && ec) spill_failure(tmp, ec.message());

  pool.run(kSpillParts, [&](std::size_t p) {
    const std::size_t lo = records.size() * p / kSpillParts;
    const std::size_t hi = records.size() * (p + 1) / kSpillParts;
    write_spill_file(tmp / part_name(p), records.subspan(lo, hi - lo));
  });
  {
    std::ofstream marker(tmp / kSuccessMarker);
    if (!marker) spill_failure(tmp / kSuccessMarker, "cannot create marker");
  }
  fs::rename(tmp, dir, ec);
  if (ec) spill_failure(dir, ec.message());
}

std::vector<KeyedRecord> read_spill_set(const fs::path& dir, WorkerPool& pool) {
  if (!spill_set_complete(dir)) spill_failure(dir, "spill set incomplete or missing");
  std::vector<fs::path> parts;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->path().filename().string().rfind("part-", 0) == 0) parts.push_back(it->path());
  }
  if (ec) spill_failure(dir, ec.message());
  std::sort(parts.begin(), parts.end());

  std::vector<std::vector<KeyedRecord>> chunks(parts.size());
  pool.run(parts.size(), [&](std::size_t p) { chunks[p] = read_spill_file(parts[p]); });
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  std::vector<KeyedRecord> out;
  out.reserve(total);
  for (auto& c : chunks) {
    out.insert(out.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return out;
}

}  // namespace hap::mr
