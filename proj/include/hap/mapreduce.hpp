#pragma once

// Embedded map/shuffle/reduce runtime.
//
// A job maps every input KeyedRecord to (intermediate key, value) pairs,
// groups them by key and hands each group to the reducer. Output is a pure
// function of the input: mapper inputs are split into contiguous blocks,
// intermediate pairs are hash-partitioned by key, and every value group is
// sorted into a canonical total order before the reducer sees it. Final
// output is sorted by RecordKey. The worker count never changes a result.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "hap/error.hpp"
#include "hap/tensors.hpp"

namespace hap::mr {

// Fixed-size pool. run() blocks until every task finished and rethrows the
// exception of the lowest-numbered failing task.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const noexcept { return workers_; }
  void run(std::size_t tasks, const std::function<void(std::size_t)>& fn);

 private:
  void worker_loop();

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* fn_ = nullptr;
  std::size_t tasks_ = 0;
  std::size_t next_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  bool stopping_ = false;
  std::vector<std::exception_ptr> errors_;
};

template <class K>
struct KeyHash {
  std::size_t operator()(const K& k) const noexcept { return std::hash<K>{}(k); }
};

template <class K>
std::string describe_key(const K& k) {
  if constexpr (std::is_convertible_v<const K&, std::string>) {
    return std::string(k);
  } else if constexpr (std::is_arithmetic_v<K>) {
    return std::to_string(k);
  } else {
    return to_string(k);  // ADL
  }
}

template <class K, class V>
class Emitter {
 public:
  Emitter(std::vector<std::vector<std::pair<K, V>>>& partitions) : partitions_(partitions) {}

  void emit(const K& key, const V& value) {
    partitions_[KeyHash<K>{}(key) % partitions_.size()].emplace_back(key, value);
    ++count_;
  }
  std::size_t count() const noexcept { return count_; }

 private:
  std::vector<std::vector<std::pair<K, V>>>& partitions_;
  std::size_t count_ = 0;
};

template <class K, class V>
struct JobSpec {
  std::string name;
  std::function<void(const KeyedRecord&, Emitter<K, V>&)> mapper;
  std::function<void(const K&, std::span<const V>, std::vector<KeyedRecord>&)> reducer;
};

struct JobReport {
  std::string name;
  std::size_t map_tasks = 0;
  std::size_t reduce_tasks = 0;
  std::size_t records_in = 0;
  std::size_t intermediate = 0;
  std::size_t groups = 0;
  std::size_t records_out = 0;
  double wall_ms = 0.0;

  // Tab-separated `field value` lines.
  std::string to_text() const;
};

struct JobOutput {
  std::vector<KeyedRecord> records;
  JobReport report;
};

template <class K, class V>
JobOutput execute(const JobSpec<K, V>& job, std::span<const KeyedRecord> input, WorkerPool& pool) {
  using Pair = std::pair<K, V>;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t partitions = static_cast<std::size_t>(pool.size());
  const std::size_t map_tasks = std::min(partitions, std::max<std::size_t>(input.size(), 1));

  // map: buffers[task][partition]
  std::vector<std::vector<std::vector<Pair>>> buffers(
      map_tasks, std::vector<std::vector<Pair>>(partitions));
  std::vector<std::size_t> emitted(map_tasks, 0);
  pool.run(map_tasks, [&](std::size_t t) {
    const std::size_t lo = input.size() * t / map_tasks;
    const std::size_t hi = input.size() * (t + 1) / map_tasks;
    Emitter<K, V> em(buffers[t]);
    for (std::size_t r = lo; r < hi; ++r) {
      try {
        job.mapper(input[r], em);
      } catch (const std::exception& e) {
        const RecordKey& k = input[r].key;
        throw Error(ErrorCode::MapperFailure,
                    job.name + " record (" + std::to_string(k.index) + "," + std::to_string(k.level) +
                        "," + std::string(to_string(k.tag)) + "): " + e.what());
      }
    }
    emitted[t] = em.count();
  });

  // shuffle + reduce, one task per partition
  std::vector<std::vector<KeyedRecord>> outputs(partitions);
  std::vector<std::size_t> group_counts(partitions, 0);
  pool.run(partitions, [&](std::size_t p) {
    std::size_t total = 0;
    for (const auto& task : buffers) total += task[p].size();
    std::vector<Pair> pairs;
    pairs.reserve(total);
    for (auto& task : buffers) {
      pairs.insert(pairs.end(), std::make_move_iterator(task[p].begin()),
                   std::make_move_iterator(task[p].end()));
      std::vector<Pair>().swap(task[p]);
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.first < b.first) return true;
      if (b.first < a.first) return false;
      return a.second < b.second;
    });
    std::vector<V> group;
    std::size_t g = 0;
    while (g < pairs.size()) {
      std::size_t end = g;
      group.clear();
      while (end < pairs.size() && !(pairs[g].first < pairs[end].first)) {
        group.push_back(pairs[end].second);
        ++end;
      }
      try {
        job.reducer(pairs[g].first, group, outputs[p]);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::ReducerFailure,
                    job.name + " key " + describe_key(pairs[g].first) + ": " + e.what());
      }
      ++group_counts[p];
      g = end;
    }
  });

  JobOutput out;
  std::size_t total_out = 0;
  for (const auto& o : outputs) total_out += o.size();
  out.records.reserve(total_out);
  for (auto& o : outputs) {
    out.records.insert(out.records.end(), std::make_move_iterator(o.begin()),
                       std::make_move_iterator(o.end()));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const KeyedRecord& a, const KeyedRecord& b) { return a.key < b.key; });
  for (std::size_t r = 1; r < out.records.size(); ++r) {
    if (out.records[r - 1].key == out.records[r].key) {
      const RecordKey& k = out.records[r].key;
      throw Error(ErrorCode::DuplicateKey, job.name + " emitted (" + std::to_string(k.index) + "," +
                                               std::to_string(k.level) + "," +
                                               std::string(to_string(k.tag)) + ") twice");
    }
  }

  out.report.name = job.name;
  out.report.map_tasks = map_tasks;
  out.report.reduce_tasks = partitions;
  out.report.records_in = input.size();
  for (std::size_t e : emitted) out.report.intermediate += e;
  for (std::size_t c : group_counts) out.report.groups += c;
  out.report.records_out = out.records.size();
  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Spill sets: a directory of `part-NNNNN` files in the spill line format
// plus a `_SUCCESS` marker. Records are split into contiguous chunks of the
// canonical order, so the files do not depend on the worker count. The
// directory is written under a temporary name and renamed when complete.
void write_spill_set(const std::filesystem::path& dir, std::span<const KeyedRecord> records,
                     WorkerPool& pool);
std::vector<KeyedRecord> read_spill_set(const std::filesystem::path& dir, WorkerPool& pool);
bool spill_set_complete(const std::filesystem::path& dir);

struct ChainOptions {
  std::filesystem::path spill_dir;
  // Skip every job whose spill set is already complete and continue from the
  // latest one.
  bool resume = false;
  // Called after job `index` has been persisted.
  std::function<void(std::size_t index, const std::string& name)> after_job;
};

struct ChainReport {
  std::vector<JobReport> jobs;  // per executed job; wall_ms includes spill I/O
  std::vector<std::size_t> skipped;  // indices restored from spill sets
  double total_ms = 0.0;

  std::string to_text() const;
};

struct ChainOutput {
  std::vector<KeyedRecord> records;
  ChainReport report;
};

// Directory holding job `index`'s output inside the chain's spill directory.
std::filesystem::path boundary_dir(const std::filesystem::path& spill_dir, std::size_t index,
                                   const std::string& job_name);

template <class K, class V>
ChainOutput chain(std::span<const JobSpec<K, V>> jobs, std::span<const KeyedRecord> input,
                  WorkerPool& pool, const ChainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ChainOutput out;
  std::size_t first = 0;
  std::vector<KeyedRecord> current;
  bool have_current = false;

  if (options.resume) {
    for (std::size_t k = jobs.size(); k-- > 0;) {
      if (spill_set_complete(boundary_dir(options.spill_dir, k, jobs[k].name))) {
        first = k + 1;
        break;
      }
    }
    for (std::size_t k = 0; k < first; ++k) out.report.skipped.push_back(k);
    if (first > 0) {
      current = read_spill_set(boundary_dir(options.spill_dir, first - 1, jobs[first - 1].name), pool);
      have_current = true;
    }
  }

  for (std::size_t k = first; k < jobs.size(); ++k) {
    const auto job_start = std::chrono::steady_clock::now();
    JobOutput result;
    try {
      result = execute(jobs[k], have_current ? std::span<const KeyedRecord>(current) : input, pool);
      const auto dir = boundary_dir(options.spill_dir, k, jobs[k].name);
      write_spill_set(dir, result.records, pool);
      current = read_spill_set(dir, pool);
    } catch (const Error& e) {
      throw Error(e.code(), "job " + jobs[k].name + ": " + e.message());
    }
    have_current = true;
    result.report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - job_start).count();
    out.report.jobs.push_back(std::move(result.report));
    if (options.after_job) options.after_job(k, jobs[k].name);
  }

  out.records = have_current ? std::move(current)
                             : std::vector<KeyedRecord>(input.begin(), input.end());
  out.report.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace hap::mr
