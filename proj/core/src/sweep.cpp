#include "attnca/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace nca {

std::vector<RunRecord> load_records(const std::filesystem::path& jsonl_path) {
  std::vector<RunRecord> records;
  std::ifstream is(jsonl_path);
  if (!is) return records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    records.push_back(run_record_from_json(line));
  }
  return records;
}

void save_records(const std::filesystem::path& jsonl_path, const std::vector<RunRecord>& records) {
  std::ofstream os(jsonl_path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_records: cannot open " + jsonl_path.string());
  for (const auto& r : records) os << to_json_line(r) << '\n';
}

std::vector<RunRecord> run_condition_sweep(const std::vector<std::string>& conditions,
                                           const std::vector<std::uint64_t>& seeds, int parallelism,
                                           const std::filesystem::path& out_dir, const SweepRunFn& run) {
  std::filesystem::create_directories(out_dir);
  const auto records_path = out_dir / "runs.jsonl";

  std::vector<RunRecord> records = load_records(records_path);
  std::set<std::pair<std::string, std::uint64_t>> done;
  for (const auto& r : records) done.insert({r.condition, r.seed});

  struct Job {
    std::string condition;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& c : conditions)
    for (auto s : seeds)
      if (!done.count({c, s})) jobs.push_back({c, s});

  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      Job job;
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size()) return;
        job = jobs[next++];
      }
      RunRecord rec;
      try {
        rec = run(job.condition, job.seed, out_dir);
      } catch (const std::exception& e) {
        rec.condition = job.condition;
        rec.seed = job.seed;
        rec.error = e.what();
      }
      std::lock_guard lock(mu);
      records.push_back(std::move(rec));
    }
  };

  const int n_workers = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.condition != b.condition) return a.condition < b.condition;
    return a.seed < b.seed;
  });
  save_records(records_path, records);
  return records;
}

}  // namespace nca
