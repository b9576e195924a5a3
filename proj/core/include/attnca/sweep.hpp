#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "attnca/run_record.hpp"

namespace nca {

/// Runs one (condition, seed) job; may write per-run artifacts (checkpoints,
/// curves) under out_dir. Must be safe to call from worker threads.
using SweepRunFn =
    std::function<RunRecord(const std::string& condition, std::uint64_t seed, const std::filesystem::path& out_dir)>;

/// Launches the cross product of conditions and seeds over a worker pool.
/// Existing records in out_dir/runs.jsonl are kept and their jobs skipped;
/// the merged result is rewritten sorted by (condition, seed), so the output
/// set does not depend on the parallelism degree. A job that throws is
/// recorded as a failed run and the sweep continues.
std::vector<RunRecord> run_condition_sweep(const std::vector<std::string>& conditions,
                                           const std::vector<std::uint64_t>& seeds, int parallelism,
                                           const std::filesystem::path& out_dir, const SweepRunFn& run);

std::vector<RunRecord> load_records(const std::filesystem::path& jsonl_path);
void save_records(const std::filesystem::path& jsonl_path, const std::vector<RunRecord>& records);

}  // namespace nca
