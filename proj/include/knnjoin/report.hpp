#pragma once

#include <filesystem>

#include <json.hpp>

#include "knnjoin/orchestrator.hpp"

namespace knnjoin {

using Json = nlohmann::ordered_json;

// Structured run report with stable key order. Everything outside the
// "timings" and "load_balance" subtrees is a pure function of
// (input bytes, config, seed); those two carry measured wall clock values.
Json make_run_report(const Dataset& original, const RunConfig& cfg, const KnnRunResult& result);

// Report with the measured-time subtrees removed, for diffing runs.
Json deterministic_view(Json report);

void write_report(const Json& report, const std::filesystem::path& path);

}  // namespace knnjoin
