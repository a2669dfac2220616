#pragma once

#include <string>
#include <vector>

#include "kerrsim/config.hpp"

namespace kerrsim {

// Flat table plus the two companion documents: metadata_json holds only
// seed-deterministic content (config echo, version, fit parameters, derived
// quantities), timing_json holds wall-clock data and the worker count, so
// every emitted file except *.timing.json is byte-stable for a fixed seed
// across runs and worker counts.
struct ResultRecord {
  std::string command;
  std::vector<std::string> columns;           // header cells, units embedded
  std::vector<std::vector<double>> rows;
  std::string metadata_json;
  std::string timing_json;
};

// Dispatches the campaign to the experiments module. workers = 0 means
// hardware concurrency; overrides replace the config's seed/output dir.
ResultRecord run(const CampaignConfig& config, int workers = 0);

// Writes <prefix>_<command>.csv (header row; reals at 17 significant
// digits, round-tripping exactly), .metadata.json, and .timing.json under
// dir. Returns the csv path. Throws IoError on unwritable paths.
std::string emit_table(const ResultRecord& result, const std::string& dir,
                       const std::string& prefix);

}  // namespace kerrsim
