#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imdp/config.hpp"
#include "imdp/experiments.hpp"
#include "json.hpp"

namespace imdp::exp {

/// Column order of the results file.
const std::vector<std::string>& result_columns();

/// Hex SHA-256 of the canonical (sorted-key, compact) config document.
/// evaluation.jobs is left out: it changes speed, not results.
std::string config_hash(const ExperimentConfig& cfg);

/// Doubles are written in shortest round-trip form, so import(export(t)) == t.
std::string results_to_csv(const ResultsTable& table);
ResultsTable results_from_csv(const std::string& text);
/// Long format: condition_id, task, team, mode, metric, value.
std::string results_to_long_csv(const ResultsTable& table);

nlohmann::json sidecar(const ExperimentConfig& cfg, const ResultsTable& table, const std::string& command);

/// File helpers; failures throw IoError naming the path.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace imdp::exp
