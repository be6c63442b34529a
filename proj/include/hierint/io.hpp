#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hierint/bench.hpp"
#include "hierint/errors.hpp"
#include "hierint/interaction.hpp"
#include "hierint/penalty.hpp"
#include "hierint/solver.hpp"

namespace hierint {

// Shortest round-trip decimal rendering. All serialized numbers go through
// this so identical inputs produce byte-identical files.
std::string format_double(double x);

struct Dataset {
  Mat x;                           // main-effect columns, file order
  Vec y;                           // response (length 0 when none requested)
  std::vector<std::string> names;  // header names of the x columns
};

// Header row required; all remaining rows numeric. When `response` is
// non-empty that column becomes y and is removed from x. Shape problems,
// unreadable files, and non-numeric cells raise DataError.
Dataset read_dataset(const std::string& path, const std::string& response);

void write_dataset_csv(std::ostream& os, const Mat& x, const std::vector<std::string>& names,
                       const Vec* y, const std::string& response_name);

// Column names of an expanded design: mains keep their input names, product
// columns join the two parents with ':'.
std::vector<std::string> expanded_column_names(const std::vector<std::string>& main_names);

std::string rate_csv_header();
void write_rate_rows(std::ostream& os, const std::vector<RateRow>& rows);

nlohmann::json penalty_to_json(const PenaltySpec& spec);
PenaltySpec penalty_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const FitResult& fit, const PenaltySpec& spec,
                           const InteractionIndex& idx);

nlohmann::json rate_summaries_to_json(const RateResult& result, const ExperimentConfig& cfg);

// Minimal TOML reader covering the config schema: top-level and one-level
// [section] tables, keys bound to strings, numbers, booleans, or flat arrays
// of those. Comments start with '#'. Anything else raises DataError.
nlohmann::json parse_toml(std::istream& is);

// Dispatches on extension: .toml through parse_toml, everything else JSON.
nlohmann::json load_config_file(const std::string& path);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Atomic-ish write: content is rendered fully, then streamed to the path.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace hierint
