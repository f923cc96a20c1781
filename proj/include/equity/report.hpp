#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equity/demographics.hpp"
#include "equity/journeys.hpp"
#include "equity/spatial.hpp"
#include "equity/stats.hpp"

namespace equity {

enum class RegressionDirection {
  low_income_response,  // low_income_share ~ convenience metrics
  metric_response,      // each metric ~ low_income_share
};

struct RunConfig {
  std::filesystem::path gtfs_dir;
  std::filesystem::path legs;
  std::filesystem::path survey_rail;
  std::filesystem::path survey_bus;
  std::filesystem::path areas;
  std::filesystem::path output_dir;
  double buffer_feet = kDefaultBufferFeet;
  AreaLevel level = AreaLevel::block;
  IncomeCuts cuts;
  std::string period;
  RegressionDirection direction = RegressionDirection::low_income_response;
  bool normalize_transfer_wait = false;
  bool ridership_weighted = false;
  double low_income_threshold_dollars = kDefaultLowIncomeThresholdDollars;
};

// Applies one `key=value` setting; relative paths resolve against `base_dir`.
// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

// Plain-text `key=value` lines; `#` starts a comment.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Throws ConfigError naming the first offending field (e.g. "legs").
void validate(const RunConfig& config);

// Every setting that defines the regression specification, i.e. all but the
// legs file, the period label and the output directory.
std::string specification_fingerprint(const RunConfig& config);

struct Coverage {
  std::size_t journeys_input = 0;
  std::size_t journeys_accepted = 0;
  std::size_t journeys_rejected = 0;
  std::size_t stops_with_journeys = 0;
  std::vector<std::pair<std::string, long long>> no_demographics;  // stop, ridership
  std::size_t areas_total = 0;
  std::vector<std::string> uncovered_areas;
  std::vector<AreaReject> invalid_areas;
  std::vector<SurveyReject> survey_rejects;
  std::vector<std::pair<std::string, std::string>> notes;
};

struct RunArtifacts {
  std::filesystem::path output_dir;
  std::vector<AreaProfile> areas;
  std::vector<RegressionResult> regressions;
  std::vector<Reject> rejects;
  Coverage coverage;
  std::vector<std::filesystem::path> files;
};

// ingest -> link -> metrics -> demographics -> buffer aggregation -> regressions,
// writing every output atomically into config.output_dir.
RunArtifacts run_pipeline(const RunConfig& config);

std::string format_area_profiles_csv(const std::vector<AreaProfile>& areas);
std::vector<AreaProfile> parse_area_profiles_csv(std::string_view text);
std::string format_coverage_csv(const Coverage& coverage);

struct ComparisonRow {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double difference = 0.0;             // a - b
  std::optional<double> percent;       // 100 (a - b) / b; empty when b == 0
  std::optional<double> p_a, p_b;      // coefficient comparisons only
  std::optional<double> combined_se;   // sqrt(se_a^2 + se_b^2)
};

struct ComparisonReport {
  std::string label_a;
  std::string label_b;
  std::vector<ComparisonRow> rows;

  const ComparisonRow& row(std::string_view name) const;  // throws LookupError
};

ComparisonReport compare_areas(const AreaProfile& a, const AreaProfile& b);

// Throws SpecificationMismatchError when the two fits use different terms or
// responses.
ComparisonReport compare_periods(const RegressionResult& first, const RegressionResult& second,
                                 std::string label_a = "run1", std::string label_b = "run2");

// Compares `regression_<name>.csv` from two pipeline output directories after
// checking their recorded specifications match.
ComparisonReport compare_periods(const std::filesystem::path& run1, const std::filesystem::path& run2,
                                 const std::string& regression_name = "equity");

std::string format_comparison_csv(const ComparisonReport& report);

}  // namespace equity
