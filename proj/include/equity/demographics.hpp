#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equity/gtfs.hpp"
#include "equity/profiles.hpp"

namespace equity {

inline constexpr double kDefaultLowIncomeThresholdDollars = 43'500.0;

// On-board survey aggregates: rail rows keyed by station stop id, bus rows keyed
// by route id.
struct SurveyTable {
  std::map<std::string, DemographicShares> rail_rows;
  std::map<std::string, DemographicShares> bus_rows;
  // Household income below which a respondent counts as low income. Carried for
  // documentation; the survey files already hold the resulting shares.
  double low_income_threshold_dollars = kDefaultLowIncomeThresholdDollars;
};

struct SurveyReject {
  std::string file;  // "rail" or "bus"
  std::string key;   // stop_id or route_id
  std::string reason;
  std::string detail;
};

struct SurveyLoad {
  SurveyTable table;
  std::vector<SurveyReject> rejects;
};

// Schema: <key>,respondents,low_income_share,p_home_work,p_home_other,p_other,
//         p_home_social,p_home_school   where <key> is stop_id or route_id.
SurveyLoad load_survey(const std::filesystem::path& rail_path, const std::filesystem::path& bus_path);
SurveyLoad parse_survey(std::string_view rail_text, std::string_view bus_text);
std::string format_survey_rows(const std::map<std::string, DemographicShares>& rows, std::string_view key_column);

inline constexpr double kPurposeSumTolerance = 1e-6;

// Shares for one stop: the station row when present, otherwise the
// respondent-weighted mean over every surveyed bus route serving the stop.
// Returns nullopt when neither exists. Throws LookupError for unknown stops.
std::optional<DemographicShares> stop_shares(const SurveyTable& survey, const TransitNetwork& network,
                                             const std::string& stop_id);

struct StopShares {
  std::map<std::string, DemographicShares> shares;
  std::vector<std::string> no_demographics;
};

StopShares materialize_stop_shares(const SurveyTable& survey, const TransitNetwork& network);

enum class IncomeClass { high_income, middle, low_income };

const char* to_string(IncomeClass c);

struct IncomeCuts {
  double low_cut = 0.25;   // below: high income
  double high_cut = 0.50;  // above: low income
};

// Strict inequalities at both cuts. Throws std::invalid_argument unless
// 0 <= low_cut < high_cut <= 1.
IncomeClass classify_income(double low_income_share, const IncomeCuts& cuts = {});

}  // namespace equity
