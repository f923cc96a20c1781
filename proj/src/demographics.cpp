#include "equity/demographics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "equity/csv.hpp"
#include "equity/errors.hpp"

namespace equity {
namespace {

constexpr std::array<std::string_view, 7> kValueColumns = {
    "respondents", "low_income_share", "p_home_work", "p_home_other", "p_other", "p_home_social", "p_home_school"};

std::map<std::string, DemographicShares> parse_rows(std::string_view text, const std::string& file,
                                                    std::string_view key_column, std::vector<SurveyReject>& rejects) {
  std::map<std::string, DemographicShares> rows;
  auto table = csv::Table::parse(text);
  if (table.empty_file()) return rows;

  auto key = table.require_column(key_column, file);
  std::array<std::size_t, kValueColumns.size()> col{};
  for (std::size_t i = 0; i < kValueColumns.size(); ++i) col[i] = table.require_column(kValueColumns[i], file);

  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    const std::string id = key < f.size() ? f[key] : std::string{};
    auto reject = [&](std::string why, std::string detail) {
      rejects.push_back({file, id, std::move(why), fmt::format("line {}: {}", row.line, detail)});
    };
    if (f.size() != table.header().size()) {
      reject("field_count", fmt::format("expected {} fields", table.header().size()));
      continue;
    }
    std::array<double, kValueColumns.size()> v{};
    bool ok = true;
    for (std::size_t i = 0; i < v.size() && ok; ++i) {
      auto d = csv::parse_double(f[col[i]]);
      if (!d) {
        reject("parse", fmt::format("bad {} '{}'", kValueColumns[i], f[col[i]]));
        ok = false;
      } else {
        v[i] = *d;
      }
    }
    if (!ok) continue;

    DemographicShares s;
    if (v[0] < 1 || v[0] != std::floor(v[0])) {
      reject("respondents", "respondent count must be a positive integer");
      continue;
    }
    s.respondent_count = static_cast<long long>(v[0]);
    s.low_income_share = v[1];
    double sum = 0.0;
    bool in_range = s.low_income_share >= 0.0 && s.low_income_share <= 1.0;
    for (std::size_t p = 0; p < kPurposeCount; ++p) {
      s.purpose_shares[p] = v[2 + p];
      in_range = in_range && v[2 + p] >= 0.0 && v[2 + p] <= 1.0;
      sum += v[2 + p];
    }
    if (!in_range) {
      reject("share_range", "share outside [0,1]");
      continue;
    }
    if (std::abs(sum - 1.0) > kPurposeSumTolerance) {
      reject("purpose_sum", fmt::format("purpose shares sum to {}", sum));
      continue;
    }
    if (!rows.emplace(id, s).second) reject("duplicate", "duplicate key");
  }
  return rows;
}

std::string slurp(const std::filesystem::path& path, const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(name, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SurveyLoad parse_survey(std::string_view rail_text, std::string_view bus_text) {
  SurveyLoad out;
  out.table.rail_rows = parse_rows(rail_text, "rail", "stop_id", out.rejects);
  out.table.bus_rows = parse_rows(bus_text, "bus", "route_id", out.rejects);
  return out;
}

SurveyLoad load_survey(const std::filesystem::path& rail_path, const std::filesystem::path& bus_path) {
  return parse_survey(slurp(rail_path, "survey_rail"), slurp(bus_path, "survey_bus"));
}

std::string format_survey_rows(const std::map<std::string, DemographicShares>& rows, std::string_view key_column) {
  std::string out = fmt::format("{},respondents,low_income_share,p_home_work,p_home_other,p_other,p_home_social,p_home_school\n",
                                key_column);
  for (const auto& [id, s] : rows) {
    out += csv::escape(id) + fmt::format(",{},{:.17g}", s.respondent_count, s.low_income_share);
    for (double p : s.purpose_shares) out += fmt::format(",{:.17g}", p);
    out += '\n';
  }
  return out;
}

std::optional<DemographicShares> stop_shares(const SurveyTable& survey, const TransitNetwork& network,
                                             const std::string& stop_id) {
  if (!network.stops().count(stop_id)) throw LookupError("unknown stop " + stop_id);
  if (auto it = survey.rail_rows.find(stop_id); it != survey.rail_rows.end()) return it->second;

  double weight = 0.0, low = 0.0;
  std::array<double, kPurposeCount> purpose{};
  long long respondents = 0;
  for (const auto& route_id : network.routes_serving(stop_id)) {
    auto it = survey.bus_rows.find(route_id);
    if (it == survey.bus_rows.end()) continue;
    const auto& s = it->second;
    const double w = static_cast<double>(s.respondent_count);
    weight += w;
    respondents += s.respondent_count;
    low += w * s.low_income_share;
    for (std::size_t p = 0; p < kPurposeCount; ++p) purpose[p] += w * s.purpose_shares[p];
  }
  if (respondents == 0) return std::nullopt;

  DemographicShares out;
  out.respondent_count = respondents;
  out.low_income_share = low / weight;
  for (std::size_t p = 0; p < kPurposeCount; ++p) out.purpose_shares[p] = purpose[p] / weight;
  return out;
}

StopShares materialize_stop_shares(const SurveyTable& survey, const TransitNetwork& network) {
  StopShares out;
  for (const auto& [stop_id, stop] : network.stops()) {
    if (auto s = stop_shares(survey, network, stop_id))
      out.shares.emplace(stop_id, *s);
    else
      out.no_demographics.push_back(stop_id);
  }
  return out;
}

const char* to_string(IncomeClass c) {
  switch (c) {
    case IncomeClass::high_income:
      return "high_income";
    case IncomeClass::middle:
      return "middle";
    case IncomeClass::low_income:
      return "low_income";
  }
  return "middle";
}

IncomeClass classify_income(double share, const IncomeCuts& cuts) {
  if (!(cuts.low_cut >= 0.0 && cuts.low_cut < cuts.high_cut && cuts.high_cut <= 1.0))
    throw std::invalid_argument(fmt::format("invalid income cuts ({}, {})", cuts.low_cut, cuts.high_cut));
  if (share < cuts.low_cut) return IncomeClass::high_income;
  if (share > cuts.high_cut) return IncomeClass::low_income;
  return IncomeClass::middle;
}

}  // namespace equity
