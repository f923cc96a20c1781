#include "equity/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "equity/csv.hpp"
#include "equity/errors.hpp"

namespace equity {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string_view::npos ? std::string{} : std::string(s.substr(b, e - b + 1));
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
}

double parse_number(std::string_view key, std::string_view v) {
  auto d = csv::parse_double(v);
  if (!d) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return *d;
}

std::string slurp(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(what, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string absolute_string(const std::filesystem::path& p) {
  return p.empty() ? std::string{} : std::filesystem::absolute(p).lexically_normal().string();
}

const char* to_string(RegressionDirection d) {
  return d == RegressionDirection::metric_response ? "metric_response" : "low_income_response";
}

std::string config_text(const RunConfig& c) {
  return fmt::format(
      "gtfs={}\nlegs={}\nsurvey_rail={}\nsurvey_bus={}\nareas={}\noutput={}\nbuffer_feet={}\nlevel={}\nlow_cut={}\n"
      "high_cut={}\nperiod={}\ndirection={}\nnormalize_transfer_wait={}\nridership_weighted={}\n"
      "low_income_threshold={}\n",
      absolute_string(c.gtfs_dir), absolute_string(c.legs), absolute_string(c.survey_rail),
      absolute_string(c.survey_bus), absolute_string(c.areas), absolute_string(c.output_dir), c.buffer_feet,
      to_string(c.level), c.cuts.low_cut, c.cuts.high_cut, c.period, to_string(c.direction),
      c.normalize_transfer_wait, c.ridership_weighted, c.low_income_threshold_dollars);
}

double rounded(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_number(v));
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw, const std::filesystem::path& base) {
  const std::string value = trim(raw);
  auto path = [&] {
    std::filesystem::path p(value);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  if (key == "gtfs") c.gtfs_dir = path();
  else if (key == "legs") c.legs = path();
  else if (key == "survey_rail") c.survey_rail = path();
  else if (key == "survey_bus") c.survey_bus = path();
  else if (key == "areas") c.areas = path();
  else if (key == "output") c.output_dir = path();
  else if (key == "buffer_feet") c.buffer_feet = parse_number(key, value);
  else if (key == "low_cut") c.cuts.low_cut = parse_number(key, value);
  else if (key == "high_cut") c.cuts.high_cut = parse_number(key, value);
  else if (key == "low_income_threshold") c.low_income_threshold_dollars = parse_number(key, value);
  else if (key == "period") c.period = value;
  else if (key == "normalize_transfer_wait") c.normalize_transfer_wait = parse_bool(key, value);
  else if (key == "ridership_weighted") c.ridership_weighted = parse_bool(key, value);
  else if (key == "level") {
    try {
      c.level = parse_area_level(value);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("level: ") + e.what());
    }
  } else if (key == "direction") {
    if (value == "low_income_response") c.direction = RegressionDirection::low_income_response;
    else if (value == "metric_response") c.direction = RegressionDirection::metric_response;
    else throw ConfigError(fmt::format("direction: expected low_income_response or metric_response, got '{}'", value));
  } else {
    throw ConfigError(fmt::format("unknown setting '{}'", key));
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
    apply_setting(c, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1), base_dir);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

void validate(const RunConfig& c) {
  auto need = [](const std::filesystem::path& p, const char* key, bool directory) {
    if (p.empty()) throw ConfigError(fmt::format("{}: not set", key));
    if (directory ? !std::filesystem::is_directory(p) : !std::filesystem::is_regular_file(p))
      throw ConfigError(fmt::format("{}: {} not found: {}", key, directory ? "directory" : "file", p.string()));
  };
  need(c.gtfs_dir, "gtfs", true);
  need(c.legs, "legs", false);
  need(c.survey_rail, "survey_rail", false);
  need(c.survey_bus, "survey_bus", false);
  need(c.areas, "areas", false);
  if (c.output_dir.empty()) throw ConfigError("output: not set");
  if (!(c.buffer_feet >= 0.0)) throw ConfigError("buffer_feet: must be non-negative");
  if (!(c.cuts.low_cut >= 0.0 && c.cuts.low_cut < c.cuts.high_cut && c.cuts.high_cut <= 1.0))
    throw ConfigError("low_cut/high_cut: need 0 <= low_cut < high_cut <= 1");
}

std::string specification_fingerprint(const RunConfig& c) {
  return fmt::format(
      "gtfs={}\nsurvey_rail={}\nsurvey_bus={}\nareas={}\nbuffer_feet={}\nlevel={}\nlow_cut={}\nhigh_cut={}\n"
      "direction={}\nnormalize_transfer_wait={}\nridership_weighted={}\n",
      absolute_string(c.gtfs_dir), absolute_string(c.survey_rail), absolute_string(c.survey_bus),
      absolute_string(c.areas), c.buffer_feet, to_string(c.level), c.cuts.low_cut, c.cuts.high_cut,
      to_string(c.direction), c.normalize_transfer_wait, c.ridership_weighted);
}

std::string format_area_profiles_csv(const std::vector<AreaProfile>& areas) {
  std::string out =
      "geoid,level,ridership,time_per_mile,transfers_per_mile,transfer_wait_minutes,network_miles,rail_share,"
      "low_income_share,p_home_work,p_home_other,p_other,p_home_social,p_home_school,income_class,n_stops,stops\n";
  for (const auto& a : areas) {
    std::vector<std::string> f{a.geoid, to_string(a.level), std::to_string(a.ridership)};
    for (double v : to_array(a.metrics)) f.push_back(format_number(v));
    f.push_back(format_number(a.low_income_share));
    for (double p : a.purpose_shares) f.push_back(format_number(p));
    f.push_back(to_string(a.income_class));
    f.push_back(std::to_string(a.assigned_stops.size()));
    std::string stops;
    for (const auto& s : a.assigned_stops) stops += (stops.empty() ? "" : ";") + s;
    f.push_back(stops);
    out += csv::join(f) + '\n';
  }
  return out;
}

std::vector<AreaProfile> parse_area_profiles_csv(std::string_view text) {
  const std::string file = "area_profiles.csv";
  auto t = csv::Table::parse(text);
  if (t.empty_file()) throw IngestionError(file, "missing header");
  auto col = [&](std::string_view name) { return t.require_column(name, file); };
  const auto geoid = col("geoid"), level = col("level"), ridership = col("ridership"), low = col("low_income_share");
  std::array<std::size_t, kMetricCount> metric{};
  for (std::size_t i = 0; i < kMetricCount; ++i) metric[i] = col(kMetricNames[i]);
  constexpr std::array<std::string_view, kPurposeCount> purpose_cols = {"p_home_work", "p_home_other", "p_other",
                                                                        "p_home_social", "p_home_school"};
  std::array<std::size_t, kPurposeCount> purpose{};
  for (std::size_t i = 0; i < kPurposeCount; ++i) purpose[i] = col(purpose_cols[i]);
  auto stops = t.column("stops");

  std::vector<AreaProfile> out;
  for (const auto& row : t.rows()) {
    if (row.fields.size() != t.header().size())
      throw IngestionError(file, fmt::format("line {}: expected {} fields", row.line, t.header().size()));
    auto num = [&](std::size_t c) {
      auto v = csv::parse_double(row.fields[c]);
      if (!v) throw IngestionError(file, fmt::format("line {}: bad number '{}'", row.line, row.fields[c]));
      return *v;
    };
    AreaProfile a;
    a.geoid = row.fields[geoid];
    try {
      a.level = parse_area_level(row.fields[level]);
    } catch (const ValidationError& e) {
      throw IngestionError(file, fmt::format("line {}: {}", row.line, e.what()));
    }
    a.ridership = static_cast<long long>(num(ridership));
    std::array<double, kMetricCount> m{};
    for (std::size_t i = 0; i < kMetricCount; ++i) m[i] = num(metric[i]);
    a.metrics = from_array(m);
    a.low_income_share = num(low);
    for (std::size_t i = 0; i < kPurposeCount; ++i) a.purpose_shares[i] = num(purpose[i]);
    a.income_class = classify_income(a.low_income_share);
    if (stops && !row.fields[*stops].empty()) {
      std::string_view s = row.fields[*stops];
      while (!s.empty()) {
        auto semi = s.find(';');
        a.assigned_stops.emplace_back(s.substr(0, semi));
        s = semi == std::string_view::npos ? std::string_view{} : s.substr(semi + 1);
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string format_coverage_csv(const Coverage& c) {
  std::string out = "category,key,value\n";
  auto count = [&](std::string_view key, std::size_t v) { out += fmt::format("count,{},{}\n", key, v); };
  count("journeys_input", c.journeys_input);
  count("journeys_accepted", c.journeys_accepted);
  count("journeys_rejected", c.journeys_rejected);
  count("stops_with_journeys", c.stops_with_journeys);
  count("stops_no_demographics", c.no_demographics.size());
  count("areas_total", c.areas_total);
  count("areas_covered", c.areas_total - c.uncovered_areas.size());
  count("areas_uncovered", c.uncovered_areas.size());
  count("areas_invalid", c.invalid_areas.size());
  count("survey_rejects", c.survey_rejects.size());
  for (const auto& [stop, riders] : c.no_demographics)
    out += csv::join({"no_demographics", stop, std::to_string(riders)}) + '\n';
  for (const auto& g : c.uncovered_areas) out += csv::join({"uncovered_area", g, ""}) + '\n';
  for (const auto& r : c.invalid_areas) out += csv::join({"invalid_area", r.geoid, r.reason}) + '\n';
  for (const auto& r : c.survey_rejects) out += csv::join({"survey_reject", r.file + ":" + r.key, r.reason}) + '\n';
  for (const auto& [k, v] : c.notes) out += csv::join({"note", k, v}) + '\n';
  return out;
}

namespace {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const IngestionError&) {
    throw;
  } catch (const ValidationError& e) {
    throw IngestionError(name, e.what());
  }
}

nlohmann::ordered_json area_properties(const AreaProfile& a, const std::string& period) {
  nlohmann::ordered_json p;
  p["geoid"] = a.geoid;
  p["level"] = to_string(a.level);
  p["period"] = period;
  p["ridership"] = a.ridership;
  auto m = to_array(a.metrics);
  for (std::size_t i = 0; i < kMetricCount; ++i) p[std::string(kMetricNames[i])] = rounded(m[i]);
  p["low_income_share"] = rounded(a.low_income_share);
  for (std::size_t i = 0; i < kPurposeCount; ++i) p["p_" + std::string(kPurposeNames[i])] = rounded(a.purpose_shares[i]);
  p["income_class"] = to_string(a.income_class);
  p["n_stops"] = a.assigned_stops.size();
  return p;
}

}  // namespace

RunArtifacts run_pipeline(const RunConfig& config) {
  validate(config);
  RunArtifacts out;
  out.output_dir = config.output_dir;
  auto& cov = out.coverage;

  const auto network = stage("gtfs", [&] { return gtfs::parse_feed(config.gtfs_dir); });
  auto leg_file = stage("legs", [&] { return load_legs(config.legs); });
  cov.journeys_input = leg_file.input_journeys;
  out.rejects = leg_file.rejects;

  auto linked = link_journeys(std::move(leg_file.legs));
  out.rejects.insert(out.rejects.end(), linked.rejects.begin(), linked.rejects.end());
  MetricOptions metric_options;
  metric_options.normalize_transfer_wait = config.normalize_transfer_wait;
  auto metrics = compute_metrics(linked.journeys, network, metric_options);
  out.rejects.insert(out.rejects.end(), metrics.rejects.begin(), metrics.rejects.end());
  std::sort(out.rejects.begin(), out.rejects.end(),
            [](const Reject& a, const Reject& b) { return a.journey_id < b.journey_id; });
  cov.journeys_accepted = metrics.journeys.size();
  cov.journeys_rejected = out.rejects.size();
  if (cov.journeys_accepted + cov.journeys_rejected != cov.journeys_input)
    throw Error(fmt::format("journey accounting mismatch: {} input, {} accepted, {} rejected", cov.journeys_input,
                            cov.journeys_accepted, cov.journeys_rejected));

  auto profiles = stop_profiles(metrics.journeys);
  cov.stops_with_journeys = profiles.size();

  auto survey = stage("survey", [&] { return load_survey(config.survey_rail, config.survey_bus); });
  survey.table.low_income_threshold_dollars = config.low_income_threshold_dollars;
  cov.survey_rejects = survey.rejects;
  for (auto& [stop_id, profile] : profiles) {
    if (!network.stops().count(stop_id)) {
      cov.no_demographics.emplace_back(stop_id, profile.ridership);
      continue;
    }
    profile.demographics = stop_shares(survey.table, network, stop_id);
    if (!profile.demographics) cov.no_demographics.emplace_back(stop_id, profile.ridership);
  }

  auto area_load = stage("areas", [&] { return load_areas(config.areas, network.region_origin()); });
  cov.invalid_areas = area_load.rejects;
  const AreaLevel analysis_level = config.level == AreaLevel::tract ? AreaLevel::block : config.level;
  const auto positions = project_stops(network, network.region_origin());

  std::vector<AreaProfile> computed;
  std::size_t candidates = 0;
  for (const auto& area : area_load.areas) {
    if (area.level != analysis_level) continue;
    ++candidates;
    if (auto p = aggregate_area(area, profiles, positions, config.buffer_feet, config.cuts))
      computed.push_back(std::move(*p));
    else
      cov.uncovered_areas.push_back(area.geoid);
  }
  if (candidates == 0)
    throw IngestionError("areas", fmt::format("no valid features at level {}", to_string(analysis_level)));
  cov.areas_total = candidates;

  std::map<std::string, std::string> geometry = area_load.geometry_json;
  if (config.level == AreaLevel::tract) {
    // Display roll-up: tracts are weighted means over their covered blocks.
    std::map<std::string, std::vector<const AreaProfile*>> by_tract;
    for (const auto& p : computed) by_tract[parent_geoid(p.geoid, AreaLevel::tract)].push_back(&p);
    std::set<std::string> tracts;
    for (const auto& area : area_load.areas)
      if (area.level == AreaLevel::block) tracts.insert(parent_geoid(area.geoid, AreaLevel::tract));
    std::vector<AreaProfile> rolled;
    cov.uncovered_areas.clear();
    for (const auto& tract : tracts) {
      auto it = by_tract.find(tract);
      if (it == by_tract.end()) {
        cov.uncovered_areas.push_back(tract);
        continue;
      }
      rolled.push_back(rollup_profiles(tract, AreaLevel::tract, it->second, config.cuts));
      if (!geometry.count(tract)) {
        nlohmann::json multi = {{"type", "MultiPolygon"}, {"coordinates", nlohmann::json::array()}};
        for (const auto* block : it->second) {
          auto g = nlohmann::json::parse(area_load.geometry_json.at(block->geoid));
          if (g["type"] == "Polygon")
            multi["coordinates"].push_back(g["coordinates"]);
          else
            for (auto& poly : g["coordinates"]) multi["coordinates"].push_back(poly);
        }
        geometry[tract] = multi.dump();
      }
    }
    cov.areas_total = tracts.size();
    computed = std::move(rolled);
  }
  out.areas = computed;

  RegressionOptions reg_options;
  reg_options.ridership_weighted = config.ridership_weighted;
  auto attempt = [&](const std::string& name, auto fit) {
    try {
      fit();
    } catch (const Error& e) {
      cov.notes.emplace_back("regression_" + name, e.what());
    }
  };
  if (config.direction == RegressionDirection::low_income_response) {
    attempt("equity", [&] { out.regressions.push_back(equity_regression(out.areas, reg_options)); });
  } else {
    attempt("reversed", [&] {
      for (auto& r : reversed_equity_regressions(out.areas, reg_options)) out.regressions.push_back(std::move(r));
    });
  }
  attempt("purpose", [&] { out.regressions.push_back(purpose_regression(out.areas, reg_options)); });

  // Outputs.
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw ConfigError("output: cannot create " + config.output_dir.string() + ": " + ec.message());
  auto emit = [&](const std::string& name, const std::string& contents) {
    auto path = config.output_dir / name;
    write_file_atomic(path, contents);
    out.files.push_back(path);
  };

  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = nlohmann::ordered_json::array();
  for (const auto& a : out.areas) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["properties"] = area_properties(a, config.period);
    f["geometry"] = nlohmann::ordered_json::parse(geometry.at(a.geoid));
    fc["features"].push_back(std::move(f));
  }
  emit("area_profiles.geojson", fc.dump() + "\n");
  emit("area_profiles.csv", format_area_profiles_csv(out.areas));
  for (const auto& r : out.regressions) {
    emit("regression_" + r.name + ".csv", format_regression_csv(r));
    emit("regression_" + r.name + ".txt", format_regression_table(r));
  }
  emit("coverage.csv", format_coverage_csv(cov));
  emit("rejects.csv", format_rejects(out.rejects));
  emit("run_config.txt", config_text(config));
  return out;
}

const ComparisonRow& ComparisonReport::row(std::string_view name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw LookupError(fmt::format("comparison has no row '{}'", name));
}

ComparisonReport compare_areas(const AreaProfile& a, const AreaProfile& b) {
  if (a.level != b.level)
    throw SpecificationMismatchError(fmt::format("cannot compare a {} with a {}", to_string(a.level), to_string(b.level)));
  ComparisonReport out{a.geoid, b.geoid, {}};
  auto add = [&](std::string name, double x, double y) {
    ComparisonRow r;
    r.name = std::move(name);
    r.a = x;
    r.b = y;
    r.difference = x - y;
    if (y != 0.0) r.percent = 100.0 * (x - y) / y;
    out.rows.push_back(std::move(r));
  };
  add("ridership", static_cast<double>(a.ridership), static_cast<double>(b.ridership));
  auto ma = to_array(a.metrics), mb = to_array(b.metrics);
  for (std::size_t i = 0; i < kMetricCount; ++i) add(std::string(kMetricNames[i]), ma[i], mb[i]);
  add("low_income_share", a.low_income_share, b.low_income_share);
  return out;
}

ComparisonReport compare_periods(const RegressionResult& first, const RegressionResult& second, std::string label_a,
                                 std::string label_b) {
  auto terms = [](const RegressionResult& r) {
    std::vector<std::string> t;
    for (const auto& c : r.coefficients) t.push_back(c.name);
    return t;
  };
  if (first.name != second.name || first.response != second.response || terms(first) != terms(second))
    throw SpecificationMismatchError("regression specifications differ: " + first.name + " vs " + second.name);
  ComparisonReport out{std::move(label_a), std::move(label_b), {}};
  for (std::size_t i = 0; i < first.coefficients.size(); ++i) {
    const auto& x = first.coefficients[i];
    const auto& y = second.coefficients[i];
    ComparisonRow r;
    r.name = x.name;
    r.a = x.estimate;
    r.b = y.estimate;
    r.difference = x.estimate - y.estimate;
    if (y.estimate != 0.0) r.percent = 100.0 * r.difference / y.estimate;
    r.p_a = x.p_value;
    r.p_b = y.p_value;
    r.combined_se = std::hypot(x.std_error, y.std_error);
    out.rows.push_back(std::move(r));
  }
  return out;
}

ComparisonReport compare_periods(const std::filesystem::path& run1, const std::filesystem::path& run2,
                                 const std::string& regression_name) {
  auto config_of = [](const std::filesystem::path& dir) {
    auto path = dir / "run_config.txt";
    return parse_run_config(slurp(path, path.string()));
  };
  const auto c1 = config_of(run1), c2 = config_of(run2);
  if (specification_fingerprint(c1) != specification_fingerprint(c2))
    throw SpecificationMismatchError("runs " + run1.string() + " and " + run2.string() +
                                     " used different specifications:\n" + specification_fingerprint(c1) + "vs\n" +
                                     specification_fingerprint(c2));
  const std::string file = "regression_" + regression_name + ".csv";
  auto r1 = parse_regression_csv(slurp(run1 / file, (run1 / file).string()));
  auto r2 = parse_regression_csv(slurp(run2 / file, (run2 / file).string()));
  r1.response = r2.response = "low_income_share";
  return compare_periods(r1, r2, c1.period.empty() ? run1.filename().string() : c1.period,
                         c2.period.empty() ? run2.filename().string() : c2.period);
}

std::string format_comparison_csv(const ComparisonReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("null"); };
  std::string out = csv::join({"name", r.label_a, r.label_b, "difference", "percent_difference", "p_" + r.label_a,
                               "p_" + r.label_b, "combined_se"}) +
                    '\n';
  for (const auto& row : r.rows)
    out += csv::join({row.name, format_number(row.a), format_number(row.b), format_number(row.difference),
                      opt(row.percent), opt(row.p_a), opt(row.p_b), opt(row.combined_se)}) +
           '\n';
  return out;
}

}  // namespace equity
