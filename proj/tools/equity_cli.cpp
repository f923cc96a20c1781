#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "equity/csv.hpp"
#include "equity/errors.hpp"
#include "equity/gtfs.hpp"
#include "equity/report.hpp"
#include "equity/synth.hpp"

namespace {

using namespace equity;

constexpr int kExitIngestion = 1;
constexpr int kExitConfig = 2;

std::string slurp(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(what, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags share names with the config keys; any flag given on the command line
// overrides the config file.
struct RunFlags {
  std::string config;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value run configuration file");
    for (const char* key : {"gtfs", "legs", "survey_rail", "survey_bus", "areas", "output", "buffer_feet", "level",
                            "low_cut", "high_cut", "period", "direction", "normalize_transfer_wait",
                            "ridership_weighted", "low_income_threshold"})
      cmd->add_option(std::string("--") + key, values[key]);
  }

  RunConfig resolve(CLI::App* cmd) const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    for (const auto& [key, value] : values)
      if (cmd->count("--" + key) > 0) apply_setting(c, key, value, std::filesystem::current_path());
    return c;
  }
};

void print_comparison(const ComparisonReport& report, const std::string& output) {
  const auto text = format_comparison_csv(report);
  if (output.empty())
    std::cout << text;
  else
    write_file_atomic(output, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Journey-based transit equity analytics"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic city bundle");
  std::string synth_out;
  synth::ScenarioConfig scenario = synth::toy_city();
  std::string preset = "toy";
  std::vector<std::string> planted;
  std::string survey_mode = "per_stop";
  synth_cmd->add_option("--output", synth_out, "bundle directory")->required();
  synth_cmd->add_option("--preset", preset, "toy or recovery; later flags override")
      ->check(CLI::IsMember({"toy", "recovery"}))
      ->each([&](const std::string& v) {
        if (v == "recovery") scenario = synth::recovery_city(scenario.seed);
      });
  synth_cmd->add_option("--seed", scenario.seed);
  synth_cmd->add_option("--rows", scenario.rows);
  synth_cmd->add_option("--cols", scenario.cols);
  synth_cmd->add_option("--block_feet", scenario.block_feet);
  synth_cmd->add_option("--routes", scenario.n_routes);
  synth_cmd->add_option("--stops_per_route", scenario.stops_per_route);
  synth_cmd->add_option("--journeys", scenario.n_journeys);
  synth_cmd->add_option("--transfer_probability", scenario.transfer_probability);
  synth_cmd->add_option("--noise_sigma", scenario.noise_sigma);
  synth_cmd->add_option("--base_share", scenario.base_share);
  synth_cmd->add_flag("--mid_block_stops", scenario.mid_block_stops);
  synth_cmd->add_option("--bus_speed_min_mph", scenario.bus_speed_min_mph);
  synth_cmd->add_option("--bus_speed_max_mph", scenario.bus_speed_max_mph);
  synth_cmd->add_option("--rail_speed_min_mph", scenario.rail_speed_min_mph);
  synth_cmd->add_option("--rail_speed_max_mph", scenario.rail_speed_max_mph);
  synth_cmd->add_option("--plant", planted, "name=slope, repeatable");
  synth_cmd->add_option("--survey_mode", survey_mode)->check(CLI::IsMember({"per_stop", "agency"}));

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline");
  RunFlags run_flags;
  run_flags.attach(run_cmd);

  // regress
  auto* regress_cmd = app.add_subcommand("regress", "Refit regressions from an area_profiles.csv");
  std::string regress_input, regress_output, regress_direction = "low_income_response";
  bool regress_weighted = false;
  regress_cmd->add_option("--input", regress_input, "area_profiles.csv")->required();
  regress_cmd->add_option("--output", regress_output, "directory for regression_<name>.csv/.txt");
  regress_cmd->add_option("--direction", regress_direction)
      ->check(CLI::IsMember({"low_income_response", "metric_response"}));
  regress_cmd->add_flag("--ridership_weighted", regress_weighted);

  // compare-areas
  auto* areas_cmd = app.add_subcommand("compare-areas", "Compare two area profiles");
  std::string areas_input, geoid_a, geoid_b, areas_output;
  areas_cmd->add_option("--input", areas_input, "area_profiles.csv")->required();
  areas_cmd->add_option("a", geoid_a)->required();
  areas_cmd->add_option("b", geoid_b)->required();
  areas_cmd->add_option("--output", areas_output);

  // compare-periods
  auto* periods_cmd = app.add_subcommand("compare-periods", "Compare regression coefficients of two runs");
  std::string run1, run2, periods_output, regression_name = "equity";
  periods_cmd->add_option("run1", run1)->required();
  periods_cmd->add_option("run2", run2)->required();
  periods_cmd->add_option("--regression", regression_name);
  periods_cmd->add_option("--output", periods_output);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Print GTFS feed summary counts, or check a run configuration");
  std::string validate_gtfs;
  RunFlags validate_flags;
  validate_flags.attach(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth_cmd) {
      scenario.survey_mode = survey_mode == "agency" ? synth::SurveyMode::agency : synth::SurveyMode::per_stop;
      for (const auto& p : planted) {
        auto eq = p.find('=');
        auto slope = eq == std::string::npos ? std::nullopt : csv::parse_double(p.substr(eq + 1));
        if (!slope) throw ConfigError("plant: expected name=slope, got '" + p + "'");
        scenario.planted_effects[p.substr(0, eq)] = *slope;
      }
      auto bundle = synth::generate(scenario, synth_out);
      fmt::print("bundle={}\njourneys={}\nlegs={}\nclamped_stops={}\n", bundle.directory.string(),
                 bundle.truth.journeys.size(), bundle.truth.n_legs, bundle.truth.clamped_stops);
    } else if (*run_cmd) {
      auto config = run_flags.resolve(run_cmd);
      auto artifacts = run_pipeline(config);
      const auto& c = artifacts.coverage;
      fmt::print("journeys_input={}\njourneys_accepted={}\njourneys_rejected={}\nareas_total={}\nareas_covered={}\n",
                 c.journeys_input, c.journeys_accepted, c.journeys_rejected, c.areas_total,
                 c.areas_total - c.uncovered_areas.size());
      for (const auto& [key, note] : c.notes) fmt::print(stderr, "note: {}: {}\n", key, note);
      for (const auto& f : artifacts.files) fmt::print("wrote={}\n", f.string());
    } else if (*regress_cmd) {
      auto areas = parse_area_profiles_csv(slurp(regress_input, "area_profiles.csv"));
      RegressionOptions options;
      options.ridership_weighted = regress_weighted;
      std::vector<RegressionResult> results;
      if (regress_direction == "metric_response")
        results = reversed_equity_regressions(areas, options);
      else
        results.push_back(equity_regression(areas, options));
      results.push_back(purpose_regression(areas, options));
      for (const auto& r : results) {
        if (regress_output.empty()) {
          std::cout << format_regression_table(r) << '\n';
          continue;
        }
        std::filesystem::create_directories(regress_output);
        write_file_atomic(std::filesystem::path(regress_output) / ("regression_" + r.name + ".csv"),
                          format_regression_csv(r));
        write_file_atomic(std::filesystem::path(regress_output) / ("regression_" + r.name + ".txt"),
                          format_regression_table(r));
      }
    } else if (*areas_cmd) {
      auto areas = parse_area_profiles_csv(slurp(areas_input, "area_profiles.csv"));
      auto find = [&](const std::string& geoid) -> const AreaProfile& {
        for (const auto& a : areas)
          if (a.geoid == geoid) return a;
        throw LookupError("no area " + geoid + " in " + areas_input);
      };
      print_comparison(compare_areas(find(geoid_a), find(geoid_b)), areas_output);
    } else if (*periods_cmd) {
      print_comparison(compare_periods(run1, run2, regression_name), periods_output);
    } else if (*validate_cmd) {
      auto config = validate_flags.resolve(validate_cmd);
      if (validate_cmd->count("--gtfs") > 0 && validate_flags.config.empty() && validate_cmd->count("--legs") == 0) {
        std::cout << gtfs::format_summary(gtfs::summarize_feed(config.gtfs_dir));
      } else {
        validate(config);
        std::cout << gtfs::format_summary(gtfs::summarize_feed(config.gtfs_dir));
        std::cout << "config=ok\n";
      }
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const IngestionError& e) {
    fmt::print(stderr, "ingestion error [{}]: {}\n", e.file(), e.what());
    return kExitIngestion;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitIngestion;
  }
  return 0;
}
