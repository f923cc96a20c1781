#include <gtest/gtest.h>

#include <cstdlib>
#include <json.hpp>
#include <sys/wait.h>

#include "equity/errors.hpp"
#include "equity/report.hpp"
#include "equity/synth.hpp"
#include "test_support.hpp"

using namespace equity;
using equity::testing::read_text;
using equity::testing::TempDir;
using equity::testing::write_text;

namespace {

RunConfig bundle_config(const synth::Bundle& b, const std::filesystem::path& out) {
  auto c = load_run_config(b.run_config);
  c.output_dir = out;
  return c;
}

std::size_t covered(const RunArtifacts& a) { return a.coverage.areas_total - a.coverage.uncovered_areas.size(); }

int run_cli(const std::string& args, const std::filesystem::path& out, const std::filesystem::path& err) {
  const std::string cmd = std::string(EQUITY_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, ParsesKeyValues) {
  auto c = parse_run_config(
      "# comment\n"
      "gtfs = feed   # trailing\n"
      "legs=legs.csv\n"
      "buffer_feet=1000\n"
      "level=block_group\n"
      "low_cut=0.2\nhigh_cut=0.6\n"
      "period=2019-01\n"
      "direction=metric_response\n"
      "normalize_transfer_wait=true\n",
      "/data");
  EXPECT_EQ(c.gtfs_dir, std::filesystem::path("/data/feed"));
  EXPECT_EQ(c.legs, std::filesystem::path("/data/legs.csv"));
  EXPECT_EQ(c.buffer_feet, 1000.0);
  EXPECT_EQ(c.level, AreaLevel::block_group);
  EXPECT_EQ(c.cuts.low_cut, 0.2);
  EXPECT_EQ(c.period, "2019-01");
  EXPECT_EQ(c.direction, RegressionDirection::metric_response);
  EXPECT_TRUE(c.normalize_transfer_wait);
  EXPECT_FALSE(c.ridership_weighted);
  EXPECT_THROW(parse_run_config("colour=blue\n"), ConfigError);
  EXPECT_THROW(parse_run_config("buffer_feet=wide\n"), ConfigError);
  EXPECT_THROW(parse_run_config("level=county\n"), ConfigError);
  EXPECT_THROW(parse_run_config("just words\n"), ConfigError);
}

TEST(RunConfig, ValidateNamesField) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto c = bundle_config(b, dir / "out");
  EXPECT_NO_THROW(validate(c));
  c.buffer_feet = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = bundle_config(b, dir / "out");
  c.legs = dir / "missing.csv";
  try {
    run_pipeline(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("legs", 0), 0u) << e.what();
  }
}

TEST(Pipeline, ToyCityCoverageMatchesGroundTruth) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto c = bundle_config(b, dir / "out500");
  auto run500 = run_pipeline(c);
  EXPECT_EQ(covered(run500), static_cast<std::size_t>(b.truth.covered_areas.at("block").at(500)));
  EXPECT_EQ(run500.coverage.areas_total, 500u);

  c.output_dir = dir / "out1000";
  c.buffer_feet = 1000;
  auto run1000 = run_pipeline(c);
  EXPECT_EQ(covered(run1000), static_cast<std::size_t>(b.truth.covered_areas.at("block").at(1000)));
  EXPECT_GE(covered(run1000), covered(run500));

  c.output_dir = dir / "out0";
  c.buffer_feet = 0;
  EXPECT_EQ(covered(run_pipeline(c)), static_cast<std::size_t>(b.truth.covered_areas.at("block").at(0)));

  c.output_dir = dir / "bg";
  c.buffer_feet = 500;
  c.level = AreaLevel::block_group;
  EXPECT_EQ(covered(run_pipeline(c)), static_cast<std::size_t>(b.truth.covered_areas.at("block_group").at(500)));

  for (const char* f : {"area_profiles.geojson", "area_profiles.csv", "regression_equity.csv",
                        "regression_equity.txt", "regression_purpose.csv", "coverage.csv", "rejects.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out500" / f)) << f;
  EXPECT_FALSE(std::filesystem::exists(dir / "out500" / "area_profiles.csv.tmp"));
}

TEST(Pipeline, OutputsAreConsistent) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto run = run_pipeline(bundle_config(b, dir / "out"));
  auto csv_areas = parse_area_profiles_csv(read_text(dir / "out" / "area_profiles.csv"));
  ASSERT_EQ(csv_areas.size(), run.areas.size());
  for (std::size_t i = 0; i < csv_areas.size(); ++i) {
    EXPECT_EQ(csv_areas[i].geoid, run.areas[i].geoid);
    EXPECT_EQ(csv_areas[i].assigned_stops, run.areas[i].assigned_stops);
    EXPECT_NEAR(csv_areas[i].low_income_share, run.areas[i].low_income_share, 1e-5);
  }
  auto geo = nlohmann::json::parse(read_text(dir / "out" / "area_profiles.geojson"));
  ASSERT_EQ(geo["features"].size(), run.areas.size());
  const auto& props = geo["features"][0]["properties"];
  EXPECT_EQ(props.begin().key(), "geoid");
  EXPECT_TRUE(props.contains("income_class"));
  EXPECT_EQ(geo["features"][0]["geometry"]["type"], "Polygon");

  const auto coverage = read_text(dir / "out" / "coverage.csv");
  EXPECT_NE(coverage.find("count,journeys_input,5000\n"), std::string::npos);
  EXPECT_NE(coverage.find("count,areas_covered," + std::to_string(covered(run)) + "\n"), std::string::npos);
  EXPECT_EQ(read_text(dir / "out" / "rejects.csv"), "journey_id,reason\n");
}

TEST(Pipeline, TractRollup) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto c = bundle_config(b, dir / "out");
  c.level = AreaLevel::tract;
  auto run = run_pipeline(c);
  ASSERT_FALSE(run.areas.empty());
  for (const auto& a : run.areas) {
    EXPECT_EQ(a.level, AreaLevel::tract);
    EXPECT_EQ(a.geoid.size(), 11u);
  }
  auto geo = nlohmann::json::parse(read_text(dir / "out" / "area_profiles.geojson"));
  EXPECT_EQ(geo["features"][0]["properties"]["level"], "tract");
}

TEST(Pipeline, TractGeometryFromBlocksWhenAbsent) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto fc = nlohmann::json::parse(read_text(b.areas));
  auto& features = fc["features"];
  features.erase(std::remove_if(features.begin(), features.end(),
                                [](const nlohmann::json& f) { return f["properties"]["level"] != "block"; }),
                 features.end());
  write_text(b.areas, fc.dump());
  auto c = bundle_config(b, dir / "out");
  c.level = AreaLevel::tract;
  auto run = run_pipeline(c);
  ASSERT_FALSE(run.areas.empty());
  auto geo = nlohmann::json::parse(read_text(dir / "out" / "area_profiles.geojson"));
  const auto& g = geo["features"][0]["geometry"];
  EXPECT_EQ(g["type"], "MultiPolygon");
  // One polygon per covered child block.
  c.level = AreaLevel::block;
  c.output_dir = dir / "blocks";
  const std::string tract = geo["features"][0]["properties"]["geoid"];
  std::size_t children = 0;
  for (const auto& a : run_pipeline(c).areas) children += a.geoid.rfind(tract, 0) == 0 ? 1 : 0;
  EXPECT_EQ(g["coordinates"].size(), children);
  EXPECT_GE(children, 1u);
}

TEST(Pipeline, MetricResponseDirection) {
  TempDir dir;
  auto cfg = synth::toy_city(7);
  cfg.planted_effects = {{"time_per_mile", 0.3}};
  auto b = synth::generate(cfg, dir / "bundle");
  auto c = bundle_config(b, dir / "out");
  c.direction = RegressionDirection::metric_response;
  auto run = run_pipeline(c);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "regression_reversed_time_per_mile.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "regression_equity.csv"));
}

TEST(Pipeline, JourneyAccountingWithDirtyLegs) {
  TempDir dir;
  auto cfg = synth::toy_city(7);
  cfg.n_journeys = 300;
  auto b = synth::generate(cfg, dir / "bundle");
  auto text = read_text(b.legs);
  text += "P1,X1,R00_0,R00,bus,N00_00,N00_00,2019-01-15T08:00:00,2019-01-15T08:10:00\n"
          "P1,X2,NOPE,R00,bus,N00_00,N00_03,2019-01-15T08:00:00,2019-01-15T08:10:00\n"
          "P1,X3,R00_0,R00,ferry,N00_00,N00_03,2019-01-15T08:00:00,2019-01-15T08:10:00\n";
  write_text(b.legs, text);
  auto run = run_pipeline(bundle_config(b, dir / "out"));
  EXPECT_EQ(run.coverage.journeys_input, 303u);
  EXPECT_EQ(run.coverage.journeys_accepted + run.coverage.journeys_rejected, 303u);
  EXPECT_EQ(run.rejects.size(), 3u);
}

TEST(CompareAreas, Examples) {
  AreaProfile a, b;
  a.geoid = "low";
  b.geoid = "high";
  a.metrics.time_per_mile = 84;
  b.metrics.time_per_mile = 43;
  a.metrics.transfers_per_mile = 1.1;
  b.metrics.transfers_per_mile = 0.0;
  auto r = compare_areas(a, b);
  EXPECT_DOUBLE_EQ(r.row("time_per_mile").difference, 41.0);
  ASSERT_TRUE(r.row("time_per_mile").percent);
  EXPECT_NEAR(*r.row("time_per_mile").percent, 95.35, 0.01);
  EXPECT_FALSE(r.row("transfers_per_mile").percent);
  EXPECT_NE(format_comparison_csv(r).find("transfers_per_mile,1.1,0,1.1,null"), std::string::npos);

  auto same = compare_areas(a, a);
  for (const auto& row : same.rows) EXPECT_EQ(row.difference, 0.0) << row.name;
  b.level = AreaLevel::tract;
  EXPECT_THROW(compare_areas(a, b), SpecificationMismatchError);
}

TEST(ComparePeriods, IdenticalRunsAndMismatch) {
  TempDir dir;
  auto b = synth::generate(synth::toy_city(7), dir / "bundle");
  auto c = bundle_config(b, dir / "run1");
  c.period = "2019";
  run_pipeline(c);
  c.output_dir = dir / "run2";
  c.period = "2020";
  run_pipeline(c);
  auto r = compare_periods(dir / "run1", dir / "run2");
  EXPECT_EQ(r.label_a, "2019");
  EXPECT_FALSE(r.rows.empty());
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.difference, 0.0) << row.name;
    EXPECT_TRUE(row.p_a && row.p_b);
  }
  c.output_dir = dir / "run3";
  c.buffer_feet = 1000;
  run_pipeline(c);
  EXPECT_THROW(compare_periods(dir / "run1", dir / "run3"), SpecificationMismatchError);
}

TEST(ComparePeriods, PlantedSlopeDifference) {
  TempDir dir;
  std::vector<RegressionResult> fits;
  for (double slope : {0.68, 0.72}) {
    auto cfg = synth::recovery_city(7);
    cfg.planted_effects["time_per_mile"] = slope;
    const auto name = "s" + std::to_string(fits.size());
    auto b = synth::generate(cfg, dir / name);
    ASSERT_EQ(b.truth.clamped_stops, 0);
    fits.push_back(run_pipeline(bundle_config(b, dir / (name + "_out"))).regressions.at(0));
  }
  auto r = compare_periods(fits[0], fits[1], "a", "b");
  const auto& row = r.row("Time by Distance (min/mile)");
  ASSERT_TRUE(row.combined_se);
  EXPECT_LE(std::fabs(row.difference - (0.68 - 0.72)), 3 * *row.combined_se);
  auto purpose = fits[0];
  purpose.name = "purpose";
  EXPECT_THROW(compare_periods(fits[0], purpose), SpecificationMismatchError);
}

TEST(Cli, EndToEnd) {
  TempDir dir;
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  ASSERT_EQ(run_cli("synth --output " + (dir / "b").string() + " --journeys 600", out, err), 0) << read_text(err);
  EXPECT_NE(read_text(out).find("journeys=600"), std::string::npos);

  ASSERT_EQ(run_cli("validate --gtfs " + (dir / "b" / "gtfs").string(), out, err), 0) << read_text(err);
  EXPECT_NE(read_text(out).find("stops="), std::string::npos);
  EXPECT_NE(read_text(out).find("rail_routes="), std::string::npos);

  const std::string conf = (dir / "b" / "run.conf").string();
  ASSERT_EQ(run_cli("run --config " + conf + " --output " + (dir / "o").string() + " --buffer_feet 1000", out, err), 0)
      << read_text(err);
  EXPECT_NE(read_text(out).find("journeys_input=600"), std::string::npos);
  EXPECT_NE(read_text(dir / "o" / "run_config.txt").find("buffer_feet=1000"), std::string::npos);

  EXPECT_EQ(run_cli("run --config " + conf + " --output " + (dir / "o2").string() + " --legs nowhere.csv", out, err), 2);
  EXPECT_NE(read_text(err).find("legs"), std::string::npos);
  EXPECT_EQ(run_cli("run --config " + conf + " --output " + (dir / "o2").string() + " --level county", out, err), 2);

  write_text(dir / "b" / "gtfs" / "trips.txt", "garbage\n");
  EXPECT_EQ(run_cli("run --config " + conf + " --output " + (dir / "o3").string(), out, err), 1);
  EXPECT_NE(read_text(err).find("trips.txt"), std::string::npos);

  const auto areas = parse_area_profiles_csv(read_text(dir / "o" / "area_profiles.csv"));
  ASSERT_GE(areas.size(), 2u);
  ASSERT_EQ(run_cli("compare-areas --input " + (dir / "o" / "area_profiles.csv").string() + " " + areas[0].geoid +
                        " " + areas[1].geoid,
                    out, err),
            0)
      << read_text(err);
  EXPECT_NE(read_text(out).find("time_per_mile,"), std::string::npos);

  ASSERT_EQ(run_cli("regress --input " + (dir / "o" / "area_profiles.csv").string() + " --output " +
                        (dir / "r").string(),
                    out, err),
            0)
      << read_text(err);
  EXPECT_TRUE(std::filesystem::exists(dir / "r" / "regression_purpose.txt"));

  ASSERT_EQ(run_cli("compare-periods " + (dir / "o").string() + " " + (dir / "o").string(), out, err), 0)
      << read_text(err);
  EXPECT_NE(read_text(out).find("(Intercept),"), std::string::npos);
}
