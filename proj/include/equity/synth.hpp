#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "equity/gtfs.hpp"
#include "equity/profiles.hpp"

namespace equity::synth {

// Every random draw comes from std::mt19937_64, whose output sequence is fixed
// by the C++ standard. Uniforms take the top 53 bits; normals use Box-Muller.
// No library distribution objects are used, so bundles are byte-identical
// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  std::int64_t integer(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class SurveyMode {
  per_stop,  // every stop gets its own station-level row
  agency,    // rail stations get station rows, bus stops inherit route rows
};

struct ScenarioConfig {
  std::uint64_t seed = 7;
  int rows = 20;  // census blocks along y
  int cols = 25;  // census blocks along x
  double block_feet = 660.0;
  int n_routes = 8;  // alternately east-west and north-south; every third is rail
  int stops_per_route = 11;
  // Stops at block centres instead of street corners. With block_feet above
  // twice the buffer each stop then falls in exactly one block's catchment.
  bool mid_block_stops = false;
  int n_journeys = 5000;
  double transfer_probability = 0.3;
  // Slopes keyed by metric name (time_per_mile, transfers_per_mile,
  // transfer_wait_minutes, network_miles, rail_share) or purpose name
  // (home_work, home_other, home_social, home_school).
  std::map<std::string, double> planted_effects;
  double noise_sigma = 0.0;
  double base_share = 0.45;  // stop-average low-income share the intercept targets
  SurveyMode survey_mode = SurveyMode::per_stop;
  GeoPoint origin{42.3601, -71.0589};
  double bus_speed_min_mph = 11.0;
  double bus_speed_max_mph = 13.0;
  double rail_speed_min_mph = 13.0;
  double rail_speed_max_mph = 16.0;
  std::string service_date = "2019-01-15";
};

// Throws ConfigError when counts are below one, probabilities leave [0, 1] or
// the grid cannot hold the requested routes.
void validate(const ScenarioConfig& config);

struct StopTruth {
  double low_income_share = 0.0;
  std::array<double, kPurposeCount> purpose_shares{};
  long long respondents = 0;
  long long ridership = 0;
  ConvenienceMetrics mean_metrics;
  bool clamped = false;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  std::map<std::string, double> planted_effects;
  double intercept = 0.0;
  std::map<std::string, StopTruth> stops;
  std::map<std::string, ConvenienceMetrics> journeys;
  int clamped_stops = 0;
  // covered_areas[level][radius feet] = number of areas with an eligible stop.
  std::map<std::string, std::map<int, int>> covered_areas;
  std::size_t n_legs = 0;
};

struct Bundle {
  std::filesystem::path directory;
  std::filesystem::path gtfs_dir;
  std::filesystem::path legs;
  std::filesystem::path survey_rail;
  std::filesystem::path survey_bus;
  std::filesystem::path areas;
  std::filesystem::path ground_truth;
  std::filesystem::path run_config;
  GroundTruth truth;
};

// Writes gtfs/, legs.csv, survey_rail.csv, survey_bus.csv, areas.geojson,
// ground_truth.json and run.conf under `directory`.
Bundle generate(const ScenarioConfig& config, const std::filesystem::path& directory);

// The scenario the README and the pipeline tests run: 500 blocks, 5000 journeys.
ScenarioConfig toy_city(std::uint64_t seed = 7);

// Slopes of 0.68 on time per mile and 0.04 on transfers per mile. Stops sit
// mid-block on 1200 ft blocks so no two stops share a 500 ft catchment and
// area residuals stay independent; speeds are narrow enough that no share
// clamps at [0, 1].
ScenarioConfig recovery_city(std::uint64_t seed = 7, double noise_sigma = 0.002);

std::string ground_truth_json(const GroundTruth& truth);

}  // namespace equity::synth
