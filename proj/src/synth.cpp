#include "equity/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "equity/csv.hpp"
#include "equity/demographics.hpp"
#include "equity/errors.hpp"
#include "equity/journeys.hpp"
#include "equity/spatial.hpp"

namespace equity::synth {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(engine_() % span);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

ScenarioConfig toy_city(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  return c;
}

ScenarioConfig recovery_city(std::uint64_t seed, double noise_sigma) {
  ScenarioConfig c;
  c.seed = seed;
  c.block_feet = 1200.0;
  c.mid_block_stops = true;
  c.transfer_probability = 0.45;
  c.base_share = 0.5;
  c.noise_sigma = noise_sigma;
  c.bus_speed_min_mph = 12.0;
  c.bus_speed_max_mph = 13.0;
  c.rail_speed_min_mph = 14.0;
  c.rail_speed_max_mph = 15.0;
  c.planted_effects = {{"time_per_mile", 0.68}, {"transfers_per_mile", 0.04}};
  return c;
}

void validate(const ScenarioConfig& c) {
  if (c.rows < 1 || c.cols < 1 || c.n_routes < 1 || c.stops_per_route < 2 || c.n_journeys < 1)
    throw ConfigError("scenario counts must be at least 1 (stops_per_route at least 2)");
  if (!(c.block_feet > 0.0)) throw ConfigError("block_feet must be positive");
  if (!(c.transfer_probability >= 0.0 && c.transfer_probability <= 1.0))
    throw ConfigError("transfer_probability must lie in [0, 1]");
  if (!(c.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  const int span = c.mid_block_stops ? std::min(c.rows, c.cols) - 1 : std::min(c.rows, c.cols);
  if (c.stops_per_route - 1 > span) throw ConfigError("stops_per_route does not fit on the grid");
  const int horizontal = (c.n_routes + 1) / 2;
  if (horizontal > c.stops_per_route) throw ConfigError("too many routes for stops_per_route");
  if (!(c.bus_speed_min_mph > 0.0 && c.bus_speed_min_mph <= c.bus_speed_max_mph && c.rail_speed_min_mph > 0.0 &&
        c.rail_speed_min_mph <= c.rail_speed_max_mph))
    throw ConfigError("speed ranges must be positive and ordered");
  if (!parse_timestamp(c.service_date + "T00:00:00")) throw ConfigError("service_date must be YYYY-MM-DD");
  for (const auto& [name, slope] : c.planted_effects) {
    bool known = std::find(kMetricNames.begin(), kMetricNames.end(), name) != kMetricNames.end() ||
                 (std::find(kPurposeNames.begin(), kPurposeNames.end(), name) != kPurposeNames.end() &&
                  name != "other_nonhome");
    if (!known) throw ConfigError("unknown planted effect '" + name + "'");
  }
}

namespace {

struct SynthRoute {
  std::string id;
  Mode mode;
  double speed_mph;
  std::vector<std::string> stops;    // forward order
  std::vector<double> offset_feet;  // distance from the first stop, forward
};

struct SynthTrip {
  std::string id;
  std::size_t route;
  std::vector<std::string> stops;
  std::vector<double> shape_dist_m;
  std::vector<double> cum_miles;
};

struct Leg {
  std::size_t trip;
  std::size_t board;
  std::size_t alight;
  Timestamp board_time;
  Timestamp alight_time;
};

struct Rect {
  double x0, y0, x1, y1;
  double distance(PlanarPoint p) const {
    const double dx = std::max({0.0, x0 - p.x, p.x - x1});
    const double dy = std::max({0.0, y0 - p.y, p.y - y1});
    return std::hypot(dx, dy);
  }
};

constexpr double kStopOffsetX = 17.0;
constexpr double kStopOffsetY = 23.0;
constexpr int kTractSpan = 5;

nlohmann::json ring_json(const Rect& r, GeoPoint origin) {
  nlohmann::json ring = nlohmann::json::array();
  const PlanarPoint corners[] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}, {r.x0, r.y0}};
  for (const auto& c : corners) {
    auto g = unproject(c, origin);
    ring.push_back({g.lon, g.lat});
  }
  return ring;
}

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::string ground_truth_json(const GroundTruth& t) {
  nlohmann::json j;
  j["seed"] = t.seed;
  j["planted_effects"] = t.planted_effects;
  j["intercept"] = t.intercept;
  j["clamped_stops"] = t.clamped_stops;
  j["n_legs"] = t.n_legs;
  j["n_journeys"] = t.journeys.size();
  auto& cov = j["covered_areas"];
  for (const auto& [level, by_radius] : t.covered_areas)
    for (const auto& [radius, count] : by_radius) cov[level][std::to_string(radius)] = count;
  auto metrics_json = [](const ConvenienceMetrics& m) {
    nlohmann::json o;
    auto v = to_array(m);
    for (std::size_t i = 0; i < kMetricCount; ++i) o[std::string(kMetricNames[i])] = v[i];
    return o;
  };
  auto& stops = j["stops"];
  stops = nlohmann::json::object();
  for (const auto& [id, s] : t.stops) {
    nlohmann::json o;
    o["low_income_share"] = s.low_income_share;
    o["respondents"] = s.respondents;
    o["ridership"] = s.ridership;
    o["clamped"] = s.clamped;
    for (std::size_t p = 0; p < kPurposeCount; ++p) o["purpose"][std::string(kPurposeNames[p])] = s.purpose_shares[p];
    if (s.ridership > 0) o["mean_metrics"] = metrics_json(s.mean_metrics);
    stops[id] = std::move(o);
  }
  auto& journeys = j["journeys"];
  journeys = nlohmann::json::object();
  for (const auto& [id, m] : t.journeys) journeys[id] = metrics_json(m);
  return j.dump(1) + "\n";
}

Bundle generate(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  validate(cfg);
  Rng rng(cfg.seed);
  const double side = cfg.block_feet;
  const int S = cfg.stops_per_route;
  auto node_x = [&](int c) { return c * side - cfg.cols * side / 2.0; };
  auto node_y = [&](int r) { return r * side - cfg.rows * side / 2.0; };

  // Stop columns along east-west routes and stop rows along north-south routes.
  std::vector<int> stop_cols(S), stop_rows(S);
  const int span_cols = cfg.mid_block_stops ? cfg.cols - 1 : cfg.cols;
  const int span_rows = cfg.mid_block_stops ? cfg.rows - 1 : cfg.rows;
  for (int i = 0; i < S; ++i) {
    stop_cols[i] = static_cast<int>(std::lround(static_cast<double>(i) * span_cols / (S - 1)));
    stop_rows[i] = static_cast<int>(std::lround(static_cast<double>(i) * span_rows / (S - 1)));
  }
  const double stop_dx = cfg.mid_block_stops ? side / 2.0 : kStopOffsetX;
  const double stop_dy = cfg.mid_block_stops ? side / 2.0 : kStopOffsetY;
  const int n_h = (cfg.n_routes + 1) / 2;
  const int n_v = cfg.n_routes / 2;

  std::map<std::string, PlanarPoint> stop_xy;
  std::vector<SynthRoute> routes;
  auto stop_id = [](int r, int c) { return fmt::format("N{:02}_{:02}", r, c); };
  for (int i = 0; i < cfg.n_routes; ++i) {
    SynthRoute route;
    route.id = fmt::format("R{:02}", i);
    route.mode = i % 3 == 2 ? Mode::rail : Mode::bus;
    route.speed_mph = route.mode == Mode::rail ? rng.uniform(cfg.rail_speed_min_mph, cfg.rail_speed_max_mph)
                                               : rng.uniform(cfg.bus_speed_min_mph, cfg.bus_speed_max_mph);
    const bool horizontal = i % 2 == 0;
    const int slot = i / 2;
    const int count = horizontal ? n_h : n_v;
    const int line = (2 * slot + 1) * S / (2 * count);
    for (int s = 0; s < S; ++s) {
      const int r = horizontal ? stop_rows[line] : stop_rows[s];
      const int c = horizontal ? stop_cols[s] : stop_cols[line];
      const auto id = stop_id(r, c);
      stop_xy[id] = {node_x(c) + stop_dx, node_y(r) + stop_dy};
      route.stops.push_back(id);
      route.offset_feet.push_back(horizontal ? (c - stop_cols[0]) * side : (r - stop_rows[0]) * side);
    }
    routes.push_back(std::move(route));
  }

  // Two trips per route, one per direction; distances in meters on the wire.
  std::vector<SynthTrip> trips;
  for (std::size_t ri = 0; ri < routes.size(); ++ri) {
    const auto& route = routes[ri];
    for (int dir = 0; dir < 2; ++dir) {
      SynthTrip t;
      t.id = fmt::format("{}_{}", route.id, dir);
      t.route = ri;
      const std::size_t n = route.stops.size();
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = dir == 0 ? k : n - 1 - k;
        const double feet = dir == 0 ? route.offset_feet[idx] : route.offset_feet[n - 1] - route.offset_feet[idx];
        const double meters = feet * 0.3048;
        t.stops.push_back(route.stops[idx]);
        t.shape_dist_m.push_back(meters);
        t.cum_miles.push_back((meters - 0.0) * (1.0 / kMetersPerMile));
      }
      trips.push_back(std::move(t));
    }
  }
  // stop -> (trip, position) for every trip calling there
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> calls;
  for (std::size_t ti = 0; ti < trips.size(); ++ti)
    for (std::size_t k = 0; k < trips[ti].stops.size(); ++k) calls[trips[ti].stops[k]].emplace_back(ti, k);

  std::vector<std::string> stop_ids;
  for (const auto& [id, p] : stop_xy) stop_ids.push_back(id);
  std::vector<double> popularity, propensity;
  for (std::size_t i = 0; i < stop_ids.size(); ++i) {
    popularity.push_back(rng.uniform(0.2, 1.0));
    propensity.push_back(std::clamp(cfg.transfer_probability * rng.uniform(0.0, 2.0), 0.0, 1.0));
  }
  std::vector<double> cumulative(popularity.size());
  std::partial_sum(popularity.begin(), popularity.end(), cumulative.begin());

  const Timestamp day = *parse_timestamp(cfg.service_date + "T00:00:00");
  std::vector<RideLeg> legs;
  GroundTruth truth;
  truth.seed = cfg.seed;
  truth.planted_effects = cfg.planted_effects;

  std::vector<std::pair<std::string, std::size_t>> journey_origin;  // (journey id, stop index)
  for (int j = 0; j < cfg.n_journeys; ++j) {
    const std::string journey_id = fmt::format("J{:06}", j);
    const std::string passenger_id = fmt::format("P{:06}", rng.integer(0, cfg.n_journeys - 1));
    const double pick = rng.uniform() * cumulative.back();
    const std::size_t origin =
        std::min<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                              stop_ids.size() - 1);
    std::string at = stop_ids[origin];
    Timestamp clock = day + rng.integer(6 * 3600, 20 * 3600);
    std::size_t last_route = routes.size();
    std::vector<Leg> jl;
    for (int leg_no = 0; leg_no < 3; ++leg_no) {
      std::vector<std::pair<std::size_t, std::size_t>> options;
      for (const auto& [ti, k] : calls[at])
        if (trips[ti].route != last_route && k + 1 < trips[ti].stops.size()) options.emplace_back(ti, k);
      if (options.empty()) break;
      const auto [ti, k] = options[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(options.size()) - 1))];
      const auto& trip = trips[ti];
      const bool want_transfer = leg_no < 2 && rng.bernoulli(propensity[origin]);
      std::vector<std::size_t> candidates;
      const std::size_t reach = std::min(trip.stops.size() - 1, k + 8);
      if (want_transfer)
        for (std::size_t a = k + 1; a <= reach; ++a)
          if (calls[trip.stops[a]].size() > 2) candidates.push_back(a);
      const bool transferring = !candidates.empty();
      if (!transferring)
        for (std::size_t a = k + 1; a <= std::min(trip.stops.size() - 1, k + 6); ++a) candidates.push_back(a);
      const std::size_t alight =
          candidates[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(candidates.size()) - 1))];
      const double miles = trip.cum_miles[alight] - trip.cum_miles[k];
      const auto ride = std::max<std::int64_t>(
          1, std::llround(miles / routes[trip.route].speed_mph * 3600.0 * rng.uniform(0.9, 1.1)));
      jl.push_back({ti, k, alight, clock, clock + ride});
      clock += ride;
      at = trip.stops[alight];
      last_route = trip.route;
      if (!transferring) break;
      clock += rng.integer(60, 600);
    }

    // Metrics with the same arithmetic the journeys module applies.
    std::int64_t in_vehicle = 0, wait = 0;
    double miles = 0.0, rail = 0.0;
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const auto& l = jl[i];
      const auto& trip = trips[l.trip];
      const auto& route = routes[trip.route];
      in_vehicle += l.alight_time - l.board_time;
      if (i > 0) wait += l.board_time - jl[i - 1].alight_time;
      const double d = trip.cum_miles[l.alight] - trip.cum_miles[l.board];
      miles += d;
      if (route.mode == Mode::rail) rail += d;
      legs.push_back({passenger_id, journey_id, trip.id, route.id, route.mode, trip.stops[l.board],
                      trip.stops[l.alight], l.board_time, l.alight_time});
    }
    ConvenienceMetrics m;
    m.network_miles = miles;
    m.time_per_mile = (static_cast<double>(in_vehicle) / 60.0) / miles;
    m.transfers_per_mile = static_cast<double>(jl.size() - 1) / miles;
    m.transfer_wait_minutes = static_cast<double>(wait) / 60.0;
    m.rail_share = rail / miles;
    truth.journeys[journey_id] = m;
    journey_origin.emplace_back(journey_id, origin);
  }
  truth.n_legs = legs.size();

  // Stop means in journey-id order, matching the order the ids were generated.
  std::vector<std::array<double, kMetricCount>> sums(stop_ids.size());
  std::vector<long long> ridership(stop_ids.size(), 0);
  for (const auto& [jid, origin] : journey_origin) {
    auto v = to_array(truth.journeys[jid]);
    for (std::size_t i = 0; i < kMetricCount; ++i) sums[origin][i] += v[i];
    ++ridership[origin];
  }
  std::vector<std::array<double, kMetricCount>> means(stop_ids.size());
  for (std::size_t s = 0; s < stop_ids.size(); ++s)
    if (ridership[s] > 0)
      for (std::size_t i = 0; i < kMetricCount; ++i) means[s][i] = sums[s][i] / static_cast<double>(ridership[s]);

  std::vector<std::array<double, kPurposeCount>> purposes(stop_ids.size());
  std::vector<long long> respondents(stop_ids.size());
  for (std::size_t s = 0; s < stop_ids.size(); ++s) {
    double total = 0.0;
    for (auto& p : purposes[s]) total += (p = rng.uniform(0.05, 1.0));
    for (auto& p : purposes[s]) p /= total;
    respondents[s] = rng.integer(20, 200);
  }

  auto planted = [&](std::size_t s) {
    double v = 0.0;
    for (const auto& [name, slope] : cfg.planted_effects) {
      auto mi = std::find(kMetricNames.begin(), kMetricNames.end(), name);
      if (mi != kMetricNames.end()) {
        v += slope * means[s][static_cast<std::size_t>(mi - kMetricNames.begin())];
      } else {
        auto pi = std::find(kPurposeNames.begin(), kPurposeNames.end(), name);
        v += slope * purposes[s][static_cast<std::size_t>(pi - kPurposeNames.begin())];
      }
    }
    return v;
  };
  double mean_effect = 0.0;
  std::size_t active = 0;
  for (std::size_t s = 0; s < stop_ids.size(); ++s)
    if (ridership[s] > 0) {
      mean_effect += planted(s);
      ++active;
    }
  truth.intercept = cfg.base_share - (active ? mean_effect / static_cast<double>(active) : 0.0);

  std::map<std::string, DemographicShares> station_rows;
  for (std::size_t s = 0; s < stop_ids.size(); ++s) {
    StopTruth st;
    const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
    const double raw = ridership[s] > 0 ? truth.intercept + planted(s) + noise : cfg.base_share + noise;
    st.low_income_share = std::clamp(raw, 0.0, 1.0);
    st.clamped = st.low_income_share != raw;
    truth.clamped_stops += st.clamped ? 1 : 0;
    st.purpose_shares = purposes[s];
    st.respondents = respondents[s];
    st.ridership = ridership[s];
    st.mean_metrics = from_array(means[s]);
    truth.stops[stop_ids[s]] = st;
  }

  // Survey rows.
  std::map<std::string, Mode> stop_mode;
  for (const auto& route : routes)
    for (const auto& id : route.stops)
      if (route.mode == Mode::rail || !stop_mode.count(id)) stop_mode[id] = route.mode;
  for (const auto& [id, st] : truth.stops) {
    if (cfg.survey_mode == SurveyMode::agency && stop_mode[id] != Mode::rail) continue;
    station_rows[id] = {st.low_income_share, st.purpose_shares, st.respondents};
  }
  std::map<std::string, DemographicShares> route_rows;
  for (const auto& route : routes) {
    if (route.mode != Mode::bus) continue;
    DemographicShares d;
    d.respondent_count = 0;
    double low = 0.0;
    std::array<double, kPurposeCount> p{};
    for (const auto& id : route.stops) {
      const auto& st = truth.stops[id];
      d.respondent_count += st.respondents;
      low += static_cast<double>(st.respondents) * st.low_income_share;
      for (std::size_t q = 0; q < kPurposeCount; ++q) p[q] += static_cast<double>(st.respondents) * st.purpose_shares[q];
    }
    d.low_income_share = low / static_cast<double>(d.respondent_count);
    for (std::size_t q = 0; q < kPurposeCount; ++q) d.purpose_shares[q] = p[q] / static_cast<double>(d.respondent_count);
    route_rows[route.id] = d;
  }

  // Census geography: blocks, block groups (rows 0-2 and 3-4 of a tract) and
  // 5 x 5 block tracts.
  const int tract_cols = (cfg.cols + kTractSpan - 1) / kTractSpan;
  auto tract_code = [&](int r, int c) {
    return fmt::format("{:06}", 100 * ((r / kTractSpan) * tract_cols + c / kTractSpan + 1));
  };
  auto bg_digit = [](int r) { return (r % kTractSpan) < 3 ? 1 : 2; };
  struct Area {
    std::string geoid;
    std::string level;
    Rect rect;
  };
  std::vector<Area> areas;
  std::map<std::string, Rect> groups;
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      const Rect rect{node_x(c), node_y(r), node_x(c + 1), node_y(r + 1)};
      const std::string tract = "25025" + tract_code(r, c);
      const std::string bg = tract + std::to_string(bg_digit(r));
      areas.push_back({bg + fmt::format("{:03}", (r % kTractSpan) * kTractSpan + c % kTractSpan), "block", rect});
      for (const auto& key : {bg, tract}) {
        auto [it, fresh] = groups.try_emplace(key, rect);
        if (!fresh) {
          it->second.x0 = std::min(it->second.x0, rect.x0);
          it->second.y0 = std::min(it->second.y0, rect.y0);
          it->second.x1 = std::max(it->second.x1, rect.x1);
          it->second.y1 = std::max(it->second.y1, rect.y1);
        }
      }
    }
  for (const auto& [geoid, rect] : groups) areas.push_back({geoid, geoid.size() == 12 ? "block_group" : "tract", rect});
  std::sort(areas.begin(), areas.end(), [](const Area& a, const Area& b) {
    return std::tie(a.level, a.geoid) < std::tie(b.level, b.geoid);
  });

  for (const auto& a : areas) {
    for (int radius : {0, 500, 1000}) {
      bool covered = false;
      for (std::size_t s = 0; s < stop_ids.size() && !covered; ++s)
        covered = ridership[s] > 0 && a.rect.distance(stop_xy[stop_ids[s]]) <= radius;
      truth.covered_areas[a.level][radius] += covered ? 1 : 0;
    }
  }

  // Emit files.
  Bundle b;
  b.directory = dir;
  b.gtfs_dir = dir / "gtfs";
  b.legs = dir / "legs.csv";
  b.survey_rail = dir / "survey_rail.csv";
  b.survey_bus = dir / "survey_bus.csv";
  b.areas = dir / "areas.geojson";
  b.ground_truth = dir / "ground_truth.json";
  b.run_config = dir / "run.conf";
  std::error_code ec;
  std::filesystem::create_directories(b.gtfs_dir, ec);
  if (ec) throw Error("cannot create " + b.gtfs_dir.string() + ": " + ec.message());

  write_file_atomic(b.gtfs_dir / "agency.txt",
                    "agency_id,agency_name,agency_url,agency_timezone\nSYN,Synthetic Transit,https://example.org,"
                    "America/New_York\n");
  std::string stops_txt = "stop_id,stop_name,stop_lat,stop_lon\n";
  for (const auto& [id, xy] : stop_xy) {
    auto g = unproject(xy, cfg.origin);
    stops_txt += csv::join({id, "Stop " + id, fmt17(g.lat), fmt17(g.lon)}) + '\n';
  }
  write_file_atomic(b.gtfs_dir / "stops.txt", stops_txt);
  std::string routes_txt = "route_id,agency_id,route_short_name,route_type\n";
  for (std::size_t i = 0; i < routes.size(); ++i)
    routes_txt += csv::join({routes[i].id, "SYN", std::to_string(i + 1), routes[i].mode == Mode::rail ? "1" : "3"}) + '\n';
  write_file_atomic(b.gtfs_dir / "routes.txt", routes_txt);
  std::string trips_txt = "route_id,service_id,trip_id,direction_id\n";
  std::string times_txt = "trip_id,arrival_time,departure_time,stop_id,stop_sequence,shape_dist_traveled\n";
  for (const auto& t : trips) {
    const auto& route = routes[t.route];
    trips_txt += csv::join({route.id, "WKDY", t.id, t.id.substr(t.id.size() - 1)}) + '\n';
    double clock = 6 * 3600.0;
    for (std::size_t k = 0; k < t.stops.size(); ++k) {
      if (k > 0) clock += (t.cum_miles[k] - t.cum_miles[k - 1]) / route.speed_mph * 3600.0;
      const auto hhmmss = gtfs::format_gtfs_time(static_cast<int>(std::lround(clock)));
      times_txt += csv::join({t.id, hhmmss, hhmmss, t.stops[k], std::to_string(k + 1), fmt17(t.shape_dist_m[k])}) + '\n';
    }
  }
  write_file_atomic(b.gtfs_dir / "trips.txt", trips_txt);
  write_file_atomic(b.gtfs_dir / "stop_times.txt", times_txt);

  write_file_atomic(b.legs, format_legs(legs));
  write_file_atomic(b.survey_rail, format_survey_rows(station_rows, "stop_id"));
  write_file_atomic(b.survey_bus, format_survey_rows(route_rows, "route_id"));

  nlohmann::json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = nlohmann::json::array();
  for (const auto& a : areas) {
    nlohmann::json f;
    f["type"] = "Feature";
    f["properties"] = {{"geoid", a.geoid}, {"level", a.level}};
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring_json(a.rect, cfg.origin)})}};
    fc["features"].push_back(std::move(f));
  }
  write_file_atomic(b.areas, fc.dump() + "\n");
  write_file_atomic(b.ground_truth, ground_truth_json(truth));
  write_file_atomic(b.run_config,
                    "# synthetic scenario bundle; paths are relative to this file\n"
                    "gtfs=gtfs\nlegs=legs.csv\nsurvey_rail=survey_rail.csv\nsurvey_bus=survey_bus.csv\n"
                    "areas=areas.geojson\n");
  b.truth = std::move(truth);
  return b;
}

}  // namespace equity::synth
