#include "equity/gtfs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "equity/csv.hpp"
#include "equity/errors.hpp"

namespace equity {

double haversine_miles(GeoPoint a, GeoPoint b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  const double c = 2.0 * std::atan2(std::sqrt(s), std::sqrt(std::max(0.0, 1.0 - s)));
  return c * kEarthRadiusFeet / kFeetPerMile;
}

const char* to_string(Mode m) { return m == Mode::rail ? "rail" : "bus"; }

Mode parse_mode(const std::string& text) {
  if (text == "bus") return Mode::bus;
  if (text == "rail") return Mode::rail;
  throw ValidationError("unknown mode '" + text + "'");
}

Mode mode_from_route_type(int route_type) {
  switch (route_type) {
    case 0:
    case 1:
    case 2:
      return Mode::rail;
    case 3:
      return Mode::bus;
    default:
      throw ValidationError(fmt::format("unsupported route_type {}", route_type));
  }
}

TransitNetwork::TransitNetwork(std::map<std::string, gtfs::Stop> stops,
                               std::map<std::string, gtfs::Route> routes,
                               std::map<std::string, gtfs::Trip> trips)
    : stops_(std::move(stops)), routes_(std::move(routes)), trips_(std::move(trips)) {
  std::vector<std::string> dangling;
  std::map<std::string, std::set<std::string>> serving;
  for (const auto& [trip_id, trip] : trips_) {
    if (!routes_.count(trip.route_id))
      throw ValidationError(fmt::format("trip {} references unknown route {}", trip_id, trip.route_id));
    double prev = 0.0;
    for (std::size_t i = 0; i < trip.stop_times.size(); ++i) {
      const auto& st = trip.stop_times[i];
      if (!stops_.count(st.stop_id)) {
        dangling.push_back(fmt::format("{} (stop {})", trip_id, st.stop_id));
        break;
      }
      if (i == 0 && st.cumulative_miles != 0.0)
        throw ValidationError(fmt::format("trip {}: cumulative distance must start at 0", trip_id));
      if (!(st.cumulative_miles >= prev) || !std::isfinite(st.cumulative_miles))
        throw ValidationError(fmt::format("trip {}: cumulative distance decreases at stop {}", trip_id, st.stop_id));
      prev = st.cumulative_miles;
      serving[st.stop_id].insert(trip.route_id);
    }
  }
  if (!dangling.empty()) {
    std::string msg = "trips reference unknown stops:";
    for (const auto& d : dangling) msg += " " + d;
    throw ValidationError(msg);
  }

  for (auto& [stop_id, stop] : stops_) {
    stop.mode = Mode::bus;
    auto it = serving.find(stop_id);
    if (it == serving.end()) continue;
    for (const auto& route_id : it->second)
      if (routes_.at(route_id).mode == Mode::rail) stop.mode = Mode::rail;
    routes_by_stop_[stop_id].assign(it->second.begin(), it->second.end());
  }

  if (!stops_.empty()) {
    double lat = 0.0, lon = 0.0;
    for (const auto& [id, s] : stops_) {
      lat += s.position.lat;
      lon += s.position.lon;
    }
    origin_ = {lat / static_cast<double>(stops_.size()), lon / static_cast<double>(stops_.size())};
  }
}

const gtfs::Trip& TransitNetwork::trip(const std::string& trip_id) const {
  auto it = trips_.find(trip_id);
  if (it == trips_.end()) throw LookupError("unknown trip " + trip_id);
  return it->second;
}

std::vector<std::string> TransitNetwork::routes_serving(const std::string& stop_id) const {
  auto it = routes_by_stop_.find(stop_id);
  return it == routes_by_stop_.end() ? std::vector<std::string>{} : it->second;
}

double TransitNetwork::leg_distance(const std::string& trip_id, const std::string& board_stop,
                                    const std::string& alight_stop) const {
  const auto& stops = trip(trip_id).stop_times;
  auto on_trip = [&](const std::string& id) {
    return std::find_if(stops.begin(), stops.end(), [&](const auto& st) { return st.stop_id == id; });
  };
  auto board = on_trip(board_stop);
  if (board == stops.end()) throw LookupError(fmt::format("stop {} is not on trip {}", board_stop, trip_id));
  if (on_trip(alight_stop) == stops.end())
    throw LookupError(fmt::format("stop {} is not on trip {}", alight_stop, trip_id));
  // Loop routes may call at a stop twice; take the first alight after boarding.
  auto alight = std::find_if(std::next(board), stops.end(), [&](const auto& st) { return st.stop_id == alight_stop; });
  if (alight == stops.end())
    throw OrderingError(fmt::format("trip {}: alight stop {} does not follow board stop {}", trip_id, alight_stop,
                                    board_stop));
  return alight->cumulative_miles - board->cumulative_miles;
}

double leg_distance(const TransitNetwork& network, const std::string& trip_id, const std::string& board_stop,
                    const std::string& alight_stop) {
  return network.leg_distance(trip_id, board_stop, alight_stop);
}

namespace gtfs {
namespace {

struct ParsedFeed {
  TransitNetwork network;
  std::size_t trips_with_shape_dist = 0;
  std::size_t stop_time_rows = 0;
  std::size_t shape_points = 0;
};

csv::Table read_required(const std::filesystem::path& dir, const std::string& name) {
  auto path = dir / name;
  if (!std::filesystem::exists(path)) throw IngestionError(name, "required file is missing");
  return csv::Table::read(path);
}

const std::string& field(const csv::Row& row, std::size_t col) {
  static const std::string empty;
  return col < row.fields.size() ? row.fields[col] : empty;
}

double require_double(const csv::Row& row, std::size_t col, const std::string& file) {
  auto v = csv::parse_double(field(row, col));
  if (!v) throw ValidationError(fmt::format("{} line {}: expected a number, got '{}'", file, row.line, field(row, col)));
  return *v;
}

struct RawStopTime {
  long long sequence;
  StopTime st;
  std::optional<double> shape_dist;
};

ParsedFeed parse(const std::filesystem::path& dir, const FeedOptions& options) {
  if (!std::filesystem::is_directory(dir)) throw IngestionError(dir.string(), "feed directory not found");
  auto stops_t = read_required(dir, "stops.txt");
  auto routes_t = read_required(dir, "routes.txt");
  auto trips_t = read_required(dir, "trips.txt");
  auto stop_times_t = read_required(dir, "stop_times.txt");

  std::map<std::string, Stop> stops;
  {
    const std::string f = "stops.txt";
    auto id = stops_t.require_column("stop_id", f);
    auto lat = stops_t.require_column("stop_lat", f);
    auto lon = stops_t.require_column("stop_lon", f);
    auto name = stops_t.column("stop_name");
    auto loc_type = stops_t.column("location_type");
    for (const auto& row : stops_t.rows()) {
      // Generic nodes and boarding areas carry no coordinates.
      if (loc_type && (field(row, *loc_type) == "3" || field(row, *loc_type) == "4") && field(row, lat).empty())
        continue;
      Stop s;
      s.name = name ? field(row, *name) : std::string{};
      s.position = {require_double(row, lat, f), require_double(row, lon, f)};
      if (std::abs(s.position.lat) > 90.0 || std::abs(s.position.lon) > 180.0)
        throw ValidationError(fmt::format("{} line {}: coordinates out of range", f, row.line));
      const auto& sid = field(row, id);
      if (!stops.emplace(sid, std::move(s)).second)
        throw ValidationError(fmt::format("{}: duplicate stop_id {}", f, sid));
    }
  }

  std::map<std::string, Route> routes;
  {
    const std::string f = "routes.txt";
    auto id = routes_t.require_column("route_id", f);
    auto type = routes_t.require_column("route_type", f);
    auto short_name = routes_t.column("route_short_name");
    for (const auto& row : routes_t.rows()) {
      auto rt = csv::parse_int(field(row, type));
      if (!rt) throw ValidationError(fmt::format("{} line {}: bad route_type", f, row.line));
      Route r;
      try {
        r.mode = mode_from_route_type(static_cast<int>(*rt));
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{} route {}: {}", f, field(row, id), e.what()));
      }
      r.short_name = short_name ? field(row, *short_name) : std::string{};
      routes.emplace(field(row, id), std::move(r));
    }
  }

  std::map<std::string, Trip> trips;
  {
    const std::string f = "trips.txt";
    auto id = trips_t.require_column("trip_id", f);
    auto route = trips_t.require_column("route_id", f);
    for (const auto& row : trips_t.rows()) {
      if (!routes.count(field(row, route)))
        throw ValidationError(fmt::format("{}: trip {} references unknown route {}", f, field(row, id), field(row, route)));
      trips[field(row, id)].route_id = field(row, route);
    }
  }

  ParsedFeed out;
  std::map<std::string, std::vector<RawStopTime>> raw;
  {
    const std::string f = "stop_times.txt";
    auto trip = stop_times_t.require_column("trip_id", f);
    auto stop = stop_times_t.require_column("stop_id", f);
    auto seq = stop_times_t.require_column("stop_sequence", f);
    auto arr = stop_times_t.column("arrival_time");
    auto dep = stop_times_t.column("departure_time");
    auto dist = stop_times_t.column("shape_dist_traveled");
    for (const auto& row : stop_times_t.rows()) {
      const auto& trip_id = field(row, trip);
      if (!trips.count(trip_id))
        throw ValidationError(fmt::format("{} line {}: unknown trip {}", f, row.line, trip_id));
      auto s = csv::parse_int(field(row, seq));
      if (!s) throw ValidationError(fmt::format("{} line {}: bad stop_sequence", f, row.line));
      RawStopTime r{*s, {}, std::nullopt};
      r.st.stop_id = field(row, stop);
      std::string a = arr ? field(row, *arr) : std::string{};
      std::string d = dep ? field(row, *dep) : std::string{};
      if (a.empty()) a = d;
      if (d.empty()) d = a;
      r.st.arrival_seconds = a.empty() ? -1 : parse_gtfs_time(a);
      r.st.departure_seconds = d.empty() ? -1 : parse_gtfs_time(d);
      if (dist && !field(row, *dist).empty()) r.shape_dist = require_double(row, *dist, f);
      raw[trip_id].push_back(std::move(r));
      ++out.stop_time_rows;
    }
  }

  for (auto& [trip_id, rows] : raw) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.sequence < y.sequence; });
    bool all_dist = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.shape_dist.has_value(); });
    auto& trip = trips.at(trip_id);
    int last_time = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto st = rows[i].st;
      if (st.arrival_seconds < 0) st.arrival_seconds = last_time;
      if (st.departure_seconds < 0) st.departure_seconds = st.arrival_seconds;
      last_time = st.departure_seconds;
      if (all_dist) {
        if (i > 0 && *rows[i].shape_dist < *rows[i - 1].shape_dist)
          throw ValidationError(fmt::format("trip {}: shape_dist_traveled is not monotone at stop_sequence {}", trip_id,
                                            rows[i].sequence));
        st.cumulative_miles = (*rows[i].shape_dist - *rows[0].shape_dist) * options.shape_dist_to_miles;
      } else if (i > 0) {
        auto prev = stops.find(rows[i - 1].st.stop_id);
        auto cur = stops.find(st.stop_id);
        // Dangling references are reported by the network constructor.
        double step = (prev != stops.end() && cur != stops.end()) ? haversine_miles(prev->second.position, cur->second.position)
                                                                  : 0.0;
        st.cumulative_miles = trip.stop_times.back().cumulative_miles + step;
      }
      trip.stop_times.push_back(std::move(st));
    }
    if (all_dist && !rows.empty()) ++out.trips_with_shape_dist;
  }

  if (std::filesystem::exists(dir / "shapes.txt")) out.shape_points = csv::Table::read(dir / "shapes.txt").rows().size();

  out.network = TransitNetwork(std::move(stops), std::move(routes), std::move(trips));
  return out;
}

}  // namespace

int parse_gtfs_time(const std::string& text) {
  int h = 0, m = 0, s = 0;
  char c1 = 0, c2 = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%d%c%d%c%d%n", &h, &c1, &m, &c2, &s, &consumed) != 5 || c1 != ':' || c2 != ':' ||
      static_cast<std::size_t>(consumed) != text.size() || h < 0 || m < 0 || m > 59 || s < 0 || s > 59)
    throw ValidationError("bad GTFS time '" + text + "'");
  return h * 3600 + m * 60 + s;
}

std::string format_gtfs_time(int seconds) {
  return fmt::format("{:02}:{:02}:{:02}", seconds / 3600, (seconds / 60) % 60, seconds % 60);
}

TransitNetwork parse_feed(const std::filesystem::path& directory, const FeedOptions& options) {
  return parse(directory, options).network;
}

FeedSummary summarize_feed(const std::filesystem::path& directory, const FeedOptions& options) {
  auto parsed = parse(directory, options);
  const auto& n = parsed.network;
  FeedSummary s;
  s.stops = n.stops().size();
  s.routes = n.routes().size();
  for (const auto& [id, r] : n.routes()) (r.mode == Mode::bus ? s.bus_routes : s.rail_routes)++;
  s.trips = n.trips().size();
  s.stop_times = parsed.stop_time_rows;
  s.trips_with_shape_dist = parsed.trips_with_shape_dist;
  s.shape_points = parsed.shape_points;
  return s;
}

std::string format_summary(const FeedSummary& s) {
  return fmt::format(
      "stops={}\nroutes={}\nbus_routes={}\nrail_routes={}\ntrips={}\nstop_times={}\ntrips_with_shape_dist={}\nshape_points={}\n",
      s.stops, s.routes, s.bus_routes, s.rail_routes, s.trips, s.stop_times, s.trips_with_shape_dist, s.shape_points);
}

void write_feed(const TransitNetwork& network, const std::filesystem::path& dir, const FeedOptions& options) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "agency.txt",
                    "agency_id,agency_name,agency_url,agency_timezone\nA,Agency,https://example.org,America/New_York\n");

  std::string stops = "stop_id,stop_name,stop_lat,stop_lon\n";
  for (const auto& [id, s] : network.stops())
    stops += csv::join({id, s.name, fmt::format("{:.17g}", s.position.lat), fmt::format("{:.17g}", s.position.lon)}) + "\n";
  write_file_atomic(dir / "stops.txt", stops);

  std::string routes = "route_id,agency_id,route_short_name,route_type\n";
  for (const auto& [id, r] : network.routes())
    routes += csv::join({id, "A", r.short_name, r.mode == Mode::bus ? "3" : "1"}) + "\n";
  write_file_atomic(dir / "routes.txt", routes);

  std::string trips = "route_id,service_id,trip_id\n";
  std::string times = "trip_id,arrival_time,departure_time,stop_id,stop_sequence,shape_dist_traveled\n";
  for (const auto& [id, t] : network.trips()) {
    trips += csv::join({t.route_id, "S", id}) + "\n";
    for (std::size_t i = 0; i < t.stop_times.size(); ++i) {
      const auto& st = t.stop_times[i];
      times += csv::join({id, format_gtfs_time(st.arrival_seconds), format_gtfs_time(st.departure_seconds), st.stop_id,
                          std::to_string(i + 1), fmt::format("{:.17g}", st.cumulative_miles / options.shape_dist_to_miles)}) +
               "\n";
    }
  }
  write_file_atomic(dir / "trips.txt", trips);
  write_file_atomic(dir / "stop_times.txt", times);
}

}  // namespace gtfs
}  // namespace equity
