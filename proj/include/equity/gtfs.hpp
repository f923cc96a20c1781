#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace equity {

inline constexpr double kEarthRadiusFeet = 20'902'231.0;
inline constexpr double kFeetPerMile = 5280.0;
inline constexpr double kMetersPerMile = 1609.344;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  bool operator==(const GeoPoint&) const = default;
};

// Great-circle distance on a sphere of radius kEarthRadiusFeet.
double haversine_miles(GeoPoint a, GeoPoint b);

enum class Mode { bus, rail };

const char* to_string(Mode m);
Mode parse_mode(const std::string& text);  // throws ValidationError

// GTFS route_type: 3 is bus, 0/1/2 are rail; anything else is rejected.
Mode mode_from_route_type(int route_type);

namespace gtfs {

struct Stop {
  std::string name;
  GeoPoint position;
  Mode mode = Mode::bus;  // rail when any rail route serves the stop
  bool operator==(const Stop&) const = default;
};

struct Route {
  std::string short_name;
  Mode mode = Mode::bus;
  bool operator==(const Route&) const = default;
};

struct StopTime {
  std::string stop_id;
  double cumulative_miles = 0.0;
  int arrival_seconds = 0;    // seconds past midnight, may exceed 24h
  int departure_seconds = 0;
  bool operator==(const StopTime&) const = default;
};

struct Trip {
  std::string route_id;
  std::vector<StopTime> stop_times;  // in stop_sequence order
  bool operator==(const Trip&) const = default;
};

struct FeedOptions {
  // Multiplier taking shape_dist_traveled values to miles. GTFS leaves the unit
  // to the producer; meters is the common choice.
  double shape_dist_to_miles = 1.0 / kMetersPerMile;
};

struct FeedSummary {
  std::size_t stops = 0;
  std::size_t routes = 0;
  std::size_t bus_routes = 0;
  std::size_t rail_routes = 0;
  std::size_t trips = 0;
  std::size_t stop_times = 0;
  std::size_t trips_with_shape_dist = 0;
  std::size_t shape_points = 0;
};

}  // namespace gtfs

// Immutable after construction. Every read is safe from any thread.
class TransitNetwork {
 public:
  TransitNetwork() = default;
  // Validates the network invariants; throws ValidationError.
  TransitNetwork(std::map<std::string, gtfs::Stop> stops, std::map<std::string, gtfs::Route> routes,
                 std::map<std::string, gtfs::Trip> trips);

  const std::map<std::string, gtfs::Stop>& stops() const { return stops_; }
  const std::map<std::string, gtfs::Route>& routes() const { return routes_; }
  const std::map<std::string, gtfs::Trip>& trips() const { return trips_; }
  GeoPoint region_origin() const { return origin_; }

  const gtfs::Trip& trip(const std::string& trip_id) const;  // throws LookupError

  // Routes with at least one trip calling at `stop_id`.
  std::vector<std::string> routes_serving(const std::string& stop_id) const;

  // Distance along `trip_id` between two of its stops; board must precede alight.
  double leg_distance(const std::string& trip_id, const std::string& board_stop,
                      const std::string& alight_stop) const;

  bool operator==(const TransitNetwork& o) const {
    return stops_ == o.stops_ && routes_ == o.routes_ && trips_ == o.trips_ && origin_ == o.origin_;
  }

 private:
  std::map<std::string, gtfs::Stop> stops_;
  std::map<std::string, gtfs::Route> routes_;
  std::map<std::string, gtfs::Trip> trips_;
  std::map<std::string, std::vector<std::string>> routes_by_stop_;
  GeoPoint origin_;
};

namespace gtfs {

TransitNetwork parse_feed(const std::filesystem::path& directory, const FeedOptions& options = {});

// Writes stops/routes/trips/stop_times with shape_dist_traveled in the unit
// implied by `options`, so that parse_feed(write_feed(n)) reproduces `n`.
void write_feed(const TransitNetwork& network, const std::filesystem::path& directory,
                const FeedOptions& options = {});

FeedSummary summarize_feed(const std::filesystem::path& directory, const FeedOptions& options = {});
std::string format_summary(const FeedSummary& summary);

int parse_gtfs_time(const std::string& text);  // "HH:MM:SS", throws ValidationError
std::string format_gtfs_time(int seconds);

}  // namespace gtfs

double leg_distance(const TransitNetwork& network, const std::string& trip_id,
                    const std::string& board_stop, const std::string& alight_stop);

}  // namespace equity
