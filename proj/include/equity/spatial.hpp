#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "equity/demographics.hpp"
#include "equity/gtfs.hpp"
#include "equity/profiles.hpp"

namespace equity {

// Local planar coordinates in feet.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PlanarPoint&) const = default;
};

// Equirectangular projection about `origin`:
//   x = (lon - lon0) cos(lat0) R,  y = (lat - lat0) R   (angles in radians, R in feet)
// Throws ValidationError for latitudes outside [-90, 90] or longitudes outside
// [-180, 180]. Accuracy is intended for points within about a degree of origin.
PlanarPoint project(GeoPoint p, GeoPoint origin);
GeoPoint unproject(PlanarPoint p, GeoPoint origin);

enum class AreaLevel { block, block_group, tract };

const char* to_string(AreaLevel level);
AreaLevel parse_area_level(std::string_view text);  // throws ValidationError

using Ring = std::vector<PlanarPoint>;  // closed: front() == back()

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

struct CensusArea {
  std::string geoid;
  AreaLevel level = AreaLevel::block;
  std::vector<Polygon> polygons;
  PlanarPoint centroid;
  double area_sq_feet = 0.0;
};

// Validates closure, simplicity and positive area; fills centroid and area.
// Throws ValidationError naming the geoid.
CensusArea make_area(std::string geoid, AreaLevel level, std::vector<Polygon> polygons);

double distance_to_segment(PlanarPoint p, PlanarPoint a, PlanarPoint b);

// Zero inside (boundary included), else distance to the nearest ring edge.
double point_polygon_distance(PlanarPoint p, const CensusArea& area);

std::set<std::string> stops_within_buffer(const CensusArea& area, const std::map<std::string, PlanarPoint>& stops,
                                          double radius_feet);

inline constexpr double kDefaultBufferFeet = 500.0;

struct AreaProfile {
  std::string geoid;
  AreaLevel level = AreaLevel::block;
  long long ridership = 0;
  ConvenienceMetrics metrics;  // ridership-weighted means
  double low_income_share = 0.0;
  std::array<double, kPurposeCount> purpose_shares{};
  IncomeClass income_class = IncomeClass::middle;
  std::vector<std::string> assigned_stops;  // sorted
};

// Ridership-weighted means over the stops within `radius_feet` of the area that
// carry demographics. nullopt when no such stop exists.
std::optional<AreaProfile> aggregate_area(const CensusArea& area, const std::map<std::string, StopProfile>& profiles,
                                          const std::map<std::string, PlanarPoint>& stop_positions, double radius_feet,
                                          const IncomeCuts& cuts = {});

// Display roll-up of finer profiles (e.g. blocks into a tract) with the same
// ridership-weighted rule. `children` must be non-empty.
AreaProfile rollup_profiles(std::string geoid, AreaLevel level, const std::vector<const AreaProfile*>& children,
                            const IncomeCuts& cuts = {});

// Prefix of a block geoid identifying its ancestor at `level`
// (state 2 + county 3 + tract 6 + block group 1 + block 4 digits).
std::string parent_geoid(const std::string& geoid, AreaLevel level);

std::map<std::string, PlanarPoint> project_stops(const TransitNetwork& network, GeoPoint origin);

struct AreaReject {
  std::string geoid;
  std::string reason;
};

struct AreaLoad {
  std::vector<CensusArea> areas;
  std::vector<AreaReject> rejects;
  std::map<std::string, std::string> geometry_json;  // original GeoJSON geometry per geoid
};

// GeoJSON FeatureCollection of Polygon / MultiPolygon features with properties
// `geoid` and `level`; coordinates are WGS84 [lon, lat].
AreaLoad load_areas(const std::filesystem::path& path, GeoPoint origin);
AreaLoad parse_areas(std::string_view text, GeoPoint origin);

}  // namespace equity
