#include "equity/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "equity/errors.hpp"

namespace equity {
namespace {

constexpr double kRad = std::numbers::pi / 180.0;

double cross(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
  double c = cross(o, a, b);
  return (c > 0) - (c < 0);
}

bool on_segment(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d) {
  int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
         (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

// Twice the signed shoelace area.
double signed_area2(const Ring& r) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) s += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
  return s;
}

void validate_ring(const Ring& r, const std::string& geoid) {
  if (r.size() < 4) throw ValidationError(geoid + ": ring has fewer than 4 points");
  if (!(r.front() == r.back())) throw ValidationError(geoid + ": ring is not closed");
  const std::size_t n = r.size() - 1;  // segment count
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i] == r[i + 1]) throw ValidationError(geoid + ": ring has a repeated vertex");
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing vertex
      if (segments_intersect(r[i], r[i + 1], r[j], r[j + 1]))
        throw ValidationError(geoid + ": ring is self-intersecting");
    }
  }
  if (signed_area2(r) == 0.0) throw ValidationError(geoid + ": ring has zero area");
}

bool inside_ring(PlanarPoint p, const Ring& r) {
  bool in = false;
  for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
    if ((r[i].y > p.y) != (r[j].y > p.y) &&
        p.x < (r[j].x - r[i].x) * (p.y - r[i].y) / (r[j].y - r[i].y) + r[i].x)
      in = !in;
  }
  return in;
}

double weighted_mean(const std::vector<double>& w, const std::vector<double>& v, double total) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return std::clamp(s / total, *lo, *hi);
}

}  // namespace

PlanarPoint project(GeoPoint p, GeoPoint origin) {
  for (const auto& g : {p, origin})
    if (!(std::abs(g.lat) <= 90.0) || !(std::abs(g.lon) <= 180.0))
      throw ValidationError(fmt::format("coordinate out of range: ({}, {})", g.lat, g.lon));
  return {(p.lon - origin.lon) * kRad * std::cos(origin.lat * kRad) * kEarthRadiusFeet,
          (p.lat - origin.lat) * kRad * kEarthRadiusFeet};
}

GeoPoint unproject(PlanarPoint p, GeoPoint origin) {
  return {origin.lat + p.y / kEarthRadiusFeet / kRad,
          origin.lon + p.x / (kEarthRadiusFeet * std::cos(origin.lat * kRad)) / kRad};
}

const char* to_string(AreaLevel level) {
  switch (level) {
    case AreaLevel::block:
      return "block";
    case AreaLevel::block_group:
      return "block_group";
    case AreaLevel::tract:
      return "tract";
  }
  return "block";
}

AreaLevel parse_area_level(std::string_view text) {
  if (text == "block") return AreaLevel::block;
  if (text == "block_group") return AreaLevel::block_group;
  if (text == "tract") return AreaLevel::tract;
  throw ValidationError(fmt::format("unknown area level '{}'", text));
}

CensusArea make_area(std::string geoid, AreaLevel level, std::vector<Polygon> polygons) {
  if (polygons.empty()) throw ValidationError(geoid + ": no polygons");
  double area2 = 0.0, cx = 0.0, cy = 0.0;
  auto accumulate = [&](const Ring& r, double sign) {
    // Orientation-independent: outer rings add, holes subtract.
    double a = signed_area2(r);
    double s = (a > 0 ? 1.0 : -1.0) * sign;
    area2 += s * a;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      double c = r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
      cx += s * (r[i].x + r[i + 1].x) * c;
      cy += s * (r[i].y + r[i + 1].y) * c;
    }
  };
  for (const auto& poly : polygons) {
    validate_ring(poly.outer, geoid);
    accumulate(poly.outer, 1.0);
    for (const auto& h : poly.holes) {
      validate_ring(h, geoid);
      accumulate(h, -1.0);
    }
  }
  if (!(area2 > 0.0)) throw ValidationError(geoid + ": non-positive area");
  CensusArea out;
  out.geoid = std::move(geoid);
  out.level = level;
  out.polygons = std::move(polygons);
  out.area_sq_feet = area2 / 2.0;
  out.centroid = {cx / (3.0 * area2), cy / (3.0 * area2)};
  return out;
}

double distance_to_segment(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double point_polygon_distance(PlanarPoint p, const CensusArea& area) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poly : area.polygons) {
    if (inside_ring(p, poly.outer) &&
        std::none_of(poly.holes.begin(), poly.holes.end(), [&](const Ring& h) { return inside_ring(p, h); }))
      return 0.0;
    auto scan = [&](const Ring& r) {
      for (std::size_t i = 0; i + 1 < r.size(); ++i) best = std::min(best, distance_to_segment(p, r[i], r[i + 1]));
    };
    scan(poly.outer);
    for (const auto& h : poly.holes) scan(h);
  }
  return best;
}

std::set<std::string> stops_within_buffer(const CensusArea& area, const std::map<std::string, PlanarPoint>& stops,
                                          double radius_feet) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& poly : area.polygons)
    for (const auto& q : poly.outer) {
      min_x = std::min(min_x, q.x);
      max_x = std::max(max_x, q.x);
      min_y = std::min(min_y, q.y);
      max_y = std::max(max_y, q.y);
    }
  std::set<std::string> out;
  for (const auto& [id, p] : stops) {
    // Outside the padded bounding box the distance already exceeds the radius.
    if (p.x < min_x - radius_feet || p.x > max_x + radius_feet || p.y < min_y - radius_feet ||
        p.y > max_y + radius_feet)
      continue;
    if (point_polygon_distance(p, area) <= radius_feet) out.insert(id);
  }
  return out;
}

std::optional<AreaProfile> aggregate_area(const CensusArea& area, const std::map<std::string, StopProfile>& profiles,
                                          const std::map<std::string, PlanarPoint>& stop_positions, double radius_feet,
                                          const IncomeCuts& cuts) {
  std::vector<const StopProfile*> used;
  for (const auto& id : stops_within_buffer(area, stop_positions, radius_feet)) {
    auto it = profiles.find(id);
    if (it != profiles.end() && it->second.demographics && it->second.ridership > 0) used.push_back(&it->second);
  }
  if (used.empty()) return std::nullopt;

  std::vector<double> w;
  double total = 0.0;
  long long ridership = 0;
  for (const auto* s : used) {
    w.push_back(static_cast<double>(s->ridership));
    total += static_cast<double>(s->ridership);
    ridership += s->ridership;
  }
  auto mean_of = [&](auto get) {
    std::vector<double> v;
    v.reserve(used.size());
    for (const auto* s : used) v.push_back(get(*s));
    return weighted_mean(w, v, total);
  };

  AreaProfile out;
  out.geoid = area.geoid;
  out.level = area.level;
  out.ridership = ridership;
  std::array<double, kMetricCount> m{};
  for (std::size_t i = 0; i < kMetricCount; ++i)
    m[i] = mean_of([i](const StopProfile& s) { return to_array(s.metrics)[i]; });
  out.metrics = from_array(m);
  out.low_income_share = mean_of([](const StopProfile& s) { return s.demographics->low_income_share; });
  for (std::size_t p = 0; p < kPurposeCount; ++p)
    out.purpose_shares[p] = mean_of([p](const StopProfile& s) { return s.demographics->purpose_shares[p]; });
  out.income_class = classify_income(out.low_income_share, cuts);
  for (const auto* s : used) out.assigned_stops.push_back(s->stop_id);
  return out;
}

AreaProfile rollup_profiles(std::string geoid, AreaLevel level, const std::vector<const AreaProfile*>& children,
                            const IncomeCuts& cuts) {
  if (children.empty()) throw std::invalid_argument("rollup_profiles: no children");
  std::vector<const AreaProfile*> ordered(children);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->geoid < b->geoid; });

  std::vector<double> w;
  double total = 0.0;
  AreaProfile out;
  out.geoid = std::move(geoid);
  out.level = level;
  std::set<std::string> stops;
  for (const auto* c : ordered) {
    w.push_back(static_cast<double>(c->ridership));
    total += static_cast<double>(c->ridership);
    out.ridership += c->ridership;
    stops.insert(c->assigned_stops.begin(), c->assigned_stops.end());
  }
  auto mean_of = [&](auto get) {
    std::vector<double> v;
    for (const auto* c : ordered) v.push_back(get(*c));
    return weighted_mean(w, v, total);
  };
  std::array<double, kMetricCount> m{};
  for (std::size_t i = 0; i < kMetricCount; ++i)
    m[i] = mean_of([i](const AreaProfile& a) { return to_array(a.metrics)[i]; });
  out.metrics = from_array(m);
  out.low_income_share = mean_of([](const AreaProfile& a) { return a.low_income_share; });
  for (std::size_t p = 0; p < kPurposeCount; ++p)
    out.purpose_shares[p] = mean_of([p](const AreaProfile& a) { return a.purpose_shares[p]; });
  out.income_class = classify_income(out.low_income_share, cuts);
  out.assigned_stops.assign(stops.begin(), stops.end());
  return out;
}

std::string parent_geoid(const std::string& geoid, AreaLevel level) {
  const std::size_t len = level == AreaLevel::tract ? 11 : level == AreaLevel::block_group ? 12 : 15;
  return geoid.substr(0, std::min(len, geoid.size()));
}

std::map<std::string, PlanarPoint> project_stops(const TransitNetwork& network, GeoPoint origin) {
  std::map<std::string, PlanarPoint> out;
  for (const auto& [id, s] : network.stops()) out.emplace(id, project(s.position, origin));
  return out;
}

namespace {

Ring parse_ring(const nlohmann::json& coords, GeoPoint origin) {
  Ring r;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
      throw ValidationError("malformed coordinate");
    r.push_back(project({c[1].get<double>(), c[0].get<double>()}, origin));
  }
  return r;
}

Polygon parse_polygon(const nlohmann::json& rings, GeoPoint origin) {
  if (!rings.is_array() || rings.empty()) throw ValidationError("polygon without rings");
  Polygon p;
  p.outer = parse_ring(rings[0], origin);
  for (std::size_t i = 1; i < rings.size(); ++i) p.holes.push_back(parse_ring(rings[i], origin));
  return p;
}

}  // namespace

AreaLoad parse_areas(std::string_view text, GeoPoint origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("areas", std::string("invalid GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array())
    throw IngestionError("areas", "expected a GeoJSON FeatureCollection");

  AreaLoad out;
  std::set<std::string> seen;
  for (const auto& feature : doc["features"]) {
    std::string geoid;
    try {
      const auto& props = feature.at("properties");
      const auto& g = props.at("geoid");
      geoid = g.is_string() ? g.get<std::string>() : g.dump();
      auto level = parse_area_level(props.at("level").get<std::string>());
      if (!seen.insert(geoid).second) throw ValidationError("duplicate geoid");
      const auto& geom = feature.at("geometry");
      const auto type = geom.at("type").get<std::string>();
      std::vector<Polygon> polys;
      if (type == "Polygon") {
        polys.push_back(parse_polygon(geom.at("coordinates"), origin));
      } else if (type == "MultiPolygon") {
        for (const auto& p : geom.at("coordinates")) polys.push_back(parse_polygon(p, origin));
      } else {
        throw ValidationError("unsupported geometry type " + type);
      }
      out.areas.push_back(make_area(geoid, level, std::move(polys)));
      out.geometry_json[geoid] = geom.dump();
    } catch (const nlohmann::json::exception& e) {
      out.rejects.push_back({geoid, std::string("malformed feature: ") + e.what()});
    } catch (const ValidationError& e) {
      out.rejects.push_back({geoid, e.what()});
    }
  }
  return out;
}

AreaLoad load_areas(const std::filesystem::path& path, GeoPoint origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("areas", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_areas(ss.str(), origin);
}

}  // namespace equity
