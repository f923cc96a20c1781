#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equity/gtfs.hpp"
#include "equity/profiles.hpp"

namespace equity {

// Seconds since 1970-01-01T00:00:00 in civil (local, zone-less) time.
using Timestamp = std::int64_t;

// Accepts "YYYY-MM-DDTHH:MM:SS" (or a space separator), optionally suffixed "Z".
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

struct RideLeg {
  std::string passenger_id;
  std::string journey_id;
  std::string trip_id;
  std::string route_id;
  Mode mode = Mode::bus;
  std::string board_stop;
  std::string alight_stop;
  Timestamp board_time = 0;
  Timestamp alight_time = 0;
  bool operator==(const RideLeg&) const = default;
};

// Machine-readable reason codes for the rejects report.
namespace reason {
inline constexpr std::string_view field_count = "field_count";
inline constexpr std::string_view missing_field = "missing_field";
inline constexpr std::string_view bad_timestamp = "bad_timestamp";
inline constexpr std::string_view bad_mode = "bad_mode";
inline constexpr std::string_view time_order = "time_order";
inline constexpr std::string_view same_stop = "same_stop";
inline constexpr std::string_view leg_overlap = "leg_overlap";
inline constexpr std::string_view unknown_trip = "unknown_trip";
inline constexpr std::string_view stop_not_on_trip = "stop_not_on_trip";
inline constexpr std::string_view leg_order = "leg_order";
inline constexpr std::string_view zero_distance = "zero_distance";
}  // namespace reason

// One rejected journey. A journey is rejected at most once, at the first stage
// that finds a problem with it.
struct Reject {
  std::string journey_id;
  std::string reason;
  std::string detail;
  bool operator==(const Reject&) const = default;
};

struct LegFile {
  std::vector<RideLeg> legs;      // legs of journeys with no bad rows
  std::vector<Reject> rejects;    // one per journey with at least one bad row
  std::size_t input_journeys = 0; // distinct journey ids over all data rows
};

inline constexpr std::string_view kLegHeader =
    "passenger_id,journey_id,trip_id,route_id,mode,board_stop,alight_stop,board_time,alight_time";

// Throws IngestionError on an unreadable file or a header missing columns.
LegFile load_legs(const std::filesystem::path& path);
LegFile parse_legs(std::string_view text, const std::string& file_name = "legs");
std::string format_legs(const std::vector<RideLeg>& legs);

struct Journey {
  std::string journey_id;
  std::vector<RideLeg> legs;  // sorted by board time
  int n_transfers = 0;
  double in_vehicle_minutes = 0.0;
  double transfer_wait_minutes = 0.0;

  const std::string& origin_stop() const { return legs.front().board_stop; }
  Timestamp first_board() const { return legs.front().board_time; }
  Timestamp last_alight() const { return legs.back().alight_time; }
};

struct LinkResult {
  std::vector<Journey> journeys;  // ordered by journey id
  std::vector<Reject> rejects;
};

LinkResult link_journeys(std::vector<RideLeg> legs);

struct MetricOptions {
  // Report transfer wait as minutes per network mile instead of minutes.
  bool normalize_transfer_wait = false;
};

// Throws LookupError / OrderingError for legs the network cannot resolve and
// DegenerateJourneyError when the journey covers no network distance.
ConvenienceMetrics journey_metrics(const Journey& journey, const TransitNetwork& network,
                                   const MetricOptions& options = {});

struct JourneyMetrics {
  std::string journey_id;
  std::string origin_stop;
  ConvenienceMetrics metrics;
};

struct MetricsResult {
  std::vector<JourneyMetrics> journeys;
  std::vector<Reject> rejects;
};

MetricsResult compute_metrics(const std::vector<Journey>& journeys, const TransitNetwork& network,
                              const MetricOptions& options = {});

std::map<std::string, StopProfile> stop_profiles(const std::vector<JourneyMetrics>& journeys);

std::string format_rejects(const std::vector<Reject>& rejects);

}  // namespace equity
