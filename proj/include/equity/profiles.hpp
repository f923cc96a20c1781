#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace equity {

// Per-journey service quality. Distances in miles, times in minutes.
struct ConvenienceMetrics {
  double time_per_mile = 0.0;
  double transfers_per_mile = 0.0;
  double transfer_wait_minutes = 0.0;
  double network_miles = 0.0;
  double rail_share = 0.0;
};

inline constexpr std::size_t kMetricCount = 5;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "time_per_mile", "transfers_per_mile", "transfer_wait_minutes", "network_miles", "rail_share"};

std::array<double, kMetricCount> to_array(const ConvenienceMetrics& m);
ConvenienceMetrics from_array(const std::array<double, kMetricCount>& a);

enum class Purpose { home_work, home_other, other_nonhome, home_social, home_school };

inline constexpr std::size_t kPurposeCount = 5;
inline constexpr std::array<std::string_view, kPurposeCount> kPurposeNames = {
    "home_work", "home_other", "other_nonhome", "home_social", "home_school"};

struct DemographicShares {
  double low_income_share = 0.0;
  std::array<double, kPurposeCount> purpose_shares{};  // indexed by Purpose
  long long respondent_count = 1;

  double purpose(Purpose p) const { return purpose_shares[static_cast<std::size_t>(p)]; }
  bool operator==(const DemographicShares&) const = default;
};

// Origin-stop aggregate: unweighted means over the journeys starting here.
struct StopProfile {
  std::string stop_id;
  long long ridership = 0;  // journeys originating at the stop
  ConvenienceMetrics metrics;
  std::optional<DemographicShares> demographics;
};

}  // namespace equity
