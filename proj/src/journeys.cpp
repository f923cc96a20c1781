#include "equity/journeys.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "equity/csv.hpp"
#include "equity/errors.hpp"

namespace equity {

std::array<double, kMetricCount> to_array(const ConvenienceMetrics& m) {
  return {m.time_per_mile, m.transfers_per_mile, m.transfer_wait_minutes, m.network_miles, m.rail_share};
}

ConvenienceMetrics from_array(const std::array<double, kMetricCount>& a) { return {a[0], a[1], a[2], a[3], a[4]}; }

namespace {

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::tuple<std::int64_t, unsigned, unsigned> civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2), m, d};
}

bool leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : days[m - 1];
}

bool digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

auto leg_key(const RideLeg& l) {
  return std::tie(l.board_time, l.alight_time, l.trip_id, l.board_stop, l.alight_stop, l.route_id, l.mode,
                  l.passenger_id);
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  // YYYY-MM-DDTHH:MM:SS
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':')
    return std::nullopt;
  auto y = s.substr(0, 4), mo = s.substr(5, 2), d = s.substr(8, 2);
  auto h = s.substr(11, 2), mi = s.substr(14, 2), se = s.substr(17, 2);
  for (auto part : {y, mo, d, h, mi, se})
    if (!digits(part)) return std::nullopt;
  const int year = to_int(y), month = to_int(mo), day = to_int(d);
  const int hour = to_int(h), minute = to_int(mi), second = to_int(se);
  if (month < 1 || month > 12 || day < 1 || static_cast<unsigned>(day) > days_in_month(year, month) || hour > 23 ||
      minute > 59 || second > 59)
    return std::nullopt;
  return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 + hour * 3600 +
         minute * 60 + second;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
  std::int64_t secs = t - days * 86400;
  auto [y, m, d] = civil_from_days(days);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}", y, m, d, secs / 3600, (secs / 60) % 60, secs % 60);
}

LegFile parse_legs(std::string_view text, const std::string& file_name) {
  auto table = csv::Table::parse(text);
  if (table.empty_file()) throw IngestionError(file_name, "missing header");
  static constexpr std::array<std::string_view, 9> columns = {
      "passenger_id", "journey_id", "trip_id", "route_id", "mode", "board_stop", "alight_stop", "board_time",
      "alight_time"};
  std::array<std::size_t, 9> col{};
  for (std::size_t i = 0; i < columns.size(); ++i) {
    auto c = table.column(columns[i]);
    if (!c) throw IngestionError(file_name, fmt::format("malformed header: missing column '{}'", columns[i]));
    col[i] = *c;
  }
  const std::size_t width = table.header().size();

  LegFile out;
  std::set<std::string> seen;
  std::map<std::string, Reject> bad;  // first bad row per journey
  std::vector<RideLeg> good;
  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    const std::string journey_id = col[1] < f.size() ? f[col[1]] : std::string{};
    seen.insert(journey_id);
    auto reject = [&](std::string_view why, std::string detail) {
      bad.try_emplace(journey_id, Reject{journey_id, std::string(why), fmt::format("line {}: {}", row.line, detail)});
    };
    if (f.size() != width) {
      reject(reason::field_count, fmt::format("expected {} fields, got {}", width, f.size()));
      continue;
    }
    auto get = [&](std::size_t i) -> const std::string& { return f[col[i]]; };
    bool missing = false;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (get(i).empty()) {
        reject(reason::missing_field, fmt::format("empty {}", columns[i]));
        missing = true;
        break;
      }
    }
    if (missing) continue;

    RideLeg leg;
    leg.passenger_id = get(0);
    leg.journey_id = get(1);
    leg.trip_id = get(2);
    leg.route_id = get(3);
    if (get(4) == "bus") {
      leg.mode = Mode::bus;
    } else if (get(4) == "rail") {
      leg.mode = Mode::rail;
    } else {
      reject(reason::bad_mode, "mode '" + get(4) + "'");
      continue;
    }
    leg.board_stop = get(5);
    leg.alight_stop = get(6);
    auto board = parse_timestamp(get(7));
    auto alight = parse_timestamp(get(8));
    if (!board || !alight) {
      reject(reason::bad_timestamp, "unparseable " + (board ? get(8) : get(7)));
      continue;
    }
    leg.board_time = *board;
    leg.alight_time = *alight;
    if (leg.alight_time < leg.board_time) {
      reject(reason::time_order, "alight_time precedes board_time");
      continue;
    }
    if (leg.board_stop == leg.alight_stop) {
      reject(reason::same_stop, "board_stop equals alight_stop");
      continue;
    }
    good.push_back(std::move(leg));
  }

  out.input_journeys = seen.size();
  for (auto& leg : good)
    if (!bad.count(leg.journey_id)) out.legs.push_back(std::move(leg));
  for (auto& [id, r] : bad) out.rejects.push_back(std::move(r));
  return out;
}

LegFile load_legs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("legs", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_legs(ss.str(), "legs");
}

std::string format_legs(const std::vector<RideLeg>& legs) {
  std::string out(kLegHeader);
  out += '\n';
  for (const auto& l : legs)
    out += csv::join({l.passenger_id, l.journey_id, l.trip_id, l.route_id, to_string(l.mode), l.board_stop,
                      l.alight_stop, format_timestamp(l.board_time), format_timestamp(l.alight_time)}) +
           '\n';
  return out;
}

LinkResult link_journeys(std::vector<RideLeg> legs) {
  std::map<std::string, std::vector<RideLeg>> grouped;
  for (auto& leg : legs) grouped[leg.journey_id].push_back(std::move(leg));

  LinkResult out;
  for (auto& [id, group] : grouped) {
    std::sort(group.begin(), group.end(), [](const RideLeg& a, const RideLeg& b) { return leg_key(a) < leg_key(b); });
    Journey j;
    j.journey_id = id;
    bool overlap = false;
    Timestamp in_vehicle = 0, wait = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      in_vehicle += group[i].alight_time - group[i].board_time;
      if (i > 0) {
        if (group[i].board_time < group[i - 1].alight_time) {
          overlap = true;
          out.rejects.push_back({id, std::string(reason::leg_overlap),
                                 fmt::format("leg {} boards before leg {} alights", i + 1, i)});
          break;
        }
        wait += group[i].board_time - group[i - 1].alight_time;
      }
    }
    if (overlap) continue;
    j.n_transfers = static_cast<int>(group.size()) - 1;
    j.in_vehicle_minutes = static_cast<double>(in_vehicle) / 60.0;
    j.transfer_wait_minutes = static_cast<double>(wait) / 60.0;
    j.legs = std::move(group);
    out.journeys.push_back(std::move(j));
  }
  return out;
}

ConvenienceMetrics journey_metrics(const Journey& journey, const TransitNetwork& network, const MetricOptions& options) {
  double miles = 0.0, rail = 0.0;
  for (const auto& leg : journey.legs) {
    const double d = network.leg_distance(leg.trip_id, leg.board_stop, leg.alight_stop);
    miles += d;
    if (leg.mode == Mode::rail) rail += d;
  }
  if (!(miles > 0.0))
    throw DegenerateJourneyError("journey " + journey.journey_id + " covers zero network distance");
  ConvenienceMetrics m;
  m.network_miles = miles;
  m.time_per_mile = journey.in_vehicle_minutes / miles;
  m.transfers_per_mile = journey.n_transfers / miles;
  m.transfer_wait_minutes =
      options.normalize_transfer_wait ? journey.transfer_wait_minutes / miles : journey.transfer_wait_minutes;
  m.rail_share = rail / miles;
  return m;
}

MetricsResult compute_metrics(const std::vector<Journey>& journeys, const TransitNetwork& network,
                              const MetricOptions& options) {
  MetricsResult out;
  out.journeys.reserve(journeys.size());
  for (const auto& j : journeys) {
    std::string_view why;
    std::string detail;
    try {
      for (const auto& leg : j.legs)
        if (!network.trips().count(leg.trip_id)) throw LookupError("unknown trip " + leg.trip_id);
      out.journeys.push_back({j.journey_id, j.origin_stop(), journey_metrics(j, network, options)});
      continue;
    } catch (const OrderingError& e) {
      why = reason::leg_order;
      detail = e.what();
    } catch (const DegenerateJourneyError& e) {
      why = reason::zero_distance;
      detail = e.what();
    } catch (const LookupError& e) {
      detail = e.what();
      why = detail.rfind("unknown trip", 0) == 0 ? reason::unknown_trip : reason::stop_not_on_trip;
    }
    out.rejects.push_back({j.journey_id, std::string(why), std::move(detail)});
  }
  return out;
}

std::map<std::string, StopProfile> stop_profiles(const std::vector<JourneyMetrics>& journeys) {
  // Sum in journey-id order so the means do not depend on input order.
  std::vector<const JourneyMetrics*> ordered;
  ordered.reserve(journeys.size());
  for (const auto& j : journeys) ordered.push_back(&j);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->journey_id < b->journey_id; });

  std::map<std::string, std::array<double, kMetricCount>> sums;
  std::map<std::string, StopProfile> out;
  for (const auto* j : ordered) {
    auto& p = out[j->origin_stop];
    p.stop_id = j->origin_stop;
    ++p.ridership;
    auto& s = sums[j->origin_stop];
    auto v = to_array(j->metrics);
    for (std::size_t i = 0; i < kMetricCount; ++i) s[i] += v[i];
  }
  for (auto& [id, p] : out) {
    auto s = sums.at(id);
    for (auto& x : s) x /= static_cast<double>(p.ridership);
    p.metrics = from_array(s);
  }
  return out;
}

std::string format_rejects(const std::vector<Reject>& rejects) {
  std::string out = "journey_id,reason\n";
  for (const auto& r : rejects) out += csv::join({r.journey_id, r.reason}) + '\n';
  return out;
}

}  // namespace equity
