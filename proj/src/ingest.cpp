#include "traj/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "traj/error.hpp"

namespace traj {
namespace {

using nlohmann::json;

// --- small CSV dialect: comma separated, double quotes, CRLF tolerated ---

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void strip_bom(std::string& line) {
  if (line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' && line[2] == '\xBF') {
    line.erase(0, 3);
  }
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// Days from 1970-01-01 for a proleptic Gregorian civil date.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yy + (m <= 2));
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

bool parse_fixed_uint(std::string_view s, size_t pos, size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned value = 0;
  for (size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    value = value * 10 + static_cast<unsigned>(s[i] - '0');
  }
  out = value;
  return true;
}

}  // namespace

double RoutePattern::total_length_m() const {
  double total = 0.0;
  for (const auto& seg : segments) total += seg.length_m;
  return total;
}

std::optional<int64_t> parse_timestamp(std::string_view text, bool* truncated) {
  if (truncated) *truncated = false;
  unsigned year4 = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0;
  if (!parse_fixed_uint(text, 0, 4, year4)) return std::nullopt;
  if (text.size() < 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed_uint(text, 5, 2, month) || !parse_fixed_uint(text, 8, 2, day)) return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  if (text[13] != ':' || text[16] != ':') return std::nullopt;
  if (!parse_fixed_uint(text, 11, 2, hh) || !parse_fixed_uint(text, 14, 2, mm) ||
      !parse_fixed_uint(text, 17, 2, ss)) {
    return std::nullopt;
  }
  const int year = static_cast<int>(year4);
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;  // bare dot
    // Sub-second precision is dropped; callers count these truncations.
    bool nonzero = false;
    for (size_t i = start; i < pos; ++i) nonzero |= text[i] != '0';
    if (truncated && nonzero) *truncated = true;
  }

  int64_t offset_s = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      const int sign = c == '+' ? 1 : -1;
      ++pos;
      unsigned oh = 0, om = 0;
      if (!parse_fixed_uint(text, pos, 2, oh)) return std::nullopt;
      pos += 2;
      if (pos < text.size() && text[pos] == ':') ++pos;
      if (pos < text.size()) {
        if (!parse_fixed_uint(text, pos, 2, om)) return std::nullopt;
        pos += 2;
      }
      if (oh > 23 || om > 59) return std::nullopt;
      offset_s = sign * (static_cast<int64_t>(oh) * 3600 + om * 60);
    } else {
      return std::nullopt;
    }
  }
  if (pos != text.size()) return std::nullopt;

  const int64_t days = days_from_civil(year, month, day);
  return days * 86400 + hh * 3600 + mm * 60 + ss - offset_s;
}

std::string format_timestamp(int64_t unix_seconds) {
  int64_t days = unix_seconds / 86400;
  int64_t rem = unix_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

namespace {

struct HeaderIndex {
  std::map<std::string, size_t> columns;
  size_t require(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw InputError("malformed header: missing column '" + name + "'");
    return it->second;
  }
};

HeaderIndex read_header(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw InputError("malformed header: empty input");
  strip_bom(line);
  HeaderIndex idx;
  const auto fields = split_csv_line(line);
  for (size_t i = 0; i < fields.size(); ++i) idx.columns.emplace(fields[i], i);
  return idx;
}

std::optional<HeartbeatRecord> parse_heartbeat_fields(
    const std::string& trip_id, const std::string& timestamp, const std::string& lat,
    const std::string& lon, LoadResult<HeartbeatRecord>& result, size_t line_no) {
  auto reject = [&](const std::string& why) -> std::optional<HeartbeatRecord> {
    result.rejects.push_back({line_no, why});
    return std::nullopt;
  };
  if (trip_id.empty()) return reject("empty trip_id");
  bool truncated = false;
  const auto ts = parse_timestamp(timestamp, &truncated);
  if (!ts) return reject("unparseable timestamp '" + timestamp + "'");
  const auto lat_v = parse_double(lat);
  if (!lat_v || *lat_v < -90.0 || *lat_v > 90.0) return reject("latitude out of range '" + lat + "'");
  const auto lon_v = parse_double(lon);
  if (!lon_v || *lon_v < -180.0 || *lon_v > 180.0) return reject("longitude out of range '" + lon + "'");
  if (truncated) ++result.subsecond_truncations;
  return HeartbeatRecord{trip_id, *ts, *lat_v, *lon_v};
}

LoadResult<HeartbeatRecord> load_heartbeats_csv(std::istream& in) {
  LoadResult<HeartbeatRecord> result;
  const HeaderIndex header = read_header(in);
  const size_t i_trip = header.require("trip_id");
  const size_t i_ts = header.require("timestamp");
  const size_t i_lat = header.require("lat");
  const size_t i_lon = header.require("lon");

  std::string line;
  size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++result.rows;
    const auto fields = split_csv_line(line);
    const size_t needed = std::max({i_trip, i_ts, i_lat, i_lon}) + 1;
    if (fields.size() < needed) {
      result.rejects.push_back({line_no, "too few fields"});
      continue;
    }
    auto rec = parse_heartbeat_fields(fields[i_trip], fields[i_ts], fields[i_lat], fields[i_lon],
                                      result, line_no);
    if (rec) {
      result.records.push_back(std::move(*rec));
      ++result.accepted;
    }
  }
  return result;
}

LoadResult<HeartbeatRecord> load_heartbeats_jsonl(std::istream& in) {
  LoadResult<HeartbeatRecord> result;
  std::string line;
  size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    if (line.empty()) continue;
    ++result.rows;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      result.rejects.push_back({line_no, "invalid JSON object"});
      continue;
    }
    auto field = [&](const char* key) -> std::string {
      if (!obj.contains(key)) return {};
      const auto& v = obj[key];
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number()) return format_double(v.get<double>());
      return {};
    };
    auto rec = parse_heartbeat_fields(field("trip_id"), field("timestamp"), field("lat"),
                                      field("lon"), result, line_no);
    if (rec) {
      result.records.push_back(std::move(*rec));
      ++result.accepted;
    }
  }
  return result;
}

}  // namespace

LoadResult<HeartbeatRecord> load_heartbeats(std::istream& in, HeartbeatFormat format) {
  return format == HeartbeatFormat::kCsv ? load_heartbeats_csv(in) : load_heartbeats_jsonl(in);
}

RoutePattern load_route_pattern(std::istream& in) {
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw InputError("route is not valid JSON");
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw InputError("route must be a GeoJSON FeatureCollection");
  }
  RoutePattern pattern;
  pattern.pattern_id = doc.value("name", "pattern");
  if (!doc.contains("features") || !doc["features"].is_array() || doc["features"].empty()) {
    throw InputError("route has no features");
  }

  struct Row {
    int64_t sequence;
    RouteSegment segment;
  };
  std::vector<Row> rows;
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || feature.value("type", "") != "Feature") {
      throw InputError("route entries must be GeoJSON Features");
    }
    const auto& geometry = feature.value("geometry", json::object());
    if (geometry.value("type", "") != "LineString") {
      throw InputError("route feature geometry must be a LineString");
    }
    const auto& props = feature.value("properties", json::object());
    if (!props.contains("segment_id") || !props["segment_id"].is_string()) {
      throw InputError("route feature missing segment_id property");
    }
    if (!props.contains("sequence") || !props["sequence"].is_number_integer()) {
      throw InputError("route feature missing integer sequence property");
    }
    Row row;
    row.sequence = props["sequence"].get<int64_t>();
    if (row.sequence < 1) throw InputError("route sequence values must be >= 1");
    row.segment.segment_id = props["segment_id"].get<std::string>();

    const auto& coords = geometry.value("coordinates", json::array());
    if (!coords.is_array() || coords.size() < 2) {
      throw InputError("segment '" + row.segment.segment_id + "' needs at least two vertices");
    }
    for (const auto& pair : coords) {
      if (!pair.is_array() || pair.size() < 2 || !pair[0].is_number() || !pair[1].is_number()) {
        throw InputError("segment '" + row.segment.segment_id + "' has a malformed coordinate");
      }
      GeoPoint pt{pair[1].get<double>(), pair[0].get<double>()};  // GeoJSON order is [lon, lat]
      if (!geopoint_in_bounds(pt)) {
        throw InputError("segment '" + row.segment.segment_id + "' has a coordinate out of bounds");
      }
      row.segment.polyline.push_back(pt);
    }
    const double geodesic = polyline_length_m(row.segment.polyline);
    if (geodesic <= 0.0) {
      throw InputError("segment '" + row.segment.segment_id + "' has zero geodesic length");
    }
    if (props.contains("length_m")) {
      if (!props["length_m"].is_number()) {
        throw InputError("segment '" + row.segment.segment_id + "' has non-numeric length_m");
      }
      const double declared = props["length_m"].get<double>();
      if (declared <= 0.0 || std::abs(declared - geodesic) > 0.005 * geodesic) {
        throw InputError("segment '" + row.segment.segment_id + "' length mismatch: declared " +
                         format_double(declared) + " m vs geometry " + format_double(geodesic) +
                         " m");
      }
      row.segment.length_m = declared;
    } else {
      row.segment.length_m = geodesic;
    }
    rows.push_back(std::move(row));
  }

  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.sequence < b.sequence; });
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i + 1].sequence != rows[i].sequence + 1) {
      throw InputError("non-contiguous sequence numbers in route (" +
                       std::to_string(rows[i].sequence) + " followed by " +
                       std::to_string(rows[i + 1].sequence) + ")");
    }
  }
  for (auto& row : rows) pattern.segments.push_back(std::move(row.segment));
  return pattern;
}

LoadResult<AvlDoorEvent> load_avl_events(std::istream& in) {
  LoadResult<AvlDoorEvent> result;
  const HeaderIndex header = read_header(in);
  const size_t i_trip = header.require("trip_id");
  const size_t i_open = header.require("open_at");
  const size_t i_close = header.require("close_at");
  const size_t i_stop = header.require("stop_id");

  std::vector<AvlDoorEvent> accepted;
  std::string line;
  size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++result.rows;
    const auto fields = split_csv_line(line);
    const size_t needed = std::max({i_trip, i_open, i_close, i_stop}) + 1;
    if (fields.size() < needed) {
      result.rejects.push_back({line_no, "too few fields"});
      continue;
    }
    if (fields[i_trip].empty()) {
      result.rejects.push_back({line_no, "empty trip_id"});
      continue;
    }
    bool trunc_open = false, trunc_close = false;
    const auto open_at = parse_timestamp(fields[i_open], &trunc_open);
    if (!open_at) {
      result.rejects.push_back({line_no, "unparseable open_at '" + fields[i_open] + "'"});
      continue;
    }
    const auto close_at = parse_timestamp(fields[i_close], &trunc_close);
    if (!close_at) {
      result.rejects.push_back({line_no, "unparseable close_at '" + fields[i_close] + "'"});
      continue;
    }
    if (*close_at <= *open_at) {
      result.rejects.push_back({line_no, "close_at not after open_at"});
      continue;
    }
    result.subsecond_truncations += (trunc_open ? 1 : 0) + (trunc_close ? 1 : 0);
    accepted.push_back({fields[i_trip], *open_at, *close_at, fields[i_stop]});
    ++result.accepted;
  }

  std::stable_sort(accepted.begin(), accepted.end(), [](const AvlDoorEvent& a, const AvlDoorEvent& b) {
    if (a.open_at != b.open_at) return a.open_at < b.open_at;
    return a.trip_id < b.trip_id;
  });
  // Merge overlapping (or touching) door intervals per trip; the result
  // stays sorted by open_at.
  for (const auto& ev : accepted) {
    AvlDoorEvent* prev = nullptr;
    for (auto it = result.records.rbegin(); it != result.records.rend(); ++it) {
      if (it->trip_id == ev.trip_id) {
        prev = &*it;
        break;
      }
    }
    if (prev != nullptr && ev.open_at <= prev->close_at) {
      prev->close_at = std::max(prev->close_at, ev.close_at);
    } else {
      result.records.push_back(ev);
    }
  }
  return result;
}

void write_heartbeats_csv(std::ostream& out, std::span<const HeartbeatRecord> records) {
  out << "trip_id,timestamp,lat,lon\n";
  for (const auto& r : records) {
    out << csv_escape(r.trip_id) << ',' << format_timestamp(r.timestamp) << ','
        << format_double(r.lat) << ',' << format_double(r.lon) << '\n';
  }
}

void write_heartbeats_jsonl(std::ostream& out, std::span<const HeartbeatRecord> records) {
  for (const auto& r : records) {
    json obj;
    obj["trip_id"] = r.trip_id;
    obj["timestamp"] = format_timestamp(r.timestamp);
    obj["lat"] = r.lat;
    obj["lon"] = r.lon;
    out << obj.dump() << '\n';
  }
}

void write_avl_csv(std::ostream& out, std::span<const AvlDoorEvent> events) {
  out << "trip_id,open_at,close_at,stop_id\n";
  for (const auto& e : events) {
    out << csv_escape(e.trip_id) << ',' << format_timestamp(e.open_at) << ','
        << format_timestamp(e.close_at) << ',' << csv_escape(e.stop_id) << '\n';
  }
}

void write_route_geojson(std::ostream& out, const RoutePattern& pattern) {
  json doc;
  doc["type"] = "FeatureCollection";
  doc["name"] = pattern.pattern_id;
  doc["features"] = json::array();
  for (size_t i = 0; i < pattern.segments.size(); ++i) {
    const auto& seg = pattern.segments[i];
    json feature;
    feature["type"] = "Feature";
    feature["properties"]["segment_id"] = seg.segment_id;
    feature["properties"]["sequence"] = static_cast<int64_t>(i + 1);
    feature["properties"]["length_m"] = seg.length_m;
    feature["geometry"]["type"] = "LineString";
    json coords = json::array();
    for (const auto& pt : seg.polyline) coords.push_back(json::array({pt.lon, pt.lat}));
    feature["geometry"]["coordinates"] = std::move(coords);
    doc["features"].push_back(std::move(feature));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace traj
