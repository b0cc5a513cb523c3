#include "ingest/parsers.hpp"

#include <charconv>
#include <fstream>

#include "common/errors.hpp"

namespace sabrec::ingest {

namespace {

[[noreturn]] void fail_line(const std::string& path, size_t line_no, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

bool parse_i64(std::string_view s, int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Splits one CSV record into fields, honoring double-quoted fields with ""
// escapes. Assumes the record does not span lines (true for the inputs here).
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
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

// Locates `'key':` or `"key":` in a record and returns the value that
// follows: a quoted string (with backslash escapes) or a bare token.
bool extract_field(const std::string& line, const std::string& key, std::string& out) {
  for (char quote : {'\'', '"'}) {
    std::string pat;
    pat += quote;
    pat += key;
    pat += quote;
    size_t pos = line.find(pat);
    if (pos == std::string::npos) continue;
    pos += pat.size();
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == ':')) ++pos;
    if (pos >= line.size()) return false;
    if (line[pos] == '\'' || line[pos] == '"') {
      char q = line[pos++];
      std::string v;
      while (pos < line.size()) {
        char c = line[pos];
        if (c == '\\' && pos + 1 < line.size()) {
          v.push_back(line[pos + 1]);
          pos += 2;
          continue;
        }
        if (c == q) break;
        v.push_back(c);
        ++pos;
      }
      if (pos >= line.size()) return false;  // unterminated string
      out = std::move(v);
      return true;
    }
    size_t end = pos;
    while (end < line.size() && line[end] != ',' && line[end] != '}') ++end;
    std::string v = line.substr(pos, end - pos);
    while (!v.empty() && v.back() == ' ') v.pop_back();
    if (v.empty()) return false;
    out = std::move(v);
    return true;
  }
  return false;
}

bool parse_date(const std::string& s, int64_t& epoch_seconds) {
  // YYYY-MM-DD
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int64_t y, m, d;
  if (!parse_i64(std::string_view(s).substr(0, 4), y)) return false;
  if (!parse_i64(std::string_view(s).substr(5, 2), m)) return false;
  if (!parse_i64(std::string_view(s).substr(8, 2), d)) return false;
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  epoch_seconds = days_from_civil(y, m, d) * kDaySeconds;
  return true;
}

}  // namespace

int64_t days_from_civil(int64_t y, int64_t m, int64_t d) {
  y -= m <= 2;
  int64_t era = (y >= 0 ? y : y - 399) / 400;
  int64_t yoe = y - era * 400;
  int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

std::vector<InteractionEvent> parse_movielens_1m(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<InteractionEvent> events;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    size_t p1 = line.find("::");
    size_t p2 = p1 == std::string::npos ? p1 : line.find("::", p1 + 2);
    size_t p3 = p2 == std::string::npos ? p2 : line.find("::", p2 + 2);
    if (p3 == std::string::npos) fail_line(path, line_no, "expected UserID::MovieID::Rating::Timestamp");
    std::string user = line.substr(0, p1);
    std::string item = line.substr(p1 + 2, p2 - p1 - 2);
    std::string ts_str = line.substr(p3 + 2);
    int64_t check;
    if (user.empty() || item.empty() || !parse_i64(user, check) || !parse_i64(item, check)) {
      fail_line(path, line_no, "malformed user or item id");
    }
    int64_t ts;
    if (!parse_i64(ts_str, ts) || ts <= 0) fail_line(path, line_no, "malformed timestamp");
    events.push_back({std::move(user), std::move(item), ts});
  }
  return events;
}

std::vector<InteractionEvent> parse_movielens_20m(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<InteractionEvent> events;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header");
  strip_cr(line);
  {
    auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "userId" || header[1] != "movieId" ||
        header[2] != "rating" || header[3] != "timestamp") {
      throw ParseError(path + ": expected header userId,movieId,rating,timestamp");
    }
  }
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 4) fail_line(path, line_no, "expected 4 CSV fields");
    int64_t ts, check;
    if (fields[0].empty() || fields[1].empty() || !parse_i64(fields[0], check)) {
      fail_line(path, line_no, "malformed user id");
    }
    if (!parse_i64(fields[3], ts) || ts <= 0) fail_line(path, line_no, "malformed timestamp");
    events.push_back({std::move(fields[0]), std::move(fields[1]), ts});
  }
  return events;
}

std::vector<InteractionEvent> parse_steam(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<InteractionEvent> events;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::string user, item, date;
    if (!extract_field(line, "username", user) || user.empty()) {
      fail_line(path, line_no, "record missing username");
    }
    if (!extract_field(line, "product_id", item) || item.empty()) {
      fail_line(path, line_no, "record missing product_id");
    }
    if (!extract_field(line, "date", date)) fail_line(path, line_no, "record missing date");
    int64_t ts;
    if (!parse_date(date, ts)) fail_line(path, line_no, "unparseable date '" + date + "'");
    events.push_back({std::move(user), std::move(item), ts});
  }
  return events;
}

std::vector<InteractionEvent> parse_events(const std::string& path, const std::string& format) {
  if (format == "ml1m") return parse_movielens_1m(path);
  if (format == "ml20m") return parse_movielens_20m(path);
  if (format == "steam") return parse_steam(path);
  throw ConfigError("unknown dataset format '" + format + "' (expected ml1m, ml20m or steam)");
}

}  // namespace sabrec::ingest
