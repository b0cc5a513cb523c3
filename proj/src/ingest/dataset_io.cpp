#include "ingest/dataset_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/errors.hpp"

namespace sabrec::ingest {

namespace {

namespace fs = std::filesystem;

std::ofstream create_or_throw(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file: " + path.string());
  return out;
}

int64_t to_i64(std::string_view s, const std::string& context) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(context + ": malformed integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string stats_csv(const DatasetStats& s) {
  std::ostringstream os;
  char density[64];
  std::snprintf(density, sizeof(density), "%.6f", s.density);
  os << "metric,value\n";
  os << "users," << s.users << "\n";
  os << "items," << s.items << "\n";
  os << "rows," << s.rows << "\n";
  os << "density," << density << "\n";
  const char* names[3] = {"q1", "q2", "q3"};
  for (int q = 0; q < 3; ++q) os << "items_per_user_" << names[q] << "," << s.items_per_user[q] << "\n";
  for (int q = 0; q < 3; ++q)
    os << "sessions_per_user_" << names[q] << "," << s.sessions_per_user[q] << "\n";
  for (int q = 0; q < 3; ++q)
    os << "items_per_session_" << names[q] << "," << s.items_per_session[q] << "\n";
  return os.str();
}

void save_dataset(const std::string& dir, const SplitDataset& dataset) {
  fs::create_directories(dir);
  {
    std::ofstream out = create_or_throw(fs::path(dir) / kEventsFile);
    for (const auto& u : dataset.users) {
      for (const auto& e : u.events) {
        out << u.user << '\t' << e.item << '\t' << e.timestamp << '\n';
      }
    }
  }
  {
    std::ofstream out = create_or_throw(fs::path(dir) / kVocabFile);
    for (size_t i = 0; i < dataset.item_names.size(); ++i) {
      out << dataset.item_names[i] << '\t' << (static_cast<int64_t>(i) + kFirstItemId) << '\n';
    }
  }
  {
    std::ofstream out = create_or_throw(fs::path(dir) / kStatsFile);
    out << stats_csv(compute_stats(dataset));
  }
}

SplitDataset load_dataset(const std::string& dir) {
  SplitDataset out;
  const std::string vocab_path = (fs::path(dir) / kVocabFile).string();
  {
    std::ifstream in(vocab_path);
    if (!in) throw IoError("cannot open file: " + vocab_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ParseError(vocab_path + ":" + std::to_string(line_no) + ": expected item<TAB>id");
      }
      std::string name = line.substr(0, tab);
      int64_t id = to_i64(std::string_view(line).substr(tab + 1),
                          vocab_path + ":" + std::to_string(line_no));
      int64_t expected = static_cast<int64_t>(out.item_names.size()) + kFirstItemId;
      if (id != expected) {
        throw ParseError(vocab_path + ":" + std::to_string(line_no) + ": expected internal id " +
                         std::to_string(expected) + ", got " + std::to_string(id));
      }
      out.item_names.push_back(std::move(name));
    }
  }

  const std::string events_path = (fs::path(dir) / kEventsFile).string();
  {
    std::ifstream in(events_path);
    if (!in) throw IoError("cannot open file: " + events_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string ctx = events_path + ":" + std::to_string(line_no);
      size_t t1 = line.find('\t');
      size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) throw ParseError(ctx + ": expected user<TAB>item<TAB>timestamp");
      int64_t user = to_i64(std::string_view(line).substr(0, t1), ctx);
      int64_t item = to_i64(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), ctx);
      int64_t ts = to_i64(std::string_view(line).substr(t2 + 1), ctx);
      int64_t expected_user = static_cast<int64_t>(out.users.size());
      if (user == expected_user) {
        UserHistory h;
        h.user = static_cast<int32_t>(user);
        h.user_raw = std::to_string(user);
        out.users.push_back(std::move(h));
      } else if (user != expected_user - 1) {
        throw ParseError(ctx + ": users must be contiguous and sorted, got " + std::to_string(user));
      }
      if (item < kFirstItemId || item >= out.vocab_size()) {
        throw ParseError(ctx + ": item id " + std::to_string(item) + " outside vocabulary");
      }
      if (ts <= 0) throw ParseError(ctx + ": timestamp must be positive");
      auto& events = out.users.back().events;
      if (!events.empty() && events.back().timestamp > ts) {
        throw ParseError(ctx + ": timestamps must be non-decreasing per user");
      }
      events.push_back({static_cast<int32_t>(item), ts});
    }
  }
  if (out.users.empty()) throw ConfigError("dataset at '" + dir + "' has no users");
  for (const auto& u : out.users) {
    if (u.size() < 3) {
      throw ConfigError("user " + std::to_string(u.user) +
                        " has fewer than 3 events; cannot form a leave-one-out split");
    }
  }
  return out;
}

}  // namespace sabrec::ingest
