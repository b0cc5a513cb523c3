#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sabrec::ingest {

// One implicit-feedback interaction as parsed from a raw file. Ratings and
// review payloads are discarded at parse time.
struct InteractionEvent {
  std::string user;
  std::string item;
  int64_t timestamp = 0;  // unix seconds
};

struct TimedItem {
  int32_t item = 0;  // internal id, >= 3
  int64_t timestamp = 0;
};

using Session = std::vector<TimedItem>;

// A user's chronologically ordered sessions. Consecutive events belong to the
// same session while the gap stays within the sessionization threshold.
struct SessionizedHistory {
  int32_t user = 0;
  std::vector<Session> sessions;
};

constexpr int64_t kDaySeconds = 86400;

constexpr int32_t kPadId = 0;
constexpr int32_t kMaskId = 1;
constexpr int32_t kSessionTokenId = 2;
constexpr int32_t kFirstItemId = 3;

}  // namespace sabrec::ingest
