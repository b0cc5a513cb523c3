#pragma once

#include <string>
#include <vector>

#include "ingest/events.hpp"

namespace sabrec::ingest {

// MovieLens 1M ratings.dat: UserID::MovieID::Rating::Timestamp per line.
std::vector<InteractionEvent> parse_movielens_1m(const std::string& path);

// MovieLens 20M ratings.csv: header userId,movieId,rating,timestamp, then
// CSV rows (quoted fields allowed).
std::vector<InteractionEvent> parse_movielens_20m(const std::string& path);

// Steam review export: one record per line in a JSON-like key-value form
// (single- or double-quoted keys), carrying username, product_id and date.
// Calendar dates map to UTC midnight.
std::vector<InteractionEvent> parse_steam(const std::string& path);

std::vector<InteractionEvent> parse_events(const std::string& path, const std::string& format);

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int64_t year, int64_t month, int64_t day);

}  // namespace sabrec::ingest
