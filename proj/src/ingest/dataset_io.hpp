#pragma once

#include <string>

#include "ingest/preprocess.hpp"

namespace sabrec::ingest {

inline constexpr const char* kEventsFile = "events.tsv";
inline constexpr const char* kVocabFile = "vocab.tsv";
inline constexpr const char* kStatsFile = "stats.csv";

// Writes events.tsv (user \t item \t timestamp, sorted by user then time),
// vocab.tsv (item string id \t internal id) and stats.csv into `dir`.
void save_dataset(const std::string& dir, const SplitDataset& dataset);

// Loads a dataset directory written by save_dataset. Splits are re-derived
// from event order; no preprocessing filters are applied.
SplitDataset load_dataset(const std::string& dir);

std::string stats_csv(const DatasetStats& stats);

}  // namespace sabrec::ingest
