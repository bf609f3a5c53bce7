#pragma once

#include "lobimpact/events.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lobimpact {

struct BboRecord {
  std::int64_t timestamp_ns = 0;
  double bid_price = 0;
  double ask_price = 0;
  std::int64_t bid_size = 0;
  std::int64_t ask_size = 0;
};

struct TradeRecord {
  std::int64_t timestamp_ns = 0;
  double price = 0;
  std::int64_t size = 0;
  int aggressor_side = 0;  // +1 buy, -1 sell, 0 unknown
};

struct IngestConfig {
  std::string symbol = "SYM";
  double tick_size = 0.01;
  std::int64_t aggregation_window_ns = 1'000'000;  // same-side trades within this window form one order
  std::int64_t match_tolerance_ns = 5'000'000;     // how long a trade may wait for its quote update
};

enum class DiscardReason : int {
  BookInit = 0,        // first quote of a day sets the book
  OutsideSession,      // quote change or trade outside 9:30-16:00
  CrossedQuote,        // crossed or locked record
  DuringCrossed,       // trade printed while the book was crossed
  UnmatchedTrade,      // trade with no visible book effect
  AbsorbedByTrade,     // quote change explained by a trade
  kCount
};

const char* discard_name(DiscardReason r);

struct DayCounts {
  std::int64_t quote_changes = 0;   // per-side changes seen in the quote records
  std::int64_t trades = 0;          // aggregated trades
  std::int64_t events = 0;
  std::array<std::int64_t, static_cast<int>(DiscardReason::kCount)> discards{};

  std::int64_t total_discards() const;
  bool conserved() const { return quote_changes + trades == events + total_discards(); }
};

struct IngestReport {
  std::map<std::int32_t, DayCounts> per_day;
  DayCounts total() const;
};

struct ClassifiedStream {
  EventStream stream;
  IngestReport report;
};

// Turns best-quote records and trades into classified events. Inputs must be
// time-sorted. Throws NonHalfTickGap if a price is not a whole number of ticks.
ClassifiedStream classify(const std::vector<BboRecord>& bbo, const std::vector<TradeRecord>& trades,
                          const IngestConfig& config);

// Raw CSVs. bbo: timestamp_ns,bid_price,ask_price,bid_size,ask_size
// trades: timestamp_ns,price,size,aggressor_side (aggressor may be empty).
std::vector<BboRecord> load_bbo_csv(const std::string& path);
std::vector<TradeRecord> load_trades_csv(const std::string& path);

inline constexpr const char* kEventCsvHeader =
    "timestamp_ns,day,type,sign,gap_halfticks,mid_before_halfticks,spread_before_halfticks,volume";

EventStream load_event_csv(const std::string& path, const std::string& symbol = "SYM", double tick_size = 0.01);
EventStream parse_event_csv(std::istream& in, const std::string& symbol = "SYM", double tick_size = 0.01);
void write_event_csv(const EventStream& s, const std::string& path);
void write_event_csv(const EventStream& s, std::ostream& out);

}  // namespace lobimpact
