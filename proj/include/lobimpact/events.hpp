#pragma once

#include "lobimpact/error.hpp"
#include "lobimpact/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lobimpact {

// Prices, gaps and spreads are integers in half-ticks. A gap of g half-ticks
// moves the mid by g half-ticks and the spread by 2g half-ticks (g ticks).
struct MarketEvent {
  std::int64_t timestamp_ns = 0;
  std::int32_t day = 0;
  EventType type = EventType::MO0;
  std::int8_t sign = 1;
  std::int64_t gap_ht = 0;
  std::int64_t mid_before_ht = 0;
  std::int64_t spread_before_ht = 0;
  std::int64_t volume = -1;  // shares, -1 when not recorded

  int side() const { return derive_side(type, sign); }
  bool has_volume() const { return volume >= 0; }
  std::int64_t mid_after_ht() const { return mid_before_ht + sign * gap_ht; }
  std::int64_t spread_after_ht() const { return spread_before_ht + 2 * spread_direction(type) * gap_ht; }

  double gap() const { return 0.5 * static_cast<double>(gap_ht); }
  double mid_before() const { return 0.5 * static_cast<double>(mid_before_ht); }
  double mid_after() const { return 0.5 * static_cast<double>(mid_after_ht()); }
  double spread_before() const { return 0.5 * static_cast<double>(spread_before_ht); }
  double spread_after() const { return 0.5 * static_cast<double>(spread_after_ht()); }

  bool operator==(const MarketEvent&) const = default;
};

// First gap behind the best quote on each side, in ticks. Only synthetic
// streams with a book model carry this.
struct BehindGaps {
  std::int32_t bid_ticks = 0;
  std::int32_t ask_ticks = 0;
  bool operator==(const BehindGaps&) const = default;
};

// Minutes cut from the start and end of each 9:30-16:00 session.
struct SessionTrim {
  int start_minutes = 0;
  int end_minutes = 0;
  bool operator==(const SessionTrim&) const = default;
};

inline constexpr std::int64_t kNanosPerDay = 86'400'000'000'000LL;
inline constexpr std::int64_t kSessionOpenNs = (9LL * 3600 + 30 * 60) * 1'000'000'000LL;
inline constexpr std::int64_t kSessionCloseNs = 16LL * 3600 * 1'000'000'000LL;

// Throws InvariantViolation naming the first failed per-event invariant.
void validate_event(const MarketEvent& e);

class EventStream {
 public:
  EventStream() = default;
  // Validates every event and the per-day price/spread chain.
  EventStream(std::string symbol, double tick_size, std::vector<MarketEvent> events, SessionTrim trim = {},
              std::vector<BehindGaps> behind = {});

  const std::string& symbol() const { return symbol_; }
  double tick_size() const { return tick_size_; }
  std::span<const MarketEvent> events() const { return events_; }
  const MarketEvent& operator[](std::size_t i) const { return events_[i]; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  SessionTrim session_trim() const { return trim_; }
  // Start index of every day, plus size() as a sentinel.
  const std::vector<std::size_t>& day_boundaries() const { return bounds_; }
  std::size_t num_days() const { return bounds_.empty() ? 0 : bounds_.size() - 1; }
  const std::vector<BehindGaps>& behind_gaps() const { return behind_; }

  bool operator==(const EventStream&) const = default;

 private:
  std::string symbol_;
  double tick_size_ = 0.01;
  std::vector<MarketEvent> events_;
  SessionTrim trim_;
  std::vector<std::size_t> bounds_;
  std::vector<BehindGaps> behind_;
};

// Mid before every event and after the last one (size N+1), in half-ticks.
// Each day starts from its recorded opening mid; inside a day the path is the
// running sum of signed gaps.
std::vector<std::int64_t> mid_path_ht(const EventStream& s);
std::vector<std::int64_t> spread_path_ht(const EventStream& s);

// Same paths in ticks. Throw BrokenChain if the running sum disagrees with a
// recorded quote.
std::vector<double> reconstruct_mid(const EventStream& s);
std::vector<double> reconstruct_spread(const EventStream& s);

// Keeps events inside [open + start, close - end] of each day.
EventStream trim_session(const EventStream& s, SessionTrim trim);

// Fraction of events of each type.
TypeVector type_probabilities(const EventStream& s);

// Flips every sign. Price and spread paths are mirrored around the opening mid.
EventStream flip_signs(const EventStream& s);

}  // namespace lobimpact
