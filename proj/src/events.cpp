#include "lobimpact/events.hpp"

#include <stdexcept>

namespace lobimpact {

namespace {
constexpr std::array<std::string_view, kNumTypes> kNames = {"MO0", "MOP", "CA0", "LO0", "CAP", "LOP"};

void check_chain(const MarketEvent& prev, const MarketEvent& next, std::size_t index) {
  if (next.mid_before_ht != prev.mid_after_ht())
    throw Error(ErrorKind::BrokenChain, "mid_before of event " + std::to_string(index) +
                                            " differs from mid_after of the previous event");
  if (next.spread_before_ht != prev.spread_after_ht())
    throw Error(ErrorKind::BrokenChain, "spread_before of event " + std::to_string(index) +
                                            " differs from spread_after of the previous event");
}
}  // namespace

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::BrokenChain: return "BrokenChain";
    case ErrorKind::CrossedQuotes: return "CrossedQuotes";
    case ErrorKind::UnmatchedTrade: return "UnmatchedTrade";
    case ErrorKind::NonHalfTickGap: return "NonHalfTickGap";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

std::string_view type_name(EventType t) { return kNames[index_of(t)]; }

EventType parse_type(std::string_view name) {
  for (int i = 0; i < kNumTypes; ++i)
    if (kNames[i] == name) return type_at(i);
  throw std::invalid_argument("unknown event type '" + std::string(name) + "'");
}

std::string pair_name(int a, int b) {
  std::string s(kNames[a]);
  s += "->";
  s += kNames[b];
  return s;
}

void validate_event(const MarketEvent& e) {
  if (index_of(e.type) < 0 || index_of(e.type) >= kNumTypes)
    throw Error(ErrorKind::InvariantViolation, "event_type out of range");
  if (e.sign != 1 && e.sign != -1) throw Error(ErrorKind::InvariantViolation, "sign must be +1 or -1");
  if (e.gap_ht < 0) throw Error(ErrorKind::InvariantViolation, "gap must be non-negative");
  if (is_price_changing(e.type) && e.gap_ht == 0)
    throw Error(ErrorKind::InvariantViolation, "gap > 0 required for price-changing type " +
                                                   std::string(type_name(e.type)));
  if (!is_price_changing(e.type) && e.gap_ht != 0)
    throw Error(ErrorKind::InvariantViolation, "gap = 0 required for type " + std::string(type_name(e.type)));
  if (e.volume < -1) throw Error(ErrorKind::InvariantViolation, "volume must be non-negative");
}

EventStream::EventStream(std::string symbol, double tick_size, std::vector<MarketEvent> events, SessionTrim trim,
                         std::vector<BehindGaps> behind)
    : symbol_(std::move(symbol)),
      tick_size_(tick_size),
      events_(std::move(events)),
      trim_(trim),
      behind_(std::move(behind)) {
  if (!(tick_size_ > 0)) throw Error(ErrorKind::InvariantViolation, "tick_size must be positive");
  if (!behind_.empty() && behind_.size() != events_.size())
    throw Error(ErrorKind::DimensionMismatch, "behind-gap record count differs from event count");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const MarketEvent& e = events_[i];
    validate_event(e);
    if (i == 0 || e.day != events_[i - 1].day) {
      if (i > 0 && e.day < events_[i - 1].day)
        throw Error(ErrorKind::InvariantViolation, "day_index decreases at event " + std::to_string(i));
      bounds_.push_back(i);
      continue;
    }
    const MarketEvent& p = events_[i - 1];
    if (e.timestamp_ns < p.timestamp_ns)
      throw Error(ErrorKind::InvariantViolation, "timestamp decreases within a day at event " + std::to_string(i));
    check_chain(p, e, i);
  }
  bounds_.push_back(events_.size());
  if (events_.empty()) bounds_.clear();
}

namespace {
template <class Step>
std::vector<std::int64_t> running_path(const EventStream& s, std::int64_t (*opening)(const MarketEvent&), Step step) {
  std::vector<std::int64_t> path(s.size() + 1);
  if (s.empty()) {
    path.clear();
    return path;
  }
  const auto& b = s.day_boundaries();
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    std::int64_t x = opening(s[b[d]]);
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      path[t] = x;
      x += step(s[t]);
    }
    path[b[d + 1]] = x;  // overwritten by the next day's opening unless last
  }
  return path;
}
}  // namespace

std::vector<std::int64_t> mid_path_ht(const EventStream& s) {
  return running_path(
      s, [](const MarketEvent& e) { return e.mid_before_ht; },
      [](const MarketEvent& e) { return static_cast<std::int64_t>(e.sign) * e.gap_ht; });
}

std::vector<std::int64_t> spread_path_ht(const EventStream& s) {
  return running_path(
      s, [](const MarketEvent& e) { return e.spread_before_ht; },
      [](const MarketEvent& e) { return 2 * spread_direction(e.type) * e.gap_ht; });
}

namespace {
std::vector<double> to_ticks_checked(const EventStream& s, const std::vector<std::int64_t>& path, bool mid) {
  std::vector<double> out(path.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    const std::int64_t rec = mid ? s[t].mid_before_ht : s[t].spread_before_ht;
    if (path[t] != rec)
      throw Error(ErrorKind::BrokenChain, std::string(mid ? "mid" : "spread") + " path breaks at event " +
                                              std::to_string(t));
  }
  if (!s.empty()) {
    const MarketEvent& last = s[s.size() - 1];
    if (path.back() != (mid ? last.mid_after_ht() : last.spread_after_ht()))
      throw Error(ErrorKind::BrokenChain, "final value differs from the last recorded quote");
  }
  for (std::size_t i = 0; i < path.size(); ++i) out[i] = 0.5 * static_cast<double>(path[i]);
  return out;
}
}  // namespace

std::vector<double> reconstruct_mid(const EventStream& s) { return to_ticks_checked(s, mid_path_ht(s), true); }

std::vector<double> reconstruct_spread(const EventStream& s) {
  return to_ticks_checked(s, spread_path_ht(s), false);
}

EventStream trim_session(const EventStream& s, SessionTrim trim) {
  const std::int64_t lo = kSessionOpenNs + static_cast<std::int64_t>(trim.start_minutes) * 60'000'000'000LL;
  const std::int64_t hi = kSessionCloseNs - static_cast<std::int64_t>(trim.end_minutes) * 60'000'000'000LL;
  std::vector<MarketEvent> kept;
  std::vector<BehindGaps> behind;
  kept.reserve(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    std::int64_t tod = s[t].timestamp_ns % kNanosPerDay;
    if (tod < 0) tod += kNanosPerDay;
    if (tod < lo || tod > hi) continue;
    kept.push_back(s[t]);
    if (!s.behind_gaps().empty()) behind.push_back(s.behind_gaps()[t]);
  }
  SessionTrim total{s.session_trim().start_minutes + trim.start_minutes,
                    s.session_trim().end_minutes + trim.end_minutes};
  return EventStream(s.symbol(), s.tick_size(), std::move(kept), total, std::move(behind));
}

TypeVector type_probabilities(const EventStream& s) {
  TypeVector p = TypeVector::Zero();
  for (const MarketEvent& e : s.events()) p(index_of(e.type)) += 1.0;
  if (!s.empty()) p /= static_cast<double>(s.size());
  return p;
}

EventStream flip_signs(const EventStream& s) {
  std::vector<MarketEvent> ev(s.events().begin(), s.events().end());
  const auto& b = s.day_boundaries();
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    const std::int64_t open = ev[b[d]].mid_before_ht;
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      ev[t].sign = static_cast<std::int8_t>(-ev[t].sign);
      ev[t].mid_before_ht = 2 * open - ev[t].mid_before_ht;
    }
  }
  return EventStream(s.symbol(), s.tick_size(), std::move(ev), s.session_trim(), s.behind_gaps());
}

}  // namespace lobimpact
