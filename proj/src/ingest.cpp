#include "lobimpact/ingest.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lobimpact {

const char* discard_name(DiscardReason r) {
  switch (r) {
    case DiscardReason::BookInit: return "book_init";
    case DiscardReason::OutsideSession: return "outside_session";
    case DiscardReason::CrossedQuote: return "crossed_quote";
    case DiscardReason::DuringCrossed: return "trade_during_crossed";
    case DiscardReason::UnmatchedTrade: return "unmatched_trade";
    case DiscardReason::AbsorbedByTrade: return "absorbed_by_trade";
    case DiscardReason::kCount: break;
  }
  return "unknown";
}

std::int64_t DayCounts::total_discards() const {
  std::int64_t s = 0;
  for (auto d : discards) s += d;
  return s;
}

DayCounts IngestReport::total() const {
  DayCounts t;
  for (const auto& [day, c] : per_day) {
    t.quote_changes += c.quote_changes;
    t.trades += c.trades;
    t.events += c.events;
    for (std::size_t i = 0; i < t.discards.size(); ++i) t.discards[i] += c.discards[i];
  }
  return t;
}

namespace {

struct Book {
  std::int64_t bid = 0, ask = 0;  // ticks
  std::int64_t bid_size = 0, ask_size = 0;
};

std::int64_t to_ticks(double price, double tick) {
  const double v = price / tick;
  const double r = std::nearbyint(v);
  if (std::abs(v - r) > 1e-6)
    throw Error(ErrorKind::NonHalfTickGap, "price " + std::to_string(price) + " is not a multiple of tick size " +
                                               std::to_string(tick));
  return static_cast<std::int64_t>(r);
}

bool in_session(std::int64_t ts) {
  std::int64_t tod = ts % kNanosPerDay;
  if (tod < 0) tod += kNanosPerDay;
  return tod >= kSessionOpenNs && tod <= kSessionCloseNs;
}

std::int32_t day_of(std::int64_t ts) {
  std::int64_t d = ts / kNanosPerDay;
  if (ts < 0 && d * kNanosPerDay != ts) --d;
  return static_cast<std::int32_t>(d);
}

// Sequential book state machine for one day.
class DayClassifier {
 public:
  DayClassifier(const IngestConfig& cfg, std::int32_t day, DayCounts& counts, std::vector<MarketEvent>& out)
      : cfg_(cfg), day_(day), counts_(counts), out_(out) {}

  void on_quote(const BboRecord& r) {
    if (agg_.open && (r.timestamp_ns > agg_.last_trade_ts + cfg_.match_tolerance_ns || !in_session(r.timestamp_ns)))
      finalize();
    Book rb{to_ticks(r.bid_price, cfg_.tick_size), to_ticks(r.ask_price, cfg_.tick_size), r.bid_size, r.ask_size};

    if (rb.bid >= rb.ask) {
      add_changes(1);
      discard(DiscardReason::CrossedQuote);
      crossed_ = true;
      return;
    }
    crossed_ = false;

    if (!have_ref_ || !in_session(r.timestamp_ns)) {
      const int n = have_ref_ ? changed(rb, -1) + changed(rb, +1) : 2;
      add_changes(n);
      for (int i = 0; i < n; ++i) discard(have_ref_ ? DiscardReason::OutsideSession : DiscardReason::BookInit);
      ref_ = emitted_ = rb;
      have_ref_ = true;
      return;
    }

    bool bid_todo = changed(rb, -1);
    bool ask_todo = changed(rb, +1);
    add_changes(int(bid_todo) + int(ask_todo));

    if (agg_.open) {
      bool& todo = agg_.side > 0 ? ask_todo : bid_todo;
      if (todo) {
        if (consumes(rb, agg_.side)) {
          set_side(ref_, rb, agg_.side);
          discard(DiscardReason::AbsorbedByTrade);
          ++agg_.absorbed;
          agg_.last_absorbed_ts = r.timestamp_ns;
          todo = false;
        } else {
          finalize();
        }
      }
    }

    // Bid side first, unless that would cross the book in between.
    const bool ask_first = bid_todo && ask_todo && rb.bid >= emitted_.ask;
    if (ask_first) {
      quote_side(rb, +1, r.timestamp_ns);
      quote_side(rb, -1, r.timestamp_ns);
    } else {
      if (bid_todo) quote_side(rb, -1, r.timestamp_ns);
      if (ask_todo) quote_side(rb, +1, r.timestamp_ns);
    }
  }

  void on_trade(const TradeRecord& t) {
    if (!in_session(t.timestamp_ns)) {
      if (agg_.open) finalize();
      ++counts_.trades;
      discard(DiscardReason::OutsideSession);
      return;
    }
    int side = t.aggressor_side;
    if (side == 0 && have_ref_ && !crossed_) {
      const double p = t.price / cfg_.tick_size;
      if (p >= static_cast<double>(ref_.ask)) side = 1;
      else if (p <= static_cast<double>(ref_.bid)) side = -1;
      else if (2 * p > static_cast<double>(ref_.bid + ref_.ask)) side = 1;
      else if (2 * p < static_cast<double>(ref_.bid + ref_.ask)) side = -1;
    }
    if (agg_.open && side == agg_.side && t.timestamp_ns - agg_.start_ts <= cfg_.aggregation_window_ns &&
        !crossed_) {
      agg_.size += t.size;
      agg_.last_trade_ts = t.timestamp_ns;
      return;
    }
    if (agg_.open) finalize();
    ++counts_.trades;
    if (crossed_ || !have_ref_) {
      discard(DiscardReason::DuringCrossed);
      return;
    }
    if (side == 0) {
      discard(DiscardReason::UnmatchedTrade);
      return;
    }
    agg_ = Aggregate{true, side, t.timestamp_ns, t.timestamp_ns, t.size, 0, t.timestamp_ns};
  }

  void finish() {
    if (agg_.open) finalize();
  }

 private:
  struct Aggregate {
    bool open = false;
    int side = 0;
    std::int64_t start_ts = 0, last_trade_ts = 0, size = 0;
    int absorbed = 0;
    std::int64_t last_absorbed_ts = 0;
  };

  static std::int64_t price(const Book& b, int side) { return side > 0 ? b.ask : b.bid; }
  static std::int64_t size(const Book& b, int side) { return side > 0 ? b.ask_size : b.bid_size; }
  static void set_side(Book& b, const Book& from, int side) {
    if (side > 0) {
      b.ask = from.ask;
      b.ask_size = from.ask_size;
    } else {
      b.bid = from.bid;
      b.bid_size = from.bid_size;
    }
  }

  bool changed(const Book& rb, int side) const {
    return price(rb, side) != price(ref_, side) || size(rb, side) != size(ref_, side);
  }

  // A trade on `side` eats into that side: the quote recedes, or shrinks in place.
  bool consumes(const Book& rb, int side) const {
    const std::int64_t away = side * (price(rb, side) - price(ref_, side));
    if (away > 0) return true;
    return away == 0 && size(rb, side) < size(ref_, side);
  }

  void add_changes(int n) { counts_.quote_changes += n; }
  void discard(DiscardReason r) { ++counts_.discards[static_cast<int>(r)]; }

  void emit(EventType type, int sign, int side, const Book& target, std::int64_t ts, std::int64_t volume) {
    MarketEvent e;
    e.timestamp_ns = std::max(ts, last_ts_);
    e.day = day_;
    e.type = type;
    e.sign = static_cast<std::int8_t>(sign);
    e.gap_ht = std::abs(price(target, side) - price(emitted_, side));
    e.mid_before_ht = emitted_.bid + emitted_.ask;
    e.spread_before_ht = 2 * (emitted_.ask - emitted_.bid);
    e.volume = volume;
    set_side(emitted_, target, side);
    last_ts_ = e.timestamp_ns;
    out_.push_back(e);
    ++counts_.events;
  }

  // Quote change on one side with no trade behind it.
  void quote_side(const Book& rb, int side, std::int64_t ts) {
    const std::int64_t dp = price(rb, side) - price(ref_, side);
    const std::int64_t ds = size(rb, side) - size(ref_, side);
    // Buy-side limit orders push the mid up, buy-side cancels push it down.
    const int lo_sign = -side;
    const int ca_sign = side;
    const std::int64_t improve = -side * dp;  // > 0 when the quote moves inside the spread
    if (improve > 0) emit(EventType::LOp, lo_sign, side, rb, ts, size(rb, side));
    else if (improve < 0) emit(EventType::CAp, ca_sign, side, rb, ts, size(ref_, side));
    else if (ds > 0) emit(EventType::LO0, lo_sign, side, rb, ts, ds);
    else emit(EventType::CA0, ca_sign, side, rb, ts, -ds);
    set_side(ref_, rb, side);
  }

  void finalize() {
    Aggregate a = agg_;
    agg_ = Aggregate{};
    if (a.absorbed == 0) {
      discard(DiscardReason::UnmatchedTrade);
      return;
    }
    const bool moved = price(ref_, a.side) != price(emitted_, a.side);
    emit(moved ? EventType::MOp : EventType::MO0, a.side, a.side, ref_, a.last_absorbed_ts, a.size);
  }

  const IngestConfig& cfg_;
  std::int32_t day_;
  DayCounts& counts_;
  std::vector<MarketEvent>& out_;
  bool have_ref_ = false;
  bool crossed_ = false;
  Book ref_;      // latest valid quote
  Book emitted_;  // book implied by the emitted events
  Aggregate agg_;
  std::int64_t last_ts_ = std::numeric_limits<std::int64_t>::min();
};

}  // namespace

ClassifiedStream classify(const std::vector<BboRecord>& bbo, const std::vector<TradeRecord>& trades,
                          const IngestConfig& config) {
  if (!(config.tick_size > 0)) throw Error(ErrorKind::ConfigInvalid, "tick_size must be positive");
  std::vector<MarketEvent> events;
  IngestReport report;
  std::size_t i = 0, j = 0;
  while (i < bbo.size() || j < trades.size()) {
    const std::int64_t tq = i < bbo.size() ? bbo[i].timestamp_ns : std::numeric_limits<std::int64_t>::max();
    const std::int64_t tt = j < trades.size() ? trades[j].timestamp_ns : std::numeric_limits<std::int64_t>::max();
    const std::int32_t day = day_of(std::min(tq, tt));
    DayCounts& counts = report.per_day[day];
    DayClassifier dc(config, day, counts, events);
    // Trades go before quotes stamped at the same instant.
    while (i < bbo.size() || j < trades.size()) {
      const bool trade_next =
          j < trades.size() && (i >= bbo.size() || trades[j].timestamp_ns <= bbo[i].timestamp_ns);
      const std::int64_t ts = trade_next ? trades[j].timestamp_ns : bbo[i].timestamp_ns;
      if (day_of(ts) != day) break;
      if (trade_next) dc.on_trade(trades[j++]);
      else dc.on_quote(bbo[i++]);
    }
    dc.finish();
  }
  return {EventStream(config.symbol, config.tick_size, std::move(events)), std::move(report)};
}

namespace {
template <class Fn>
void read_rows(const std::string& path, std::size_t min_fields, Fn fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::SchemaError, "cannot open " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw SchemaError(1, "missing header");
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split(detail::trim(line));
    if (f.size() < min_fields) throw SchemaError(lineno, "expected " + std::to_string(min_fields) + " fields");
    fn(f, lineno);
  }
}
}  // namespace

std::vector<BboRecord> load_bbo_csv(const std::string& path) {
  std::vector<BboRecord> out;
  read_rows(path, 5, [&](const auto& f, long ln) {
    BboRecord r;
    r.timestamp_ns = detail::to_int(f[0], ln, "timestamp_ns");
    r.bid_price = detail::to_double(f[1], ln, "bid_price");
    r.ask_price = detail::to_double(f[2], ln, "ask_price");
    r.bid_size = detail::to_int(f[3], ln, "bid_size");
    r.ask_size = detail::to_int(f[4], ln, "ask_size");
    if (r.bid_size < 0 || r.ask_size < 0) throw SchemaError(ln, "negative size");
    out.push_back(r);
  });
  return out;
}

std::vector<TradeRecord> load_trades_csv(const std::string& path) {
  std::vector<TradeRecord> out;
  read_rows(path, 3, [&](const auto& f, long ln) {
    TradeRecord r;
    r.timestamp_ns = detail::to_int(f[0], ln, "timestamp_ns");
    r.price = detail::to_double(f[1], ln, "price");
    r.size = detail::to_int(f[2], ln, "size");
    if (r.size <= 0) throw SchemaError(ln, "trade size must be positive");
    if (f.size() > 3 && !detail::trim(f[3]).empty()) {
      r.aggressor_side = static_cast<int>(detail::to_int(f[3], ln, "aggressor_side"));
      if (r.aggressor_side < -1 || r.aggressor_side > 1) throw SchemaError(ln, "aggressor_side must be -1, 0 or 1");
    }
    out.push_back(r);
  });
  return out;
}

EventStream parse_event_csv(std::istream& in, const std::string& symbol, double tick_size) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kEventCsvHeader)
    throw SchemaError(1, std::string("expected header ") + kEventCsvHeader);
  std::vector<MarketEvent> events;
  long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split(detail::trim(line));
    if (f.size() != 8) throw SchemaError(ln, "expected 8 fields, got " + std::to_string(f.size()));
    MarketEvent e;
    e.timestamp_ns = detail::to_int(f[0], ln, "timestamp_ns");
    e.day = static_cast<std::int32_t>(detail::to_int(f[1], ln, "day"));
    try {
      e.type = parse_type(detail::trim(f[2]));
    } catch (const std::invalid_argument& ex) {
      throw SchemaError(ln, ex.what());
    }
    const std::int64_t sign = detail::to_int(f[3], ln, "sign");
    if (sign != 1 && sign != -1) throw SchemaError(ln, "sign must be 1 or -1");
    e.sign = static_cast<std::int8_t>(sign);
    e.gap_ht = detail::to_int(f[4], ln, "gap_halfticks");
    e.mid_before_ht = detail::to_int(f[5], ln, "mid_before_halfticks");
    e.spread_before_ht = detail::to_int(f[6], ln, "spread_before_halfticks");
    e.volume = detail::trim(f[7]).empty() ? -1 : detail::to_int(f[7], ln, "volume");
    try {
      validate_event(e);
    } catch (const Error& ex) {
      throw Error(ErrorKind::InvariantViolation, "line " + std::to_string(ln) + ": " + ex.detail());
    }
    events.push_back(e);
  }
  return EventStream(symbol, tick_size, std::move(events));
}

EventStream load_event_csv(const std::string& path, const std::string& symbol, double tick_size) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::SchemaError, "cannot open " + path);
  return parse_event_csv(in, symbol, tick_size);
}

void write_event_csv(const EventStream& s, std::ostream& out) {
  out << kEventCsvHeader << '\n';
  for (const MarketEvent& e : s.events()) {
    out << e.timestamp_ns << ',' << e.day << ',' << type_name(e.type) << ',' << int(e.sign) << ',' << e.gap_ht << ','
        << e.mid_before_ht << ',' << e.spread_before_ht << ',';
    if (e.has_volume()) out << e.volume;
    out << '\n';
  }
}

void write_event_csv(const EventStream& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::SchemaError, "cannot write " + path);
  write_event_csv(s, out);
}

}  // namespace lobimpact
