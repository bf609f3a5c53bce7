#pragma once

#include "lobimpact/events.hpp"
#include "lobimpact/sim.hpp"

#include <doctest.h>

#include <tuple>
#include <vector>

namespace testing {

using namespace lobimpact;

// One-day stream chained from a starting quote. Steps are (type, sign, gap in half-ticks).
inline EventStream chain(const std::vector<std::tuple<EventType, int, std::int64_t>>& steps,
                         std::int64_t mid_ht = 20000, std::int64_t spread_ht = 8, std::int32_t day = 0) {
  std::vector<MarketEvent> ev;
  std::int64_t ts = day * kNanosPerDay + kSessionOpenNs;
  for (const auto& [type, sign, gap] : steps) {
    MarketEvent e;
    e.timestamp_ns = ts;
    ts += 1'000'000;
    e.day = day;
    e.type = type;
    e.sign = static_cast<std::int8_t>(sign);
    e.gap_ht = gap;
    e.mid_before_ht = mid_ht;
    e.spread_before_ht = spread_ht;
    ev.push_back(e);
    mid_ht = e.mid_after_ht();
    spread_ht = e.spread_after_ht();
  }
  return EventStream("T", 0.01, std::move(ev));
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::ConfigInvalid;
}

// Types and signs with short-range structure; gaps are single-valued per type.
inline GeneratorConfig correlated_constant(std::size_t events, std::uint64_t seed) {
  GeneratorConfig c;
  c.events = events;
  c.seed = seed;
  c.type_prob << 0.0833, 0.25, 0.0833, 0.0834, 0.25, 0.25;
  c.type_process = TypeProcess::Markov;
  for (int i = 0; i < kNumTypes; ++i) c.transition.row(i) = c.type_prob.transpose();
  c.transition.row(1) << 0.05, 0.35, 0.05, 0.05, 0.15, 0.35;
  c.transition.row(5) << 0.15, 0.35, 0.05, 0.10, 0.20, 0.15;
  c.sign_process = SignProcess::Conditional;
  c.same_sign_prob << 0.8, 0.6, 0.5, 0.6, 0.5, 0.35;
  c.gap_pmf[1] = {0.0, 1.0};
  c.gap_pmf[4] = {0.0, 1.0};
  c.gap_pmf[5] = {1.0};
  return c;
}

inline PairCurves planted(int LK) {
  PairCurves k = PairCurves::Zero(kNumPairs, LK + 1);
  auto set = [&](EventType a, EventType b, double amp) {
    for (int t = 1; t <= LK; ++t) k(pair_index(index_of(a), index_of(b)), t) = amp / t;
  };
  set(EventType::MO0, EventType::MOp, 0.5);
  set(EventType::LO0, EventType::LOp, -0.5);
  set(EventType::CA0, EventType::CAp, 0.5);
  set(EventType::MO0, EventType::LOp, -0.4);
  set(EventType::MOp, EventType::MOp, 0.2);
  return k;
}

}  // namespace testing
