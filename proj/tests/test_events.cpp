#include "helpers.hpp"

using namespace lobimpact;
using testing::chain;
using testing::kind_of;

TEST_SUITE("events") {
  TEST_CASE("side follows the sign except for limit orders") {
    CHECK(derive_side(EventType::LOp, +1) == -1);
    CHECK(derive_side(EventType::MOp, +1) == +1);
    CHECK(derive_side(EventType::CA0, -1) == -1);
    CHECK(derive_side(EventType::LO0, -1) == +1);
  }

  TEST_CASE("zero-gap events leave the mid in place") {
    const auto s = chain({{EventType::MO0, 1, 0}, {EventType::LO0, -1, 0}, {EventType::CA0, 1, 0}});
    for (double m : reconstruct_mid(s)) CHECK(m == 10000.0);
    for (double sp : reconstruct_spread(s)) CHECK(sp == 4.0);
  }

  TEST_CASE("one price-changing event") {
    const auto up = chain({{EventType::MOp, 1, 1}});
    CHECK(reconstruct_mid(up).back() - reconstruct_mid(up).front() == 0.5);
    const auto lop = chain({{EventType::LOp, 1, 1}});
    CHECK(reconstruct_spread(lop).back() - reconstruct_spread(lop).front() == -1.0);
    const auto cap = chain({{EventType::CAp, -1, 2}});
    CHECK(reconstruct_spread(cap).back() - reconstruct_spread(cap).front() == 2.0);
    CHECK(reconstruct_mid(cap).back() == 9999.0);
  }

  TEST_CASE("generated paths match the simulator") {
    GeneratorConfig c;
    c.events = 100000;
    c.gap_pmf[1] = {0.5, 0.3, 0.2};
    c.gap_pmf[5] = {0.7, 0.3};
    const auto g = generate(c);
    const auto mid = reconstruct_mid(g.stream);
    const auto sp = reconstruct_spread(g.stream);
    REQUIRE(mid.size() == g.mid_ht.size());
    for (std::size_t i = 0; i < mid.size(); ++i) {
      CHECK_MESSAGE(mid[i] == 0.5 * static_cast<double>(g.mid_ht[i]), i);
      CHECK_MESSAGE(sp[i] == 0.5 * static_cast<double>(g.spread_ht[i]), i);
    }
  }

  TEST_CASE("invariant violations") {
    MarketEvent e;
    e.type = EventType::MO0;
    e.gap_ht = 1;
    e.mid_before_ht = 100;
    e.spread_before_ht = 2;
    CHECK(kind_of([&] { validate_event(e); }) == ErrorKind::InvariantViolation);
    e.type = EventType::MOp;
    e.gap_ht = 0;
    CHECK(kind_of([&] { validate_event(e); }) == ErrorKind::InvariantViolation);
    e.gap_ht = 1;
    e.sign = 0;
    CHECK(kind_of([&] { validate_event(e); }) == ErrorKind::InvariantViolation);
  }

  TEST_CASE("broken chain is rejected") {
    auto s = chain({{EventType::MOp, 1, 2}, {EventType::MO0, 1, 0}});
    std::vector<MarketEvent> ev(s.events().begin(), s.events().end());
    ev[1].mid_before_ht += 1;
    CHECK(kind_of([&] { EventStream("T", 0.01, ev); }) == ErrorKind::BrokenChain);
  }

  TEST_CASE("days restart from their own opening quote") {
    auto a = chain({{EventType::MOp, 1, 2}, {EventType::LOp, -1, 1}}, 20000, 8, 0);
    auto b = chain({{EventType::CAp, 1, 1}}, 30000, 6, 1);
    std::vector<MarketEvent> ev(a.events().begin(), a.events().end());
    ev.insert(ev.end(), b.events().begin(), b.events().end());
    const EventStream s("T", 0.01, ev);
    CHECK(s.num_days() == 2);
    const auto mid = reconstruct_mid(s);
    CHECK(mid[2] == 15000.0);
    CHECK(mid[3] == 15000.5);
  }

  TEST_CASE("session trim keeps the inner window") {
    std::vector<MarketEvent> ev;
    const std::int64_t minute = 60'000'000'000LL;
    for (int m = 0; m <= 390; m += 10) {
      MarketEvent e;
      e.timestamp_ns = kSessionOpenNs + m * minute;
      e.mid_before_ht = 100;
      e.spread_before_ht = 2;
      ev.push_back(e);
    }
    const EventStream s("T", 0.01, ev);
    const EventStream t = trim_session(s, {30, 40});
    CHECK(t.size() == 33);  // minutes 30..350
    CHECK(t.session_trim() == SessionTrim{30, 40});
    CHECK(t[0].timestamp_ns == kSessionOpenNs + 30 * minute);
  }

  TEST_CASE("sign flip mirrors the mid") {
    const auto s = chain({{EventType::MOp, 1, 2}, {EventType::LOp, 1, 1}, {EventType::CAp, -1, 1}});
    const auto f = flip_signs(s);
    const auto m = reconstruct_mid(s), mf = reconstruct_mid(f);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] - m[0] == -(mf[i] - mf[0]));
    CHECK(reconstruct_spread(s) == reconstruct_spread(f));
  }

  TEST_CASE("type probabilities") {
    const auto s = chain({{EventType::MO0, 1, 0}, {EventType::MO0, -1, 0}, {EventType::LO0, 1, 0}, {EventType::MOp, 1, 1}});
    const TypeVector p = type_probabilities(s);
    CHECK(p(index_of(EventType::MO0)) == 0.5);
    CHECK(p(index_of(EventType::LO0)) == 0.25);
    CHECK(p(index_of(EventType::MOp)) == 0.25);
  }
}
