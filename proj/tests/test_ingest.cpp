#include "helpers.hpp"

#include "lobimpact/ingest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lobimpact;
using testing::kind_of;

namespace {

constexpr std::int64_t kMs = 1'000'000;

BboRecord quote(std::int64_t t, double bid, double ask, std::int64_t bs = 100, std::int64_t as = 100) {
  return BboRecord{kSessionOpenNs + t, bid, ask, bs, as};
}

// The opening quote sits before the session and only sets the book.
std::vector<BboRecord> opening() { return {BboRecord{kSessionOpenNs - 60'000 * kMs, 100.00, 100.02, 100, 100}}; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lobimpact_test_" + name)).string();
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("market order that empties the ask") {
    auto bbo = opening();
    bbo.push_back(quote(10 * kMs, 100.00, 100.04, 100, 80));
    const std::vector<TradeRecord> trades = {{kSessionOpenNs + 10 * kMs, 100.02, 100, +1}};
    const auto cs = classify(bbo, trades, {});
    REQUIRE(cs.stream.size() == 1);
    const MarketEvent& e = cs.stream[0];
    CHECK(e.type == EventType::MOp);
    CHECK(e.sign == 1);
    CHECK(e.gap() == 1.0);
    CHECK(e.volume == 100);
    CHECK(e.mid_before() == 10001.0);
    CHECK(cs.report.total().conserved());
  }

  TEST_CASE("bid placed one tick inside the spread") {
    auto bbo = opening();
    bbo.push_back(quote(5 * kMs, 100.01, 100.02, 30, 100));
    const auto cs = classify(bbo, {}, {});
    REQUIRE(cs.stream.size() == 1);
    const MarketEvent& e = cs.stream[0];
    CHECK(e.type == EventType::LOp);
    CHECK(e.sign == 1);
    CHECK(e.side() == -1);
    CHECK(e.gap() == 0.5);
    CHECK(e.spread_after() == 1.0);
  }

  TEST_CASE("trades within a millisecond form one market order") {
    auto bbo = opening();
    bbo.push_back(quote(20 * kMs + 400'000, 100.00, 100.02, 100, 50));
    const std::vector<TradeRecord> trades = {{kSessionOpenNs + 20 * kMs, 100.02, 30, +1},
                                             {kSessionOpenNs + 20 * kMs + 400'000, 100.02, 20, +1}};
    const auto cs = classify(bbo, trades, {});
    REQUIRE(cs.stream.size() == 1);
    CHECK(cs.stream[0].type == EventType::MO0);
    CHECK(cs.stream[0].volume == 50);
    CHECK(cs.report.total().trades == 1);
    CHECK(cs.report.total().conserved());
  }

  TEST_CASE("quote-only changes") {
    auto bbo = opening();
    bbo.push_back(quote(1 * kMs, 100.00, 100.02, 150, 100));  // LO0 on the bid
    bbo.push_back(quote(2 * kMs, 100.00, 100.02, 150, 60));   // CA0 on the ask
    bbo.push_back(quote(3 * kMs, 99.99, 100.02, 40, 60));     // CAp on the bid
    const auto cs = classify(bbo, {}, {});
    REQUIRE(cs.stream.size() == 3);
    CHECK(cs.stream[0].type == EventType::LO0);
    CHECK(cs.stream[0].sign == 1);
    CHECK(cs.stream[1].type == EventType::CA0);
    CHECK(cs.stream[1].sign == 1);
    CHECK(cs.stream[2].type == EventType::CAp);
    CHECK(cs.stream[2].sign == -1);
    CHECK(cs.stream[2].gap() == 0.5);
  }

  TEST_CASE("crossed record and stray trade are discarded and counted") {
    auto bbo = opening();
    bbo.push_back(quote(1 * kMs, 100.03, 100.02));
    bbo.push_back(quote(2 * kMs, 100.00, 100.02));
    const std::vector<TradeRecord> trades = {{kSessionOpenNs + 50 * kMs, 100.02, 10, +1}};
    const auto cs = classify(bbo, trades, {});
    const DayCounts t = cs.report.total();
    CHECK(t.discards[static_cast<int>(DiscardReason::CrossedQuote)] == 1);
    CHECK(t.discards[static_cast<int>(DiscardReason::UnmatchedTrade)] == 1);
    CHECK(t.conserved());
  }

  TEST_CASE("prices off the tick grid are rejected") {
    auto bbo = opening();
    bbo.push_back(quote(1 * kMs, 100.005, 100.02));
    CHECK(kind_of([&] { classify(bbo, {}, {}); }) == ErrorKind::NonHalfTickGap);
  }

  TEST_CASE("synthetic feed is classified as its truth") {
    FeedConfig fc;
    fc.updates_per_day = 4000;
    fc.days = 3;
    const RawFeed feed = synthetic_feed(fc);
    const auto cs = classify(feed.bbo, feed.trades, {});
    REQUIRE(cs.stream.size() == feed.truth.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < feed.truth.size(); ++i) bad += !(cs.stream[i] == feed.truth[i]);
    CHECK(bad == 0);
    for (const auto& [day, c] : cs.report.per_day) CHECK_MESSAGE(c.conserved(), day);
    std::array<int, kNumTypes> seen{};
    for (const auto& e : cs.stream.events()) ++seen[index_of(e.type)];
    for (int k = 0; k < kNumTypes; ++k) CHECK(seen[k] > 0);
  }

  TEST_CASE("raw CSV loaders") {
    const std::string bp = temp_path("bbo.csv"), tp = temp_path("trades.csv");
    std::ofstream(bp) << "timestamp_ns,bid_price,ask_price,bid_size,ask_size\n"
                      << kSessionOpenNs - 1 << ",100.00,100.02,100,100\n"
                      << kSessionOpenNs + 5 * kMs << ",100.01,100.02,30,100\n";
    std::ofstream(tp) << "timestamp_ns,price,size,aggressor_side\n" << kSessionOpenNs + 9 * kMs << ",100.02,10,\n";
    const auto bbo = load_bbo_csv(bp);
    const auto trades = load_trades_csv(tp);
    REQUIRE(bbo.size() == 2);
    REQUIRE(trades.size() == 1);
    CHECK(trades[0].aggressor_side == 0);
    CHECK(bbo[1].bid_size == 30);
    std::filesystem::remove(bp);
    std::filesystem::remove(tp);
  }

  TEST_CASE("event CSV round trip") {
    GeneratorConfig c;
    c.events = 100000;
    c.gap_pmf[1] = {0.5, 0.5};
    const auto g = generate(c);
    std::stringstream ss;
    write_event_csv(g.stream, ss);
    const EventStream back = parse_event_csv(ss, g.stream.symbol(), g.stream.tick_size());
    CHECK(back == g.stream);
  }

  TEST_CASE("event CSV edge cases") {
    std::stringstream empty(std::string(kEventCsvHeader) + "\n");
    CHECK(parse_event_csv(empty).empty());
    std::stringstream bad(std::string(kEventCsvHeader) + "\n" + std::to_string(kSessionOpenNs) +
                          ",0,MO0,1,2,20000,4,\n");
    CHECK(kind_of([&] { parse_event_csv(bad); }) == ErrorKind::InvariantViolation);
    std::stringstream header("time,day\n");
    CHECK(kind_of([&] { parse_event_csv(header); }) == ErrorKind::SchemaError);
    std::stringstream type(std::string(kEventCsvHeader) + "\n1,0,XX,1,0,20000,4,\n");
    CHECK(kind_of([&] { parse_event_csv(type); }) == ErrorKind::SchemaError);
  }
}
