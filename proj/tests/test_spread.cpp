#include "helpers.hpp"

#include "lobimpact/spread.hpp"
#include "lobimpact/stats.hpp"

#include <cmath>

using namespace lobimpact;
using testing::chain;
using testing::kind_of;

namespace {

GeneratorConfig reverting(double alpha, std::size_t events, std::uint64_t seed) {
  GeneratorConfig c;
  c.events = events;
  c.seed = seed;
  c.type_prob << 0.25, 0.10, 0.20, 0.25, 0.05, 0.15;
  c.gap_process = GapProcess::SpreadReverting;
  c.alpha = alpha;
  c.mean_spread_ticks = 40;
  c.initial_spread_ticks = alpha > 0 ? 40 : 5000;
  c.gap_pmf[1] = c.gap_pmf[4] = c.gap_pmf[5] = {0.0, 1.0};
  return c;
}

}  // namespace

TEST_SUITE("spread") {
  TEST_CASE("alpha outside [0, 1)") {
    const auto s = chain({{EventType::MOp, 1, 2}, {EventType::LOp, -1, 1}});
    CHECK(kind_of([&] { spread_model(s, -0.1); }) == ErrorKind::AlphaOutOfRange);
    CHECK(kind_of([&] { spread_model(s, 1.0); }) == ErrorKind::AlphaOutOfRange);
    SpreadModel m = spread_model(s, 0.0);
    m.alpha = 1.5;
    CorrelationSet corr;
    corr.max_lag = 2;
    corr.P = type_probabilities(s);
    corr.Pi = PairCurves::Zero(kNumPairs, 3);
    CHECK(kind_of([&] { predict_spread_response(m, corr, 2); }) == ErrorKind::AlphaOutOfRange);
  }

  TEST_CASE("spread model means") {
    const auto s = chain({{EventType::MOp, 1, 2}, {EventType::LOp, -1, 1}, {EventType::MO0, 1, 0}});
    const SpreadModel m = spread_model(s, 0.2);
    // spreads seen: 4, 6, 5 ticks
    CHECK(m.mean_spread == doctest::Approx(5.0));
    CHECK(m.mean_spread_by_type(index_of(EventType::LOp)) == 6.0);
    CHECK(m.dbar_r(index_of(EventType::MOp)) == 2.0);
    CHECK(m.dbar_r(index_of(EventType::LOp)) == -1.0);
    CHECK(m.dbar_r(index_of(EventType::MO0)) == 0.0);
  }

  TEST_CASE("gaps do not depend on the spread when they are constant") {
    GeneratorConfig c;
    c.events = 100000;
    c.initial_spread_ticks = 1000;
    c.gap_pmf[1] = {0.0, 1.0};
    const auto s = generate(c).stream;
    const SpreadBins b = gaps_vs_spread(s, {0, 200, 2000, 1e6, 2e6});
    CHECK(b.empty[3]);
    CHECK(std::isnan(b.mean_gap(3, index_of(EventType::MOp))));
    for (std::size_t i = 0; i < 3; ++i)
      if (b.counts(i, index_of(EventType::MOp)) > 0) CHECK(b.mean_gap(i, index_of(EventType::MOp)) == 1.0);
    CHECK(kind_of([&] { gaps_vs_spread(s, {1.0}); }) == ErrorKind::DimensionMismatch);
  }

  TEST_CASE("reverting gaps shrink at wide spreads") {
    const auto s = generate(reverting(0.05, 200000, 2)).stream;
    const SpreadBins b = gaps_vs_spread(s, {0, 38, 42, 1e6});
    // gaps that widen the spread shrink when it is wide, those that narrow it grow
    const int mop = index_of(EventType::MOp), lop = index_of(EventType::LOp);
    REQUIRE(b.counts(0, mop) > 100);
    REQUIRE(b.counts(2, mop) > 100);
    CHECK(b.mean_gap(2, mop) < b.mean_gap(0, mop));
    CHECK(b.mean_gap(2, lop) > b.mean_gap(0, lop));
  }

  TEST_CASE("without reversion the prediction is a plain convolution") {
    const auto s = generate(testing::correlated_constant(50000, 11)).stream;
    StatsConfig sc;
    sc.bootstrap = 0;
    const auto corr = estimate_correlations(s, 20, true, sc);
    const SpreadModel m = spread_model(s, 0.0);
    const TypeCurves R = predict_spread_response(m, corr, 20);
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 1; l <= 20; ++l) {
        double sum = 0;
        for (int n = 0; n < l; ++n)
          for (int b = 0; b < kNumTypes; ++b) sum += m.dbar_r(b) * corr.P(b) * corr.pi(a, b, n);
        CHECK(R(a, l) == doctest::Approx(sum).epsilon(1e-10));
      }
  }

  TEST_CASE("reversion with uncorrelated flow decays geometrically") {
    const auto s = generate(testing::correlated_constant(50000, 12)).stream;
    StatsConfig sc;
    sc.bootstrap = 0;
    CorrelationSet corr = estimate_correlations(s, 100, true, sc);
    corr.Pi.rightCols(100).setZero();
    const double alpha = 0.1, q = 1 - alpha;
    const SpreadModel m = spread_model(s, alpha);
    const TypeCurves R = predict_spread_response(m, corr, 100);
    for (int a = 0; a < kNumTypes; ++a) {
      const double level = m.mean_spread - m.mean_spread_by_type(a);
      double src = 0;
      for (int b = 0; b < kNumTypes; ++b) src += m.dbar_r(b) * corr.P(b) * corr.pi(a, b, 0);
      for (int l = 1; l <= 100; ++l)
        CHECK(R(a, l) == doctest::Approx(level * (1 - std::pow(q, l)) + std::pow(q, l - 1) * src).epsilon(1e-10));
    }
  }

  TEST_CASE("spread autocorrelation") {
    const auto s = generate(reverting(0.01, 400000, 4)).stream;
    const SpreadAcf acf = spread_autocorrelation(s, 200);
    CHECK(acf.acf(0) == 1.0);
    CHECK(acf.rate == doctest::Approx(0.01).epsilon(0.2));
    CHECK_FALSE(acf.near_unit_root);

    const SpreadAcf free = spread_autocorrelation(generate(reverting(0.0, 400000, 4)).stream, 200);
    CHECK(free.near_unit_root);
    CHECK(kind_of([&] { spread_autocorrelation(s, 100000); }) == ErrorKind::InsufficientData);
  }

  TEST_CASE("unreverted model against its own stream") {
    const auto s = generate(reverting(0.0, 300000, 6)).stream;
    StatsConfig sc;
    sc.max_lag = 100;
    sc.bootstrap = 50;
    const SpreadComparison cmp = compare_spread_response(s, 0.0, 60, sc);
    int beyond = 0;
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 1; l <= 60; ++l)
        beyond += std::abs(cmp.predicted(a, l) - cmp.empirical(a, l)) > 3 * cmp.diff_se(a, l) + 1e-9;
    CHECK(beyond <= 4);  // 360 points
  }

  TEST_CASE("alpha fit recovers the planted reversion") {
    const auto s = generate(reverting(0.02, 400000, 8)).stream;
    StatsConfig sc;
    sc.max_lag = 200;
    sc.bootstrap = 0;
    const auto st = estimate_all(s, sc);
    const AlphaFit f = fit_alpha(spread_model(s, 0.0), adjust_pi_tails(st.corr), st.resp.RS, 100);
    CHECK(f.alpha == doctest::Approx(0.02).epsilon(0.5));
    CHECK(kind_of([&] { fit_alpha(spread_model(s, 0.0), st.corr, st.resp.RS, 500); }) == ErrorKind::DimensionMismatch);
  }

  TEST_CASE("spread steps balance out") {
    const auto s = generate(reverting(0.01, 300000, 10)).stream;
    const SpreadBalance b = spread_balance(s);
    REQUIRE(b.stderr_ > 0);
    CHECK(std::abs(b.mean_step) < 3 * b.stderr_);
  }
}
