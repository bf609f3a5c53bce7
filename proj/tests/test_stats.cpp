#include "helpers.hpp"

#include "lobimpact/gapmodel.hpp"
#include "lobimpact/linalg.hpp"
#include "lobimpact/stats.hpp"

#include <cmath>

using namespace lobimpact;
using testing::chain;
using testing::kind_of;

namespace {

StatsConfig quick(int L, int bootstrap = 0) {
  StatsConfig c;
  c.max_lag = L;
  c.bootstrap = bootstrap;
  c.min_count = 1;
  return c;
}

// Direct sums over same-day pairs, straight from the definitions.
struct Naive {
  TypeVector P = TypeVector::Zero();
  PairCurves C, Pi;
  TypeCurves R, RS;
  LagVector D;
};

Naive naive(const EventStream& s, int L) {
  Naive n;
  const auto mid = mid_path_ht(s);
  const auto spr = spread_path_ht(s);
  const auto& b = s.day_boundaries();
  const double N = static_cast<double>(s.size());
  for (const auto& e : s.events()) n.P(index_of(e.type)) += 1.0 / N;
  n.C = PairCurves::Zero(kNumPairs, L + 1);
  n.Pi = n.C;
  n.R = TypeCurves::Zero(kNumTypes, L + 1);
  n.RS = n.R;
  n.D = LagVector::Zero(L + 1);
  for (int l = 0; l <= L; ++l) {
    Eigen::Array<double, kNumPairs, 1> sgn = decltype(sgn)::Zero(), cnt = decltype(cnt)::Zero();
    TypeVector rsum = TypeVector::Zero(), ssum = rsum, rcnt = rsum;
    double pairs = 0, dsum = 0, dcnt = 0;
    for (std::size_t d = 0; d + 1 < b.size(); ++d) {
      // mid after the last event of the day closes the path
      std::vector<double> p, sp;
      for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
        p.push_back(0.5 * static_cast<double>(mid[t]));
        sp.push_back(0.5 * static_cast<double>(spr[t]));
      }
      p.push_back(s[b[d + 1] - 1].mid_after());
      sp.push_back(s[b[d + 1] - 1].spread_after());
      const std::size_t n_day = b[d + 1] - b[d];
      for (std::size_t i = 0; i < n_day; ++i) {
        const auto& e1 = s[b[d] + i];
        const int a = index_of(e1.type);
        if (i + l < n_day) {
          const auto& e2 = s[b[d] + i + l];
          const int pr = pair_index(a, index_of(e2.type));
          sgn(pr) += e1.sign * e2.sign;
          cnt(pr) += 1;
          pairs += 1;
        }
        if (i + l <= n_day) {
          rsum(a) += e1.sign * (p[i + l] - p[i]);
          ssum(a) += sp[i + l] - sp[i];
          rcnt(a) += 1;
          dsum += std::pow(p[i + l] - p[i], 2);
          dcnt += 1;
        }
      }
    }
    for (int a = 0; a < kNumTypes; ++a) {
      for (int c = 0; c < kNumTypes; ++c) {
        const int pr = pair_index(a, c);
        n.C(pr, l) = sgn(pr) / pairs / (n.P(a) * n.P(c));
        n.Pi(pr, l) = cnt(pr) / pairs / (n.P(a) * n.P(c)) - 1;
      }
      n.R(a, l) = rsum(a) / rcnt(a);
      n.RS(a, l) = ssum(a) / rcnt(a);
    }
    n.D(l) = dsum / dcnt;
  }
  return n;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("matches direct sums") {
    GeneratorConfig c = testing::correlated_constant(6000, 17);
    c.days = 3;
    c.gap_pmf[1] = {0.5, 0.3, 0.2};
    c.gap_pmf[5] = {0.6, 0.4};
    const auto s = generate(c).stream;
    const int L = 15;
    const auto st = estimate_all(s, quick(L));
    const Naive n = naive(s, L);
    CHECK((st.corr.P - n.P).abs().maxCoeff() < 1e-12);
    CHECK((st.corr.C - n.C).abs().maxCoeff() < 1e-9);
    CHECK((st.corr.Pi - n.Pi).abs().maxCoeff() < 1e-9);
    CHECK((st.resp.R - n.R).abs().maxCoeff() < 1e-9);
    CHECK((st.resp.RS - n.RS).abs().maxCoeff() < 1e-9);
    CHECK((st.resp.D - n.D).abs().maxCoeff() < 1e-9);
  }

  TEST_CASE("threads do not change the sums") {
    const auto s = generate(testing::correlated_constant(20000, 3)).stream;
    StatsConfig one = quick(30, 20), many = one;
    many.threads = 4;
    const auto a = estimate_all(s, one), b = estimate_all(s, many);
    CHECK((a.corr.C - b.corr.C).abs().maxCoeff() == 0);
    CHECK((a.resp.R_se - b.resp.R_se).abs().maxCoeff() == 0);
  }

  TEST_CASE("lag-zero identities") {
    const auto s = generate(testing::correlated_constant(20000, 5)).stream;
    const auto st = estimate_all(s, quick(5));
    const RealizedGaps g = realized_gaps(s);
    double d1 = 0;
    for (int a = 0; a < kNumTypes; ++a) {
      CHECK(st.corr.C(pair_index(a, a), 0) == doctest::Approx(1.0 / st.corr.P(a)).epsilon(1e-12));
      CHECK(std::abs(st.resp.R(a, 1) - g.delta_r(a)) < 1e-12);
      d1 += st.corr.P(a) * g.mean_sq(a);
    }
    CHECK(st.resp.D(1) == doctest::Approx(d1).epsilon(1e-12));
    const auto sa = estimate_sign_autocorrs(s, 5);
    CHECK(sa.sign(0) == 1.0);
    CHECK(sa.side(0) == 1.0);
  }

  TEST_CASE("perfectly alternating market orders") {
    std::vector<std::tuple<EventType, int, std::int64_t>> steps;
    for (int i = 0; i < 200; ++i) steps.emplace_back(EventType::MO0, i % 2 ? -1 : 1, 0);
    const auto st = estimate_all(chain(steps), quick(3));
    const int pr = pair_index(0, 0);
    CHECK(st.corr.C(pr, 1) == doctest::Approx(-1.0));
    CHECK(st.corr.C(pr, 2) == doctest::Approx(1.0));
  }

  TEST_CASE("independent events are uncorrelated") {
    GeneratorConfig c;
    c.events = 100000;
    c.days = 50;  // enough blocks for a stable s.e.
    c.seed = 8;
    const auto st = estimate_all(generate(c).stream, quick(20, 100));
    // 720 points: about 5% beyond two s.e., a rare one beyond four
    int beyond2 = 0, beyond4 = 0;
    for (int pr = 0; pr < kNumPairs; ++pr)
      for (int l = 1; l <= 20; ++l) {
        const double z = std::abs(st.corr.C(pr, l)) / st.corr.C_se(pr, l);
        beyond2 += z > 2;
        beyond4 += z > 4;
      }
    CHECK(beyond2 >= 15);
    CHECK(beyond2 <= 60);
    CHECK(beyond4 <= 1);
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 2; l <= 20; ++l)
        CHECK(std::abs(st.resp.R(a, l) - st.resp.R(a, 1)) <= 4 * st.resp.R_se(a, l) + 1e-12);
  }

  TEST_CASE("diffusion of independent constant gaps grows linearly") {
    GeneratorConfig c;
    c.events = 200000;
    c.seed = 9;
    const auto st = estimate_all(generate(c).stream, quick(100));
    for (int l = 1; l <= 100; ++l) CHECK(st.resp.D(l) / l == doctest::Approx(st.resp.D(1)).epsilon(0.02));
  }

  TEST_CASE("persistent signs make diffusion superlinear") {
    GeneratorConfig c;
    c.events = 100000;
    c.sign_process = SignProcess::Conditional;
    c.same_sign_prob = TypeVector::Constant(0.95);
    const auto st = estimate_all(generate(c).stream, quick(100));
    CHECK(st.resp.D(100) / 100 > 1.5 * st.resp.D(1));
    CHECK(st.resp.D(50) / 50 > st.resp.D(10) / 10);
  }

  TEST_CASE("long-memory side autocorrelation") {
    GeneratorConfig c;
    c.events = std::size_t{1} << 20;
    c.days = 1;
    c.sign_process = SignProcess::LongMemory;
    c.gamma = 0.7;
    const auto sa = estimate_sign_autocorrs(generate(c).stream, 300);
    CHECK(loglog_fit(sa.side, 10, 300).slope == doctest::Approx(-0.7).epsilon(0.1 / 0.7));
  }

  TEST_CASE("short-memory signs die out") {
    GeneratorConfig c = testing::correlated_constant(200000, 4);
    const auto sa = estimate_sign_autocorrs(generate(c).stream, 150);
    for (int l = 100; l <= 150; ++l) CHECK(std::abs(sa.sign(l)) < 0.02);
  }

  TEST_CASE("global sign flip leaves the statistics unchanged") {
    const auto s = generate(testing::correlated_constant(20000, 6)).stream;
    const auto a = estimate_all(s, quick(10)), b = estimate_all(flip_signs(s), quick(10));
    CHECK((a.corr.C - b.corr.C).abs().maxCoeff() < 1e-12);
    CHECK((a.corr.Pi - b.corr.Pi).abs().maxCoeff() < 1e-12);
    CHECK((a.resp.R - b.resp.R).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("spread response relaxes to the mean spread gap") {
    GeneratorConfig c;
    c.events = 400000;
    c.seed = 12;
    c.type_prob << 0.25, 0.10, 0.20, 0.25, 0.05, 0.15;
    c.gap_process = GapProcess::SpreadReverting;
    c.alpha = 0.05;
    c.mean_spread_ticks = 20;
    c.initial_spread_ticks = 20;
    c.gap_pmf[1] = c.gap_pmf[4] = c.gap_pmf[5] = {0.0, 1.0};
    const auto s = generate(c).stream;
    const auto st = estimate_all(s, quick(300, 50));
    double all = 0;
    TypeVector by = TypeVector::Zero(), n = by;
    for (const auto& e : s.events()) {
      all += e.spread_before();
      by(index_of(e.type)) += e.spread_before();
      n(index_of(e.type)) += 1;
    }
    all /= static_cast<double>(s.size());
    for (int a = 0; a < kNumTypes; ++a)
      CHECK(std::abs(st.resp.RS(a, 300) - (all - by(a) / n(a))) < 4 * st.resp.RS_se(a, 300) + 0.02);
  }

  TEST_CASE("errors") {
    const auto s = chain({{EventType::MO0, 1, 0}, {EventType::MO0, 1, 0}});
    CHECK(kind_of([&] { estimate_all(s, quick(5)); }) == ErrorKind::InsufficientData);
  }

  TEST_CASE("averaging") {
    const auto a = estimate_correlations(generate(testing::correlated_constant(20000, 1)).stream, 5, true, quick(5));
    const auto b = estimate_correlations(generate(testing::correlated_constant(40000, 2)).stream, 5, true, quick(5));
    const auto norm = average_correlations({a, b}, Averaging::Normalized);
    const auto pool = average_correlations({a, b}, Averaging::Pooled);
    CHECK(norm.C(7, 3) == doctest::Approx(0.5 * (a.C(7, 3) + b.C(7, 3))));
    CHECK(pool.C(7, 3) == doctest::Approx((a.C(7, 3) + 2 * b.C(7, 3)) / 3));
  }
}
