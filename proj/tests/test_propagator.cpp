#include "helpers.hpp"

#include "lobimpact/gapmodel.hpp"
#include "lobimpact/linalg.hpp"
#include "lobimpact/propagator.hpp"
#include "lobimpact/stats.hpp"

#include <cmath>

using namespace lobimpact;
using testing::kind_of;

namespace {

// Correlations of independent events: C_aa(0) = 1/P_a, nothing else.
CorrelationSet delta_correlations(const TypeVector& P, int L) {
  CorrelationSet c;
  c.max_lag = L;
  c.P = P;
  c.C = PairCurves::Zero(kNumPairs, L + 1);
  c.Pi = c.C;
  for (int a = 0; a < kNumTypes; ++a)
    if (P(a) > 0) {
      c.C(pair_index(a, a), 0) = 1.0 / P(a);
      c.Pi(pair_index(a, a), 0) = 1.0 / P(a) - 1.0;
      for (int b = 0; b < kNumTypes; ++b)
        if (b != a) c.Pi(pair_index(a, b), 0) = -1.0;
    }
  return c;
}

}  // namespace

TEST_SUITE("propagator") {
  TEST_CASE("identity correlation returns the response") {
    const int L = 40;
    LagVector C = LagVector::Zero(L + 1), R(L + 1);
    C(0) = 1;
    for (int l = 0; l <= L; ++l) R(l) = std::sin(0.3 * l) + 0.01 * l;
    const LagVector G = solve_single_event(R, C, 0);
    CHECK((G.segment(1, L) - R.segment(1, L)).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("constant response with uncorrelated signs gives constant G") {
    const int L = 30;
    LagVector C = LagVector::Zero(L + 1), R = LagVector::Constant(L + 1, 0.7);
    C(0) = 1;
    const LagVector G = solve_single_event(R, C, 0);
    for (int l = 1; l <= L; ++l) CHECK(G(l) == doctest::Approx(0.7));
  }

  TEST_CASE("single-event forward map inverts the solve") {
    const int L = 50;
    LagVector C(L + 1), G(L + 1);
    for (int l = 0; l <= L; ++l) {
      C(l) = std::pow(1.0 + l, -0.6);
      G(l) = l ? 1.0 / std::sqrt(static_cast<double>(l)) : 0.0;
    }
    const LagVector R = forward_single(C, G, TailClosure::Flat);
    const LagVector back = solve_single_event(R, C, 0);
    CHECK((back.segment(1, L) - G.segment(1, L)).abs().maxCoeff() < 1e-8);
  }

  TEST_CASE("large ridge parameter shrinks G to zero") {
    const int L = 20;
    LagVector C = LagVector::Zero(L + 1), R = LagVector::Constant(L + 1, 1.0);
    C(0) = 1;
    CHECK(solve_single_event(R, C, 1e12).abs().maxCoeff() < 1e-6);
  }

  TEST_CASE("singular system without ridge") {
    const int L = 10;
    const LagVector C = LagVector::Ones(L + 1), R = LagVector::Ones(L + 1);
    CHECK(kind_of([&] { solve_single_event(R, C, 0); }) == ErrorKind::SingularSystem);
  }

  TEST_CASE("multi-event round trip on a correlated constant-gap stream") {
    const auto s = generate(testing::correlated_constant(200000, 21)).stream;
    StatsConfig sc;
    sc.max_lag = 100;
    sc.bootstrap = 0;
    const auto st = estimate_all(s, sc);
    const PropagatorSet G = solve_multi_event(st.corr, st.resp, -1);
    const TypeCurves fwd = forward_response(st.corr, G.G, G.tail);
    double num = 0, den = 0;
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 1; l <= 100; ++l) {
        num += std::pow(fwd(a, l) - st.resp.R(a, l), 2);
        den += std::pow(st.resp.R(a, l), 2);
      }
    CHECK(std::sqrt(num / den) == doctest::Approx(G.residual).epsilon(1e-6));
    CHECK(G.residual < 1e-2);
    // Constant gaps: the propagators are the gaps themselves.
    const RealizedGaps g = realized_gaps(s);
    for (EventType t : kPriceChanging)
      for (int l = 1; l <= 30; ++l) CHECK(G.G(index_of(t), l) == doctest::Approx(g.delta_r(index_of(t))).epsilon(0.03));

    const DiffusionPrediction d = predict_diffusion_temporary(G, st.corr, 100);
    for (int l = 1; l <= 100; ++l) CHECK(d.D(l) == doctest::Approx(st.resp.D(l)).epsilon(0.05));
  }

  TEST_CASE("dimension mismatch") {
    const auto s = generate(testing::correlated_constant(20000, 2)).stream;
    StatsConfig sc;
    sc.bootstrap = 0;
    const auto corr = estimate_correlations(s, 10, true, sc);
    const auto resp = estimate_response(s, 12, sc);
    CHECK(kind_of([&] { solve_multi_event(corr, resp, -1); }) == ErrorKind::DimensionMismatch);
  }

  TEST_CASE("diffusion of the temporary impact model") {
    TypeVector P;
    P << 0.3, 0.05, 0.2, 0.35, 0.05, 0.05;
    const int L = 200;
    const CorrelationSet corr = delta_correlations(P, L);
    PropagatorSet G;
    G.max_lag = L;
    G.G = TypeCurves::Zero(kNumTypes, L + 1);
    G.active.fill(true);
    CHECK(predict_diffusion_temporary(G, corr, 50).D.abs().maxCoeff() == 0);

    TypeVector flat;
    flat << 0.1, 0.6, -0.05, 0.08, 0.9, 0.4;
    for (int a = 0; a < kNumTypes; ++a) G.G.row(a).tail(L).setConstant(flat(a));
    const LagVector D = predict_diffusion_temporary(G, corr, 100).D;
    const double slope = (P * flat.square()).sum();
    for (int l = 1; l <= 100; ++l) CHECK(D(l) == doctest::Approx(l * slope).epsilon(0.01));
  }

  TEST_CASE("market-order flow response") {
    GeneratorConfig c;
    c.events = 50000;
    c.gap_pmf[1] = {0.0, 1.0};
    const auto s = generate(c).stream;
    const FlowSeries f = market_order_flow(s, 10);
    CHECK(f.C(0) == 1.0);
    // independent orders: the first response is the mean move per market order
    const TypeVector P = type_probabilities(s);
    const double pmop = P(index_of(EventType::MOp)) / (P(index_of(EventType::MOp)) + P(index_of(EventType::MO0)));
    CHECK(f.R(1) == doctest::Approx(pmop).epsilon(0.05));
  }
}
