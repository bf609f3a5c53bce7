#include "helpers.hpp"

#include "lobimpact/gapmodel.hpp"
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
  return c;
}

GeneratorConfig planted_stream(std::size_t events) {
  GeneratorConfig c;
  c.events = events;
  c.seed = 5;
  c.type_prob << 0.0833, 0.25, 0.0833, 0.0834, 0.25, 0.25;
  c.gap_process = GapProcess::Planted;
  c.planted_delta_r << 0, 2, 0, 0, 2, 2;
  c.planted_kernel = testing::planted(100);
  return c;
}

}  // namespace

TEST_SUITE("gapmodel") {
  TEST_CASE("realized gaps") {
    const auto one = chain({{EventType::MOp, 1, 4}, {EventType::MO0, -1, 0}});
    CHECK(realized_gaps(one).delta_r(index_of(EventType::MOp)) == 2.0);

    GeneratorConfig c;
    c.events = 50000;  // every gap one half-tick
    const RealizedGaps g = realized_gaps(generate(c).stream);
    for (EventType t : kPriceChanging) CHECK(2 * g.delta_r(index_of(t)) == 1.0);
    CHECK(g.delta_r(index_of(EventType::MO0)) == 0.0);
  }

  TEST_CASE("constant-gap response at lag one") {
    const auto s = generate(testing::correlated_constant(50000, 3)).stream;
    const auto corr = estimate_correlations(s, 20, true, quick(20));
    const RealizedGaps g = realized_gaps(s);
    const TypeCurves R = predict_response_constant(g, corr, 20);
    for (int a = 0; a < kNumTypes; ++a) CHECK(R(a, 1) == doctest::Approx(g.delta_r(a)).epsilon(1e-12));
  }

  TEST_CASE("constant-gap model reproduces a constant-gap stream") {
    const auto s = generate(testing::correlated_constant(300000, 4)).stream;
    const auto st = estimate_all(s, quick(300, 50));
    const RealizedGaps g = realized_gaps(s);
    const TypeCurves R = predict_response_constant(g, st.corr, 300);
    const LagVector D = predict_diffusion_constant(g, st.corr, 100);
    int beyond = 0;
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 1; l <= 300; ++l) beyond += std::abs(R(a, l) - st.resp.R(a, l)) > 3 * st.resp.R_se(a, l) + 1e-9;
    CHECK(beyond == 0);
    for (int l = 1; l <= 100; ++l) CHECK(D(l) == doctest::Approx(st.resp.D(l)).epsilon(0.02));
  }

  TEST_CASE("independent events: diffusion is linear") {
    GeneratorConfig c;
    c.events = 100000;
    c.gap_pmf[1] = {0.0, 1.0};
    const auto s = generate(c).stream;
    const auto corr = estimate_correlations(s, 50, true, quick(50));
    const RealizedGaps g = realized_gaps(s);
    const LagVector D = predict_diffusion_constant(g, corr, 50);
    const double slope = (corr.P * g.delta_r.square()).sum();
    CHECK(D(1) == doctest::Approx(slope).epsilon(1e-12));
    for (int l = 1; l <= 50; ++l) CHECK(D(l) == doctest::Approx(l * slope).epsilon(0.03));
  }

  TEST_CASE("kernels vanish for constant gaps and the identity holds") {
    const auto s = generate(testing::correlated_constant(200000, 6)).stream;
    const auto corr = estimate_correlations(s, 20, true, quick(20));
    KernelOptions ko;
    ko.kernel_lag = 20;
    ko.bootstrap = 30;
    const GapKernelSet k = calibrate_kernels(s, corr, ko);
    CHECK(k.identity_error < 1e-9);
    CHECK(((k.K - k.Ktilde) - k.kappa).abs().maxCoeff() < 1e-12);
    for (int a = 0; a < kNumTypes; ++a)
      for (EventType t : kPriceChanging)
        for (int tau = 1; tau <= 20; ++tau) {
          const int pr = pair_index(a, index_of(t));
          CHECK(std::abs(k.kappa(pr, tau)) <= 4 * k.kappa_se(pr, tau) + 1e-12);
        }
  }

  TEST_CASE("planted kernels: recovery, bare propagator and diffusion") {
    const GeneratorConfig c = planted_stream(1000000);
    const auto s = generate(c).stream;
    const auto corr = estimate_correlations(s, 100, true, quick(100));
    KernelOptions ko;
    ko.bootstrap = 0;
    const GapKernelSet k = calibrate_kernels(s, corr, ko);
    const TypeVector P = stationary_type_prob(c);
    PairCurves truth = c.planted_kernel;
    for (int a = 0; a < kNumTypes; ++a)
      for (int b = 0; b < kNumTypes; ++b) truth.row(pair_index(a, b)) *= P(b);
    double num = 0, den = 0;
    for (int pr = 0; pr < kNumPairs; ++pr)
      for (int t = 1; t <= 50; ++t) {
        num += std::pow(k.kappa(pr, t) - truth(pr, t), 2);
        den += truth(pr, t) * truth(pr, t);
      }
    CHECK(std::sqrt(num / den) < 0.05);

    RealizedGaps planted_gaps;
    planted_gaps.delta_r = c.planted_delta_r;
    const auto bare = decompose_impact(planted_gaps, make_kernel_set(truth, P, c.planted_delta_r), 100).Ghat;
    const auto fitted = decompose_impact(realized_gaps(s), k, 100).Ghat;
    CHECK(std::sqrt((fitted - bare).square().sum() / bare.square().sum()) < 0.05);

    // the constant-gap model misses the kernel contribution, the closure does not
    const auto st = estimate_all(s, quick(100));
    const LagVector D = predict_diffusion_constant(realized_gaps(s), st.corr, 100);
    const LagVector Dk = predict_diffusion_closure(realized_gaps(s), k, st.corr, 100, 0.0);
    CHECK(D(100) < 0.95 * st.resp.D(100));
    for (int l = 1; l <= 100; ++l) CHECK(Dk(l) == doctest::Approx(st.resp.D(l)).epsilon(0.03));
  }

  TEST_CASE("next-jump forecast") {
    const auto s = generate(planted_stream(100000)).stream;
    const auto corr = estimate_correlations(s, 10, true, quick(10));
    KernelOptions ko;
    ko.kernel_lag = 10;
    ko.bootstrap = 0;
    const GapKernelSet k = calibrate_kernels(s, corr, ko);
    FlowWindow w = FlowWindow::Zero(kNumTypes, 10);
    CHECK(predict_next_jump(w, k).abs().maxCoeff() == 0);
    w(index_of(EventType::MOp), 0) = 1;
    const int mop = index_of(EventType::MOp);
    CHECK(predict_next_jump(w, k)(mop) == k.K(pair_index(mop, mop), 1));
    CHECK(kind_of([&] { predict_next_jump(FlowWindow::Zero(kNumTypes, 5), k); }) == ErrorKind::WindowTooShort);
    CHECK(kind_of([&] { flow_window(s.events(), 3, 10); }) == ErrorKind::WindowTooShort);
    const FlowWindow fw = flow_window(s.events(), 20, 10);
    CHECK(fw(index_of(s[19].type), 0) == s[19].sign);
  }

  TEST_CASE("zero kernels: flat bare propagator and the constant-gap closure") {
    const auto s = generate(testing::correlated_constant(50000, 7)).stream;
    const auto corr = estimate_correlations(s, 60, true, quick(60));
    const RealizedGaps g = realized_gaps(s);
    const GapKernelSet zero = make_kernel_set(PairCurves::Zero(kNumPairs, 21), corr.P, g.delta_r);
    const auto d = decompose_impact(g, zero, 50);
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 1; l <= 50; ++l) CHECK(d.Ghat(a, l) == g.delta_r(a));
    const LagVector Dc = predict_diffusion_closure(g, zero, corr, 50, 0.0);
    const LagVector Dk = predict_diffusion_constant(g, corr, 50);
    CHECK((Dc - Dk).abs().maxCoeff() <= 1e-12 * Dk.abs().maxCoeff());
    const LagVector D0 = predict_diffusion_closure(g, zero, corr, 50, 0.04);
    CHECK((D0.tail(50) - Dk.tail(50) - 0.04).abs().maxCoeff() < 1e-12);
  }
}
