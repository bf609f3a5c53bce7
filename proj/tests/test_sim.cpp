#include "helpers.hpp"

#include "lobimpact/gapmodel.hpp"
#include "lobimpact/stats.hpp"

#include <cmath>
#include <numbers>

using namespace lobimpact;
using testing::kind_of;

TEST_SUITE("sim") {
  TEST_CASE("config text") {
    const GeneratorConfig c = parse_config(R"(
# comment
symbol = XYZ
events = 5000   # trailing
days = 2
seed = 42
type_process = markov
transition = 0.5 0.1 0.1 0.1 0.1 0.1  0.2 0.2 0.2 0.2 0.1 0.1  0.1 0.1 0.4 0.2 0.1 0.1  0.1 0.1 0.1 0.5 0.1 0.1  0.1 0.1 0.1 0.1 0.5 0.1  0.1 0.1 0.1 0.1 0.1 0.5
sign_process = long_memory
gamma = 0.6
gap_process = planted
delta_r = 0 1 0 0 1 0.5
kernel_lag = 10
kernel.MO0->MOP = 0.3 1
)");
    CHECK(c.symbol == "XYZ");
    CHECK(c.events == 5000);
    CHECK(c.days == 2);
    CHECK(c.seed == 42);
    CHECK(c.type_process == TypeProcess::Markov);
    CHECK(c.transition(2, 2) == 0.4);
    CHECK(c.gamma == 0.6);
    CHECK(c.planted_kernel.cols() == 11);
    CHECK(c.planted_kernel(pair_index(0, 1), 4) == doctest::Approx(0.075));
    CHECK(c.planted_kernel(pair_index(1, 1), 4) == 0.0);

    CHECK(kind_of([] { parse_config("no equals sign"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("colour = blue"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("type_prob = 0.5 0.5"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("type_prob = 0.5 0.5 0.5 0 0 0"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("events = -3"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("sign_process = psychic"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("gap_process = spread_reverting\nalpha = 1.2"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { parse_config("gap_process = planted\nkernel.MO0->CA0 = 1 1"); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([] { load_config("/nonexistent/config.txt"); }) == ErrorKind::ConfigInvalid);
  }

  TEST_CASE("same seed, same stream") {
    GeneratorConfig c = testing::correlated_constant(20000, 5);
    c.gap_pmf[1] = {0.3, 0.7};
    const auto a = generate(c).stream, b = generate(c).stream;
    CHECK(a == b);
    c.seed = 6;
    CHECK_FALSE(a == generate(c).stream);
  }

  TEST_CASE("every generator yields a valid chain") {
    GeneratorConfig c;
    c.events = 30000;
    c.days = 3;
    for (GapProcess gp : {GapProcess::Constant, GapProcess::Planted, GapProcess::SpreadReverting, GapProcess::Book}) {
      GeneratorConfig x = c;
      x.gap_process = gp;
      if (gp == GapProcess::Planted) {
        x.planted_kernel = testing::planted(20);
        x.planted_delta_r << 0, 1, 0, 0, 1, 1;
      }
      if (gp == GapProcess::SpreadReverting) {
        x.alpha = 0.05;
        x.mean_spread_ticks = 10;
      }
      if (gp == GapProcess::Book) x.initial_spread_ticks = 3;
      const auto g = generate(x);
      CHECK(g.stream.size() == 30000);
      CHECK(g.stream.num_days() == 3);
      for (const auto& e : g.stream.events()) CHECK_NOTHROW(validate_event(e));
    }
  }

  TEST_CASE("replay without kernels keeps the realized gaps") {
    const auto s = generate(testing::correlated_constant(20000, 8)).stream;
    RealizedGaps g;
    g.delta_r << 0, 1, 0, 0, 1, 1;
    const GapKernelSet zero = make_kernel_set(PairCurves::Zero(kNumPairs, 11), type_probabilities(s), g.delta_r);
    const auto r = replay_with_model(s, g, zero, 1);
    REQUIRE(r.stream.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(r.stream[i].type == s[i].type);
      CHECK(r.stream[i].sign == s[i].sign);
      if (is_price_changing(s[i].type)) CHECK(r.stream[i].gap_ht == 2);
    }
    const EventStream none("T", 0.01, {});
    CHECK(replay_with_model(none, g, zero, 1).stream.empty());
  }

  TEST_CASE("closed loop: replaying the planted model reproduces its diffusion") {
    GeneratorConfig c;
    c.events = 400000;
    c.seed = 13;
    c.type_prob << 0.0833, 0.25, 0.0833, 0.0834, 0.25, 0.25;
    c.gap_process = GapProcess::Planted;
    c.planted_delta_r << 0, 2, 0, 0, 2, 2;
    c.planted_kernel = testing::planted(100);
    const auto s = generate(c).stream;
    StatsConfig sc;
    sc.max_lag = 100;
    sc.bootstrap = 0;
    const auto corr = estimate_correlations(s, 100, true, sc);
    KernelOptions ko;
    ko.bootstrap = 0;
    const GapKernelSet k = calibrate_kernels(s, corr, ko);
    const auto r = replay_with_model(s, realized_gaps(s), k, 99).stream;
    const LagVector d0 = estimate_response(s, 100, sc).D, d1 = estimate_response(r, 100, sc).D;
    for (int l = 1; l <= 100; ++l) CHECK(d1(l) == doctest::Approx(d0(l)).epsilon(0.03));

    // real-valued moves without rounding
    const auto mv = final_model_moves(s, k, realized_gaps(s).delta_r);
    const LagVector dm = diffusion_from_moves(mv, s.day_boundaries(), 100);
    for (int l = 10; l <= 100; l += 10) CHECK(dm(l) == doctest::Approx(d0(l)).epsilon(0.05));
  }

  TEST_CASE("long-memory helpers") {
    const double rho = 0.6;
    LagVector ar(21);
    for (int k = 0; k <= 20; ++k) ar(k) = std::pow(rho, k);
    const Eigen::VectorXd a = levinson(ar, 5);
    CHECK(a(0) == doctest::Approx(rho));
    for (int k = 1; k < 5; ++k) CHECK(std::abs(a(k)) < 1e-12);

    const LagVector white = farima_acf(0.0, 10);
    CHECK(white(0) == 1.0);
    CHECK(white.tail(10).abs().maxCoeff() == 0.0);
    const LagVector lm = farima_acf(0.2, 3);
    CHECK(lm(1) == doctest::Approx(0.2 / 0.8));
    CHECK(lm(2) == doctest::Approx(0.25 * 1.2 / 1.8));

    LagVector r(3);
    r << 1.0, 0.5, 0.0;
    const LagVector s = arcsine_acf(r);
    CHECK(s(0) == doctest::Approx(1.0));
    CHECK(s(1) == doctest::Approx(2.0 / std::numbers::pi * std::asin(0.5)));
    CHECK(s(2) == 0.0);

    // innovations of an AR(1) path are the driving noise
    std::vector<double> x = {1.0, 0.6, 1.36, -0.184};
    const auto e = innovations(x, a.head(1), {0, 4});
    CHECK(e[0] == 1.0);
    CHECK(e[1] == doctest::Approx(0.0));
    CHECK(e[2] == doctest::Approx(1.0));
    CHECK(e[3] == doctest::Approx(-1.0));

    LagVector acf = farima_acf(0.15, 1 << 13);
    const auto y = gaussian_with_acf(acf, 1 << 12, 3);
    CHECK(y.size() == (1u << 12));
    CHECK(kind_of([&] { gaussian_with_acf(farima_acf(0.15, 10), 1 << 12, 3); }) == ErrorKind::DimensionMismatch);
  }

  TEST_CASE("stationary type probabilities") {
    GeneratorConfig c;
    CHECK((stationary_type_prob(c) - c.type_prob).abs().maxCoeff() < 1e-15);
    c.type_process = TypeProcess::Markov;
    c.transition.setZero();
    // stay or step to the next type
    for (int i = 0; i < kNumTypes; ++i) c.transition(i, (i + 1) % kNumTypes) = 0.5, c.transition(i, i) = 0.5;
    const TypeVector p = stationary_type_prob(c);
    for (int i = 0; i < kNumTypes; ++i) CHECK(p(i) == doctest::Approx(1.0 / kNumTypes));
    c.transition.setConstant(0.0);
    c.transition.col(3).setConstant(0.4);
    c.transition.col(1).setConstant(0.6);
    const TypeVector q = stationary_type_prob(c);
    CHECK(q(3) == doctest::Approx(0.4));
    CHECK(q(1) == doctest::Approx(0.6));
  }

  TEST_CASE("signs of the conditional process persist") {
    GeneratorConfig c;
    c.events = 200000;
    c.sign_process = SignProcess::Conditional;
    c.same_sign_prob = TypeVector::Constant(0.75);
    const auto sa = estimate_sign_autocorrs(generate(c).stream, 3);
    CHECK(sa.sign(1) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(sa.sign(2) == doctest::Approx(0.25).epsilon(0.05));
  }
}
