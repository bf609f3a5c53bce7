#pragma once

#include "lobimpact/linalg.hpp"
#include "lobimpact/stats.hpp"

#include <array>
#include <span>

namespace lobimpact {

// How propagators are continued past the cutoff L.
// Flat: G(n) = G(L) for n > L. Truncate: G(n) = 0 for n > L.
enum class TailClosure { Flat, Truncate };

struct PropagatorOptions {
  double lambda = -1;  // < 0: 1e-4 ||A||_F^2 / n; 0: direct solve
  TailClosure tail = TailClosure::Flat;
  double rcond_min = 1e-13;
  int reliable_lag = -1;  // < 0: L / 3
  // Types to include; types absent from the stream are always dropped.
  std::array<bool, kNumTypes> active = {true, true, true, true, true, true};
};

struct PropagatorSet {
  int max_lag = 0;
  TypeCurves G;        // 6 x (L+1), column 0 unused (0)
  LagVector baseline;  // single-event G, (L+1), empty unless filled
  double residual = 0;  // ||A G - R|| / ||R||
  double residual_abs = 0;
  double lambda = 0;
  double rcond = 0;
  int reliable_lag = 0;
  TailClosure tail = TailClosure::Flat;
  std::array<bool, kNumTypes> active{};
};

struct SignedFlowConfig {
  double theta = 0;  // xi = eps * volume^theta
};

// Response and autocorrelation of the signed market-order flow xi, in
// market-order time (only MO0 and MOp events, same-day pairs).
struct FlowSeries {
  LagVector R;  // <(p_{i+l} - p_i) xi_i>, ticks
  LagVector C;  // <xi_i xi_{i+l}>
};
// Same for any flow series: price[i] is the price just before flow event i;
// pairs never cross a day boundary.
FlowSeries flow_response(std::span<const double> price, std::span<const double> flow,
                         const std::vector<std::size_t>& day_bounds, int max_lag);
FlowSeries market_order_flow(const EventStream& s, int max_lag, const SignedFlowConfig& cfg = {});

// The block system R_a(l) = sum_b sum_n A^{ab}_{l,n} G_b(n), rows (a, l), columns (b, n).
Eigen::MatrixXd multi_event_system(const CorrelationSet& corr, const std::array<bool, kNumTypes>& active,
                                   TailClosure tail);
Eigen::MatrixXd single_event_system(const LagVector& C, TailClosure tail);

PropagatorSet solve_multi_event(const CorrelationSet& corr, const ResponseSet& resp, double lambda,
                                PropagatorOptions opt = {});
LagVector solve_single_event(const LagVector& R, const LagVector& C, double lambda, PropagatorOptions opt = {},
                             SolveInfo* info = nullptr);

// Forward maps: responses implied by given propagators.
TypeCurves forward_response(const CorrelationSet& corr, const TypeCurves& G, TailClosure tail);
LagVector forward_single(const LagVector& C, const LagVector& G, TailClosure tail);

struct DiffusionPrediction {
  LagVector D;  // (lmax+1), ticks^2
  // Share of D(lmax) carried by correlation lags in the last tenth of the range,
  // and a geometric extrapolation of what lies beyond the cutoff.
  double last_decile_share = 0;
  double tail_estimate = 0;
};

// D(l) of the temporary impact model, including the infinite sums over past
// events (continued with the propagators' tail closure; correlations past L are 0).
DiffusionPrediction predict_diffusion_temporary(const PropagatorSet& G, const CorrelationSet& corr, int lmax);

}  // namespace lobimpact
