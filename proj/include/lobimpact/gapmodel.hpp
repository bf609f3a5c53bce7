#pragma once

#include "lobimpact/linalg.hpp"
#include "lobimpact/stats.hpp"

#include <array>
#include <span>

namespace lobimpact {

struct RealizedGaps {
  TypeVector delta_r = TypeVector::Zero();  // mean gap per type, ticks (0 for MO0, CA0, LO0)
  TypeVector mean_sq = TypeVector::Zero();  // mean squared gap, ticks^2
  Eigen::Array<std::int64_t, kNumTypes, 1> counts = decltype(counts)::Zero();
  std::array<bool, kNumTypes> insufficient{};  // price-changing type with no events
  double unconditional = 0;  // mean first gap behind the best (half of it), ticks; NaN without book data
};

RealizedGaps realized_gaps(const EventStream& s);
RealizedGaps realized_gaps_from(const RawMoments& m);

// Constant-gap model: every price-changing event moves the mid by its type's realized gap.
TypeCurves predict_response_constant(const RealizedGaps& gaps, const CorrelationSet& corr, int lmax);
LagVector predict_diffusion_constant(const RealizedGaps& gaps, const CorrelationSet& corr, int lmax);

// Gap kernels indexed by (source type, target type, lag). Rows are
// pair_index(source, target); only price-changing targets are nonzero.
// kappa follows the regression convention: kappa = K - Ktilde, so the expected
// signed gap excess of the next target event, times its probability, is
// sum_tau sum_src kappa(src, target, tau) x^src_{t - tau}. The per-event
// kernel that enters a single event's gap is kappa / P(target).
struct GapKernelSet {
  int kernel_lag = 0;
  PairCurves K, Ktilde, kappa;  // 36 x (L_K + 1), column 0 unused
  PairCurves K_se, Ktilde_se, kappa_se;
  TypeVector target_prob = TypeVector::Zero();
  TypeVector delta_r = TypeVector::Zero();
  TypeVector residual_var = TypeVector::Zero();        // variance of the K regression residual
  TypeVector residual_var_tilde = TypeVector::Zero();  // same for Ktilde
  double lambda = 0;
  double identity_error = 0;  // max |kappa solved directly - (K - Ktilde)|

  double per_event(int src, int target, int tau) const {
    if (tau < 1 || tau > kernel_lag || !(target_prob(target) > 0)) return 0.0;
    return kappa(pair_index(src, target), tau) / target_prob(target);
  }
};

// Kernel set from known parameters (kappa in the regression convention,
// 36 x (L_K + 1)); K and Ktilde are left empty.
GapKernelSet make_kernel_set(const PairCurves& kappa, const TypeVector& target_prob, const TypeVector& delta_r);

struct KernelOptions {
  int kernel_lag = 100;
  double lambda = -1;  // < 0: 1e-4 trace(M) / n
  bool same_day_only = true;
  int bootstrap = 100;
  std::uint64_t seed = 20080302;
  int threads = 1;
};

// corr must come from the same stream with max_lag >= kernel_lag.
GapKernelSet calibrate_kernels(const EventStream& s, const CorrelationSet& corr, const KernelOptions& opt = {});

// Signed flow before time t: column tau-1 holds x^type_{t - tau} = I(type) eps.
using FlowWindow = Eigen::Array<double, kNumTypes, Eigen::Dynamic>;
FlowWindow flow_window(std::span<const MarketEvent> events, std::size_t t, int length);

// Expected signed price change of the next event, split by price-changing type.
TypeVector predict_next_jump(const FlowWindow& history, const GapKernelSet& kernels);

struct ImpactDecomposition {
  TypeCurves Gstar, dGstar, Ghat;  // 6 x (lmax + 1), column 0 unused
};
ImpactDecomposition decompose_impact(const RealizedGaps& gaps, const GapKernelSet& kernels, int lmax);

// Factorized four-point terms of the closure, per-event kernels.
double kappa_plus(const GapKernelSet& k, const CorrelationSet& corr, int a, int b, int tau, int t);
double kappa_plus_plus(const GapKernelSet& k, const CorrelationSet& corr, int a, int b, int tau, int tau2, int t);

// D(l) of the history-dependent gap model with the factorization closure, plus D0.
LagVector predict_diffusion_closure(const RealizedGaps& gaps, const GapKernelSet& kernels, const CorrelationSet& corr,
                                    int lmax, double d0 = 0.04);

}  // namespace lobimpact
