#pragma once

#include "lobimpact/events.hpp"

#include <cstdint>
#include <vector>

namespace lobimpact {

using CountArray = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct StatsConfig {
  int max_lag = 1000;
  bool same_day_only = true;
  std::int64_t min_count = 30;  // cells with fewer pairs are flagged
  int bootstrap = 100;          // resamples for standard errors, 0 disables
  std::uint64_t seed = 20080301;
  int threads = 1;
};

// Integer sums for one block of events. Pairs (t, t+lag) belong to the block
// holding t. Everything downstream is a ratio of these sums.
struct RawMoments {
  int max_lag = 0;
  int gap_lag = -1;  // lags carried by gap_signed, -1 when absent
  Eigen::Array<std::int64_t, kNumTypes, 1> n_type = decltype(n_type)::Zero();
  Eigen::Array<std::int64_t, kNumTypes, 1> sign_sum = decltype(sign_sum)::Zero();
  Eigen::Array<std::int64_t, kNumTypes, 1> gap_sum = decltype(gap_sum)::Zero();  // half-ticks
  Eigen::Array<std::int64_t, kNumTypes, 1> gap_sq_sum = decltype(gap_sq_sum)::Zero();
  Eigen::Array<std::int64_t, kNumTypes, 1> spread_sum = decltype(spread_sum)::Zero();  // spread before, half-ticks
  CountArray same, opp;  // 36 x (L+1) same-sign / opposite-sign pair counts
  CountArray pairs;      // 1 x (L+1)
  bool with_response = false;
  CountArray r_sum, rs_sum, r_cnt;  // 6 x (L+1), half-ticks
  CountArray d_sum, d_cnt;          // 1 x (L+1), half-ticks squared
  // sum over pairs of eps_t * eps_{t+l} * gap_{t+l} for (type_t, type_{t+l}), half-ticks
  CountArray gap_signed;  // 36 x (gap_lag+1)

  RawMoments& operator+=(const RawMoments& o);
  std::int64_t events() const { return n_type.sum(); }
};

struct MomentOptions {
  int max_lag = 1000;
  bool same_day_only = true;
  bool with_response = true;
  int gap_lag = -1;
  int threads = 1;
  int min_blocks = 20;  // days are split further when there are fewer than 10
};

// One RawMoments per bootstrap block: a day, or a slice of a day on short streams.
std::vector<RawMoments> accumulate_blocks(const EventStream& s, const MomentOptions& opt);
RawMoments sum_blocks(const std::vector<RawMoments>& blocks);

struct CorrelationSet {
  int max_lag = 0;
  std::int64_t n_events = 0;
  TypeVector P = TypeVector::Zero();
  PairCurves C, Pi;        // 36 x (L+1), row = pair_index(a, b)
  PairCurves C_se, Pi_se;  // bootstrap standard errors, zero when disabled
  CountArray counts;       // pairs of each (a, b) at each lag
  Eigen::Array<bool, kNumPairs, Eigen::Dynamic> insufficient;
  LagVector sign_autocorr, side_autocorr;
  TypeVector sign_imbalance = TypeVector::Zero();  // <eps I(type)>

  // C_{a,b}(lag) for any integer lag; negative lags swap the pair, lags past L are 0.
  double c(int a, int b, long lag) const;
  double pi(int a, int b, long lag) const;
  // P_a P_b C_{a,b}(lag): covariance of the signed indicators.
  double flow_cov(int a, int b, long lag) const { return P(a) * P(b) * c(a, b, lag); }
};

struct ResponseSet {
  int max_lag = 0;
  TypeCurves R, RS;  // ticks
  TypeCurves R_se, RS_se;
  CountArray R_count;  // 6 x (L+1)
  Eigen::Array<bool, kNumTypes, Eigen::Dynamic> insufficient;
  LagVector D, D_se;  // ticks^2
};

CorrelationSet correlations_from(const RawMoments& m, std::int64_t min_count = 30);
ResponseSet response_from(const RawMoments& m, std::int64_t min_count = 30);

struct StreamStats {
  CorrelationSet corr;
  ResponseSet resp;
};

// One pass for correlations, responses, spread responses and diffusion.
StreamStats estimate_all(const EventStream& s, const StatsConfig& cfg);

CorrelationSet estimate_correlations(const EventStream& s, int max_lag, bool same_day_only,
                                     const StatsConfig& cfg = {});
ResponseSet estimate_response(const EventStream& s, int max_lag, const StatsConfig& cfg = {});
// R^S only (same-day pairs). Apply the session trim first.
TypeCurves estimate_spread_response(const EventStream& s, int max_lag, const StatsConfig& cfg = {});
LagVector estimate_diffusion(const EventStream& s, int max_lag, const StatsConfig& cfg = {});

struct SignAutocorrs {
  LagVector sign, side;
};
SignAutocorrs estimate_sign_autocorrs(const EventStream& s, int max_lag, bool same_day_only = true);

// Averaging over several symbols. Normalized: equal weight per symbol.
// Pooled: weight by event count.
enum class Averaging { Normalized, Pooled };
CorrelationSet average_correlations(const std::vector<CorrelationSet>& sets, Averaging mode = Averaging::Normalized);

}  // namespace lobimpact
