#pragma once

#include "lobimpact/gapmodel.hpp"
#include "lobimpact/stats.hpp"

#include <vector>

namespace lobimpact {

struct SpreadModel {
  double alpha = 0;        // mean-reversion strength, [0, 1)
  double mean_spread = 0;  // ticks
  TypeVector mean_spread_by_type = TypeVector::Zero();  // spread seen by events of each type, ticks
  TypeVector dbar_r = TypeVector::Zero();  // signed spread change per type: +2 gap (MOp, CAp), -2 gap (LOp)
};

// Measures the spread means and realized gaps. Throws AlphaOutOfRange.
SpreadModel spread_model(const EventStream& s, double alpha);

SpreadModel spread_model_from(const RawMoments& m, double alpha);

// Rescales each (Pi + 1) tail beyond L/2 to average 1, so a constant-gap
// spread prediction has no drift at large lags.
CorrelationSet adjust_pi_tails(const CorrelationSet& corr);

// Spread response of the alpha model. corr supplies P and Pi.
TypeCurves predict_spread_response(const SpreadModel& model, const CorrelationSet& corr, int lmax);

struct AlphaFit {
  double alpha = 0;
  double error = 0;
  std::vector<double> grid, errors;
};

// Grid search (refined by golden section in log alpha) minimizing the squared
// difference to the empirical spread responses over lags 1..lmax.
AlphaFit fit_alpha(const SpreadModel& model, const CorrelationSet& corr, const TypeCurves& rs_empirical, int lmax);

struct SpreadComparison {
  SpreadModel model;
  TypeCurves predicted, empirical;  // ticks, lags 0..lmax
  TypeCurves diff_se;               // bootstrap s.e. of predicted - empirical
};

// Predicted and measured spread responses from one pass over the stream, with
// the block bootstrap applied to their difference. Pi tails are adjusted.
SpreadComparison compare_spread_response(const EventStream& s, double alpha, int lmax, const StatsConfig& cfg);

struct SpreadBins {
  std::vector<double> edges;  // ticks
  Eigen::ArrayXXd mean_gap;   // bins x 6, ticks; NaN where empty
  Eigen::Array<std::int64_t, Eigen::Dynamic, kNumTypes> counts;
  std::vector<bool> empty;    // no price-changing event in the bin
};

SpreadBins gaps_vs_spread(const EventStream& s, const std::vector<double>& edges);

struct SpreadAcf {
  LagVector acf;
  double rate = 0;  // fitted exponential decay per event over lags 1..100
  double fit_r2 = 0;
  bool near_unit_root = false;
};

SpreadAcf spread_autocorrelation(const EventStream& s, int max_lag);

struct SpreadBalance {
  double mean_step = 0;  // mean of S_{t+1} - S_t, ticks
  double stderr_ = 0;    // from day (or slice) block means
};

SpreadBalance spread_balance(const EventStream& s);

}  // namespace lobimpact
