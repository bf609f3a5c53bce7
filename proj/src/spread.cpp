#include "lobimpact/spread.hpp"

#include "lobimpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lobimpact {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_alpha(double alpha) {
  if (!(alpha >= 0 && alpha < 1))
    throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1), got " + std::to_string(alpha));
}
}  // namespace

SpreadModel spread_model(const EventStream& s, double alpha) {
  check_alpha(alpha);
  if (s.empty()) throw Error(ErrorKind::InsufficientData, "empty stream");
  SpreadModel m;
  m.alpha = alpha;
  std::array<std::int64_t, kNumTypes> n{}, ssum{};
  std::int64_t total = 0;
  for (const MarketEvent& e : s.events()) {
    const int k = index_of(e.type);
    ++n[k];
    ssum[k] += e.spread_before_ht;
    total += e.spread_before_ht;
  }
  m.mean_spread = 0.5 * static_cast<double>(total) / static_cast<double>(s.size());
  const RealizedGaps g = realized_gaps(s);
  for (int k = 0; k < kNumTypes; ++k) {
    m.mean_spread_by_type(k) = n[k] ? 0.5 * static_cast<double>(ssum[k]) / static_cast<double>(n[k]) : kNaN;
    m.dbar_r(k) = 2.0 * spread_direction(type_at(k)) * g.delta_r(k);
  }
  return m;
}

SpreadModel spread_model_from(const RawMoments& m, double alpha) {
  check_alpha(alpha);
  const std::int64_t n = m.events();
  if (n == 0) throw Error(ErrorKind::InsufficientData, "empty stream");
  SpreadModel out;
  out.alpha = alpha;
  out.mean_spread = 0.5 * static_cast<double>(m.spread_sum.sum()) / static_cast<double>(n);
  const RealizedGaps g = realized_gaps_from(m);
  for (int k = 0; k < kNumTypes; ++k) {
    out.mean_spread_by_type(k) =
        m.n_type(k) ? 0.5 * static_cast<double>(m.spread_sum(k)) / static_cast<double>(m.n_type(k)) : kNaN;
    out.dbar_r(k) = 2.0 * spread_direction(type_at(k)) * g.delta_r(k);
  }
  return out;
}

SpreadComparison compare_spread_response(const EventStream& s, double alpha, int lmax, const StatsConfig& cfg) {
  check_alpha(alpha);
  MomentOptions opt;
  opt.max_lag = std::max(cfg.max_lag, lmax);
  opt.same_day_only = true;
  opt.with_response = true;
  opt.threads = cfg.threads;
  const auto blocks = accumulate_blocks(s, opt);
  auto evaluate = [&](const RawMoments& m, SpreadModel& model, TypeCurves& pred, TypeCurves& emp) {
    model = spread_model_from(m, alpha);
    pred = predict_spread_response(model, adjust_pi_tails(correlations_from(m, cfg.min_count)), lmax);
    emp = response_from(m, cfg.min_count).RS.leftCols(lmax + 1);
  };
  SpreadComparison out;
  evaluate(sum_blocks(blocks), out.model, out.predicted, out.empirical);
  out.diff_se = TypeCurves::Zero(kNumTypes, lmax + 1);
  if (cfg.bootstrap > 1 && blocks.size() > 1) {
    TypeCurves s1 = out.diff_se, s2 = out.diff_se;
    Rng rng(cfg.seed);
    for (int rep = 0; rep < cfg.bootstrap; ++rep) {
      RawMoments acc = blocks[rng.below(blocks.size())];
      for (std::size_t i = 1; i < blocks.size(); ++i) acc += blocks[rng.below(blocks.size())];
      SpreadModel m;
      TypeCurves p, e;
      evaluate(acc, m, p, e);
      const TypeCurves d = (p - e).unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
      s1 += d;
      s2 += d.square();
    }
    const double B = cfg.bootstrap;
    out.diff_se = ((s2 - s1.square() / B) / (B - 1)).max(0.0).sqrt();
  }
  return out;
}

CorrelationSet adjust_pi_tails(const CorrelationSet& corr) {
  CorrelationSet out = corr;
  const int L = corr.max_lag;
  const int from = L / 2 + 1;
  if (from > L) return out;
  for (int pr = 0; pr < kNumPairs; ++pr) {
    const double mean = (corr.Pi.row(pr).segment(from, L - from + 1) + 1.0).mean();
    if (!(mean > 0) || !std::isfinite(mean)) continue;
    const double c = 1.0 / mean;
    for (int l = from; l <= L; ++l) out.Pi(pr, l) = c * (corr.Pi(pr, l) + 1.0) - 1.0;
  }
  return out;
}

TypeCurves predict_spread_response(const SpreadModel& model, const CorrelationSet& corr, int lmax) {
  check_alpha(model.alpha);
  const double q = 1.0 - model.alpha;
  TypeCurves R = TypeCurves::Zero(kNumTypes, lmax + 1);
  for (int a = 0; a < kNumTypes; ++a) {
    if (!(corr.P(a) > 0)) {
      R.row(a).setConstant(kNaN);
      continue;
    }
    const double level = model.mean_spread - model.mean_spread_by_type(a);
    double conv = 0, decay = 1;
    for (int l = 1; l <= lmax; ++l) {
      double src = 0;
      for (int b = 0; b < kNumTypes; ++b)
        if (corr.P(b) > 0 && model.dbar_r(b) != 0) src += model.dbar_r(b) * corr.P(b) * corr.pi(a, b, l - 1);
      conv = q * conv + src;
      decay *= q;
      R(a, l) = level * (1.0 - decay) + conv;
    }
  }
  return R;
}

namespace {
double response_error(const SpreadModel& base, double alpha, const CorrelationSet& corr, const TypeCurves& rs, int lmax) {
  SpreadModel m = base;
  m.alpha = alpha;
  const TypeCurves pred = predict_spread_response(m, corr, lmax);
  double err = 0;
  for (int a = 0; a < kNumTypes; ++a) {
    if (!(corr.P(a) > 0)) continue;
    for (int l = 1; l <= lmax; ++l) {
      const double d = pred(a, l) - rs(a, l);
      if (std::isfinite(d)) err += d * d;
    }
  }
  return err;
}
}  // namespace

AlphaFit fit_alpha(const SpreadModel& model, const CorrelationSet& corr, const TypeCurves& rs_empirical, int lmax) {
  if (rs_empirical.cols() < lmax + 1) throw Error(ErrorKind::DimensionMismatch, "empirical spread response too short");
  AlphaFit f;
  f.grid.push_back(0.0);
  for (int i = 0; i <= 40; ++i) f.grid.push_back(std::pow(10.0, -4.0 + 0.1 * i));  // 1e-4 .. 1
  f.grid.back() = 0.5;
  std::size_t best = 0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    f.errors.push_back(response_error(model, f.grid[i], corr, rs_empirical, lmax));
    if (f.errors[i] < f.errors[best]) best = i;
  }
  f.alpha = f.grid[best];
  f.error = f.errors[best];
  if (best >= 2 && best + 1 < f.grid.size()) {
    // golden section on log alpha between the neighbours
    double lo = std::log(f.grid[best - 1]), hi = std::log(f.grid[best + 1]);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double e1 = response_error(model, std::exp(x1), corr, rs_empirical, lmax);
    double e2 = response_error(model, std::exp(x2), corr, rs_empirical, lmax);
    for (int it = 0; it < 40; ++it) {
      if (e1 < e2) {
        hi = x2;
        x2 = x1;
        e2 = e1;
        x1 = hi - g * (hi - lo);
        e1 = response_error(model, std::exp(x1), corr, rs_empirical, lmax);
      } else {
        lo = x1;
        x1 = x2;
        e1 = e2;
        x2 = lo + g * (hi - lo);
        e2 = response_error(model, std::exp(x2), corr, rs_empirical, lmax);
      }
    }
    const double xm = 0.5 * (lo + hi);
    const double em = response_error(model, std::exp(xm), corr, rs_empirical, lmax);
    if (em < f.error) {
      f.alpha = std::exp(xm);
      f.error = em;
    }
  }
  return f;
}

SpreadBins gaps_vs_spread(const EventStream& s, const std::vector<double>& edges) {
  if (edges.size() < 2) throw Error(ErrorKind::DimensionMismatch, "need at least two bin edges");
  const std::size_t nb = edges.size() - 1;
  SpreadBins out;
  out.edges = edges;
  out.counts = Eigen::Array<std::int64_t, Eigen::Dynamic, kNumTypes>::Zero(nb, kNumTypes);
  Eigen::ArrayXXd sum = Eigen::ArrayXXd::Zero(nb, kNumTypes);
  for (const MarketEvent& e : s.events()) {
    if (!is_price_changing(e.type)) continue;
    const double sp = e.spread_before();
    for (std::size_t b = 0; b < nb; ++b)
      if (sp >= edges[b] && sp < edges[b + 1]) {
        ++out.counts(b, index_of(e.type));
        sum(b, index_of(e.type)) += e.gap();
        break;
      }
  }
  out.mean_gap = Eigen::ArrayXXd::Constant(nb, kNumTypes, kNaN);
  out.empty.assign(nb, true);
  for (std::size_t b = 0; b < nb; ++b)
    for (int k = 0; k < kNumTypes; ++k)
      if (out.counts(b, k) > 0) {
        out.mean_gap(b, k) = sum(b, k) / static_cast<double>(out.counts(b, k));
        out.empty[b] = false;
      }
  return out;
}

SpreadAcf spread_autocorrelation(const EventStream& s, int max_lag) {
  if (s.size() < 10 * static_cast<std::size_t>(max_lag))
    throw Error(ErrorKind::InsufficientData, "stream too short for the spread autocorrelation");
  double mean = 0;
  for (std::size_t t = 0; t < s.size(); ++t) mean += 0.5 * static_cast<double>(s[t].spread_before_ht);
  mean /= static_cast<double>(s.size());
  std::vector<double> x(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) x[t] = 0.5 * static_cast<double>(s[t].spread_before_ht) - mean;
  SpreadAcf out;
  out.acf = LagVector::Zero(max_lag + 1);
  const auto& b = s.day_boundaries();
  for (int l = 0; l <= max_lag; ++l) {
    double acc = 0;
    std::int64_t n = 0;
    for (std::size_t d = 0; d + 1 < b.size(); ++d)
      for (std::size_t t = b[d]; t + l < b[d + 1]; ++t) {
        acc += x[t] * x[t + l];
        ++n;
      }
    out.acf(l) = n > 0 ? acc / static_cast<double>(n) : kNaN;
  }
  const double v0 = out.acf(0);
  if (v0 > 0) out.acf /= v0;
  std::vector<double> lx, ly;
  for (int l = 1; l <= std::min(100, max_lag); ++l)
    if (out.acf(l) > 0) {
      lx.push_back(l);
      ly.push_back(std::log(out.acf(l)));
    }
  if (lx.size() >= 2) {
    const LineFit lf = fit_line(lx, ly);
    out.rate = -lf.slope;
    out.fit_r2 = lf.r2;
  }
  out.near_unit_root = out.rate < 5e-4;
  return out;
}

SpreadBalance spread_balance(const EventStream& s) {
  SpreadBalance out;
  if (s.empty()) return out;
  const auto& b = s.day_boundaries();
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  const std::size_t days = s.num_days();
  const std::size_t slices = days >= 10 ? 1 : (20 + days - 1) / days;
  for (std::size_t d = 0; d + 1 < b.size(); ++d)
    for (std::size_t k = 0; k < slices; ++k) {
      const std::size_t b0 = b[d] + (b[d + 1] - b[d]) * k / slices, b1 = b[d] + (b[d + 1] - b[d]) * (k + 1) / slices;
      if (b1 > b0) blocks.emplace_back(b0, b1);
    }
  std::vector<double> means;
  std::int64_t total = 0;
  for (auto [b0, b1] : blocks) {
    std::int64_t acc = 0;
    for (std::size_t t = b0; t < b1; ++t) acc += s[t].spread_after_ht() - s[t].spread_before_ht;
    total += acc;
    means.push_back(0.5 * static_cast<double>(acc) / static_cast<double>(b1 - b0));
  }
  out.mean_step = 0.5 * static_cast<double>(total) / static_cast<double>(s.size());
  if (means.size() > 1) {
    double m = 0, v = 0;
    for (double x : means) m += x;
    m /= static_cast<double>(means.size());
    for (double x : means) v += (x - m) * (x - m);
    v /= static_cast<double>(means.size() - 1);
    out.stderr_ = std::sqrt(v / static_cast<double>(means.size()));
  }
  return out;
}

}  // namespace lobimpact
