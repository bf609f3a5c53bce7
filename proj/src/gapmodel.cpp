#include "lobimpact/gapmodel.hpp"

#include "lobimpact/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lobimpact {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> present_types(const CorrelationSet& corr) {
  std::vector<int> out;
  for (int k = 0; k < kNumTypes; ++k)
    if (corr.P(k) > 0) out.push_back(k);
  return out;
}
}  // namespace

RealizedGaps realized_gaps_from(const RawMoments& m) {
  RealizedGaps g;
  g.counts = m.n_type;
  for (int k = 0; k < kNumTypes; ++k) {
    if (!is_price_changing(type_at(k))) continue;
    if (m.n_type(k) == 0) {
      g.insufficient[k] = true;
      continue;
    }
    const double n = static_cast<double>(m.n_type(k));
    g.delta_r(k) = 0.5 * static_cast<double>(m.gap_sum(k)) / n;
    g.mean_sq(k) = 0.25 * static_cast<double>(m.gap_sq_sum(k)) / n;
  }
  g.unconditional = kNaN;
  return g;
}

RealizedGaps realized_gaps(const EventStream& s) {
  RealizedGaps g;
  std::array<std::int64_t, kNumTypes> sum{}, sq{};
  for (const MarketEvent& e : s.events()) {
    const int k = index_of(e.type);
    ++g.counts(k);
    sum[k] += e.gap_ht;
    sq[k] += e.gap_ht * e.gap_ht;
  }
  for (EventType t : kPriceChanging) {
    const int k = index_of(t);
    if (g.counts(k) == 0) {
      g.insufficient[k] = true;
      continue;
    }
    const double n = static_cast<double>(g.counts(k));
    g.delta_r(k) = 0.5 * static_cast<double>(sum[k]) / n;
    g.mean_sq(k) = 0.25 * static_cast<double>(sq[k]) / n;
  }
  const auto& behind = s.behind_gaps();
  if (behind.empty()) {
    g.unconditional = kNaN;
  } else {
    std::int64_t total = 0;
    for (const BehindGaps& b : behind) total += b.bid_ticks + b.ask_ticks;
    // Both sides averaged; a gap of g ticks behind the best moves the mid by g / 2.
    g.unconditional = 0.25 * static_cast<double>(total) / static_cast<double>(behind.size());
  }
  return g;
}

TypeCurves predict_response_constant(const RealizedGaps& gaps, const CorrelationSet& corr, int lmax) {
  TypeCurves R = TypeCurves::Zero(kNumTypes, lmax + 1);
  const std::vector<int> types = present_types(corr);
  for (int a = 0; a < kNumTypes; ++a) {
    if (!(corr.P(a) > 0)) {
      R.row(a).setConstant(kNaN);
      continue;
    }
    double acc = 0;
    for (int l = 1; l <= lmax; ++l) {
      const int lag = l - 1;
      for (int b : types) acc += gaps.delta_r(b) * corr.P(b) * corr.c(a, b, lag);
      R(a, l) = acc;
    }
  }
  return R;
}

LagVector predict_diffusion_constant(const RealizedGaps& gaps, const CorrelationSet& corr, int lmax) {
  const std::vector<int> types = present_types(corr);
  std::vector<double> gamma(std::max(lmax, 1), 0.0);
  for (int k = 0; k < lmax; ++k) {
    double acc = 0;
    for (int a : types)
      for (int b : types) acc += corr.P(a) * corr.P(b) * gaps.delta_r(a) * gaps.delta_r(b) * corr.c(a, b, k);
    gamma[k] = acc;
  }
  LagVector D = LagVector::Zero(lmax + 1);
  double partial = 0;
  for (int l = 1; l <= lmax; ++l) {
    partial += (l == 1) ? gamma[0] : 2.0 * gamma[l - 1];
    D(l) = D(l - 1) + partial;
  }
  return D;
}

GapKernelSet make_kernel_set(const PairCurves& kappa, const TypeVector& target_prob, const TypeVector& delta_r) {
  GapKernelSet k;
  k.kernel_lag = static_cast<int>(kappa.cols()) - 1;
  k.kappa = kappa;
  k.K = PairCurves::Zero(kNumPairs, kappa.cols());
  k.Ktilde = k.K;
  k.K_se = k.K;
  k.Ktilde_se = k.K;
  k.kappa_se = k.K;
  k.target_prob = target_prob;
  k.delta_r = delta_r;
  return k;
}

namespace {

struct KernelFit {
  PairCurves K, Kt, kappa;
  TypeVector resid = TypeVector::Zero(), resid_t = TypeVector::Zero();
  double lambda = 0;
  double identity_error = 0;
};

// Yule-Walker type system shared by the three targets and by K / Ktilde.
KernelFit fit_kernels(const RawMoments& m, const CorrelationSet& corr, const RealizedGaps& gaps, int LK, double lambda,
                      bool diagnostics) {
  const std::vector<int> types = present_types(corr);
  const int na = static_cast<int>(types.size());
  const Eigen::Index n = static_cast<Eigen::Index>(na) * LK;
  Eigen::MatrixXd M(n, n);
  for (int ia = 0; ia < na; ++ia)
    for (int ib = 0; ib < na; ++ib) {
      const int a = types[ia], b = types[ib];
      for (int tau = 1; tau <= LK; ++tau)
        for (int l = 1; l <= LK; ++l) M(ia * LK + tau - 1, ib * LK + l - 1) = corr.flow_cov(a, b, tau - l);
    }

  // Columns: K for each target, Ktilde for each target, then kappa directly.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 9);
  for (int j = 0; j < 3; ++j) {
    const int target = index_of(kPriceChanging[j]);
    if (!(corr.P(target) > 0)) continue;
    for (int ib = 0; ib < na; ++ib)
      for (int l = 1; l <= LK; ++l) {
        const double pairs = static_cast<double>(m.pairs(0, l));
        const double yk = pairs > 0 ? 0.5 * static_cast<double>(m.gap_signed(pair_index(types[ib], target), l)) / pairs : 0.0;
        const double yt = gaps.delta_r(target) * corr.flow_cov(types[ib], target, l);
        rhs(ib * LK + l - 1, j) = yk;
        rhs(ib * LK + l - 1, 3 + j) = yt;
        rhs(ib * LK + l - 1, 6 + j) = yk - yt;
      }
  }
  SolveInfo info;
  const Eigen::MatrixXd x = gram_solve(M, rhs, lambda, &info);

  KernelFit f;
  f.lambda = info.lambda;
  f.K = PairCurves::Zero(kNumPairs, LK + 1);
  f.Kt = f.K;
  f.kappa = f.K;
  for (int j = 0; j < 3; ++j) {
    const int target = index_of(kPriceChanging[j]);
    for (int ia = 0; ia < na; ++ia)
      for (int tau = 1; tau <= LK; ++tau) {
        const Eigen::Index r = ia * LK + tau - 1;
        const int pr = pair_index(types[ia], target);
        f.K(pr, tau) = x(r, j);
        f.Kt(pr, tau) = x(r, 3 + j);
        f.kappa(pr, tau) = x(r, j) - x(r, 3 + j);
        f.identity_error = std::max(f.identity_error, std::abs(x(r, 6 + j) - f.kappa(pr, tau)));
      }
    if (diagnostics && corr.P(target) > 0) {
      const double N = static_cast<double>(m.events());
      const double ey2 = 0.25 * static_cast<double>(m.gap_sq_sum(target)) / N;
      const double et2 = gaps.delta_r(target) * gaps.delta_r(target) * corr.P(target);
      const Eigen::VectorXd k = x.col(j), kt = x.col(3 + j);
      f.resid(target) = ey2 - 2 * k.dot(rhs.col(j)) + k.dot(M * k);
      f.resid_t(target) = et2 - 2 * kt.dot(rhs.col(3 + j)) + kt.dot(M * kt);
    }
  }
  return f;
}

}  // namespace

GapKernelSet calibrate_kernels(const EventStream& s, const CorrelationSet& corr, const KernelOptions& opt) {
  const int LK = opt.kernel_lag;
  if (LK < 1 || LK > corr.max_lag)
    throw Error(ErrorKind::DimensionMismatch, "kernel_lag must lie in [1, max_lag of the correlations]");
  if (s.size() < 10 * static_cast<std::size_t>(LK))
    throw Error(ErrorKind::InsufficientData, "stream too short for kernel_lag " + std::to_string(LK));
  MomentOptions mo;
  mo.max_lag = LK;
  mo.same_day_only = opt.same_day_only;
  mo.with_response = false;
  mo.gap_lag = LK;
  mo.threads = opt.threads;
  const auto blocks = accumulate_blocks(s, mo);
  const RawMoments total = sum_blocks(blocks);
  if (total.events() != corr.n_events)
    throw Error(ErrorKind::DimensionMismatch, "correlations were estimated on a different stream");
  const RealizedGaps gaps = realized_gaps_from(total);

  const KernelFit f = fit_kernels(total, corr, gaps, LK, opt.lambda, true);
  GapKernelSet k;
  k.kernel_lag = LK;
  k.K = f.K;
  k.Ktilde = f.Kt;
  k.kappa = f.kappa;
  k.lambda = f.lambda;
  k.identity_error = f.identity_error;
  k.residual_var = f.resid;
  k.residual_var_tilde = f.resid_t;
  k.target_prob = corr.P;
  k.delta_r = gaps.delta_r;
  k.K_se = PairCurves::Zero(kNumPairs, LK + 1);
  k.Ktilde_se = k.K_se;
  k.kappa_se = k.K_se;

  if (opt.bootstrap > 1 && blocks.size() > 1) {
    PairCurves s1 = k.K_se, s2 = s1, t1 = s1, t2 = s1, k1 = s1, k2 = s1;
    Rng rng(opt.seed);
    RawMoments acc;
    for (int rep = 0; rep < opt.bootstrap; ++rep) {
      acc = blocks[rng.below(blocks.size())];
      for (std::size_t i = 1; i < blocks.size(); ++i) acc += blocks[rng.below(blocks.size())];
      const CorrelationSet c = correlations_from(acc);
      if (!c.P.allFinite()) continue;
      const KernelFit r = fit_kernels(acc, c, realized_gaps_from(acc), LK, opt.lambda, false);
      s1 += r.K;
      s2 += r.K.square();
      t1 += r.Kt;
      t2 += r.Kt.square();
      k1 += r.kappa;
      k2 += r.kappa.square();
    }
    const double B = opt.bootstrap;
    auto sd = [B](const PairCurves& a, const PairCurves& b) {
      return PairCurves(((b - a.square() / B) / (B - 1)).max(0.0).sqrt());
    };
    k.K_se = sd(s1, s2);
    k.Ktilde_se = sd(t1, t2);
    k.kappa_se = sd(k1, k2);
  }
  return k;
}

FlowWindow flow_window(std::span<const MarketEvent> events, std::size_t t, int length) {
  if (t < static_cast<std::size_t>(length) || t > events.size())
    throw Error(ErrorKind::WindowTooShort, "need " + std::to_string(length) + " events of history");
  FlowWindow w = FlowWindow::Zero(kNumTypes, length);
  for (int tau = 1; tau <= length; ++tau) {
    const MarketEvent& e = events[t - tau];
    w(index_of(e.type), tau - 1) = e.sign;
  }
  return w;
}

TypeVector predict_next_jump(const FlowWindow& history, const GapKernelSet& kernels) {
  const int LK = kernels.kernel_lag;
  if (history.cols() < LK)
    throw Error(ErrorKind::WindowTooShort, "history holds " + std::to_string(history.cols()) + " lags, need " +
                                               std::to_string(LK));
  TypeVector out = TypeVector::Zero();
  for (EventType tt : kPriceChanging) {
    const int target = index_of(tt);
    double acc = 0;
    for (int src = 0; src < kNumTypes; ++src)
      for (int tau = 1; tau <= LK; ++tau) acc += kernels.K(pair_index(src, target), tau) * history(src, tau - 1);
    out(target) = acc;
  }
  return out;
}

ImpactDecomposition decompose_impact(const RealizedGaps& gaps, const GapKernelSet& kernels, int lmax) {
  ImpactDecomposition d;
  d.Gstar = TypeCurves::Zero(kNumTypes, lmax + 1);
  d.dGstar = d.Gstar;
  d.Ghat = d.Gstar;
  const int LK = kernels.kernel_lag;
  for (int a = 0; a < kNumTypes; ++a) {
    double ks = 0, kap = 0;
    for (int l = 1; l <= lmax; ++l) {
      // sums over 0 < t' < l
      if (l >= 2 && l - 1 <= LK) {
        for (int b = 0; b < kNumTypes; ++b) {
          if (kernels.K.size() > 0) ks += kernels.K(pair_index(a, b), l - 1);
          kap += kernels.kappa(pair_index(a, b), l - 1);
        }
      }
      d.Gstar(a, l) = gaps.delta_r(a) + ks;
      d.dGstar(a, l) = kap;
      d.Ghat(a, l) = gaps.delta_r(a) + kap;
    }
  }
  return d;
}

double kappa_plus(const GapKernelSet& k, const CorrelationSet& corr, int a, int b, int tau, int t) {
  double acc = 0;
  for (int c = 0; c < kNumTypes; ++c) {
    const double kk = k.per_event(a, c, tau);
    if (kk == 0) continue;
    double w = 0;
    if (t == 0 && c == b) w += 1;
    if (t != 0) w += corr.P(c);
    if (t == -tau) w += corr.P(c) * corr.pi(a, c, tau);
    acc += kk * w;
  }
  return acc;
}

double kappa_plus_plus(const GapKernelSet& k, const CorrelationSet& corr, int a, int b, int tau, int tau2, int t) {
  if (t < 0) return kappa_plus_plus(k, corr, b, a, tau2, tau, -t);
  double acc = 0;
  for (int c1 = 0; c1 < kNumTypes; ++c1) {
    const double k1 = k.per_event(a, c1, tau);
    if (k1 == 0) continue;
    for (int c3 = 0; c3 < kNumTypes; ++c3) {
      const double k3 = k.per_event(b, c3, tau2);
      if (k3 == 0) continue;
      double w;
      if (t == tau2) w = (c1 == b) ? corr.P(c3) : 0.0;
      else w = corr.P(c1) * corr.P(c3) * (corr.pi(c1, c3, t) + 1.0);
      acc += k1 * k3 * w;
    }
  }
  return acc;
}

LagVector predict_diffusion_closure(const RealizedGaps& gaps, const GapKernelSet& kernels, const CorrelationSet& corr,
                                    int lmax, double d0) {
  LagVector D = predict_diffusion_constant(gaps, corr, lmax);
  const int LK = kernels.kernel_lag;
  const std::vector<int> types = present_types(corr);
  const int na = static_cast<int>(types.size());
  if (lmax < 1) return D;

  // Per-event kernel k(a, c, tau) and its probability-weighted sums.
  auto kev = [&](int a, int c, int tau) { return kernels.per_event(a, c, tau); };
  Eigen::ArrayXXd S = Eigen::ArrayXXd::Zero(kNumTypes, LK + 1);  // sum_c k(a,c,tau) P_c
  Eigen::ArrayXXd T = S;                                          // sum_c k(a,c,tau) P_c Pi_{a,c}(tau)
  for (int a : types)
    for (int tau = 1; tau <= LK; ++tau)
      for (int c : types) {
        S(a, tau) += kev(a, c, tau) * corr.P(c);
        T(a, tau) += kev(a, c, tau) * corr.P(c) * corr.pi(a, c, tau);
      }

  // Cross term F2(t), t in (-lmax, lmax): constant gap at t1 against kernel part at t2 = t1 - t.
  const int tm = lmax - 1;
  std::vector<double> H(2 * tm + 1, 0.0);
  for (int t = -tm; t <= tm; ++t) {
    double acc = 0;
    for (int a : types)
      for (int b : types) {
        const double db = gaps.delta_r(b);
        if (db == 0) continue;
        for (int tau = 1; tau <= LK; ++tau) {
          double kp;
          if (t == 0) kp = kev(a, b, tau);
          else kp = S(a, tau) + (t == -tau ? T(a, tau) : 0.0);
          if (kp == 0) continue;
          acc += db * kp * corr.flow_cov(a, b, t + tau);
        }
      }
    H[t + tm] = 2.0 * acc;
  }

  // Kernel-kernel term F3(t) = F3(-t), via V_t = A Q_t B^T on the (type, lag) grid.
  const Eigen::Index n = static_cast<Eigen::Index>(na) * LK;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, kNumTypes);
  for (int ia = 0; ia < na; ++ia)
    for (int tau = 1; tau <= LK; ++tau)
      for (int c : types) A(ia * LK + tau - 1, c) = kev(types[ia], c, tau) * corr.P(c);
  const Eigen::VectorXd Bsum = A.rowwise().sum();
  Eigen::MatrixXd Q(kNumTypes, kNumTypes), W(n, n);
  for (int t = 0; t <= tm; ++t) {
    Q.setZero();
    for (int c1 : types)
      for (int c3 : types) Q(c1, c3) = corr.pi(c1, c3, t) + 1.0;
    Eigen::MatrixXd V = A * Q * A.transpose();
    if (t >= 1 && t <= LK)
      for (int ib = 0; ib < na; ++ib) {
        const Eigen::Index col = ib * LK + t - 1;
        for (int ia = 0; ia < na; ++ia)
          for (int tau = 1; tau <= LK; ++tau)
            V(ia * LK + tau - 1, col) = kev(types[ia], types[ib], tau) * Bsum(col);
      }
    for (int ia = 0; ia < na; ++ia)
      for (int ib = 0; ib < na; ++ib)
        for (int tau2 = 1; tau2 <= LK; ++tau2)
          for (int tau = 1; tau <= LK; ++tau)
            W(ia * LK + tau - 1, ib * LK + tau2 - 1) = corr.flow_cov(types[ia], types[ib], tau - tau2 + t);
    const double f3 = (V.array() * W.array()).sum();
    H[t + tm] += f3;
    if (t > 0) H[-t + tm] += f3;
  }

  // D_extra(l) - D_extra(l-1) = sum_{|t| <= l-1} H(t)
  double extra = 0, window = 0;
  for (int l = 1; l <= lmax; ++l) {
    const int m = l - 1;
    window += (m == 0) ? H[tm] : H[m + tm] + H[-m + tm];
    extra += window;
    D(l) += extra + d0;
  }
  return D;
}

}  // namespace lobimpact
