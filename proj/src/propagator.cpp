#include "lobimpact/propagator.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lobimpact {

namespace {

// One (a, b) block of the deconvolution system. cab(m) = C_ab(m), cba(m) = C_ba(m), m = 0..L.
void fill_block(Eigen::MatrixXd& A, Eigen::Index row0, Eigen::Index col0, int L, double pb, const std::vector<double>& cab,
                const std::vector<double>& cba, TailClosure tail) {
  std::vector<double> suffix(L + 2, 0.0);  // suffix[m] = sum_{j=m}^{L} cba(j)
  for (int m = L; m >= 1; --m) suffix[m] = suffix[m + 1] + cba[m];
  for (int l = 1; l <= L; ++l) {
    const Eigen::Index r = row0 + l - 1;
    for (int n = 1; n <= l; ++n) A(r, col0 + n - 1) = pb * (cab[l - n] - cba[n]);
    for (int n = l + 1; n <= L; ++n) A(r, col0 + n - 1) = pb * (cba[n - l] - cba[n]);
    // Past events older than L: with G constant beyond L the remaining sum telescopes.
    if (tail == TailClosure::Flat) A(r, col0 + L - 1) += pb * suffix[L - l + 1];
  }
}

std::vector<int> active_types(const CorrelationSet& corr, const std::array<bool, kNumTypes>& mask) {
  std::vector<int> out;
  for (int k = 0; k < kNumTypes; ++k)
    if (mask[k] && corr.P(k) > 0 && std::isfinite(corr.P(k))) out.push_back(k);
  return out;
}

std::vector<double> lag_row(const CorrelationSet& corr, int a, int b) {
  std::vector<double> v(corr.max_lag + 1);
  for (int m = 0; m <= corr.max_lag; ++m) v[m] = corr.C(pair_index(a, b), m);
  return v;
}

}  // namespace

Eigen::MatrixXd multi_event_system(const CorrelationSet& corr, const std::array<bool, kNumTypes>& active,
                                   TailClosure tail) {
  const int L = corr.max_lag;
  const std::vector<int> types = active_types(corr, active);
  const Eigen::Index n = static_cast<Eigen::Index>(types.size()) * L;
  Eigen::MatrixXd A(n, n);
  for (std::size_t i = 0; i < types.size(); ++i)
    for (std::size_t j = 0; j < types.size(); ++j) {
      const int a = types[i], b = types[j];
      fill_block(A, static_cast<Eigen::Index>(i) * L, static_cast<Eigen::Index>(j) * L, L, corr.P(b),
                 lag_row(corr, a, b), lag_row(corr, b, a), tail);
    }
  return A;
}

Eigen::MatrixXd single_event_system(const LagVector& C, TailClosure tail) {
  const int L = static_cast<int>(C.size()) - 1;
  std::vector<double> c(C.data(), C.data() + C.size());
  Eigen::MatrixXd A(L, L);
  fill_block(A, 0, 0, L, 1.0, c, c, tail);
  return A;
}

PropagatorSet solve_multi_event(const CorrelationSet& corr, const ResponseSet& resp, double lambda,
                                PropagatorOptions opt) {
  if (corr.max_lag != resp.max_lag)
    throw Error(ErrorKind::DimensionMismatch, "correlations and responses use different max_lag");
  const int L = corr.max_lag;
  const std::vector<int> types = active_types(corr, opt.active);
  if (types.empty()) throw Error(ErrorKind::InsufficientData, "no event types to solve for");
  const Eigen::MatrixXd A = multi_event_system(corr, opt.active, opt.tail);
  Eigen::VectorXd rhs(A.rows());
  for (std::size_t i = 0; i < types.size(); ++i)
    for (int l = 1; l <= L; ++l) rhs(static_cast<Eigen::Index>(i) * L + l - 1) = resp.R(types[i], l);
  if (!rhs.allFinite()) throw Error(ErrorKind::InsufficientData, "response has undefined entries");

  SolveInfo info;
  const Eigen::MatrixXd x = ridge_solve(A, rhs, lambda, &info, opt.rcond_min);

  PropagatorSet out;
  out.max_lag = L;
  out.G = TypeCurves::Zero(kNumTypes, L + 1);
  for (std::size_t i = 0; i < types.size(); ++i)
    for (int l = 1; l <= L; ++l) out.G(types[i], l) = x(static_cast<Eigen::Index>(i) * L + l - 1, 0);
  out.residual = info.residual;
  out.residual_abs = info.residual_abs;
  out.lambda = info.lambda;
  out.rcond = info.rcond;
  out.reliable_lag = opt.reliable_lag >= 0 ? opt.reliable_lag : L / 3;
  out.tail = opt.tail;
  out.active.fill(false);
  for (int k : types) out.active[k] = true;
  return out;
}

LagVector solve_single_event(const LagVector& R, const LagVector& C, double lambda, PropagatorOptions opt,
                             SolveInfo* info) {
  if (R.size() != C.size() || R.size() < 2)
    throw Error(ErrorKind::DimensionMismatch, "R and C must have the same length L+1 >= 2");
  const int L = static_cast<int>(R.size()) - 1;
  const Eigen::MatrixXd A = single_event_system(C, opt.tail);
  const Eigen::VectorXd rhs = R.segment(1, L).matrix();
  const Eigen::MatrixXd x = ridge_solve(A, rhs, lambda, info, opt.rcond_min);
  LagVector G = LagVector::Zero(L + 1);
  G.segment(1, L) = x.col(0).array();
  return G;
}

TypeCurves forward_response(const CorrelationSet& corr, const TypeCurves& G, TailClosure tail) {
  const int L = corr.max_lag;
  std::array<bool, kNumTypes> all;
  all.fill(true);
  const std::vector<int> types = active_types(corr, all);
  const Eigen::MatrixXd A = multi_event_system(corr, all, tail);
  Eigen::VectorXd g(A.cols());
  for (std::size_t i = 0; i < types.size(); ++i)
    for (int l = 1; l <= L; ++l) g(static_cast<Eigen::Index>(i) * L + l - 1) = G(types[i], l);
  const Eigen::VectorXd r = A * g;
  TypeCurves R = TypeCurves::Zero(kNumTypes, L + 1);
  for (std::size_t i = 0; i < types.size(); ++i)
    for (int l = 1; l <= L; ++l) R(types[i], l) = r(static_cast<Eigen::Index>(i) * L + l - 1);
  return R;
}

LagVector forward_single(const LagVector& C, const LagVector& G, TailClosure tail) {
  const int L = static_cast<int>(C.size()) - 1;
  const Eigen::MatrixXd A = single_event_system(C, tail);
  LagVector R = LagVector::Zero(L + 1);
  R.segment(1, L) = (A * G.segment(1, L).matrix()).array();
  return R;
}

FlowSeries flow_response(std::span<const double> price, std::span<const double> flow,
                         const std::vector<std::size_t>& day_bounds, int max_lag) {
  if (price.size() != flow.size()) throw Error(ErrorKind::DimensionMismatch, "price and flow lengths differ");
  std::vector<std::size_t> b = day_bounds;
  if (b.empty()) b = {0, flow.size()};
  std::vector<double> sumR(max_lag + 1, 0.0), sumC(max_lag + 1, 0.0);
  std::vector<std::int64_t> n(max_lag + 1, 0);
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    const std::size_t b0 = b[d], m = b[d + 1] - b[d];
    const double* p = price.data() + b0;
    const double* x = flow.data() + b0;
    for (int l = 0; l <= max_lag; ++l) {
      double r = 0, c = 0;
      for (std::size_t i = 0; i + l < m; ++i) {
        r += (p[i + l] - p[i]) * x[i];
        c += x[i] * x[i + l];
      }
      sumR[l] += r;
      sumC[l] += c;
      if (m > static_cast<std::size_t>(l)) n[l] += static_cast<std::int64_t>(m - l);
    }
  }
  FlowSeries f{LagVector::Zero(max_lag + 1), LagVector::Zero(max_lag + 1)};
  for (int l = 0; l <= max_lag; ++l) {
    if (n[l] == 0) throw Error(ErrorKind::InsufficientData, "no flow pairs at lag " + std::to_string(l));
    f.R(l) = sumR[l] / static_cast<double>(n[l]);
    f.C(l) = sumC[l] / static_cast<double>(n[l]);
  }
  return f;
}

FlowSeries market_order_flow(const EventStream& s, int max_lag, const SignedFlowConfig& cfg) {
  std::vector<double> xi, p;
  std::vector<std::size_t> bounds{0};
  const auto& b = s.day_boundaries();
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      const MarketEvent& e = s[t];
      if (e.type != EventType::MO0 && e.type != EventType::MOp) continue;
      double v = 1.0;
      if (cfg.theta != 0 && e.has_volume()) v = std::pow(static_cast<double>(e.volume), cfg.theta);
      xi.push_back(e.sign * v);
      p.push_back(e.mid_before());
    }
    if (xi.size() > bounds.back()) bounds.push_back(xi.size());
  }
  if (xi.empty()) throw Error(ErrorKind::InsufficientData, "no market orders");
  return flow_response(p, xi, bounds, max_lag);
}

DiffusionPrediction predict_diffusion_temporary(const PropagatorSet& prop, const CorrelationSet& corr, int lmax) {
  const int L = prop.max_lag;
  const int Lc = corr.max_lag;
  const int S = L + 1;  // support of the one-step kernel
  // One-step return kernel g(s) = G(s) - G(s-1), s = 1..L+1.
  std::vector<std::vector<double>> g(kNumTypes, std::vector<double>(S + 1, 0.0));
  std::vector<int> types;
  for (int a = 0; a < kNumTypes; ++a) {
    if (!(corr.P(a) > 0)) continue;
    types.push_back(a);
    for (int s = 1; s <= L; ++s) g[a][s] = prop.G(a, s) - prop.G(a, s - 1);
    g[a][S] = prop.tail == TailClosure::Flat ? 0.0 : -prop.G(a, L);
  }
  // psi_ab(d) = sum_s g_a(s) g_b(s - d), d in [-L, L].
  const int dmax = S - 1;
  LagVector D = LagVector::Zero(lmax + 1);
  std::vector<double> gamma(lmax, 0.0), band1(lmax, 0.0), band0(lmax, 0.0);
  const int hi1 = Lc, lo1 = static_cast<int>(0.9 * Lc), lo0 = static_cast<int>(0.8 * Lc);
  std::vector<double> psi(2 * dmax + 1);
  for (int a : types)
    for (int b : types) {
      for (int d = -dmax; d <= dmax; ++d) {
        double acc = 0;
        const int s0 = std::max(1, 1 + d), s1 = std::min(S, S + d);
        for (int s = s0; s <= s1; ++s) acc += g[a][s] * g[b][s - d];
        psi[d + dmax] = acc;
      }
      const double pp = corr.P(a) * corr.P(b);
      for (int k = 0; k < lmax; ++k) {
        double acc = 0, acc1 = 0, acc0 = 0;
        for (int d = -dmax; d <= dmax; ++d) {
          const long m = k + d;
          const long am = m < 0 ? -m : m;
          if (am > Lc || psi[d + dmax] == 0.0) continue;
          const double v = psi[d + dmax] * (m >= 0 ? corr.C(pair_index(a, b), m) : corr.C(pair_index(b, a), -m));
          acc += v;
          if (am > lo1 && am <= hi1) acc1 += v;
          else if (am > lo0 && am <= lo1) acc0 += v;
        }
        gamma[k] += pp * acc;
        band1[k] += pp * acc1;
        band0[k] += pp * acc0;
      }
    }
  // D(l) = l gamma(0) + 2 sum_{k=1}^{l-1} (l - k) gamma(k)
  auto accumulate = [lmax](const std::vector<double>& gm) {
    LagVector out = LagVector::Zero(lmax + 1);
    double partial = 0;  // gamma(0) + 2 sum_{k=1}^{l-1} gamma(k)
    for (int l = 1; l <= lmax; ++l) {
      partial += (l == 1) ? gm[0] : 2.0 * gm[l - 1];
      out(l) = out(l - 1) + partial;
    }
    return out;
  };
  DiffusionPrediction out;
  out.D = accumulate(gamma);
  if (lmax >= 1) {
    const double d1 = accumulate(band1)(lmax), d0 = accumulate(band0)(lmax);
    out.last_decile_share = out.D(lmax) != 0 ? d1 / out.D(lmax) : 0.0;
    const double q = d0 != 0 ? d1 / d0 : 0.0;
    out.tail_estimate = (std::abs(q) < 1) ? d1 * q / (1 - q) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace lobimpact
