#include "lobimpact/stats.hpp"

#include "lobimpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace lobimpact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_length(const EventStream& s, int max_lag) {
  if (max_lag < 1) throw Error(ErrorKind::DimensionMismatch, "max_lag must be at least 1");
  if (s.size() < 10 * static_cast<std::size_t>(max_lag))
    throw Error(ErrorKind::InsufficientData, "stream has " + std::to_string(s.size()) +
                                                 " events, need at least 10 x max_lag = " +
                                                 std::to_string(10 * max_lag));
}

RawMoments empty_moments(const MomentOptions& opt) {
  RawMoments m;
  m.max_lag = opt.max_lag;
  m.gap_lag = opt.gap_lag;
  m.with_response = opt.with_response;
  const int n = opt.max_lag + 1;
  m.same = CountArray::Zero(kNumPairs, n);
  m.opp = CountArray::Zero(kNumPairs, n);
  m.pairs = CountArray::Zero(1, n);
  if (opt.with_response) {
    m.r_sum = CountArray::Zero(kNumTypes, n);
    m.rs_sum = CountArray::Zero(kNumTypes, n);
    m.r_cnt = CountArray::Zero(kNumTypes, n);
    m.d_sum = CountArray::Zero(1, n);
    m.d_cnt = CountArray::Zero(1, n);
  }
  if (opt.gap_lag >= 0) m.gap_signed = CountArray::Zero(kNumPairs, opt.gap_lag + 1);
  return m;
}

struct Block {
  std::size_t seg_begin, seg_end;  // pairing domain
  std::size_t begin, end;          // indices t owned by the block
};

// Flat per-event arrays shared by all blocks.
struct Series {
  std::vector<std::uint8_t> code;  // type * 2 + (sign > 0)
  std::vector<std::uint8_t> type;
  std::vector<std::int8_t> sign;
  std::vector<std::int64_t> gap;
};

void accumulate_block(const EventStream& s, const Series& x, const Block& b, RawMoments& m) {
  const int L = m.max_lag;
  for (std::size_t t = b.begin; t < b.end; ++t) {
    const int k = x.type[t];
    ++m.n_type(k);
    m.sign_sum(k) += x.sign[t];
    m.gap_sum(k) += x.gap[t];
    m.gap_sq_sum(k) += x.gap[t] * x.gap[t];
    m.spread_sum(k) += s[t].spread_before_ht;
  }

  // Price and spread path over the pairing domain, with the value after the last event.
  const std::size_t n = b.seg_end - b.seg_begin;
  std::vector<std::int64_t> p, sp;
  if (m.with_response) {
    p.resize(n + 1);
    sp.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = s[b.seg_begin + i].mid_before_ht;
      sp[i] = s[b.seg_begin + i].spread_before_ht;
    }
    p[n] = s[b.seg_end - 1].mid_after_ht();
    sp[n] = s[b.seg_end - 1].spread_after_ht();
  }

  const std::uint8_t* code = x.code.data();
  std::array<std::int64_t, 144> hist;
  for (int l = 0; l <= L; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    const std::size_t cend = b.seg_end > ul ? std::min(b.end, b.seg_end - ul) : b.begin;
    hist.fill(0);
    for (std::size_t t = b.begin; t < cend; ++t) ++hist[code[t] * 12 + code[t + ul]];
    for (int c1 = 0; c1 < 12; ++c1)
      for (int c2 = 0; c2 < 12; ++c2) {
        const std::int64_t h = hist[c1 * 12 + c2];
        if (!h) continue;
        const int pr = pair_index(c1 >> 1, c2 >> 1);
        if ((c1 & 1) == (c2 & 1)) m.same(pr, l) += h;
        else m.opp(pr, l) += h;
      }
    if (cend > b.begin) m.pairs(0, l) += static_cast<std::int64_t>(cend - b.begin);

    if (l <= m.gap_lag) {
      for (std::size_t t = b.begin; t < cend; ++t) {
        const std::size_t u = t + ul;
        m.gap_signed(pair_index(x.type[t], x.type[u]), l) += x.sign[t] * x.sign[u] * x.gap[u];
      }
    }

    if (m.with_response) {
      const std::size_t rend = b.seg_end + 1 > ul ? std::min(b.end, b.seg_end + 1 - ul) : b.begin;
      std::array<std::int64_t, kNumTypes> rs{}, rss{}, rc{};
      std::int64_t dsum = 0;
      for (std::size_t t = b.begin; t < rend; ++t) {
        const std::size_t i = t - b.seg_begin;
        const std::int64_t dp = p[i + ul] - p[i];
        const int k = x.type[t];
        rs[k] += dp * x.sign[t];
        rss[k] += sp[i + ul] - sp[i];
        ++rc[k];
        dsum += dp * dp;
      }
      for (int k = 0; k < kNumTypes; ++k) {
        m.r_sum(k, l) += rs[k];
        m.rs_sum(k, l) += rss[k];
        m.r_cnt(k, l) += rc[k];
      }
      m.d_sum(0, l) += dsum;
      if (rend > b.begin) m.d_cnt(0, l) += static_cast<std::int64_t>(rend - b.begin);
    }
  }
}

template <class Derived>
void add_sq(Eigen::ArrayBase<Derived>& sum, Eigen::ArrayBase<Derived>& sq, const Eigen::ArrayBase<Derived>& v) {
  sum += v;
  sq += v.square();
}

}  // namespace

RawMoments& RawMoments::operator+=(const RawMoments& o) {
  n_type += o.n_type;
  sign_sum += o.sign_sum;
  gap_sum += o.gap_sum;
  gap_sq_sum += o.gap_sq_sum;
  spread_sum += o.spread_sum;
  same += o.same;
  opp += o.opp;
  pairs += o.pairs;
  if (with_response) {
    r_sum += o.r_sum;
    rs_sum += o.rs_sum;
    r_cnt += o.r_cnt;
    d_sum += o.d_sum;
    d_cnt += o.d_cnt;
  }
  if (gap_lag >= 0) gap_signed += o.gap_signed;
  return *this;
}

std::vector<RawMoments> accumulate_blocks(const EventStream& s, const MomentOptions& opt) {
  Series x;
  const std::size_t N = s.size();
  x.code.resize(N);
  x.type.resize(N);
  x.sign.resize(N);
  x.gap.resize(N);
  for (std::size_t t = 0; t < N; ++t) {
    const MarketEvent& e = s[t];
    x.type[t] = static_cast<std::uint8_t>(index_of(e.type));
    x.sign[t] = e.sign;
    x.code[t] = static_cast<std::uint8_t>(x.type[t] * 2 + (e.sign > 0 ? 1 : 0));
    x.gap[t] = e.gap_ht;
  }

  std::vector<Block> blocks;
  const auto& bounds = s.day_boundaries();
  const std::size_t days = s.num_days();
  const std::size_t slices =
      days >= 10 ? 1 : static_cast<std::size_t>((opt.min_blocks + static_cast<int>(days) - 1) / std::max<int>(1, days));
  for (std::size_t d = 0; d < days; ++d) {
    const std::size_t db = bounds[d], de = bounds[d + 1];
    const std::size_t sb = opt.same_day_only ? db : 0, se = opt.same_day_only ? de : N;
    for (std::size_t k = 0; k < slices; ++k) {
      const std::size_t b0 = db + (de - db) * k / slices, b1 = db + (de - db) * (k + 1) / slices;
      if (b1 > b0) blocks.push_back({sb, se, b0, b1});
    }
  }

  std::vector<RawMoments> out(blocks.size(), empty_moments(opt));
  const int nt = std::max(1, std::min<int>(opt.threads, static_cast<int>(blocks.size())));
  if (nt == 1) {
    for (std::size_t i = 0; i < blocks.size(); ++i) accumulate_block(s, x, blocks[i], out[i]);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < blocks.size(); i += nt) accumulate_block(s, x, blocks[i], out[i]);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

RawMoments sum_blocks(const std::vector<RawMoments>& blocks) {
  if (blocks.empty()) return RawMoments{};
  RawMoments total = blocks.front();
  for (std::size_t i = 1; i < blocks.size(); ++i) total += blocks[i];
  return total;
}

double CorrelationSet::c(int a, int b, long lag) const {
  if (lag < 0) return c(b, a, -lag);
  if (lag > max_lag) return 0.0;
  return C(pair_index(a, b), lag);
}

double CorrelationSet::pi(int a, int b, long lag) const {
  if (lag < 0) return pi(b, a, -lag);
  if (lag > max_lag) return 0.0;
  return Pi(pair_index(a, b), lag);
}

CorrelationSet correlations_from(const RawMoments& m, std::int64_t min_count) {
  CorrelationSet c;
  const int L = m.max_lag;
  c.max_lag = L;
  c.n_events = m.events();
  const double N = static_cast<double>(c.n_events);
  for (int k = 0; k < kNumTypes; ++k) {
    c.P(k) = N > 0 ? static_cast<double>(m.n_type(k)) / N : kNaN;
    c.sign_imbalance(k) = N > 0 ? static_cast<double>(m.sign_sum(k)) / N : kNaN;
  }
  c.C.resize(kNumPairs, L + 1);
  c.Pi.resize(kNumPairs, L + 1);
  c.C_se = PairCurves::Zero(kNumPairs, L + 1);
  c.Pi_se = PairCurves::Zero(kNumPairs, L + 1);
  c.counts = m.same + m.opp;
  c.insufficient = c.counts < min_count;
  c.sign_autocorr.resize(L + 1);
  c.side_autocorr.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    const double M = static_cast<double>(m.pairs(0, l));
    double sgn = 0, sde = 0;
    for (int a = 0; a < kNumTypes; ++a)
      for (int b = 0; b < kNumTypes; ++b) {
        const int pr = pair_index(a, b);
        const std::int64_t diff = m.same(pr, l) - m.opp(pr, l);
        const double norm = M * c.P(a) * c.P(b);
        c.C(pr, l) = norm > 0 ? static_cast<double>(diff) / M / (c.P(a) * c.P(b)) : kNaN;
        c.Pi(pr, l) = norm > 0 ? static_cast<double>(c.counts(pr, l)) / M / (c.P(a) * c.P(b)) - 1.0 : kNaN;
        sgn += static_cast<double>(diff);
        const int sides = (is_limit_order(type_at(a)) ? -1 : 1) * (is_limit_order(type_at(b)) ? -1 : 1);
        sde += sides * static_cast<double>(diff);
      }
    c.sign_autocorr(l) = M > 0 ? sgn / M : kNaN;
    c.side_autocorr(l) = M > 0 ? sde / M : kNaN;
  }
  return c;
}

ResponseSet response_from(const RawMoments& m, std::int64_t min_count) {
  if (!m.with_response) throw Error(ErrorKind::DimensionMismatch, "moments were accumulated without responses");
  ResponseSet r;
  const int L = m.max_lag;
  r.max_lag = L;
  r.R.resize(kNumTypes, L + 1);
  r.RS.resize(kNumTypes, L + 1);
  r.R_se = TypeCurves::Zero(kNumTypes, L + 1);
  r.RS_se = TypeCurves::Zero(kNumTypes, L + 1);
  r.R_count = m.r_cnt;
  r.insufficient = m.r_cnt < min_count;
  r.D.resize(L + 1);
  r.D_se = LagVector::Zero(L + 1);
  for (int l = 0; l <= L; ++l) {
    for (int k = 0; k < kNumTypes; ++k) {
      const double n = static_cast<double>(m.r_cnt(k, l));
      r.R(k, l) = n > 0 ? 0.5 * static_cast<double>(m.r_sum(k, l)) / n : kNaN;
      r.RS(k, l) = n > 0 ? 0.5 * static_cast<double>(m.rs_sum(k, l)) / n : kNaN;
    }
    const double n = static_cast<double>(m.d_cnt(0, l));
    r.D(l) = n > 0 ? 0.25 * static_cast<double>(m.d_sum(0, l)) / n : kNaN;
  }
  return r;
}

StreamStats estimate_all(const EventStream& s, const StatsConfig& cfg) {
  check_length(s, cfg.max_lag);
  MomentOptions opt;
  opt.max_lag = cfg.max_lag;
  opt.same_day_only = cfg.same_day_only;
  opt.with_response = true;
  opt.threads = cfg.threads;
  const auto blocks = accumulate_blocks(s, opt);
  const RawMoments total = sum_blocks(blocks);
  StreamStats out{correlations_from(total, cfg.min_count), response_from(total, cfg.min_count)};

  if (cfg.bootstrap > 1 && blocks.size() > 1) {
    const int L = cfg.max_lag;
    PairCurves c1 = PairCurves::Zero(kNumPairs, L + 1), c2 = c1, p1 = c1, p2 = c1;
    TypeCurves r1 = TypeCurves::Zero(kNumTypes, L + 1), r2 = r1, s1 = r1, s2 = r1;
    LagVector d1 = LagVector::Zero(L + 1), d2 = d1;
    Rng rng(cfg.seed);
    RawMoments acc = empty_moments(opt);
    const RawMoments zero = acc;
    for (int rep = 0; rep < cfg.bootstrap; ++rep) {
      acc = zero;
      for (std::size_t i = 0; i < blocks.size(); ++i) acc += blocks[rng.below(blocks.size())];
      const CorrelationSet c = correlations_from(acc, cfg.min_count);
      const ResponseSet r = response_from(acc, cfg.min_count);
      add_sq(c1, c2, c.C);
      add_sq(p1, p2, c.Pi);
      add_sq(r1, r2, r.R);
      add_sq(s1, s2, r.RS);
      add_sq(d1, d2, r.D);
    }
    const double B = cfg.bootstrap;
    auto sd = [B](const auto& a, const auto& b) { return ((b - a.square() / B) / (B - 1)).max(0.0).sqrt(); };
    out.corr.C_se = sd(c1, c2);
    out.corr.Pi_se = sd(p1, p2);
    out.resp.R_se = sd(r1, r2);
    out.resp.RS_se = sd(s1, s2);
    out.resp.D_se = sd(d1, d2);
  }
  return out;
}

CorrelationSet estimate_correlations(const EventStream& s, int max_lag, bool same_day_only, const StatsConfig& cfg) {
  StatsConfig c = cfg;
  c.max_lag = max_lag;
  c.same_day_only = same_day_only;
  return estimate_all(s, c).corr;
}

ResponseSet estimate_response(const EventStream& s, int max_lag, const StatsConfig& cfg) {
  StatsConfig c = cfg;
  c.max_lag = max_lag;
  return estimate_all(s, c).resp;
}

TypeCurves estimate_spread_response(const EventStream& s, int max_lag, const StatsConfig& cfg) {
  StatsConfig c = cfg;
  c.max_lag = max_lag;
  c.same_day_only = true;
  return estimate_all(s, c).resp.RS;
}

LagVector estimate_diffusion(const EventStream& s, int max_lag, const StatsConfig& cfg) {
  StatsConfig c = cfg;
  c.max_lag = max_lag;
  c.bootstrap = 0;
  return estimate_all(s, c).resp.D;
}

SignAutocorrs estimate_sign_autocorrs(const EventStream& s, int max_lag, bool same_day_only) {
  check_length(s, max_lag);
  const std::size_t N = s.size();
  std::vector<std::int8_t> eps(N), side(N);
  for (std::size_t t = 0; t < N; ++t) {
    eps[t] = s[t].sign;
    side[t] = static_cast<std::int8_t>(s[t].side());
  }
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  if (same_day_only) {
    const auto& b = s.day_boundaries();
    for (std::size_t d = 0; d + 1 < b.size(); ++d) segs.emplace_back(b[d], b[d + 1]);
  } else {
    segs.emplace_back(0, N);
  }
  SignAutocorrs out{LagVector::Zero(max_lag + 1), LagVector::Zero(max_lag + 1)};
  for (int l = 0; l <= max_lag; ++l) {
    std::int64_t se = 0, ss = 0, n = 0;
    for (auto [b, e] : segs) {
      for (std::size_t t = b; t + l < e; ++t) {
        se += eps[t] * eps[t + l];
        ss += side[t] * side[t + l];
      }
      if (e > b + l) n += static_cast<std::int64_t>(e - b - l);
    }
    out.sign(l) = n > 0 ? static_cast<double>(se) / n : kNaN;
    out.side(l) = n > 0 ? static_cast<double>(ss) / n : kNaN;
  }
  return out;
}

CorrelationSet average_correlations(const std::vector<CorrelationSet>& sets, Averaging mode) {
  if (sets.empty()) throw Error(ErrorKind::InsufficientData, "nothing to average");
  CorrelationSet out = sets.front();
  double wsum = 0;
  out.P.setZero();
  out.C.setZero();
  out.Pi.setZero();
  out.C_se.setZero();
  out.Pi_se.setZero();
  out.sign_autocorr.setZero();
  out.side_autocorr.setZero();
  out.sign_imbalance.setZero();
  out.counts.setZero();
  out.n_events = 0;
  for (const CorrelationSet& c : sets) {
    if (c.max_lag != out.max_lag) throw Error(ErrorKind::DimensionMismatch, "max_lag differs between symbols");
    const double w = mode == Averaging::Normalized ? 1.0 : static_cast<double>(c.n_events);
    wsum += w;
    out.P += w * c.P;
    out.C += w * c.C;
    out.Pi += w * c.Pi;
    out.C_se += (w * c.C_se).square();
    out.Pi_se += (w * c.Pi_se).square();
    out.sign_autocorr += w * c.sign_autocorr;
    out.side_autocorr += w * c.side_autocorr;
    out.sign_imbalance += w * c.sign_imbalance;
    out.counts += c.counts;
    out.n_events += c.n_events;
  }
  out.P /= wsum;
  out.C /= wsum;
  out.Pi /= wsum;
  out.C_se = out.C_se.sqrt() / wsum;
  out.Pi_se = out.Pi_se.sqrt() / wsum;
  out.sign_autocorr /= wsum;
  out.side_autocorr /= wsum;
  out.sign_imbalance /= wsum;
  out.insufficient = sets.front().insufficient;
  for (const CorrelationSet& c : sets) out.insufficient = out.insufficient || c.insufficient;
  return out;
}

}  // namespace lobimpact
