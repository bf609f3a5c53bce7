#include "lobimpact/sim.hpp"

#include "lobimpact/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace lobimpact {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ConfigInvalid, msg); }

void check_pmf(const std::vector<double>& p, const std::string& what) {
  if (p.empty()) invalid(what + " is empty");
  double s = 0;
  for (double x : p) {
    if (!(x >= 0) || !std::isfinite(x)) invalid(what + " has a negative or non-finite entry");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-6) invalid(what + " does not sum to 1");
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t stochastic_round(double x, Rng& rng) {
  const double fl = std::floor(x);
  return static_cast<std::int64_t>(fl) + (rng.uniform() < x - fl ? 1 : 0);
}

double truncated_normal(Rng& rng) {
  double z;
  do z = rng.normal();
  while (std::abs(z) > 3.0);
  return z;
}

// 1-based draw from a pmf over 1, 2, 3, ...
std::int64_t draw_level(const std::vector<double>& pmf, Rng& rng, std::size_t max_level = SIZE_MAX) {
  const std::size_t n = std::min(pmf.size(), max_level);
  return rng.discrete(pmf, static_cast<int>(n)) + 1;
}

std::int64_t session_step(std::size_t n_day) {
  const std::int64_t span = kSessionCloseNs - kSessionOpenNs;
  return n_day > 1 ? span / static_cast<std::int64_t>(n_day) : 0;
}

PairCurves per_event_kernel(const GapKernelSet& k) {
  PairCurves out = PairCurves::Zero(kNumPairs, k.kernel_lag + 1);
  for (int src = 0; src < kNumTypes; ++src)
    for (int tgt = 0; tgt < kNumTypes; ++tgt)
      for (int tau = 1; tau <= k.kernel_lag; ++tau) out(pair_index(src, tgt), tau) = k.per_event(src, tgt, tau);
  return out;
}

// sum_tau k(type_{t-tau}, target, tau) eps_{t-tau} over the current day's history.
double kernel_term(const PairCurves& k, int target, const std::vector<std::int8_t>& types,
                   const std::vector<std::int8_t>& signs) {
  const int LK = static_cast<int>(k.cols()) - 1;
  const std::size_t t = types.size();
  const int h = static_cast<int>(std::min<std::size_t>(LK, t));
  double acc = 0;
  for (int tau = 1; tau <= h; ++tau) acc += k(pair_index(types[t - tau], target), tau) * signs[t - tau];
  return acc;
}

}  // namespace

TypeVector stationary_type_prob(const GeneratorConfig& cfg) {
  if (cfg.type_process == TypeProcess::Markov) {
    Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(kNumTypes, 1.0 / kNumTypes);
    for (int it = 0; it < 10000; ++it) {
      const Eigen::RowVectorXd q = p * cfg.transition;
      if ((q - p).cwiseAbs().maxCoeff() < 1e-15) {
        p = q;
        break;
      }
      p = q;
    }
    return p.transpose().array();
  }
  if (cfg.type_process == TypeProcess::Replay) {
    TypeVector p = TypeVector::Zero();
    for (EventType t : cfg.replay_types) p(index_of(t)) += 1;
    if (!cfg.replay_types.empty()) p /= static_cast<double>(cfg.replay_types.size());
    return p;
  }
  return cfg.type_prob / cfg.type_prob.sum();
}

void validate_config(const GeneratorConfig& cfg) {
  if (cfg.type_process != TypeProcess::Replay && cfg.events == 0) invalid("events must be positive");
  if (cfg.days < 1) invalid("days must be at least 1");
  if (!(cfg.tick_size > 0)) invalid("tick_size must be positive");
  if (cfg.type_process == TypeProcess::Iid) {
    if ((cfg.type_prob < 0).any() || !cfg.type_prob.allFinite()) invalid("type_prob has a negative entry");
    if (std::abs(cfg.type_prob.sum() - 1.0) > 1e-6) invalid("type_prob does not sum to 1");
  }
  if (cfg.type_process == TypeProcess::Markov) {
    if ((cfg.transition.array() < 0).any() || !cfg.transition.allFinite()) invalid("transition has a negative entry");
    for (int r = 0; r < kNumTypes; ++r)
      if (std::abs(cfg.transition.row(r).sum() - 1.0) > 1e-6) invalid("transition row does not sum to 1");
  }
  if (cfg.sign_process == SignProcess::Iid && !(cfg.buy_prob >= 0 && cfg.buy_prob <= 1))
    invalid("buy_prob must lie in [0, 1]");
  if (cfg.sign_process == SignProcess::LongMemory && !(cfg.gamma > 0 && cfg.gamma < 1))
    invalid("gamma must lie in (0, 1)");
  if (cfg.sign_process == SignProcess::Conditional && ((cfg.same_sign_prob < 0).any() || (cfg.same_sign_prob > 1).any()))
    invalid("same_sign_prob must lie in [0, 1]");
  const TypeVector p = stationary_type_prob(cfg);
  switch (cfg.gap_process) {
    case GapProcess::Constant:
    case GapProcess::SpreadReverting:
      for (EventType t : kPriceChanging)
        if (p(index_of(t)) > 0 || cfg.type_process == TypeProcess::Markov)
          check_pmf(cfg.gap_pmf[index_of(t)], "gap_pmf." + std::string(type_name(t)));
      if (cfg.gap_process == GapProcess::SpreadReverting) {
        if (!(cfg.alpha >= 0 && cfg.alpha < 1)) invalid("alpha must lie in [0, 1)");
        double ppc = 0;
        for (EventType t : kPriceChanging) ppc += p(index_of(t));
        if (cfg.alpha > 0 && !(ppc > 0)) invalid("spread reversion needs price-changing events");
      }
      break;
    case GapProcess::Planted:
      if (cfg.planted_kernel.rows() != kNumPairs || cfg.planted_kernel.cols() < 2)
        invalid("planted kernel must have 36 rows and at least one lag");
      if (!cfg.planted_kernel.allFinite()) invalid("planted kernel has non-finite entries");
      for (EventType t : kPriceChanging)
        if (p(index_of(t)) > 0 && !(cfg.planted_delta_r(index_of(t)) > 0))
          invalid("planted_delta_r must be positive for " + std::string(type_name(t)));
      if (!(cfg.noise >= 0)) invalid("noise must be non-negative");
      break;
    case GapProcess::Book:
      check_pmf(cfg.book.behind_pmf, "book.behind_pmf");
      check_pmf(cfg.book.improve_pmf, "book.improve_pmf");
      if (!(cfg.book.selection >= 0)) invalid("book.selection must be non-negative");
      if (!(cfg.book.refresh >= 0 && cfg.book.refresh <= 1)) invalid("book.refresh must lie in [0, 1]");
      if (cfg.book.lop_cap < 1) invalid("book.lop_cap must be at least 1");
      if (cfg.initial_spread_ticks < 1) invalid("initial_spread must be at least 1 tick");
      break;
  }
}

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      invalid("bad number '" + tok + "' for " + key);
    }
  }
  return out;
}

double parse_scalar(const std::string& key, const std::string& v) {
  const std::vector<double> x = parse_list(key, v);
  if (x.size() != 1) invalid(key + " expects one number");
  return x[0];
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  const double x = parse_scalar(key, v);
  if (!(x >= 0) || x != std::floor(x) || x > 9.0e18) invalid(key + " expects a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

TypeVector parse_type_vector(const std::string& key, const std::string& v) {
  const std::vector<double> x = parse_list(key, v);
  if (x.size() != kNumTypes) invalid(key + " expects 6 numbers (MO0 MOP CA0 LO0 CAP LOP)");
  return Eigen::Map<const TypeVector>(x.data());
}

EventType parse_type_key(const std::string& key, const std::string& name) {
  try {
    return parse_type(name);
  } catch (const std::exception&) {
    invalid("unknown event type '" + name + "' in " + key);
  }
}

}  // namespace

GeneratorConfig parse_config(const std::string& text) {
  GeneratorConfig cfg;
  std::map<std::pair<int, int>, std::pair<double, double>> kernels;
  int kernel_lag = 100;
  std::string replay_file;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    if (eq == std::string::npos) invalid("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq)), v = strip(line.substr(eq + 1));
    if (key == "symbol") cfg.symbol = v;
    else if (key == "tick_size") cfg.tick_size = parse_scalar(key, v);
    else if (key == "events") cfg.events = parse_count(key, v);
    else if (key == "days") cfg.days = static_cast<int>(parse_count(key, v));
    else if (key == "seed") cfg.seed = parse_count(key, v);
    else if (key == "initial_mid") cfg.initial_mid_ticks = static_cast<std::int64_t>(parse_count(key, v));
    else if (key == "initial_spread") cfg.initial_spread_ticks = static_cast<std::int64_t>(parse_count(key, v));
    else if (key == "type_process") {
      if (v == "iid") cfg.type_process = TypeProcess::Iid;
      else if (v == "markov") cfg.type_process = TypeProcess::Markov;
      else if (v == "replay") cfg.type_process = TypeProcess::Replay;
      else invalid("type_process must be iid, markov or replay");
    } else if (key == "type_prob") cfg.type_prob = parse_type_vector(key, v);
    else if (key == "transition") {
      const std::vector<double> x = parse_list(key, v);
      if (x.size() != kNumPairs) invalid("transition expects 36 numbers, row-major");
      for (int r = 0; r < kNumTypes; ++r)
        for (int c = 0; c < kNumTypes; ++c) cfg.transition(r, c) = x[r * kNumTypes + c];
    } else if (key == "replay_file") replay_file = v;
    else if (key == "sign_process") {
      if (v == "iid") cfg.sign_process = SignProcess::Iid;
      else if (v == "long_memory") cfg.sign_process = SignProcess::LongMemory;
      else if (v == "conditional") cfg.sign_process = SignProcess::Conditional;
      else invalid("sign_process must be iid, long_memory or conditional");
    } else if (key == "buy_prob") cfg.buy_prob = parse_scalar(key, v);
    else if (key == "gamma") cfg.gamma = parse_scalar(key, v);
    else if (key == "same_sign_prob") cfg.same_sign_prob = parse_type_vector(key, v);
    else if (key == "gap_process") {
      if (v == "constant") cfg.gap_process = GapProcess::Constant;
      else if (v == "planted") cfg.gap_process = GapProcess::Planted;
      else if (v == "spread_reverting") cfg.gap_process = GapProcess::SpreadReverting;
      else if (v == "book") cfg.gap_process = GapProcess::Book;
      else invalid("gap_process must be constant, planted, spread_reverting or book");
    } else if (key.rfind("gap_pmf.", 0) == 0) {
      cfg.gap_pmf[index_of(parse_type_key(key, key.substr(8)))] = parse_list(key, v);
    } else if (key == "delta_r") cfg.planted_delta_r = parse_type_vector(key, v);
    else if (key == "kernel_lag") kernel_lag = static_cast<int>(parse_count(key, v));
    else if (key.rfind("kernel.", 0) == 0) {
      const std::string pr = key.substr(7);
      const auto arrow = pr.find("->");
      if (arrow == std::string::npos) invalid(key + ": expected kernel.SRC->TARGET");
      const int a = index_of(parse_type_key(key, pr.substr(0, arrow)));
      const int b = index_of(parse_type_key(key, pr.substr(arrow + 2)));
      const std::vector<double> x = parse_list(key, v);
      if (x.size() != 2) invalid(key + " expects amplitude and decay exponent");
      kernels[{a, b}] = {x[0], x[1]};
    } else if (key == "noise") cfg.noise = parse_scalar(key, v);
    else if (key == "alpha") cfg.alpha = parse_scalar(key, v);
    else if (key == "mean_spread") cfg.mean_spread_ticks = parse_scalar(key, v);
    else if (key == "book.behind_pmf") cfg.book.behind_pmf = parse_list(key, v);
    else if (key == "book.improve_pmf") cfg.book.improve_pmf = parse_list(key, v);
    else if (key == "book.selection") cfg.book.selection = parse_scalar(key, v);
    else if (key == "book.refresh") cfg.book.refresh = parse_scalar(key, v);
    else if (key == "book.lop_cap") cfg.book.lop_cap = static_cast<int>(parse_count(key, v));
    else invalid("unknown key '" + key + "'");
  }
  if (kernel_lag < 1) invalid("kernel_lag must be positive");
  if (cfg.gap_process == GapProcess::Planted) {
    cfg.planted_kernel = PairCurves::Zero(kNumPairs, kernel_lag + 1);
    // amplitude * tau^-exponent
    for (const auto& [ab, ae] : kernels) {
      if (!is_price_changing(type_at(ab.second))) invalid("kernel targets must be price-changing types");
      for (int tau = 1; tau <= kernel_lag; ++tau)
        cfg.planted_kernel(pair_index(ab.first, ab.second), tau) = ae.first * std::pow(tau, -ae.second);
    }
  }
  if (cfg.type_process == TypeProcess::Replay) {
    if (replay_file.empty()) invalid("type_process = replay needs replay_file");
    const EventStream src = load_event_csv(replay_file);
    for (const MarketEvent& e : src.events()) cfg.replay_types.push_back(e.type);
    cfg.events = cfg.replay_types.size();
  }
  validate_config(cfg);
  return cfg;
}

GeneratorConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) invalid("cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

LagVector farima_acf(double d, int L) {
  LagVector r(L + 1);
  r(0) = 1.0;
  for (int k = 1; k <= L; ++k) r(k) = r(k - 1) * (k - 1 + d) / (k - d);
  return r;
}

std::vector<double> gaussian_with_acf(const LagVector& acf, std::size_t n, std::uint64_t seed, std::size_t* clipped) {
  const std::size_t m = std::bit_ceil(std::max<std::size_t>(n, 2));
  if (static_cast<std::size_t>(acf.size()) < m + 1)
    throw Error(ErrorKind::DimensionMismatch, "autocorrelation shorter than the embedding needs");
  const std::size_t M = 2 * m;
  std::vector<double> c(M);
  for (std::size_t j = 0; j <= m; ++j) c[j] = acf(static_cast<Eigen::Index>(j));
  for (std::size_t j = 1; j < m; ++j) c[M - j] = acf(static_cast<Eigen::Index>(j));
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> lam;
  fft.fwd(lam, c);
  Rng rng(seed);
  std::size_t neg = 0;
  std::vector<std::complex<double>> y(M);
  for (std::size_t k = 0; k < M; ++k) {
    double l = lam[k].real();
    if (l < 0) {
      ++neg;
      l = 0;
    }
    const double s = std::sqrt(l / static_cast<double>(M));
    const double a = rng.normal(), b = rng.normal();
    y[k] = {s * a, s * b};
  }
  std::vector<std::complex<double>> x;
  fft.fwd(x, y);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = x[j].real();
  if (clipped) *clipped = neg;
  return out;
}

LagVector arcsine_acf(const LagVector& rho) { return (2.0 / std::numbers::pi) * rho.max(-1.0).min(1.0).asin(); }

Eigen::VectorXd levinson(const LagVector& r, int order) {
  if (order < 1 || order >= r.size()) throw Error(ErrorKind::DimensionMismatch, "predictor order out of range");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(order + 1), prev(order + 1);
  double e = r(0);
  for (int k = 1; k <= order; ++k) {
    double acc = r(k);
    for (int j = 1; j < k; ++j) acc -= a(j) * r(k - j);
    const double refl = acc / e;
    prev = a;
    for (int j = 1; j < k; ++j) a(j) = prev(j) - refl * prev(k - j);
    a(k) = refl;
    e *= 1.0 - refl * refl;
  }
  return a.tail(order);
}

std::vector<double> innovations(const std::vector<double>& x, const Eigen::VectorXd& a,
                                const std::vector<std::size_t>& day_bounds) {
  const Eigen::Index m = a.size();
  const Eigen::VectorXd arev = a.reverse();
  std::vector<double> out(x.size());
  std::vector<std::size_t> b = day_bounds;
  if (b.empty()) b = {0, x.size()};
  for (std::size_t d = 0; d + 1 < b.size(); ++d)
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      const Eigen::Index h = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(t - b[d]));
      double pred = 0;
      if (h > 0) pred = arev.tail(h).dot(Eigen::Map<const Eigen::VectorXd>(x.data() + t - h, h));
      out[t] = x[t] - pred;
    }
  return out;
}

GeneratedStream generate(const GeneratorConfig& cfg) {
  validate_config(cfg);
  GeneratedStream g;
  const std::size_t N = cfg.type_process == TypeProcess::Replay ? cfg.replay_types.size() : cfg.events;
  if (N == 0) {
    g.mid_ht = {2 * cfg.initial_mid_ticks};
    g.spread_ht = {2 * cfg.initial_spread_ticks};
    g.stream = EventStream(cfg.symbol, cfg.tick_size, {});
    return g;
  }
  Rng rng(cfg.seed);
  const TypeVector p = stationary_type_prob(cfg);

  std::vector<double> latent;
  if (cfg.sign_process == SignProcess::LongMemory) {
    const double d = 0.5 * (1.0 - cfg.gamma);
    const std::size_t m = std::bit_ceil(std::max<std::size_t>(N, 2));
    latent = gaussian_with_acf(farima_acf(d, static_cast<int>(m)), N, splitmix(cfg.seed), &g.clipped_eigenvalues);
  }
  double beta = 0;
  if (cfg.gap_process == GapProcess::SpreadReverting && cfg.alpha > 0) {
    double ppc = 0;
    for (EventType t : kPriceChanging) ppc += p(index_of(t));
    beta = cfg.alpha / ppc;
  }
  const bool book = cfg.gap_process == GapProcess::Book;

  std::vector<MarketEvent> events;
  events.reserve(N);
  std::vector<BehindGaps> behind;
  if (book) behind.reserve(N);
  g.mid_ht.reserve(N + 1);
  g.spread_ht.reserve(N + 1);

  std::int64_t bid = cfg.initial_mid_ticks - cfg.initial_spread_ticks / 2;
  std::int64_t ask = bid + cfg.initial_spread_ticks;
  std::int64_t mid_ht = bid + ask, spread_ht = 2 * (ask - bid);
  BehindGaps bg;
  if (book) bg = {static_cast<std::int32_t>(draw_level(cfg.book.behind_pmf, rng)),
                  static_cast<std::int32_t>(draw_level(cfg.book.behind_pmf, rng))};

  std::vector<std::int8_t> day_types, day_signs;
  int prev_type = -1;
  int prev_sign = 0;
  const int days = static_cast<int>(std::min<std::size_t>(cfg.days, N));
  std::size_t t = 0;
  for (int d = 0; d < days; ++d) {
    const std::size_t n_day = N / days + (static_cast<std::size_t>(d) < N % days ? 1 : 0);
    const std::int64_t step = session_step(n_day);
    day_types.clear();
    day_signs.clear();
    for (std::size_t i = 0; i < n_day; ++i, ++t) {
      TypeVector w;
      switch (cfg.type_process) {
        case TypeProcess::Iid: w = cfg.type_prob; break;
        case TypeProcess::Markov: w = prev_type < 0 ? p : TypeVector(cfg.transition.row(prev_type).transpose().array()); break;
        case TypeProcess::Replay: w.setZero(); w(index_of(cfg.replay_types[t])) = 1; break;
      }
      if (book && cfg.type_process != TypeProcess::Replay) {
        const std::int64_t S = ask - bid;
        w(index_of(EventType::LOp)) *= static_cast<double>(std::clamp<std::int64_t>(S - 1, 0, cfg.book.lop_cap));
      }
      int k = rng.discrete(w, kNumTypes);
      EventType type = type_at(k);

      int sign = 1;
      switch (cfg.sign_process) {
        case SignProcess::Iid: sign = rng.sign(cfg.buy_prob); break;
        case SignProcess::LongMemory: {
          const int side = latent[t] > 0 ? 1 : -1;
          sign = is_limit_order(type) ? -side : side;
          break;
        }
        case SignProcess::Conditional:
          sign = prev_sign == 0 ? rng.sign(0.5) : (rng.bernoulli(cfg.same_sign_prob(k)) ? prev_sign : -prev_sign);
          break;
      }

      std::int64_t gap = 0;
      if (book) {
        behind.push_back(bg);
        const std::int64_t S = ask - bid;
        if (type == EventType::MOp || type == EventType::CAp) {
          const std::int64_t lvl = sign > 0 ? bg.ask_ticks : bg.bid_ticks;
          const double widest = static_cast<double>(cfg.book.behind_pmf.size());
          if (cfg.book.selection > 0 &&
              !rng.bernoulli(std::min(1.0, std::pow(static_cast<double>(lvl) / widest, cfg.book.selection)))) {
            type = type == EventType::MOp ? EventType::MO0 : EventType::CA0;
            ++g.demoted;
          } else {
            gap = lvl;
            const auto fresh = static_cast<std::int32_t>(draw_level(cfg.book.behind_pmf, rng));
            if (sign > 0) {
              ask += lvl;
              bg.ask_ticks = fresh;
            } else {
              bid -= lvl;
              bg.bid_ticks = fresh;
            }
          }
        } else if (type == EventType::LOp) {
          const std::int64_t j = draw_level(cfg.book.improve_pmf, rng, static_cast<std::size_t>(S - 1));
          gap = j;
          if (sign > 0) {
            bid += j;
            bg.bid_ticks = static_cast<std::int32_t>(j);
          } else {
            ask -= j;
            bg.ask_ticks = static_cast<std::int32_t>(j);
          }
        }
        if (cfg.book.refresh > 0 && rng.bernoulli(cfg.book.refresh)) {
          const auto fresh = static_cast<std::int32_t>(draw_level(cfg.book.behind_pmf, rng));
          (rng.bernoulli(0.5) ? bg.bid_ticks : bg.ask_ticks) = fresh;
        }
      } else if (is_price_changing(type)) {
        switch (cfg.gap_process) {
          case GapProcess::Constant: gap = draw_level(cfg.gap_pmf[k], rng); break;
          case GapProcess::SpreadReverting: {
            const double dev = 0.5 * static_cast<double>(spread_ht) - cfg.mean_spread_ticks;
            const double x = static_cast<double>(draw_level(cfg.gap_pmf[k], rng)) - spread_direction(type) * beta * dev;
            gap = stochastic_round(x, rng);
            break;
          }
          case GapProcess::Planted: {
            double delta = cfg.planted_delta_r(k) + sign * kernel_term(cfg.planted_kernel, k, day_types, day_signs);
            if (cfg.noise > 0) delta += cfg.noise * truncated_normal(rng);
            gap = stochastic_round(2.0 * delta, rng);
            break;
          }
          case GapProcess::Book: break;
        }
        if (gap < 1) {
          gap = 1;
          ++g.floored;
        }
      }

      MarketEvent e;
      e.timestamp_ns = static_cast<std::int64_t>(d) * kNanosPerDay + kSessionOpenNs + static_cast<std::int64_t>(i) * step;
      e.day = d;
      e.type = type;
      e.sign = static_cast<std::int8_t>(sign);
      e.gap_ht = gap;
      e.mid_before_ht = mid_ht;
      e.spread_before_ht = spread_ht;
      g.mid_ht.push_back(mid_ht);
      g.spread_ht.push_back(spread_ht);
      if (book) {
        mid_ht = bid + ask;
        spread_ht = 2 * (ask - bid);
      } else {
        mid_ht += sign * gap;
        spread_ht += 2 * spread_direction(type) * gap;
      }
      events.push_back(e);
      day_types.push_back(static_cast<std::int8_t>(index_of(type)));
      day_signs.push_back(static_cast<std::int8_t>(sign));
      prev_type = index_of(type);
      prev_sign = sign;
    }
  }
  g.mid_ht.push_back(mid_ht);
  g.spread_ht.push_back(spread_ht);
  g.stream = EventStream(cfg.symbol, cfg.tick_size, std::move(events), {}, std::move(behind));
  return g;
}

GeneratedStream replay_with_model(const EventStream& s, const RealizedGaps& gaps, const GapKernelSet& kernels,
                                  std::uint64_t seed, double noise) {
  GeneratedStream g;
  if (s.empty()) {
    g.stream = EventStream(s.symbol(), s.tick_size(), {}, s.session_trim());
    return g;
  }
  if (!(noise >= 0)) invalid("noise must be non-negative");
  Rng rng(seed);
  const PairCurves k = per_event_kernel(kernels);
  std::vector<MarketEvent> events(s.events().begin(), s.events().end());
  std::vector<std::int8_t> day_types, day_signs;
  const auto& b = s.day_boundaries();
  std::int64_t mid = 0, spread = 0;
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    day_types.clear();
    day_signs.clear();
    mid = events[b[d]].mid_before_ht;
    spread = events[b[d]].spread_before_ht;
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      MarketEvent& e = events[t];
      const int ty = index_of(e.type);
      e.gap_ht = 0;
      if (is_price_changing(e.type)) {
        double delta = gaps.delta_r(ty) + e.sign * kernel_term(k, ty, day_types, day_signs);
        if (noise > 0) delta += noise * truncated_normal(rng);
        e.gap_ht = stochastic_round(2.0 * delta, rng);
        if (e.gap_ht < 1) {
          e.gap_ht = 1;
          ++g.floored;
        }
      }
      e.mid_before_ht = mid;
      e.spread_before_ht = spread;
      g.mid_ht.push_back(mid);
      g.spread_ht.push_back(spread);
      mid = e.mid_after_ht();
      spread = e.spread_after_ht();
      day_types.push_back(static_cast<std::int8_t>(ty));
      day_signs.push_back(e.sign);
    }
  }
  g.mid_ht.push_back(mid);
  g.spread_ht.push_back(spread);
  g.stream = EventStream(s.symbol(), s.tick_size(), std::move(events), s.session_trim(), s.behind_gaps());
  return g;
}

std::vector<double> final_model_moves(const EventStream& s, const GapKernelSet& kernels, const TypeVector& delta_r) {
  const PairCurves k = per_event_kernel(kernels);
  std::vector<double> r(s.size(), 0.0);
  std::vector<std::int8_t> day_types, day_signs;
  const auto& b = s.day_boundaries();
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    day_types.clear();
    day_signs.clear();
    for (std::size_t t = b[d]; t < b[d + 1]; ++t) {
      const MarketEvent& e = s[t];
      const int ty = index_of(e.type);
      if (is_price_changing(e.type)) r[t] = delta_r(ty) * e.sign + kernel_term(k, ty, day_types, day_signs);
      day_types.push_back(static_cast<std::int8_t>(ty));
      day_signs.push_back(e.sign);
    }
  }
  return r;
}

LagVector diffusion_from_moves(const std::vector<double>& moves, const std::vector<std::size_t>& day_bounds, int lmax) {
  std::vector<std::size_t> b = day_bounds;
  if (b.empty()) b = {0, moves.size()};
  std::vector<double> cum(moves.size() + 1, 0.0);
  LagVector D = LagVector::Zero(lmax + 1);
  std::vector<double> cnt(lmax + 1, 0.0);
  for (std::size_t d = 0; d + 1 < b.size(); ++d) {
    const std::size_t b0 = b[d], b1 = b[d + 1];
    cum[b0] = 0;
    for (std::size_t t = b0; t < b1; ++t) cum[t + 1] = cum[t] + moves[t];
    for (int l = 1; l <= lmax; ++l) {
      double acc = 0;
      std::size_t n = 0;
      for (std::size_t t = b0; t + l <= b1; ++t, ++n) {
        const double x = cum[t + l] - cum[t];
        acc += x * x;
      }
      D(l) += acc;
      cnt[l] += static_cast<double>(n);
    }
  }
  for (int l = 1; l <= lmax; ++l) D(l) = cnt[l] > 0 ? D(l) / cnt[l] : std::numeric_limits<double>::quiet_NaN();
  return D;
}

RawFeed synthetic_feed(const FeedConfig& cfg) {
  if (cfg.updates_per_day == 0 || cfg.days < 1 || !(cfg.tick_size > 0)) invalid("bad feed configuration");
  constexpr std::int64_t ms = 1'000'000;
  const std::int64_t span = kSessionCloseNs - kSessionOpenNs - 2000 * ms;
  const std::int64_t step = span / static_cast<std::int64_t>(cfg.updates_per_day);
  if (step < 10 * ms) invalid("too many updates per day for the quote spacing");
  Rng rng(cfg.seed);
  RawFeed f;
  const double tick = cfg.tick_size;
  struct Side {
    std::int64_t px, sz;
  };
  Side bid{cfg.initial_bid_ticks, 5}, ask{cfg.initial_bid_ticks + 2, 5};
  auto record = [&](std::int64_t ts) {
    f.bbo.push_back({ts, static_cast<double>(bid.px) * tick, static_cast<double>(ask.px) * tick, bid.sz * 100,
                     ask.sz * 100});
  };
  auto truth = [&](std::int64_t ts, int day, EventType type, int sign, std::int64_t gap, std::int64_t mid,
                   std::int64_t spread, std::int64_t vol) {
    MarketEvent e;
    e.timestamp_ns = ts;
    e.day = day;
    e.type = type;
    e.sign = static_cast<std::int8_t>(sign);
    e.gap_ht = gap;
    e.mid_before_ht = mid;
    e.spread_before_ht = spread;
    e.volume = vol;
    f.truth.push_back(e);
  };
  const std::vector<double> recede = {0.7, 0.3};
  // LO0 CA0 MO0 MOp CAp LOp two-sided crossed unmatched
  const std::array<double, 9> w = {0.25, 0.2, 0.12, 0.06, 0.06, 0.12, 0.08, 0.01, 0.01};
  for (int d = 0; d < cfg.days; ++d) {
    const std::int64_t base = static_cast<std::int64_t>(d) * kNanosPerDay;
    record(base + kSessionOpenNs - 1000 * ms);  // opening book, before the session
    for (std::size_t u = 0; u < cfg.updates_per_day; ++u) {
      const std::int64_t ts = base + kSessionOpenNs + 1000 * ms + static_cast<std::int64_t>(u) * step +
                              static_cast<std::int64_t>(rng.below(2 * ms));
      const std::int64_t mid = bid.px + ask.px, spread = 2 * (ask.px - bid.px);
      int kind = rng.discrete(w, 9);
      const int side = rng.sign();
      Side& q = side > 0 ? ask : bid;
      if (kind == 1 && q.sz <= 1) kind = 0;
      if (kind == 2 && q.sz <= 1) kind = 0;
      if (kind == 5 && ask.px - bid.px < 2) kind = 0;
      switch (kind) {
        case 0: {
          const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(5));
          q.sz += k;
          record(ts);
          truth(ts, d, EventType::LO0, -side, 0, mid, spread, k * 100);
          break;
        }
        case 1: {
          const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(q.sz - 1)));
          q.sz -= k;
          record(ts);
          truth(ts, d, EventType::CA0, side, 0, mid, spread, k * 100);
          break;
        }
        case 2:
        case 3: {
          const bool full = kind == 3;
          const std::int64_t k =
              full ? q.sz : 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(q.sz - 1)));
          const int aggr = rng.bernoulli(0.3) ? 0 : side;
          const double px = static_cast<double>(q.px) * tick;
          std::int64_t t_quote = ts + ms / 5;
          if (k >= 2 && rng.bernoulli(0.3)) {
            const std::int64_t k1 = k / 2;
            f.trades.push_back({ts, px, k1 * 100, aggr});
            f.trades.push_back({ts + 2 * ms / 5, px, (k - k1) * 100, aggr});
            t_quote = ts + 3 * ms / 5;
          } else {
            f.trades.push_back({ts, px, k * 100, aggr});
          }
          std::int64_t gap = 0;
          if (full) {
            gap = draw_level(recede, rng);
            q.px += side * gap;
            q.sz = 1 + static_cast<std::int64_t>(rng.below(9));
          } else {
            q.sz -= k;
          }
          record(t_quote);
          truth(t_quote, d, full ? EventType::MOp : EventType::MO0, side, gap, mid, spread, k * 100);
          break;
        }
        case 4: {
          const std::int64_t gap = draw_level(recede, rng), vol = q.sz;
          q.px += side * gap;
          q.sz = 1 + static_cast<std::int64_t>(rng.below(9));
          record(ts);
          truth(ts, d, EventType::CAp, side, gap, mid, spread, vol * 100);
          break;
        }
        case 5: {
          const std::int64_t S = ask.px - bid.px;
          const std::int64_t j = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(S - 1)));
          q.px -= side * j;
          q.sz = 1 + static_cast<std::int64_t>(rng.below(9));
          record(ts);
          truth(ts, d, EventType::LOp, -side, j, mid, spread, q.sz * 100);
          break;
        }
        case 6: {
          // both sides add volume in one record; bid reported first
          const std::int64_t kb = 1 + static_cast<std::int64_t>(rng.below(3)), ka = 1 + static_cast<std::int64_t>(rng.below(3));
          bid.sz += kb;
          ask.sz += ka;
          record(ts);
          truth(ts, d, EventType::LO0, 1, 0, mid, spread, kb * 100);
          truth(ts, d, EventType::LO0, -1, 0, mid, spread, ka * 100);
          break;
        }
        case 7: {
          f.bbo.push_back({ts, static_cast<double>(ask.px + 1) * tick, static_cast<double>(ask.px) * tick, 100, 100});
          record(ts + ms);
          break;
        }
        case 8: {
          f.trades.push_back({ts, static_cast<double>(ask.px) * tick, 100, 1});
          break;
        }
      }
    }
    // closing print after the session
    f.trades.push_back({base + kSessionCloseNs + 60'000 * ms, static_cast<double>(ask.px) * tick, 100, 1});
  }
  return f;
}

}  // namespace lobimpact
