#pragma once

#include "lobimpact/events.hpp"
#include "lobimpact/gapmodel.hpp"
#include "lobimpact/ingest.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lobimpact {

enum class TypeProcess { Iid, Markov, Replay };
enum class SignProcess { Iid, LongMemory, Conditional };
enum class GapProcess { Constant, Planted, SpreadReverting, Book };

// Book model for the best quotes and the first level behind each of them.
// Lists are probabilities of 1, 2, 3, ... ticks.
struct BookConfig {
  std::vector<double> behind_pmf = {1.0};   // gap behind the best after a level is emptied
  std::vector<double> improve_pmf = {1.0};  // size of an in-spread improvement
  double selection = 0;  // a removal empties the level with probability (gap / widest gap)^selection
  double refresh = 0;    // per-event chance that one side's behind gap is redrawn
  int lop_cap = 4;       // LOp weight scales with min(spread - 1, lop_cap)
};

struct GeneratorConfig {
  std::string symbol = "SYN";
  double tick_size = 0.01;
  std::size_t events = 100000;
  int days = 10;
  std::uint64_t seed = 1;
  std::int64_t initial_mid_ticks = 10000;
  std::int64_t initial_spread_ticks = 2;

  TypeProcess type_process = TypeProcess::Iid;
  TypeVector type_prob = (TypeVector() << 0.30, 0.05, 0.20, 0.35, 0.05, 0.05).finished();
  Eigen::Matrix<double, kNumTypes, kNumTypes> transition = decltype(transition)::Constant(1.0 / kNumTypes);  // row: from
  std::vector<EventType> replay_types;

  SignProcess sign_process = SignProcess::Iid;
  double buy_prob = 0.5;
  double gamma = 0.7;  // side autocorrelation exponent for LongMemory
  TypeVector same_sign_prob = TypeVector::Constant(0.5);  // Conditional: P(eps_t = eps_{t-1} | type_t)

  GapProcess gap_process = GapProcess::Constant;
  // Per type, probabilities of a gap of 1, 2, 3, ... half-ticks (price-changing types only).
  std::array<std::vector<double>, kNumTypes> gap_pmf = {std::vector<double>{}, {1.0}, {}, {}, {1.0}, {1.0}};
  // Planted: per-event kernel (source, target) in ticks, 36 x (L_K + 1), column 0 unused,
  // mean gaps in ticks, and the scale of the truncated normal gap noise in ticks.
  PairCurves planted_kernel;
  TypeVector planted_delta_r = TypeVector::Zero();
  double noise = 0;
  // SpreadReverting: spread pulled toward mean_spread_ticks at rate alpha per event.
  double alpha = 0;
  double mean_spread_ticks = 80;
  BookConfig book;
};

// Throws ConfigInvalid.
void validate_config(const GeneratorConfig& cfg);

// Plain-text "key = value" lines, '#' comments. Vectors are whitespace separated.
GeneratorConfig parse_config(const std::string& text);
GeneratorConfig load_config(const std::string& path);

struct GeneratedStream {
  EventStream stream;
  // Simulator's own mid and spread before each event plus after the last, half-ticks.
  std::vector<std::int64_t> mid_ht, spread_ht;
  std::size_t floored = 0;  // gaps raised to the one half-tick minimum
  std::size_t demoted = 0;  // removals that left the level in place (book selection)
  std::size_t clipped_eigenvalues = 0;  // negative circulant eigenvalues set to 0 (long memory)
};

GeneratedStream generate(const GeneratorConfig& cfg);

// Stationary type probabilities of the configured type process.
TypeVector stationary_type_prob(const GeneratorConfig& cfg);

// Keeps types and signs, redraws the gaps of price-changing events from the
// final model (realized gap plus kernel term, optional noise, stochastic
// rounding to half-ticks), and rebuilds the price and spread paths.
GeneratedStream replay_with_model(const EventStream& s, const RealizedGaps& gaps, const GapKernelSet& kernels,
                                  std::uint64_t seed, double noise = 0);

// Real-valued price moves of the final model for the flows of s, ticks:
// r_t = I(price-changing) [dr(type_t) eps_t + sum_tau k(type_{t-tau}, type_t, tau) eps_{t-tau}].
std::vector<double> final_model_moves(const EventStream& s, const GapKernelSet& kernels, const TypeVector& delta_r);

// <(sum of moves over l events)^2> over same-day windows.
LagVector diffusion_from_moves(const std::vector<double>& moves, const std::vector<std::size_t>& day_bounds, int lmax);

// Raw best-quote and trade records from a simple book with queue sizes, and
// the events a correct classifier must produce from them. Besides the six
// event types the feed carries split trades, unknown aggressors, two-sided
// quote records, crossed records that revert, trades with no book effect and
// records outside the session.
struct FeedConfig {
  std::size_t updates_per_day = 10000;
  int days = 2;
  std::uint64_t seed = 3;
  double tick_size = 0.01;
  std::int64_t initial_bid_ticks = 10000;
};

struct RawFeed {
  std::vector<BboRecord> bbo;
  std::vector<TradeRecord> trades;
  std::vector<MarketEvent> truth;  // timestamps are those of the quote record
};

RawFeed synthetic_feed(const FeedConfig& cfg);

// Long-memory helpers.
// Autocorrelation of fractionally integrated noise with memory parameter d, lags 0..L.
LagVector farima_acf(double d, int L);
// Gaussian series with the given autocorrelation (circulant embedding).
std::vector<double> gaussian_with_acf(const LagVector& acf_full, std::size_t n, std::uint64_t seed,
                                      std::size_t* clipped = nullptr);
// Autocorrelation of sign(y) for a Gaussian y with autocorrelation rho.
LagVector arcsine_acf(const LagVector& rho);
// One-step linear predictor coefficients a_1..a_m from an autocorrelation (Levinson-Durbin).
Eigen::VectorXd levinson(const LagVector& acf, int order);
// x_t - sum_k a_k x_{t-k}, restarting the history at each day boundary.
std::vector<double> innovations(const std::vector<double>& x, const Eigen::VectorXd& a,
                                const std::vector<std::size_t>& day_bounds);

}  // namespace lobimpact
