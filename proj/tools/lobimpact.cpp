#include "lobimpact/gapmodel.hpp"
#include "lobimpact/ingest.hpp"
#include "lobimpact/propagator.hpp"
#include "lobimpact/report.hpp"
#include "lobimpact/selftest.hpp"
#include "lobimpact/sim.hpp"
#include "lobimpact/spread.hpp"
#include "lobimpact/stats.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace lobimpact;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string in, out, bbo, trades, config, symbol = "SYM", trim, csv, tail = "flat";
  double tick_size = 0.01;
  int max_lag = 1000;
  int kernel_lag = 100;
  int bootstrap = 100;
  std::optional<double> lambda, alpha;
  double d0 = 0.04;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool no_repeat = false;
  std::string command;
};

int thread_count(const Options& o) {
  return o.threads > 0 ? o.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

RunMeta meta(const Options& o, std::uint64_t seed) { return RunMeta{thread_count(o), seed, o.command}; }

SessionTrim parse_trim(const std::string& text, SessionTrim fallback) {
  if (text.empty()) return fallback;
  SessionTrim t;
  char comma = 0;
  std::istringstream is(text);
  if (!(is >> t.start_minutes >> comma >> t.end_minutes) || comma != ',' || t.start_minutes < 0 || t.end_minutes < 0)
    throw Error(ErrorKind::ConfigInvalid, "--trim expects two non-negative minute counts as START,END");
  return t;
}

EventStream load_events(const Options& o) {
  if (o.in.empty()) throw Error(ErrorKind::ConfigInvalid, "--in is required");
  return load_event_csv(o.in, o.symbol, o.tick_size);
}

// Writes to --out, or stdout when it is empty.
void emit(const Options& o, const Json& j) {
  if (o.out.empty() || o.out == "-") std::cout << dump(j);
  else write_file(o.out, dump(j));
}

StatsConfig stats_config(const Options& o) {
  StatsConfig sc;
  sc.max_lag = o.max_lag;
  sc.bootstrap = o.bootstrap;
  sc.threads = thread_count(o);
  if (o.seed) sc.seed = *o.seed;
  return sc;
}

PropagatorOptions propagator_options(const Options& o) {
  PropagatorOptions po;
  if (o.tail == "truncate") po.tail = TailClosure::Truncate;
  else if (o.tail != "flat") throw Error(ErrorKind::ConfigInvalid, "--tail must be flat or truncate");
  return po;
}

KernelOptions kernel_options(const Options& o) {
  KernelOptions ko;
  ko.kernel_lag = o.kernel_lag;
  ko.lambda = o.lambda.value_or(-1);
  ko.bootstrap = o.bootstrap;
  ko.threads = thread_count(o);
  if (o.seed) ko.seed = *o.seed;
  return ko;
}

// Everything the gap-model commands need, from the trimmed stream.
struct GapRun {
  StreamStats st;
  RealizedGaps gaps;
  GapKernelSet kernels;
};

GapRun run_gaps(const Options& o, const EventStream& all) {
  const EventStream s = trim_session(all, parse_trim(o.trim, {30, 40}));
  StatsConfig sc = stats_config(o);
  sc.max_lag = std::max(o.max_lag, o.kernel_lag);
  GapRun r{estimate_all(s, sc), realized_gaps(s), {}};
  r.kernels = calibrate_kernels(s, r.st.corr, kernel_options(o));
  return r;
}

Json closure_json(const Options& o, const GapRun& r, const LagVector& closure) {
  const LagVector constant = predict_diffusion_constant(r.gaps, r.st.corr, o.max_lag);
  Json j;
  j["units"] = Json{{"D_empirical", "ticks^2"}, {"D_constant", "ticks^2"}, {"D_closure", "ticks^2"}, {"D0", "ticks^2"}};
  j["meta"] = meta_json(meta(o, kernel_options(o).seed));
  auto vec = [](const LagVector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? Json(v(i)) : Json(nullptr));
    return a;
  };
  Json lags = Json::array();
  for (int l = 0; l <= o.max_lag; ++l) lags.push_back(l);
  j["lags"] = lags;
  j["D_empirical"] = vec(r.st.resp.D.head(o.max_lag + 1));
  j["D_constant"] = vec(constant);
  j["D_closure"] = vec(closure);
  j["D0"] = o.d0;
  return j;
}

struct SpreadRun {
  SpreadModel model;
  TypeCurves predicted;
  SpreadAcf acf;
  std::optional<AlphaFit> fit;
  TypeCurves empirical;
};

SpreadRun run_spread(const Options& o, const EventStream& all) {
  const EventStream s = trim_session(all, parse_trim(o.trim, {30, 40}));
  const StreamStats st = estimate_all(s, stats_config(o));
  const CorrelationSet corr = adjust_pi_tails(st.corr);
  SpreadRun r;
  r.model = spread_model(s, o.alpha.value_or(0.0));
  if (!o.alpha) {
    r.fit = fit_alpha(r.model, corr, st.resp.RS, std::min(o.max_lag, 100));
    r.model.alpha = r.fit->alpha;
  }
  r.predicted = predict_spread_response(r.model, corr, o.max_lag);
  r.acf = spread_autocorrelation(s, o.max_lag);
  r.empirical = st.resp.RS;
  return r;
}

void write_text(const fs::path& p, const std::string& text) { write_file(p.string(), text); }

int cmd_ingest(const Options& o) {
  if (o.bbo.empty() || o.trades.empty() || o.out.empty())
    throw Error(ErrorKind::ConfigInvalid, "ingest needs --bbo, --trades and --out");
  IngestConfig ic;
  ic.symbol = o.symbol;
  ic.tick_size = o.tick_size;
  const ClassifiedStream cs = classify(load_bbo_csv(o.bbo), load_trades_csv(o.trades), ic);
  write_event_csv(cs.stream, o.out);
  Json j = ingest_json(cs.report);
  j["units"] = "counts";
  j["meta"] = meta_json(meta(o, 0));
  if (o.csv.empty()) std::cout << dump(j);
  else write_file(o.csv, dump(j));
  return 0;
}

int cmd_stats(const Options& o) {
  const EventStream s = trim_session(load_events(o), parse_trim(o.trim, {0, 0}));
  const StatsConfig sc = stats_config(o);
  const StreamStats st = estimate_all(s, sc);
  emit(o, stats_json(st.corr, st.resp, {}, meta(o, sc.seed)));
  if (!o.csv.empty()) {
    std::ostringstream os;
    write_stats_csv(os, st.corr, st.resp);
    write_file(o.csv, os.str());
  }
  return 0;
}

Json propagate_json(const Options& o, const EventStream& s, const StreamStats& st) {
  PropagatorSet g = solve_multi_event(st.corr, st.resp, o.lambda.value_or(-1), propagator_options(o));
  const FlowSeries flow = market_order_flow(s, o.max_lag);
  g.baseline = solve_single_event(flow.R, flow.C, o.lambda.value_or(-1), propagator_options(o));
  const DiffusionPrediction d = predict_diffusion_temporary(g, st.corr, o.max_lag);
  return propagator_json(g, &d, meta(o, stats_config(o).seed));
}

int cmd_propagate(const Options& o) {
  const EventStream s = trim_session(load_events(o), parse_trim(o.trim, {0, 0}));
  const StreamStats st = estimate_all(s, stats_config(o));
  emit(o, propagate_json(o, s, st));
  return 0;
}

int cmd_gaps(const Options& o) {
  const GapRun r = run_gaps(o, load_events(o));
  GapCurves c{decompose_impact(r.gaps, r.kernels, o.max_lag),
              predict_diffusion_closure(r.gaps, r.kernels, r.st.corr, o.max_lag, o.d0), o.d0};
  emit(o, gapmodel_json(r.gaps, r.kernels, c, meta(o, kernel_options(o).seed)));
  return 0;
}

int cmd_closure(const Options& o) {
  const GapRun r = run_gaps(o, load_events(o));
  emit(o, closure_json(o, r, predict_diffusion_closure(r.gaps, r.kernels, r.st.corr, o.max_lag, o.d0)));
  return 0;
}

int cmd_spread(const Options& o) {
  const SpreadRun r = run_spread(o, load_events(o));
  Json j = spread_json(r.model, r.predicted, r.acf, meta(o, stats_config(o).seed), r.fit ? &*r.fit : nullptr);
  emit(o, j);
  return 0;
}

int cmd_simulate(const Options& o) {
  if (o.config.empty() || o.out.empty()) throw Error(ErrorKind::ConfigInvalid, "simulate needs --config and --out");
  GeneratorConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  write_event_csv(generate(cfg).stream, o.out);
  return 0;
}

// Curves for every figure family, as JSON and long CSV, in one directory.
int cmd_report(const Options& o) {
  if (o.out.empty()) throw Error(ErrorKind::ConfigInvalid, "report needs --out (a directory)");
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const EventStream all = load_events(o);
  const EventStream s = trim_session(all, parse_trim(o.trim, {0, 0}));
  const StatsConfig sc = stats_config(o);
  const StreamStats st = estimate_all(s, sc);

  write_text(dir / "stats.json", dump(stats_json(st.corr, st.resp, {}, meta(o, sc.seed))));
  std::ostringstream stats_csv;
  write_stats_csv(stats_csv, st.corr, st.resp);
  write_text(dir / "stats.csv", stats_csv.str());

  const Json pj = propagate_json(o, s, st);
  write_text(dir / "propagators.json", dump(pj));

  // Diffusion overlays: D(l)/l empirical and from each model.
  std::ostringstream dcsv;
  dcsv << "quantity,type,lag,value,units\n";
  LagVector over = LagVector::Zero(o.max_lag + 1);
  for (int l = 1; l <= o.max_lag; ++l) over(l) = st.resp.D(l) / l;
  write_lag_csv(dcsv, "D_over_lag_empirical", over, "ticks^2");
  const GapRun gr = run_gaps(o, all);
  const LagVector dk = predict_diffusion_constant(gr.gaps, gr.st.corr, o.max_lag);
  const LagVector dc = predict_diffusion_closure(gr.gaps, gr.kernels, gr.st.corr, o.max_lag, o.d0);
  for (int l = 1; l <= o.max_lag; ++l) over(l) = dk(l) / l;
  write_lag_csv(dcsv, "D_over_lag_constant_gap", over, "ticks^2");
  for (int l = 1; l <= o.max_lag; ++l) over(l) = dc(l) / l;
  write_lag_csv(dcsv, "D_over_lag_closure", over, "ticks^2");
  if (pj.contains("D")) {
    for (int l = 1; l <= o.max_lag; ++l) over(l) = pj["D"][l].is_number() ? pj["D"][l].get<double>() / l : NAN;
    write_lag_csv(dcsv, "D_over_lag_temporary", over, "ticks^2");
  }
  write_text(dir / "diffusion.csv", dcsv.str());

  const GapCurves c{decompose_impact(gr.gaps, gr.kernels, o.max_lag), dc, o.d0};
  write_text(dir / "gaps.json", dump(gapmodel_json(gr.gaps, gr.kernels, c, meta(o, kernel_options(o).seed))));
  write_text(dir / "closure.json", dump(closure_json(o, gr, dc)));
  std::ostringstream gcsv;
  gcsv << "quantity,type,lag,value,units\n";
  write_curves_csv(gcsv, "Gstar", c.impact.Gstar, "ticks");
  write_curves_csv(gcsv, "dGstar", c.impact.dGstar, "ticks");
  write_curves_csv(gcsv, "Ghat", c.impact.Ghat, "ticks");
  write_text(dir / "impact.csv", gcsv.str());

  const SpreadRun sr = run_spread(o, all);
  write_text(dir / "spread.json",
             dump(spread_json(sr.model, sr.predicted, sr.acf, meta(o, sc.seed), sr.fit ? &*sr.fit : nullptr)));
  std::ostringstream scsv;
  scsv << "quantity,type,lag,value,units\n";
  write_curves_csv(scsv, "RS_empirical", sr.empirical, "ticks");
  write_curves_csv(scsv, "RS_predicted", sr.predicted, "ticks");
  write_lag_csv(scsv, "spread_acf", sr.acf.acf, "dimensionless");
  write_text(dir / "spread.csv", scsv.str());
  return 0;
}

int cmd_selftest(const Options& o) {
  SelftestOptions so;
  so.out_dir = o.out.empty() ? "selftest_out" : o.out;
  so.threads = o.threads;
  so.repeat = !o.no_repeat;
  int failed = 0;
  run_selftest(so, [&](const CriterionResult& r) {
    std::printf("%s criterion %d: %s | %s (%.1f s)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    failed += !r.passed;
  });
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order-book event statistics, impact models and spread dynamics"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);
  Options o;
  for (int i = 0; i < argc; ++i) o.command += (i ? " " : "") + std::string(i ? argv[i] : "lobimpact");

  auto common = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "worker threads, 0 for all cores");
    c->add_option("--seed", o.seed, "bootstrap or generator seed");
  };
  auto input = [&](CLI::App* c) {
    c->add_option("--in", o.in, "event CSV")->required();
    c->add_option("--out", o.out, "output path (stdout when omitted)");
    c->add_option("--tick-size", o.tick_size, "price of one tick");
    c->add_option("--symbol", o.symbol, "symbol name");
    c->add_option("--max-lag", o.max_lag, "largest lag in events")->check(CLI::PositiveNumber);
    c->add_option("--trim", o.trim, "minutes cut from session start and end, START,END");
    c->add_option("--bootstrap", o.bootstrap, "bootstrap resamples, 0 disables")->check(CLI::NonNegativeNumber);
    common(c);
  };
  auto lambda = [&](CLI::App* c) { c->add_option("--lambda", o.lambda, "ridge parameter, negative for automatic"); };
  auto kernel = [&](CLI::App* c) {
    c->add_option("--kernel-lag", o.kernel_lag, "gap kernel length in events")->check(CLI::PositiveNumber);
    c->add_option("--d0", o.d0, "constant added to the closure diffusion, ticks^2");
  };

  auto* ingest = app.add_subcommand("ingest", "classify raw quotes and trades into events");
  ingest->add_option("--bbo", o.bbo, "best quote CSV")->required();
  ingest->add_option("--trades", o.trades, "trade CSV")->required();
  ingest->add_option("--out", o.out, "event CSV to write")->required();
  ingest->add_option("--report", o.csv, "ingest report JSON (stdout when omitted)");
  ingest->add_option("--tick-size", o.tick_size, "price of one tick");
  ingest->add_option("--symbol", o.symbol, "symbol name");
  common(ingest);

  auto* stats = app.add_subcommand("stats", "correlations, responses and diffusion");
  input(stats);
  stats->add_option("--csv", o.csv, "long-format CSV to write as well");

  auto* propagate = app.add_subcommand("propagate", "propagators of the temporary impact model");
  input(propagate);
  lambda(propagate);
  propagate->add_option("--tail", o.tail, "propagator continuation past max-lag: flat or truncate");

  auto* gaps = app.add_subcommand("gaps", "realized gaps, gap kernels and impact decomposition");
  input(gaps);
  lambda(gaps);
  kernel(gaps);

  auto* closure = app.add_subcommand("closure", "diffusion of the history-dependent gap model");
  input(closure);
  lambda(closure);
  kernel(closure);

  auto* spread = app.add_subcommand("spread", "spread responses, mean reversion and autocorrelation");
  input(spread);
  spread->add_option("--alpha", o.alpha, "mean-reversion strength; fitted when omitted")->check(CLI::Range(0.0, 1.0));

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic event stream");
  simulate->add_option("--config", o.config, "generator config file")->required();
  simulate->add_option("--out", o.out, "event CSV to write")->required();
  common(simulate);

  auto* report = app.add_subcommand("report", "all figure curves as JSON and CSV");
  input(report);
  lambda(report);
  kernel(report);
  report->add_option("--alpha", o.alpha, "mean-reversion strength; fitted when omitted")->check(CLI::Range(0.0, 1.0));
  report->add_option("--tail", o.tail, "propagator continuation past max-lag: flat or truncate");

  auto* selftest = app.add_subcommand("selftest", "run the acceptance checks");
  selftest->add_option("--out", o.out, "artifact directory");
  selftest->add_flag("--no-repeat", o.no_repeat, "skip the second run and the artifact comparison");
  common(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*stats) return cmd_stats(o);
    if (*propagate) return cmd_propagate(o);
    if (*gaps) return cmd_gaps(o);
    if (*closure) return cmd_closure(o);
    if (*spread) return cmd_spread(o);
    if (*simulate) return cmd_simulate(o);
    if (*report) return cmd_report(o);
    if (*selftest) return cmd_selftest(o);
  } catch (const std::exception& e) {
    std::cerr << error_json(e).dump() << "\n";
    return 2;
  }
  return 1;
}
