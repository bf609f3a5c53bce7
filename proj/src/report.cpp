#include "lobimpact/report.hpp"

#include <cmath>
#include <fstream>

namespace lobimpact {

namespace {

Json vec(const auto& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = static_cast<double>(v(i));
    a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  }
  return a;
}

Json lags(int L) {
  Json a = Json::array();
  for (int l = 0; l <= L; ++l) a.push_back(l);
  return a;
}

Json by_type(const TypeVector& v) {
  Json o = Json::object();
  for (int k = 0; k < kNumTypes; ++k) o[std::string(type_name(type_at(k)))] = std::isfinite(v(k)) ? Json(v(k)) : Json(nullptr);
  return o;
}

Json type_curves(const TypeCurves& c, bool price_changing_only = false) {
  Json o = Json::object();
  for (int k = 0; k < kNumTypes; ++k) {
    if (price_changing_only && !is_price_changing(type_at(k))) continue;
    o[std::string(type_name(type_at(k)))] = vec(c.row(k));
  }
  return o;
}

Json pair_curves(const PairCurves& c, bool price_changing_targets = false) {
  Json o = Json::object();
  for (int a = 0; a < kNumTypes; ++a)
    for (int b = 0; b < kNumTypes; ++b) {
      if (price_changing_targets && !is_price_changing(type_at(b))) continue;
      o[pair_name(a, b)] = vec(c.row(pair_index(a, b)));
    }
  return o;
}

}  // namespace

std::string dump(const Json& j) { return j.dump(1) + "\n"; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::SchemaError, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::SchemaError, "write failed for " + path);
}

Json meta_json(const RunMeta& m) {
  return Json{{"command", m.command}, {"threads", m.threads}, {"seed", m.seed}};
}

Json ingest_json(const IngestReport& r) {
  auto counts = [](const DayCounts& c) {
    Json d = Json::object();
    for (int i = 0; i < static_cast<int>(DiscardReason::kCount); ++i)
      d[discard_name(static_cast<DiscardReason>(i))] = c.discards[i];
    return Json{{"quote_changes", c.quote_changes}, {"trades", c.trades}, {"events", c.events},
                {"discards", d}, {"conserved", c.conserved()}};
  };
  Json days = Json::object();
  for (const auto& [day, c] : r.per_day) days[std::to_string(day)] = counts(c);
  return Json{{"total", counts(r.total())}, {"per_day", days}};
}

Json stats_json(const CorrelationSet& corr, const ResponseSet& resp, const TypeCurves& rs, const RunMeta& m) {
  Json j;
  j["units"] = Json{{"P", "probability"}, {"C", "dimensionless"}, {"PI", "dimensionless"}, {"R", "ticks"},
                    {"RS", "ticks"}, {"D", "ticks^2"}};
  j["meta"] = meta_json(m);
  j["n_events"] = corr.n_events;
  j["lags"] = lags(corr.max_lag);
  j["P"] = by_type(corr.P);
  j["C"] = pair_curves(corr.C);
  j["PI"] = pair_curves(corr.Pi);
  j["C_se"] = pair_curves(corr.C_se);
  j["PI_se"] = pair_curves(corr.Pi_se);
  j["R"] = type_curves(resp.R);
  j["R_se"] = type_curves(resp.R_se);
  j["RS"] = type_curves(rs.cols() ? rs : resp.RS);
  j["D"] = vec(resp.D);
  j["D_se"] = vec(resp.D_se);
  j["sign_autocorr"] = vec(corr.sign_autocorr);
  j["side_autocorr"] = vec(corr.side_autocorr);
  return j;
}

Json propagator_json(const PropagatorSet& g, const DiffusionPrediction* d, const RunMeta& m) {
  Json j;
  j["units"] = Json{{"G", "ticks"}, {"baselineG", "ticks"}, {"D", "ticks^2"}};
  j["meta"] = meta_json(m);
  j["lags"] = lags(g.max_lag);
  Json G = Json::object();
  for (int k = 0; k < kNumTypes; ++k)
    if (g.active[k]) G[std::string(type_name(type_at(k)))] = vec(g.G.row(k));
  j["G"] = G;
  j["baselineG"] = vec(g.baseline);
  j["residual"] = g.residual;
  j["lambda"] = g.lambda;
  j["reliable_lag"] = g.reliable_lag;
  j["tail"] = g.tail == TailClosure::Flat ? "flat" : "truncate";
  if (d) {
    j["D"] = vec(d->D);
    j["D_last_decile_share"] = d->last_decile_share;
    j["D_tail_estimate"] = d->tail_estimate;
  }
  return j;
}

Json gapmodel_json(const RealizedGaps& gaps, const GapKernelSet& k, const GapCurves& c, const RunMeta& m) {
  Json j;
  j["units"] = Json{{"deltaR", "ticks"}, {"K", "ticks"}, {"Ktilde", "ticks"}, {"kappa", "ticks"},
                    {"Gstar", "ticks"}, {"dGstar", "ticks"}, {"Ghat", "ticks"}, {"Dclosure", "ticks^2"},
                    {"D0", "ticks^2"}};
  j["meta"] = meta_json(m);
  j["kernel_convention"] = "kappa = K - Ktilde; per-event gap kernel = kappa / P(target)";
  j["deltaR"] = by_type(gaps.delta_r);
  j["deltaR_doubled"] = by_type(2.0 * gaps.delta_r);
  j["K"] = pair_curves(k.K, true);
  j["Ktilde"] = pair_curves(k.Ktilde, true);
  j["kappa"] = pair_curves(k.kappa, true);
  j["kappa_se"] = pair_curves(k.kappa_se, true);
  j["lambda"] = k.lambda;
  j["identity_error"] = k.identity_error;
  j["Gstar"] = type_curves(c.impact.Gstar);
  j["dGstar"] = type_curves(c.impact.dGstar);
  j["Ghat"] = type_curves(c.impact.Ghat);
  j["Dclosure"] = vec(c.closure);
  j["D0"] = c.d0;
  return j;
}

Json spread_json(const SpreadModel& model, const TypeCurves& rs_pred, const SpreadAcf& acf, const RunMeta& m,
                 const AlphaFit* fit) {
  Json j;
  j["units"] = Json{{"meanS", "ticks"}, {"RS_pred", "ticks"}, {"spread_acf", "dimensionless"},
                    {"dbarR", "ticks (doubled signed gap)"}};
  j["meta"] = meta_json(m);
  j["pi_tail_adjustment"] = "multiplicative rescaling of (PI + 1) beyond L/2";
  j["alpha"] = model.alpha;
  j["meanS"] = model.mean_spread;
  j["meanS_by_type"] = by_type(model.mean_spread_by_type);
  j["dbarR"] = by_type(model.dbar_r);
  j["RS_pred"] = type_curves(rs_pred);
  j["spread_acf"] = vec(acf.acf);
  j["spread_acf_rate"] = acf.rate;
  j["spread_acf_r2"] = acf.fit_r2;
  j["near_unit_root"] = acf.near_unit_root;
  if (fit) {
    j["alpha_fit"] = fit->alpha;
    j["alpha_fit_error"] = fit->error;
  }
  return j;
}

Json error_json(const std::exception& e) {
  if (const auto* le = dynamic_cast<const Error*>(&e))
    return Json{{"error", kind_name(le->kind())}, {"message", le->detail()}};
  return Json{{"error", "Error"}, {"message", e.what()}};
}

namespace {
std::string num(double x) {
  if (!std::isfinite(x)) return "";
  Json j = x;
  return j.dump();
}
}  // namespace

void write_stats_csv(std::ostream& out, const CorrelationSet& corr, const ResponseSet& resp) {
  out << "quantity,pi1,pi2,lag,value,stderr,count,units\n";
  for (int k = 0; k < kNumTypes; ++k)
    out << "P," << type_name(type_at(k)) << ",,0," << num(corr.P(k)) << ",,"
        << static_cast<std::int64_t>(std::llround(corr.P(k) * static_cast<double>(corr.n_events))) << ",probability\n";
  for (const char* q : {"C", "PI"}) {
    const bool isC = q[0] == 'C';
    for (int a = 0; a < kNumTypes; ++a)
      for (int b = 0; b < kNumTypes; ++b) {
        const int pr = pair_index(a, b);
        for (int l = 0; l <= corr.max_lag; ++l)
          out << q << ',' << type_name(type_at(a)) << ',' << type_name(type_at(b)) << ',' << l << ','
              << num(isC ? corr.C(pr, l) : corr.Pi(pr, l)) << ',' << num(isC ? corr.C_se(pr, l) : corr.Pi_se(pr, l))
              << ',' << corr.counts(pr, l) << ",dimensionless\n";
      }
  }
  for (const char* q : {"R", "RS"}) {
    const bool isR = q[1] == '\0';
    for (int a = 0; a < kNumTypes; ++a)
      for (int l = 0; l <= resp.max_lag; ++l)
        out << q << ',' << type_name(type_at(a)) << ",," << l << ',' << num(isR ? resp.R(a, l) : resp.RS(a, l)) << ','
            << num(isR ? resp.R_se(a, l) : resp.RS_se(a, l)) << ',' << resp.R_count(a, l) << ",ticks\n";
  }
  for (int l = 0; l <= resp.max_lag; ++l)
    out << "D,,," << l << ',' << num(resp.D(l)) << ',' << num(resp.D_se(l)) << ",," << "ticks^2\n";
}

void write_curves_csv(std::ostream& out, const std::string& quantity, const TypeCurves& curves, const std::string& units) {
  for (int k = 0; k < curves.rows(); ++k)
    for (Eigen::Index l = 0; l < curves.cols(); ++l)
      out << quantity << ',' << type_name(type_at(k)) << ',' << l << ',' << num(curves(k, l)) << ',' << units << "\n";
}

void write_lag_csv(std::ostream& out, const std::string& quantity, const LagVector& v, const std::string& units) {
  for (Eigen::Index l = 0; l < v.size(); ++l) out << quantity << ",," << l << ',' << num(v(l)) << ',' << units << "\n";
}

}  // namespace lobimpact
