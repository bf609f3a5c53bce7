#pragma once

#include "lobimpact/gapmodel.hpp"
#include "lobimpact/ingest.hpp"
#include "lobimpact/propagator.hpp"
#include "lobimpact/spread.hpp"
#include "lobimpact/stats.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace lobimpact {

using Json = nlohmann::ordered_json;

struct RunMeta {
  int threads = 1;
  std::uint64_t seed = 0;
  std::string command;
};

Json meta_json(const RunMeta& m);
Json ingest_json(const IngestReport& r);
Json stats_json(const CorrelationSet& corr, const ResponseSet& resp, const TypeCurves& rs, const RunMeta& m);
Json propagator_json(const PropagatorSet& g, const DiffusionPrediction* d, const RunMeta& m);
struct GapCurves {
  ImpactDecomposition impact;
  LagVector closure;  // D(l) with the constant added
  double d0 = 0;
};
Json gapmodel_json(const RealizedGaps& gaps, const GapKernelSet& k, const GapCurves& c, const RunMeta& m);
Json spread_json(const SpreadModel& model, const TypeCurves& rs_pred, const SpreadAcf& acf, const RunMeta& m,
                 const AlphaFit* fit = nullptr);
Json error_json(const std::exception& e);

// Long format: quantity,pi1,pi2,lag,value,stderr,count,units
void write_stats_csv(std::ostream& out, const CorrelationSet& corr, const ResponseSet& resp);
// Long format: quantity,type,lag,value,units, for any named set of per-type curves.
void write_curves_csv(std::ostream& out, const std::string& quantity, const TypeCurves& curves, const std::string& units);
void write_lag_csv(std::ostream& out, const std::string& quantity, const LagVector& v, const std::string& units);

// Writes text to a file, throwing on failure.
void write_file(const std::string& path, const std::string& text);
std::string dump(const Json& j);

}  // namespace lobimpact
