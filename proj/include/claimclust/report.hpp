#pragma once

// JSON views of the module results, as written by the CLI reports.

#include <json.hpp>

#include "claimclust/adapter.hpp"
#include "claimclust/analysis.hpp"
#include "claimclust/autotune.hpp"
#include "claimclust/corpus.hpp"
#include "claimclust/geometry.hpp"
#include "claimclust/metrics.hpp"

namespace claimclust {

using Json = nlohmann::ordered_json;

Json to_json(const CorpusCounts& counts);
Json to_json(const PairCounts& counts);
Json to_json(const PairDistanceStats& stats);
Json to_json(const TrainTrace& trace);
Json to_json(const TrainMeta& meta);
Json to_json(const SweepPoint& point);
Json to_json(const AutotuneResult& result);
Json to_json(const EvaluationReport& report);
// Counts only; the per-claim flags go to CSV.
Json to_json(const ErrorReport& report);
Json to_json(const LanguageErrorRates& rates);
Json to_json(const GainReport& report);
Json to_json(const SweepCurve& curve);

}  // namespace claimclust
