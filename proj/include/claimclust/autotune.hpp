#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <optional>
#include <vector>

#include "claimclust/corpus.hpp"
#include "claimclust/hac.hpp"
#include "claimclust/metrics.hpp"

namespace claimclust {

struct SweepPoint {
    double threshold = 0.0;
    Index k = 0;
    double silhouette = kDegenerateSilhouette;
    bool degenerate = true;
};

struct AutotuneParams {
    double grid_lo = 0.5;
    double grid_hi = 1.5;
    double step = 0.05;
    int refine_count = 10;
    Index sample_cap = kDefaultSilhouetteSampleCap;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<double> grid() const;
};

struct AutotuneResult {
    double best_threshold = 0.0;
    double best_silhouette = kDegenerateSilhouette;
    Index best_k = 0;
    std::vector<SweepPoint> grid;
    std::vector<SweepPoint> refinement;
};

// Silhouette-maximizing cut: sweep the threshold grid, then score the cuts
// between consecutive distinct merge heights in a window of `refine_count`
// heights on each side of the grid optimum. Ties go to the smaller threshold.
AutotuneResult select_threshold(const EmbeddingMatrix& matrix, const Dendrogram& dendrogram,
                                const AutotuneParams& params);

// Same search with a prebuilt evaluator (reused across calls on one matrix).
AutotuneResult select_threshold(const SilhouetteEvaluator& evaluator, const Dendrogram& dendrogram,
                                const AutotuneParams& params);

struct SubsetAverageResult {
    double mean_threshold = 0.0;
    std::vector<AutotuneResult> runs;
    std::vector<std::vector<Index>> memberships;  // sorted row positions per subset
};

// Averages the selected threshold over `subsets` random subsets of
// `subset_size` rows, each clustered from scratch. When n <= subset_size the
// full set is used once.
SubsetAverageResult subset_average_threshold(const EmbeddingMatrix& matrix, Index subset_size, int subsets,
                                             const AutotuneParams& params, const WardOptions& ward = {});

// Columns: threshold, k, silhouette.
void write_sweep_points_csv(std::span<const SweepPoint> points, const std::filesystem::path& path);

}  // namespace claimclust
