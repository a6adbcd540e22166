#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "claimclust/corpus.hpp"
#include "claimclust/hac.hpp"
#include "claimclust/types.hpp"

namespace claimclust {

// Sparse co-membership counts between a reference labeling (rows) and a
// predicted labeling (columns).
struct ContingencyTable {
    struct Cell {
        Index row;
        Index col;
        Index count;
    };

    Index n = 0;
    std::vector<Index> row_sums;  // a_i
    std::vector<Index> col_sums;  // b_j
    std::vector<Cell> cells;      // nonzero n_ij, sorted by (row, col)

    static ContingencyTable build(const ClusterAssignment& truth, const ClusterAssignment& pred);
};

double ari(const ClusterAssignment& truth, const ClusterAssignment& pred);
double ami(const ClusterAssignment& truth, const ClusterAssignment& pred);

// Natural-log entropy of a labeling.
double entropy(const ClusterAssignment& labels);
double mutual_information(const ContingencyTable& table);
// Expected mutual information under the fixed-marginals hypergeometric model.
double expected_mutual_information(const ContingencyTable& table);

struct HomogeneityCompleteness {
    double homogeneity = 1.0;
    double completeness = 1.0;
    double v_measure = 1.0;
};

HomogeneityCompleteness homogeneity_completeness_v(const ClusterAssignment& truth, const ClusterAssignment& pred);

inline constexpr Index kDefaultSilhouetteSampleCap = 5000;
inline constexpr double kDegenerateSilhouette = -1.0;

// Per-point silhouette terms for the scored points (all points, or a sample).
struct SilhouetteDetail {
    std::vector<Index> points;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> s;
    double mean = kDegenerateSilhouette;
    bool degenerate = true;
};

// Cosine-distance silhouette with an optional uniform sample of scored
// points (each scored against the full set). Distances from the scored
// points are cached when they fit under `cache_cap_bytes`, so many cuts of
// one matrix can be scored cheaply.
class SilhouetteEvaluator {
  public:
    SilhouetteEvaluator(const EmbeddingMatrix& matrix, Index sample_cap = kDefaultSilhouetteSampleCap,
                        std::uint64_t seed = 0, std::size_t cache_cap_bytes = std::size_t{1} << 30);

    // Mean silhouette, or -1 for k = 1 / k = n.
    double score(const ClusterAssignment& assignment) const;
    SilhouetteDetail detail(const ClusterAssignment& assignment) const;

    std::span<const Index> scored_points() const { return sample_; }
    Index size() const { return rows_.rows(); }

  private:
    void distances_from(std::size_t sample_slot, std::vector<double>& out) const;

    MatrixD rows_;
    VectorD norms_;
    std::vector<Index> sample_;
    std::vector<double> cache_;  // sample_.size() x n when populated
};

std::pair<double, SilhouetteDetail> silhouette(const EmbeddingMatrix& matrix, const ClusterAssignment& assignment,
                                               Index sample_cap = kDefaultSilhouetteSampleCap, std::uint64_t seed = 0);

void write_silhouette_csv(std::span<const std::string> ids, const SilhouetteDetail& detail,
                          const std::filesystem::path& path);

struct EvaluationReport {
    double ari = 0.0;
    double ami = 0.0;
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    double silhouette = kDegenerateSilhouette;
    bool silhouette_degenerate = true;
    Index k_pred = 0;
    Index k_true = 0;
};

EvaluationReport evaluate(const ClusterAssignment& truth, const ClusterAssignment& pred, double silhouette_score,
                          bool silhouette_degenerate);

}  // namespace claimclust
