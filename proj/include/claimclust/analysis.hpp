#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "claimclust/corpus.hpp"
#include "claimclust/hac.hpp"
#include "claimclust/metrics.hpp"

namespace claimclust {

struct ErrorReport {
    Index split_count = 0;     // truth clusters (size >= 2) spanning >= 2 predicted clusters
    Index mismerge_count = 0;  // predicted clusters holding >= 2 truth clusters
    std::vector<bool> split_flags;
    std::vector<bool> mismerge_flags;
};

ErrorReport split_mismerge(const ClusterAssignment& truth, const ClusterAssignment& pred);

struct LanguageRate {
    double split_rate = 0.0;
    double mismerge_rate = 0.0;
    Index occurrences = 0;
};

// Keyed by language code; ordered for stable output.
using LanguageErrorRates = std::map<std::string, LanguageRate>;

LanguageErrorRates language_error_rates(const Corpus& corpus, const ErrorReport& report);

struct ClassMetrics {
    Index claims = 0;
    Index clusters = 0;
    double ari = 0.0;
    double ami = 0.0;
    double silhouette = kDegenerateSilhouette;
};

struct ClassGain {
    ClassMetrics base;
    ClassMetrics refined;
    double ari_gain = 0.0;
    double ami_gain = 0.0;
    double silhouette_gain = 0.0;
};

struct GainReport {
    std::optional<ClassGain> monolingual;   // absent when the class has < 2 claims
    std::optional<ClassGain> multilingual;
};

struct GainInputs {
    const EmbeddingMatrix& base_embeddings;
    const ClusterAssignment& base_pred;
    const EmbeddingMatrix& refined_embeddings;
    const ClusterAssignment& refined_pred;
};

// Ground-truth clusters are split by member-language count; each class is
// scored on its own claims with the predicted labels restricted to them.
GainReport lingual_gain(const Corpus& corpus, const ClusterAssignment& truth, const GainInputs& inputs,
                        Index sample_cap = kDefaultSilhouetteSampleCap, std::uint64_t seed = 0);

struct SweepSample {
    Index k = 0;
    double ari = 0.0;
    double ami = 0.0;
    double silhouette = kDegenerateSilhouette;
};

struct SweepCurve {
    std::vector<SweepSample> points;
    double auc_ari = 0.0;
    double auc_ami = 0.0;
    double auc_ss = 0.0;
    double max_ari = 0.0;
    double max_ami = 0.0;
};

// Trapezoid integral over k divided by the k-range width; a single point
// yields its own value.
double trapezoid_auc(std::span<const Index> ks, std::span<const double> values);

// `labeled`, when non-empty, lists the rows `truth` refers to; ARI/AMI are
// then computed on those rows only while the silhouette uses every row.
SweepCurve config_sweep(const EmbeddingMatrix& matrix, const Dendrogram& dendrogram, const ClusterAssignment& truth,
                        Index k_true, double band = 0.10, Index k_step = 1,
                        Index sample_cap = kDefaultSilhouetteSampleCap, std::uint64_t seed = 0,
                        std::span<const Index> labeled = {});

void write_language_rates_csv(const LanguageErrorRates& rates, const std::filesystem::path& path);
void write_sweep_csv(const SweepCurve& curve, const std::filesystem::path& path);
void write_error_flags_csv(std::span<const std::string> ids, const ErrorReport& report,
                           const std::filesystem::path& path);

}  // namespace claimclust
