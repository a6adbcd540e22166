#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "claimclust/corpus.hpp"
#include "claimclust/geometry.hpp"
#include "claimclust/types.hpp"

namespace claimclust {

// Node ids 0..n-1 are leaves; merge m creates node n + m.
struct Merge {
    Index left = 0;
    Index right = 0;
    double height = 0.0;
    Index size = 0;

    bool operator==(const Merge&) const = default;
};

struct Dendrogram {
    Index n = 0;
    std::vector<Merge> merges;

    // Children used once, sizes consistent, heights finite and non-decreasing.
    void validate() const;
};

// Labels 0..k-1 without gaps, numbered by first appearance.
struct ClusterAssignment {
    std::vector<Index> labels;
    Index k = 0;

    Index size() const { return static_cast<Index>(labels.size()); }

    // Canonicalizes arbitrary integer labels.
    static ClusterAssignment from_labels(std::span<const Index> raw);
    // Canonicalizes string labels (e.g. ground-truth cluster ids).
    static ClusterAssignment from_strings(std::span<const std::string> raw);

    ClusterAssignment restrict_to(std::span<const Index> positions) const;

    bool operator==(const ClusterAssignment&) const = default;
};

enum class WardBackend {
    kOnDemand,   // cluster centroids, O(n d) memory
    kCondensed,  // Lance-Williams over a condensed distance matrix, O(n^2) memory
};

struct WardOptions {
    WardBackend backend = WardBackend::kOnDemand;
    std::size_t memory_cap_bytes = kDefaultMemoryCapBytes;
};

// Ward linkage by nearest-neighbor chain on unit-normalized rows. Heights use
// the distance (square-root) convention: two singletons merge at their
// Euclidean distance.
Dendrogram build_dendrogram(const EmbeddingMatrix& matrix, const WardOptions& options = {});

// Connected components of all merges with height <= t.
ClusterAssignment cut_by_threshold(const Dendrogram& dendrogram, double t);

// Applies the first n - k merges.
ClusterAssignment cut_by_count(const Dendrogram& dendrogram, Index k);

void write_dendrogram_csv(const Dendrogram& dendrogram, const std::filesystem::path& path);
Dendrogram read_dendrogram_csv(const std::filesystem::path& path);

void write_assignment_csv(std::span<const std::string> ids, const ClusterAssignment& assignment,
                          const std::filesystem::path& path);
// Reads (claim_id, label) rows and aligns them to corpus order; every claim must be present.
ClusterAssignment read_assignment_csv(const std::filesystem::path& path, const Corpus& corpus);

// Ground-truth assignment of a fully labeled corpus.
ClusterAssignment ground_truth(const Corpus& corpus);

}  // namespace claimclust
