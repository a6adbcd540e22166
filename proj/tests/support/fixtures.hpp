#pragma once

// Synthetic data shared by the tests, the acceptance binary and claimclust-synth.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "claimclust/corpus.hpp"
#include "claimclust/random.hpp"

namespace claimclust::fixtures {

// Uniform random d x d rotation (QR of a Gaussian matrix, sign-fixed).
MatrixD random_rotation(Index d, Rng& rng);

struct Blobs {
    EmbeddingMatrix matrix;  // unit rows, ids "p<i>"
    std::vector<Index> labels;
};

// `k` Gaussian blobs around random unit centers, `n` points dealt round-robin,
// per-coordinate noise `spread / sqrt(d)`, rows renormalized.
Blobs sphere_blobs(Index n, Index k, Index d, double spread, std::uint64_t seed);

struct TwoViewParams {
    Index d = 64;
    Index style_dims = 4;     // leading latent coordinates rotated per view
    double style_gain = 3.0;  // scale of those coordinates before rotation
    double anisotropy = 1.0;  // weight of the shared offset direction
    double topic_sigma = 1.0;
    double cluster_sigma = 0.6;
    double claim_sigma = 0.25;
    double multilingual_fraction = 0.5;
    Index topics = 80;
    Index clusters_per_topic = 5;
    Index claims_per_cluster = 5;
    double train_fraction = 0.5;  // leading topics whose clusters feed training
    std::uint64_t seed = 7;
};

// Two "languages" see shared latent cluster centers through different fixed
// rotations of a low-dimensional style subspace, behind a common random
// rotation and a shared anisotropic offset. Claims in train topics (group 1)
// yield every within-cluster similar pair plus one random cross-cluster
// dissimilar pair per claim; group-2 claims are held out.
struct TwoViewFixture {
    Corpus corpus;
    std::vector<ClaimPair> pairs;
    EmbeddingMatrix embeddings;
};

TwoViewFixture two_view_fixture(const TwoViewParams& params = {});

void write_claims_jsonl(const Corpus& corpus, const std::filesystem::path& path);
void write_pairs_jsonl(const Corpus& corpus, std::span<const ClaimPair> pairs, const std::filesystem::path& path);

}  // namespace claimclust::fixtures
