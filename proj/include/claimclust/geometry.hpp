#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "claimclust/corpus.hpp"
#include "claimclust/error.hpp"
#include "claimclust/types.hpp"

namespace claimclust {

inline constexpr std::size_t kDefaultMemoryCapBytes = std::size_t{2} << 30;  // 2 GiB
inline constexpr double kMinNorm = 1e-12;

// Sequential 64-bit dot product. Every cosine in the library goes through this
// kernel so results do not depend on chunking or vectorization width.
template <typename ScalarA, typename ScalarB>
double dot64(const ScalarA* a, const ScalarB* b, Index d) {
    double acc = 0.0;
    for (Index i = 0; i < d; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

template <typename Scalar>
double norm64(const Scalar* a, Index d) {
    return std::sqrt(dot64(a, a, d));
}

// 1 - cos(u, v), clamped to [0, 2].
template <typename DerivedA, typename DerivedB>
double cosine_distance(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
    if (u.size() != v.size()) throw InputError("cosine_distance: dimension mismatch");
    const auto uu = u.derived().eval();
    const auto vv = v.derived().eval();
    const Index d = uu.size();
    const double nu = norm64(uu.data(), d);
    const double nv = norm64(vv.data(), d);
    if (nu < kMinNorm || nv < kMinNorm) throw InputError("cosine_distance: zero vector");
    // Symmetric: u.v and v.u sum identical products in identical order.
    const double c = dot64(uu.data(), vv.data(), d) / (nu * nv);
    return std::clamp(1.0 - c, 0.0, 2.0);
}

// Distance between two rows already known to be unit norm.
inline double unit_cosine_distance(const float* u, const float* v, Index d) {
    return std::clamp(1.0 - dot64(u, v, d), 0.0, 2.0);
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix);

// Condensed upper triangle: pair (i, j), i < j.
struct DistanceMatrix {
    Index n = 0;
    std::vector<float> values;

    static std::size_t condensed_index(Index i, Index j, Index n) {
        const auto ui = static_cast<std::size_t>(i);
        const auto uj = static_cast<std::size_t>(j);
        const auto un = static_cast<std::size_t>(n);
        return un * ui - ui * (ui + 1) / 2 + (uj - ui - 1);
    }

    float operator()(Index i, Index j) const {
        if (i == j) return 0.0f;
        if (i > j) std::swap(i, j);
        return values[condensed_index(i, j, n)];
    }
};

DistanceMatrix pairwise_cosine_distances(const EmbeddingMatrix& matrix, Index chunk_rows,
                                         std::size_t memory_cap_bytes = kDefaultMemoryCapBytes);

inline constexpr int kHistogramBins = 50;
inline constexpr double kHistogramMax = 2.0;

struct PairDistanceStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::array<std::size_t, kHistogramBins> histogram{};

    static double bin_left(int bin) { return kHistogramMax * bin / kHistogramBins; }
};

enum class LabelFilter { kSimilar, kDissimilar, kAll };

LabelFilter parse_label_filter(const std::string& name);
const char* to_string(LabelFilter filter);

PairDistanceStats distance_stats(std::span<const double> distances);

PairDistanceStats pair_distance_stats(const EmbeddingMatrix& matrix, std::span<const ClaimPair> pairs,
                                      LabelFilter filter);

void write_stats_csv(const PairDistanceStats& stats, const std::filesystem::path& path);

}  // namespace claimclust
