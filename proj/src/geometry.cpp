#include "claimclust/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv_util.hpp"

namespace claimclust {

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix) {
    EmbeddingMatrix out = matrix;
    const Index d = matrix.dim();
    for (Index r = 0; r < matrix.rows(); ++r) {
        const double norm = norm64(matrix.data.row(r).data(), d);
        if (norm < kMinNorm) {
            throw InputError("zero-norm embedding row for claim '" + matrix.ids[static_cast<std::size_t>(r)] + "'");
        }
        for (Index c = 0; c < d; ++c) {
            out.data(r, c) = static_cast<float>(static_cast<double>(matrix.data(r, c)) / norm);
        }
    }
    return out;
}

DistanceMatrix pairwise_cosine_distances(const EmbeddingMatrix& matrix, Index chunk_rows,
                                         std::size_t memory_cap_bytes) {
    const Index n = matrix.rows();
    if (n < 2) throw InputError("pairwise distances need at least 2 rows");
    if (chunk_rows < 1) throw InputError("chunk_rows must be >= 1");
    const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
    if (count * sizeof(float) > memory_cap_bytes) {
        throw Error("condensed distance matrix for n = " + std::to_string(n) + " needs " +
                    std::to_string(count * sizeof(float)) + " bytes, above the cap of " +
                    std::to_string(memory_cap_bytes));
    }
    DistanceMatrix out;
    out.n = n;
    out.values.resize(count);
    const Index d = matrix.dim();
    const float* base = matrix.data.data();
    // Each chunk of rows owns a disjoint, contiguous condensed range.
    for (Index start = 0; start < n; start += chunk_rows) {
        const Index stop = std::min(n, start + chunk_rows);
        for (Index i = start; i < stop; ++i) {
            const float* u = base + i * d;
            std::size_t k = DistanceMatrix::condensed_index(i, i + 1, n);
            for (Index j = i + 1; j < n; ++j, ++k) {
                out.values[k] = static_cast<float>(unit_cosine_distance(u, base + j * d, d));
            }
        }
    }
    return out;
}

LabelFilter parse_label_filter(const std::string& name) {
    if (name == "similar") return LabelFilter::kSimilar;
    if (name == "dissimilar") return LabelFilter::kDissimilar;
    if (name == "all") return LabelFilter::kAll;
    throw InputError("unknown label filter '" + name + "' (expected similar, dissimilar or all)");
}

const char* to_string(LabelFilter filter) {
    switch (filter) {
        case LabelFilter::kSimilar: return "similar";
        case LabelFilter::kDissimilar: return "dissimilar";
        case LabelFilter::kAll: return "all";
    }
    return "?";
}

PairDistanceStats distance_stats(std::span<const double> distances) {
    PairDistanceStats s;
    s.count = distances.size();
    if (s.count == 0) return s;
    double sum = 0.0;
    for (double x : distances) sum += x;
    s.mean = sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (double x : distances) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count));
    for (double x : distances) {
        auto bin = static_cast<int>(std::floor(x / kHistogramMax * kHistogramBins));
        bin = std::clamp(bin, 0, kHistogramBins - 1);
        ++s.histogram[static_cast<std::size_t>(bin)];
    }
    return s;
}

PairDistanceStats pair_distance_stats(const EmbeddingMatrix& matrix, std::span<const ClaimPair> pairs,
                                      LabelFilter filter) {
    std::vector<double> distances;
    for (const auto& p : pairs) {
        if (filter == LabelFilter::kSimilar && p.label != PairLabel::kSimilar) continue;
        if (filter == LabelFilter::kDissimilar && p.label != PairLabel::kDissimilar) continue;
        if (p.a < 0 || p.b < 0 || p.a >= matrix.rows() || p.b >= matrix.rows()) {
            throw InputError("pair references a row outside the embedding matrix");
        }
        distances.push_back(cosine_distance(matrix.data.row(p.a), matrix.data.row(p.b)));
    }
    if (distances.empty()) {
        throw InputError(std::string("no pairs left after filtering by '") + to_string(filter) + "'");
    }
    return distance_stats(distances);
}

void write_stats_csv(const PairDistanceStats& stats, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "bin_left,count\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        out << csv::format_double(PairDistanceStats::bin_left(b)) << ',' << stats.histogram[static_cast<std::size_t>(b)] << '\n';
    }
}

}  // namespace claimclust
