#include "claimclust/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "claimclust/error.hpp"
#include "claimclust/random.hpp"
#include "csv_util.hpp"

namespace claimclust {

void AutotuneParams::validate() const {
    if (!std::isfinite(grid_lo) || !std::isfinite(grid_hi) || !(grid_lo < grid_hi)) {
        throw InputError("autotune grid needs finite grid_lo < grid_hi");
    }
    if (!(step > 0.0) || !std::isfinite(step)) throw InputError("autotune step must be positive");
    if (refine_count < 0) throw InputError("refine_count must be >= 0");
    if (sample_cap < 1) throw InputError("sample_cap must be >= 1");
}

std::vector<double> AutotuneParams::grid() const {
    const auto count = static_cast<long>(std::floor((grid_hi - grid_lo) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out.push_back(grid_lo + static_cast<double>(i) * step);
    return out;
}

namespace {

SweepPoint score_cut(const SilhouetteEvaluator& evaluator, const Dendrogram& dendrogram, double t) {
    const auto assignment = cut_by_threshold(dendrogram, t);
    const auto detail = evaluator.detail(assignment);
    return {t, assignment.k, detail.mean, detail.degenerate};
}

// Strictly better, or equal with a smaller threshold.
bool better(const SweepPoint& x, const SweepPoint& best) {
    if (x.degenerate != best.degenerate) return !x.degenerate;
    if (x.silhouette != best.silhouette) return x.silhouette > best.silhouette;
    return x.threshold < best.threshold;
}

}  // namespace

AutotuneResult select_threshold(const SilhouetteEvaluator& evaluator, const Dendrogram& dendrogram,
                                const AutotuneParams& params) {
    params.validate();
    if (evaluator.size() != dendrogram.n) {
        throw InputError("dendrogram has " + std::to_string(dendrogram.n) + " leaves but the matrix has " +
                         std::to_string(evaluator.size()) + " rows");
    }
    AutotuneResult result;
    for (double t : params.grid()) result.grid.push_back(score_cut(evaluator, dendrogram, t));

    SweepPoint best = result.grid.front();
    for (const auto& p : result.grid) {
        if (better(p, best)) best = p;
    }

    // Distinct merge heights; flat clusterings only change at these values.
    std::vector<double> heights;
    for (const auto& m : dendrogram.merges) {
        if (heights.empty() || m.height != heights.back()) heights.push_back(m.height);
    }
    const auto above = static_cast<std::ptrdiff_t>(
        std::upper_bound(heights.begin(), heights.end(), best.threshold) - heights.begin());
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, above - params.refine_count);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(heights.size()),
                                                       above + params.refine_count);
    for (std::ptrdiff_t i = lo; i + 1 < hi; ++i) {
        const double mid = 0.5 * (heights[static_cast<std::size_t>(i)] + heights[static_cast<std::size_t>(i + 1)]);
        result.refinement.push_back(score_cut(evaluator, dendrogram, mid));
    }
    for (const auto& p : result.refinement) {
        if (better(p, best)) best = p;
    }
    if (best.degenerate) throw Error("no valid clustering: every evaluated cut has k = 1 or k = n");
    result.best_threshold = best.threshold;
    result.best_silhouette = best.silhouette;
    result.best_k = best.k;
    return result;
}

AutotuneResult select_threshold(const EmbeddingMatrix& matrix, const Dendrogram& dendrogram,
                                const AutotuneParams& params) {
    params.validate();
    const SilhouetteEvaluator evaluator(matrix, params.sample_cap, params.seed);
    return select_threshold(evaluator, dendrogram, params);
}

SubsetAverageResult subset_average_threshold(const EmbeddingMatrix& matrix, Index subset_size, int subsets,
                                             const AutotuneParams& params, const WardOptions& ward) {
    params.validate();
    const Index n = matrix.rows();
    if (n < 2) throw InputError("threshold selection needs at least 2 rows");
    if (subset_size < 2) throw InputError("subset_size must be >= 2");
    if (subsets < 1) throw InputError("subsets must be >= 1");

    SubsetAverageResult out;
    if (n <= subset_size) {
        std::vector<Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Index{0});
        out.memberships.push_back(std::move(all));
    } else {
        for (int s = 0; s < subsets; ++s) {
            Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(s)));
            out.memberships.push_back(rng.sample_without_replacement(n, subset_size));
        }
    }
    double sum = 0.0;
    for (const auto& members : out.memberships) {
        EmbeddingMatrix sub;
        sub.data.resize(static_cast<Index>(members.size()), matrix.dim());
        sub.ids.reserve(members.size());
        for (std::size_t r = 0; r < members.size(); ++r) {
            sub.data.row(static_cast<Index>(r)) = matrix.data.row(members[r]);
            sub.ids.push_back(matrix.ids[static_cast<std::size_t>(members[r])]);
        }
        const Dendrogram dendrogram = build_dendrogram(sub, ward);
        out.runs.push_back(select_threshold(sub, dendrogram, params));
        sum += out.runs.back().best_threshold;
    }
    out.mean_threshold = sum / static_cast<double>(out.runs.size());
    return out;
}

void write_sweep_points_csv(std::span<const SweepPoint> points, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "threshold,k,silhouette\n";
    for (const auto& p : points) {
        out << csv::format_double(p.threshold) << ',' << p.k << ',' << csv::format_double(p.silhouette) << '\n';
    }
}

}  // namespace claimclust
