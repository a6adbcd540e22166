#include "claimclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "claimclust/error.hpp"
#include "claimclust/geometry.hpp"
#include "claimclust/random.hpp"
#include "csv_util.hpp"

namespace claimclust {

namespace {

using Int128 = __int128;

Int128 choose2(Index x) { return static_cast<Int128>(x) * (x - 1) / 2; }

void require_same_length(const ClusterAssignment& truth, const ClusterAssignment& pred, Index min_n) {
    if (truth.size() != pred.size()) {
        throw InputError("labelings differ in length (" + std::to_string(truth.size()) + " vs " +
                         std::to_string(pred.size()) + ")");
    }
    if (truth.size() < min_n) {
        throw InputError("metric needs at least " + std::to_string(min_n) + " labeled points");
    }
}

// Identical up to relabeling.
bool same_partition(const ClusterAssignment& x, const ClusterAssignment& y) {
    return ClusterAssignment::from_labels(x.labels).labels == ClusterAssignment::from_labels(y.labels).labels;
}

}  // namespace

ContingencyTable ContingencyTable::build(const ClusterAssignment& truth_in, const ClusterAssignment& pred_in) {
    require_same_length(truth_in, pred_in, 0);
    // canonical labels give dense row/column indices
    const auto truth = ClusterAssignment::from_labels(truth_in.labels);
    const auto pred = ClusterAssignment::from_labels(pred_in.labels);
    ContingencyTable t;
    t.n = truth.size();
    t.row_sums.assign(static_cast<std::size_t>(truth.k), 0);
    t.col_sums.assign(static_cast<std::size_t>(pred.k), 0);
    std::vector<std::pair<Index, Index>> keys;
    keys.reserve(truth.labels.size());
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        keys.emplace_back(truth.labels[i], pred.labels[i]);
        ++t.row_sums[static_cast<std::size_t>(truth.labels[i])];
        ++t.col_sums[static_cast<std::size_t>(pred.labels[i])];
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        t.cells.push_back({keys[i].first, keys[i].second, static_cast<Index>(j - i)});
        i = j;
    }
    return t;
}

double ari(const ClusterAssignment& truth, const ClusterAssignment& pred) {
    require_same_length(truth, pred, 2);
    const auto table = ContingencyTable::build(truth, pred);
    Int128 index = 0;
    for (const auto& c : table.cells) index += choose2(c.count);
    Int128 sum_a = 0, sum_b = 0;
    for (Index a : table.row_sums) sum_a += choose2(a);
    for (Index b : table.col_sums) sum_b += choose2(b);
    const Int128 total = choose2(table.n);
    // (index - E) / (mean - E) with E = sum_a sum_b / total, scaled by 2 * total
    const Int128 numerator = 2 * total * index - 2 * sum_a * sum_b;
    const Int128 denominator = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if (denominator == 0) return same_partition(truth, pred) ? 1.0 : 0.0;
    return static_cast<double>(static_cast<long double>(numerator) / static_cast<long double>(denominator));
}

double entropy(const ClusterAssignment& labels) {
    if (labels.labels.empty()) return 0.0;
    std::vector<Index> counts(static_cast<std::size_t>(labels.k), 0);
    for (Index l : labels.labels) ++counts.at(static_cast<std::size_t>(l));
    const double n = static_cast<double>(labels.labels.size());
    double h = 0.0;
    for (Index c : counts) {
        if (c > 0) h -= (static_cast<double>(c) / n) * std::log(static_cast<double>(c) / n);
    }
    return h;
}

double mutual_information(const ContingencyTable& table) {
    if (table.n == 0) return 0.0;
    const double n = static_cast<double>(table.n);
    const double log_n = std::log(n);
    double mi = 0.0;
    for (const auto& c : table.cells) {
        const double nij = static_cast<double>(c.count);
        const double a = static_cast<double>(table.row_sums[static_cast<std::size_t>(c.row)]);
        const double b = static_cast<double>(table.col_sums[static_cast<std::size_t>(c.col)]);
        mi += nij / n * (std::log(nij) + log_n - std::log(a) - std::log(b));
    }
    return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& table) {
    const Index n = table.n;
    if (n == 0) return 0.0;
    std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
    for (Index i = 0; i <= n; ++i) log_fact[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
    auto lf = [&](Index i) { return log_fact[static_cast<std::size_t>(i)]; };

    // The term for (a_i, b_j) depends only on the two marginal values, so sum
    // over distinct values weighted by their multiplicities.
    std::map<Index, Index> row_values, col_values;
    for (Index a : table.row_sums) ++row_values[a];
    for (Index b : table.col_sums) ++col_values[b];
    const double nd = static_cast<double>(n);
    const double log_n = std::log(nd);
    double emi = 0.0;
    for (const auto& [a, a_mult] : row_values) {
        for (const auto& [b, b_mult] : col_values) {
            const double outer = lf(a) + lf(b) + lf(n - a) + lf(n - b) - lf(n);
            const double log_ab = std::log(static_cast<double>(a)) + std::log(static_cast<double>(b));
            double term = 0.0;
            for (Index nij = std::max<Index>(1, a + b - n); nij <= std::min(a, b); ++nij) {
                const double log_p = outer - lf(nij) - lf(a - nij) - lf(b - nij) - lf(n - a - b + nij);
                const double x = static_cast<double>(nij);
                term += x / nd * (log_n + std::log(x) - log_ab) * std::exp(log_p);
            }
            emi += static_cast<double>(a_mult) * static_cast<double>(b_mult) * term;
        }
    }
    return emi;
}

double ami(const ClusterAssignment& truth, const ClusterAssignment& pred) {
    require_same_length(truth, pred, 2);
    if (same_partition(truth, pred)) return 1.0;
    const auto table = ContingencyTable::build(truth, pred);
    const double mi = mutual_information(table);
    const double emi = expected_mutual_information(table);
    const double mean_h = 0.5 * (entropy(truth) + entropy(pred));
    const double denominator = mean_h - emi;
    if (std::abs(denominator) <= 1e-15) return 0.0;
    return std::clamp((mi - emi) / denominator, -1.0, 1.0);
}

HomogeneityCompleteness homogeneity_completeness_v(const ClusterAssignment& truth, const ClusterAssignment& pred) {
    require_same_length(truth, pred, 1);
    const auto table = ContingencyTable::build(truth, pred);
    const double mi = mutual_information(table);
    const double h_true = entropy(truth);
    const double h_pred = entropy(pred);
    HomogeneityCompleteness out;
    out.homogeneity = h_true == 0.0 ? 1.0 : std::clamp(mi / h_true, 0.0, 1.0);
    out.completeness = h_pred == 0.0 ? 1.0 : std::clamp(mi / h_pred, 0.0, 1.0);
    const double sum = out.homogeneity + out.completeness;
    out.v_measure = sum == 0.0 ? 0.0 : 2.0 * out.homogeneity * out.completeness / sum;
    return out;
}

SilhouetteEvaluator::SilhouetteEvaluator(const EmbeddingMatrix& matrix, Index sample_cap, std::uint64_t seed,
                                         std::size_t cache_cap_bytes)
    : rows_(matrix.data.cast<double>()) {
    const Index n = rows_.rows();
    if (sample_cap < 1) throw InputError("silhouette sample_cap must be >= 1");
    norms_.resize(n);
    for (Index i = 0; i < n; ++i) {
        norms_(i) = norm64(rows_.row(i).data(), rows_.cols());
        if (norms_(i) < kMinNorm) {
            throw InputError("zero-norm embedding row for claim '" + matrix.ids[static_cast<std::size_t>(i)] + "'");
        }
    }
    if (n <= sample_cap) {
        sample_.resize(static_cast<std::size_t>(n));
        std::iota(sample_.begin(), sample_.end(), Index{0});
    } else {
        Rng rng(seed);
        sample_ = rng.sample_without_replacement(n, sample_cap);
    }
    const std::size_t cache_bytes = sample_.size() * static_cast<std::size_t>(n) * sizeof(double);
    if (cache_bytes <= cache_cap_bytes) {
        cache_.resize(sample_.size() * static_cast<std::size_t>(n));
        std::vector<double> row;
        for (std::size_t s = 0; s < sample_.size(); ++s) {
            distances_from(s, row);
            std::copy(row.begin(), row.end(), cache_.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(n)));
        }
    }
}

void SilhouetteEvaluator::distances_from(std::size_t sample_slot, std::vector<double>& out) const {
    const Index n = rows_.rows();
    const Index d = rows_.cols();
    const Index i = sample_[sample_slot];
    out.resize(static_cast<std::size_t>(n));
    const double* xi = rows_.row(i).data();
    for (Index j = 0; j < n; ++j) {
        const double c = dot64(xi, rows_.row(j).data(), d) / (norms_(i) * norms_(j));
        out[static_cast<std::size_t>(j)] = std::clamp(1.0 - c, 0.0, 2.0);
    }
    out[static_cast<std::size_t>(i)] = 0.0;
}

SilhouetteDetail SilhouetteEvaluator::detail(const ClusterAssignment& assignment) const {
    const Index n = rows_.rows();
    if (assignment.size() != n) {
        throw InputError("assignment length " + std::to_string(assignment.size()) + " does not match " +
                         std::to_string(n) + " embedding rows");
    }
    SilhouetteDetail out;
    if (assignment.k <= 1 || assignment.k >= n) return out;  // degenerate sentinel
    out.degenerate = false;
    const auto k = static_cast<std::size_t>(assignment.k);
    std::vector<Index> count(k, 0);
    for (Index l : assignment.labels) ++count[static_cast<std::size_t>(l)];

    std::vector<double> sums(k);
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t s = 0; s < sample_.size(); ++s) {
        const Index i = sample_[s];
        const double* dist = nullptr;
        if (!cache_.empty()) {
            dist = cache_.data() + s * static_cast<std::size_t>(n);
        } else {
            distances_from(s, scratch);
            dist = scratch.data();
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Index j = 0; j < n; ++j) {
            if (j != i) sums[static_cast<std::size_t>(assignment.labels[static_cast<std::size_t>(j)])] += dist[j];
        }
        const auto own = static_cast<std::size_t>(assignment.labels[static_cast<std::size_t>(i)]);
        double a = 0.0, b = 0.0, si = 0.0;
        if (count[own] > 1) {
            a = sums[own] / static_cast<double>(count[own] - 1);
            b = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                if (c != own) b = std::min(b, sums[c] / static_cast<double>(count[c]));
            }
            const double denom = std::max(a, b);
            si = denom > 0.0 ? (b - a) / denom : 0.0;
        }
        out.points.push_back(i);
        out.a.push_back(a);
        out.b.push_back(b);
        out.s.push_back(si);
        total += si;
    }
    out.mean = total / static_cast<double>(sample_.size());
    return out;
}

double SilhouetteEvaluator::score(const ClusterAssignment& assignment) const { return detail(assignment).mean; }

std::pair<double, SilhouetteDetail> silhouette(const EmbeddingMatrix& matrix, const ClusterAssignment& assignment,
                                               Index sample_cap, std::uint64_t seed) {
    SilhouetteEvaluator evaluator(matrix, sample_cap, seed);
    auto detail = evaluator.detail(assignment);
    const double score = detail.mean;
    return {score, std::move(detail)};
}

void write_silhouette_csv(std::span<const std::string> ids, const SilhouetteDetail& detail,
                          const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "claim_id,a,b,s\n";
    for (std::size_t i = 0; i < detail.points.size(); ++i) {
        out << csv::quote(ids[static_cast<std::size_t>(detail.points[i])]) << ',' << csv::format_double(detail.a[i])
            << ',' << csv::format_double(detail.b[i]) << ',' << csv::format_double(detail.s[i]) << '\n';
    }
}

EvaluationReport evaluate(const ClusterAssignment& truth, const ClusterAssignment& pred, double silhouette_score,
                          bool silhouette_degenerate) {
    EvaluationReport r;
    r.ari = ari(truth, pred);
    r.ami = ami(truth, pred);
    const auto hcv = homogeneity_completeness_v(truth, pred);
    r.homogeneity = hcv.homogeneity;
    r.completeness = hcv.completeness;
    r.v_measure = hcv.v_measure;
    r.silhouette = silhouette_score;
    r.silhouette_degenerate = silhouette_degenerate;
    r.k_pred = pred.k;
    r.k_true = truth.k;
    return r;
}

}  // namespace claimclust
