#include "claimclust/hac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "claimclust/error.hpp"
#include "csv_util.hpp"

namespace claimclust {

void Dendrogram::validate() const {
    if (n < 1) throw InputError("dendrogram needs at least one leaf");
    if (static_cast<Index>(merges.size()) != n - 1) {
        throw InputError("dendrogram with " + std::to_string(n) + " leaves must have " + std::to_string(n - 1) +
                         " merges, found " + std::to_string(merges.size()));
    }
    std::vector<Index> size(static_cast<std::size_t>(2 * n - 1), 0);
    std::vector<char> used(size.size(), 0);
    std::fill(size.begin(), size.begin() + n, 1);
    double last = 0.0;
    for (std::size_t m = 0; m < merges.size(); ++m) {
        const Merge& mg = merges[m];
        const Index node = n + static_cast<Index>(m);
        const std::string where = "merge " + std::to_string(m) + ": ";
        for (Index child : {mg.left, mg.right}) {
            if (child < 0 || child >= node) throw InputError(where + "child " + std::to_string(child) + " out of range");
            if (used[static_cast<std::size_t>(child)]) {
                throw InputError(where + "node " + std::to_string(child) + " merged twice");
            }
            used[static_cast<std::size_t>(child)] = 1;
        }
        if (mg.left == mg.right) throw InputError(where + "merges a node with itself");
        if (!std::isfinite(mg.height) || mg.height < 0.0) throw InputError(where + "invalid height");
        if (mg.height < last) throw InputError(where + "heights decrease");
        last = mg.height;
        const Index expected = size[static_cast<std::size_t>(mg.left)] + size[static_cast<std::size_t>(mg.right)];
        if (mg.size != expected) throw InputError(where + "size " + std::to_string(mg.size) + " != " + std::to_string(expected));
        size[static_cast<std::size_t>(node)] = expected;
    }
}

ClusterAssignment ClusterAssignment::from_labels(std::span<const Index> raw) {
    ClusterAssignment out;
    out.labels.reserve(raw.size());
    std::unordered_map<Index, Index> remap;
    for (Index r : raw) {
        auto [it, inserted] = remap.emplace(r, static_cast<Index>(remap.size()));
        out.labels.push_back(it->second);
    }
    out.k = static_cast<Index>(remap.size());
    return out;
}

ClusterAssignment ClusterAssignment::from_strings(std::span<const std::string> raw) {
    ClusterAssignment out;
    out.labels.reserve(raw.size());
    std::unordered_map<std::string, Index> remap;
    for (const auto& r : raw) {
        auto [it, inserted] = remap.emplace(r, static_cast<Index>(remap.size()));
        out.labels.push_back(it->second);
    }
    out.k = static_cast<Index>(remap.size());
    return out;
}

ClusterAssignment ClusterAssignment::restrict_to(std::span<const Index> positions) const {
    std::vector<Index> raw;
    raw.reserve(positions.size());
    for (Index p : positions) raw.push_back(labels.at(static_cast<std::size_t>(p)));
    return from_labels(raw);
}

namespace {

// Ward distances from cluster centroids:
//   d(A, B) = sqrt(2 |A| |B| / (|A| + |B|)) * |c_A - c_B|
// which equals the Lance-Williams recurrence started from Euclidean distances.
class CentroidWard {
  public:
    explicit CentroidWard(const MatrixF& rows) : centroids_(rows.cast<double>()), size_(rows.rows(), 1) {}

    double distance(Index a, Index b) const {
        const Index d = centroids_.cols();
        const double* ca = centroids_.row(a).data();
        const double* cb = centroids_.row(b).data();
        double sq = 0.0;
        for (Index i = 0; i < d; ++i) {
            const double diff = ca[i] - cb[i];
            sq += diff * diff;
        }
        const double na = static_cast<double>(size_[static_cast<std::size_t>(a)]);
        const double nb = static_cast<double>(size_[static_cast<std::size_t>(b)]);
        return std::sqrt(2.0 * na * nb / (na + nb) * sq);
    }

    // Cluster `drop` is absorbed into slot `keep`.
    void merge(Index keep, Index drop, double /*height*/, std::span<const Index> /*active*/) {
        const double nk = static_cast<double>(size_[static_cast<std::size_t>(keep)]);
        const double nd = static_cast<double>(size_[static_cast<std::size_t>(drop)]);
        centroids_.row(keep) = (nk * centroids_.row(keep) + nd * centroids_.row(drop)) / (nk + nd);
        size_[static_cast<std::size_t>(keep)] += size_[static_cast<std::size_t>(drop)];
    }

    Index size(Index slot) const { return size_[static_cast<std::size_t>(slot)]; }

  private:
    MatrixD centroids_;
    std::vector<Index> size_;
};

// Lance-Williams Ward update over a condensed matrix of current cluster distances.
class CondensedWard {
  public:
    explicit CondensedWard(const MatrixF& rows) : n_(rows.rows()), size_(static_cast<std::size_t>(rows.rows()), 1) {
        dist_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_ - 1) / 2);
        const Index d = rows.cols();
        for (Index i = 0; i < n_; ++i) {
            const float* u = rows.row(i).data();
            for (Index j = i + 1; j < n_; ++j) {
                const float* v = rows.row(j).data();
                double sq = 0.0;
                for (Index c = 0; c < d; ++c) {
                    const double diff = static_cast<double>(u[c]) - static_cast<double>(v[c]);
                    sq += diff * diff;
                }
                at(i, j) = std::sqrt(sq);
            }
        }
    }

    double distance(Index a, Index b) const { return dist_[slot(a, b)]; }

    Index size(Index slot) const { return size_[static_cast<std::size_t>(slot)]; }

    void merge(Index keep, Index drop, double height, std::span<const Index> active) {
        const double ni = static_cast<double>(size_[static_cast<std::size_t>(keep)]);
        const double nj = static_cast<double>(size_[static_cast<std::size_t>(drop)]);
        const double dij2 = height * height;
        for (Index k : active) {
            if (k == keep || k == drop) continue;
            const double nk = static_cast<double>(size_[static_cast<std::size_t>(k)]);
            const double dik = at(keep, k);
            const double djk = at(drop, k);
            const double value = ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * dij2) / (ni + nj + nk);
            at(keep, k) = std::sqrt(std::max(value, 0.0));
        }
        size_[static_cast<std::size_t>(keep)] += size_[static_cast<std::size_t>(drop)];
    }

  private:
    std::size_t slot(Index i, Index j) const {
        if (i > j) std::swap(i, j);
        return DistanceMatrix::condensed_index(i, j, n_);
    }
    double& at(Index i, Index j) { return dist_[slot(i, j)]; }

    Index n_;
    std::vector<double> dist_;
    std::vector<Index> size_;
};

struct RawMerge {
    Index left_node;
    Index right_node;
    double height;
    Index size;
};

template <typename Backend>
std::vector<RawMerge> nn_chain(Backend& backend, Index n) {
    std::vector<Index> active(static_cast<std::size_t>(n));  // slots, ascending
    std::iota(active.begin(), active.end(), Index{0});
    std::vector<Index> node_of(static_cast<std::size_t>(n));  // slot -> current node id
    std::iota(node_of.begin(), node_of.end(), Index{0});
    std::vector<double> node_height(static_cast<std::size_t>(2 * n - 1), 0.0);
    std::vector<Index> chain;
    std::vector<RawMerge> merges;
    merges.reserve(static_cast<std::size_t>(n - 1));

    while (static_cast<Index>(merges.size()) < n - 1) {
        if (chain.empty()) chain.push_back(active.front());
        const Index a = chain.back();
        const Index prev = chain.size() >= 2 ? chain[chain.size() - 2] : Index{-1};
        Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Index s : active) {
            if (s == a) continue;
            const double dist = backend.distance(a, s);
            bool take = false;
            if (best < 0 || dist < best_dist) {
                take = true;
            } else if (dist == best_dist && best != prev) {
                // ties: keep the chain predecessor, otherwise the smaller node id
                take = s == prev || node_of[static_cast<std::size_t>(s)] < node_of[static_cast<std::size_t>(best)];
            }
            if (take) {
                best = s;
                best_dist = dist;
            }
        }
        if (best != prev) {
            chain.push_back(best);
            continue;
        }
        chain.pop_back();
        chain.pop_back();
        const Index keep = std::min(a, prev);
        const Index drop = std::max(a, prev);
        const Index na = node_of[static_cast<std::size_t>(a)];
        const Index nb = node_of[static_cast<std::size_t>(prev)];
        // Ward is reducible; the clamp only absorbs last-bit rounding.
        const double height = std::max({best_dist, node_height[static_cast<std::size_t>(na)],
                                         node_height[static_cast<std::size_t>(nb)]});
        const Index new_node = n + static_cast<Index>(merges.size());
        merges.push_back({std::min(na, nb), std::max(na, nb), height, backend.size(a) + backend.size(prev)});
        backend.merge(keep, drop, best_dist, active);
        node_of[static_cast<std::size_t>(keep)] = new_node;
        node_height[static_cast<std::size_t>(new_node)] = height;
        active.erase(std::lower_bound(active.begin(), active.end(), drop));
    }
    return merges;
}

}  // namespace

Dendrogram build_dendrogram(const EmbeddingMatrix& matrix, const WardOptions& options) {
    const Index n = matrix.rows();
    if (n < 2) throw InputError("clustering needs at least 2 points");
    const Index d = matrix.dim();
    for (Index r = 0; r < n; ++r) {
        const double norm = norm64(matrix.data.row(r).data(), d);
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
            throw InputError("row " + std::to_string(r) + " ('" + matrix.ids[static_cast<std::size_t>(r)] +
                             "') is not unit-normalized (norm " + std::to_string(norm) + ")");
        }
    }

    std::vector<RawMerge> raw;
    if (options.backend == WardBackend::kCondensed) {
        const auto bytes = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2 * sizeof(double);
        if (bytes > options.memory_cap_bytes) {
            throw Error("condensed Ward for n = " + std::to_string(n) + " needs " + std::to_string(bytes) +
                        " bytes, above the cap of " + std::to_string(options.memory_cap_bytes));
        }
        CondensedWard backend(matrix.data);
        raw = nn_chain(backend, n);
    } else {
        CentroidWard backend(matrix.data);
        raw = nn_chain(backend, n);
    }

    // NN-chain finds merges out of height order; sort (stable, so children
    // stay ahead of parents at equal height) and renumber the merge nodes.
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return raw[x].height < raw[y].height; });
    std::vector<Index> renumber(static_cast<std::size_t>(2 * n - 1));
    std::iota(renumber.begin(), renumber.begin() + n, Index{0});
    Dendrogram out;
    out.n = n;
    out.merges.reserve(raw.size());
    for (std::size_t m = 0; m < order.size(); ++m) {
        const RawMerge& r = raw[order[m]];
        renumber[static_cast<std::size_t>(n) + order[m]] = n + static_cast<Index>(m);
        const Index l = renumber[static_cast<std::size_t>(r.left_node)];
        const Index rr = renumber[static_cast<std::size_t>(r.right_node)];
        out.merges.push_back({std::min(l, rr), std::max(l, rr), r.height, r.size});
    }
    return out;
}

namespace {

ClusterAssignment apply_merges(const Dendrogram& dendrogram, std::size_t count) {
    const Index n = dendrogram.n;
    std::vector<Index> parent(static_cast<std::size_t>(2 * n - 1));
    std::iota(parent.begin(), parent.end(), Index{0});
    for (std::size_t m = 0; m < count; ++m) {
        const Index node = n + static_cast<Index>(m);
        parent[static_cast<std::size_t>(dendrogram.merges[m].left)] = node;
        parent[static_cast<std::size_t>(dendrogram.merges[m].right)] = node;
    }
    auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            const Index up = parent[static_cast<std::size_t>(x)];
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(up)];
            x = up;
        }
        return x;
    };
    std::vector<Index> roots(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = find(i);
    return ClusterAssignment::from_labels(roots);
}

}  // namespace

ClusterAssignment cut_by_threshold(const Dendrogram& dendrogram, double t) {
    if (std::isnan(t)) throw InputError("cut threshold is NaN");
    std::size_t count = 0;
    while (count < dendrogram.merges.size() && dendrogram.merges[count].height <= t) ++count;
    return apply_merges(dendrogram, count);
}

ClusterAssignment cut_by_count(const Dendrogram& dendrogram, Index k) {
    if (k < 1 || k > dendrogram.n) {
        throw InputError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(dendrogram.n) + "]");
    }
    return apply_merges(dendrogram, static_cast<std::size_t>(dendrogram.n - k));
}

void write_dendrogram_csv(const Dendrogram& dendrogram, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "merge_index,left,right,height,size\n";
    for (std::size_t m = 0; m < dendrogram.merges.size(); ++m) {
        const Merge& mg = dendrogram.merges[m];
        out << m << ',' << mg.left << ',' << mg.right << ',' << csv::format_double(mg.height) << ',' << mg.size << '\n';
    }
}

Dendrogram read_dendrogram_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_rows(path, {"merge_index", "left", "right", "height", "size"});
    Dendrogram out;
    out.n = static_cast<Index>(rows.size()) + 1;
    for (std::size_t m = 0; m < rows.size(); ++m) {
        const std::string where = path.string() + " row " + std::to_string(m + 1);
        if (csv::parse_number<Index>(rows[m][0], where) != static_cast<Index>(m)) {
            throw InputError(where + ": merge_index out of sequence");
        }
        out.merges.push_back({csv::parse_number<Index>(rows[m][1], where), csv::parse_number<Index>(rows[m][2], where),
                              csv::parse_number<double>(rows[m][3], where), csv::parse_number<Index>(rows[m][4], where)});
    }
    out.validate();
    return out;
}

void write_assignment_csv(std::span<const std::string> ids, const ClusterAssignment& assignment,
                          const std::filesystem::path& path) {
    if (ids.size() != assignment.labels.size()) throw InputError("assignment length does not match id count");
    auto out = csv::open_out(path);
    out << "claim_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << csv::quote(ids[i]) << ',' << assignment.labels[i] << '\n';
}

ClusterAssignment read_assignment_csv(const std::filesystem::path& path, const Corpus& corpus) {
    const auto rows = csv::read_rows(path, {"claim_id", "label"});
    std::vector<Index> raw(static_cast<std::size_t>(corpus.size()), -1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = path.string() + " row " + std::to_string(r + 1);
        const auto pos = corpus.position(rows[r][0]);
        if (!pos) throw InputError(where + ": unknown claim id '" + rows[r][0] + "'");
        auto& slot = raw[static_cast<std::size_t>(*pos)];
        if (slot >= 0) throw InputError(where + ": duplicate claim id '" + rows[r][0] + "'");
        slot = csv::parse_number<Index>(rows[r][1], where);
        if (slot < 0) throw InputError(where + ": negative label");
    }
    for (Index i = 0; i < corpus.size(); ++i) {
        if (raw[static_cast<std::size_t>(i)] < 0) {
            throw InputError(path.string() + ": claim '" + corpus[i].id + "' has no label");
        }
    }
    return ClusterAssignment::from_labels(raw);
}

ClusterAssignment ground_truth(const Corpus& corpus) {
    std::vector<std::string> raw;
    raw.reserve(static_cast<std::size_t>(corpus.size()));
    for (const auto& c : corpus.claims()) {
        if (!c.gt_cluster) throw InputError("claim '" + c.id + "' has no ground-truth cluster");
        raw.push_back(*c.gt_cluster);
    }
    return ClusterAssignment::from_strings(raw);
}

}  // namespace claimclust
