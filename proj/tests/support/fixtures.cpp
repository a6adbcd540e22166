#include "fixtures.hpp"

#include <Eigen/QR>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "claimclust/error.hpp"

namespace claimclust::fixtures {

MatrixD random_rotation(Index d, Rng& rng) {
    MatrixD g(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) g(i, j) = rng.normal();
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j) {
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    return q;
}

namespace {

VectorD gaussian(Index d, double sigma, Rng& rng) {
    VectorD v(d);
    const double s = sigma / std::sqrt(static_cast<double>(d));
    for (Index i = 0; i < d; ++i) v(i) = s * rng.normal();
    return v;
}

std::string numbered(const char* prefix, Index i, int width) {
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

}  // namespace

Blobs sphere_blobs(Index n, Index k, Index d, double spread, std::uint64_t seed) {
    Rng rng(seed);
    MatrixD centers(k, d);
    for (Index c = 0; c < k; ++c) {
        VectorD v = gaussian(d, 1.0, rng);
        centers.row(c) = v.normalized().transpose();
    }
    Blobs b;
    b.matrix.data.resize(n, d);
    b.matrix.ids.reserve(static_cast<std::size_t>(n));
    b.labels.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Index c = i % k;
        VectorD x = centers.row(c).transpose() + gaussian(d, spread, rng);
        x.normalize();
        b.matrix.data.row(i) = x.transpose().cast<float>();
        b.matrix.ids.push_back(numbered("p", i, 6));
        b.labels.push_back(c);
    }
    return b;
}

TwoViewFixture two_view_fixture(const TwoViewParams& p) {
    Rng rng(p.seed);
    const Index d = p.d;
    MatrixD view_a = MatrixD::Identity(d, d);
    MatrixD view_b = MatrixD::Identity(d, d);
    view_a.topLeftCorner(p.style_dims, p.style_dims) = random_rotation(p.style_dims, rng);
    view_b.topLeftCorner(p.style_dims, p.style_dims) = random_rotation(p.style_dims, rng);
    const MatrixD mix = random_rotation(d, rng);
    const VectorD offset = gaussian(d, 1.0, rng).normalized();
    const auto train_topics = static_cast<Index>(std::ceil(p.train_fraction * static_cast<double>(p.topics)));

    std::vector<Claim> claims;
    std::vector<Index> cluster_of;
    std::vector<VectorD> rows;
    const char* langs[2] = {"la", "lb"};
    for (Index t = 0; t < p.topics; ++t) {
        const VectorD topic = gaussian(d, p.topic_sigma, rng);
        for (Index c = 0; c < p.clusters_per_topic; ++c) {
            const Index cluster = t * p.clusters_per_topic + c;
            const VectorD center = topic + gaussian(d, p.cluster_sigma, rng);
            const bool multilingual = rng.uniform01() < p.multilingual_fraction;
            const auto first_lang = static_cast<Index>(rng.uniform_index(2));
            for (Index m = 0; m < p.claims_per_cluster; ++m) {
                const Index lang = multilingual ? (first_lang + m) % 2 : first_lang;
                VectorD z = center + gaussian(d, p.claim_sigma, rng);
                z.head(p.style_dims) *= p.style_gain;
                VectorD x = mix * ((lang == 0 ? view_a : view_b) * z);
                x = x.normalized() + p.anisotropy * offset;
                x.normalize();
                const auto pos = static_cast<Index>(claims.size());
                Claim claim;
                claim.id = numbered("c", pos, 5);
                claim.text = "synthetic claim " + std::to_string(m) + " of cluster " + std::to_string(cluster);
                claim.lang = langs[lang];
                claim.gt_cluster = numbered("k", cluster, 4);
                claim.topic_group = t < train_topics ? 1 : 2;
                claims.push_back(std::move(claim));
                cluster_of.push_back(cluster);
                rows.push_back(std::move(x));
            }
        }
    }

    TwoViewFixture f;
    const auto n = static_cast<Index>(claims.size());
    f.embeddings.data.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        f.embeddings.data.row(i) = rows[static_cast<std::size_t>(i)].transpose().cast<float>();
        f.embeddings.ids.push_back(claims[static_cast<std::size_t>(i)].id);
    }
    std::vector<Index> train;
    for (Index i = 0; i < n; ++i) {
        if (claims[static_cast<std::size_t>(i)].topic_group == 1) train.push_back(i);
    }
    for (std::size_t x = 0; x < train.size(); ++x) {
        for (std::size_t y = x + 1; y < train.size(); ++y) {
            if (cluster_of[static_cast<std::size_t>(train[x])] == cluster_of[static_cast<std::size_t>(train[y])]) {
                f.pairs.push_back({train[x], train[y], PairLabel::kSimilar});
            }
        }
    }
    // One random cross-cluster partner per train claim; repeats of an
    // unordered pair are skipped so the list matches what loading would keep.
    std::vector<std::pair<Index, Index>> seen;
    for (Index i : train) {
        Index j = i;
        while (cluster_of[static_cast<std::size_t>(j)] == cluster_of[static_cast<std::size_t>(i)]) {
            j = train[static_cast<std::size_t>(rng.uniform_index(train.size()))];
        }
        const std::pair<Index, Index> key = std::minmax(i, j);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.emplace_back(key);
        f.pairs.push_back({key.first, key.second, PairLabel::kDissimilar});
    }
    f.corpus = Corpus(std::move(claims));
    return f;
}

void write_claims_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& c : corpus.claims()) {
        nlohmann::ordered_json j = {{"id", c.id}, {"text", c.text}, {"lang", c.lang}};
        j["cluster"] = c.gt_cluster ? nlohmann::ordered_json(*c.gt_cluster) : nlohmann::ordered_json(nullptr);
        j["topic"] = c.topic_group ? nlohmann::ordered_json(*c.topic_group) : nlohmann::ordered_json(nullptr);
        out << j.dump() << '\n';
    }
}

void write_pairs_jsonl(const Corpus& corpus, std::span<const ClaimPair> pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& p : pairs) {
        const nlohmann::ordered_json j = {{"a", corpus[p.a].id}, {"b", corpus[p.b].id}, {"label", to_string(p.label)}};
        out << j.dump() << '\n';
    }
}

}  // namespace claimclust::fixtures
