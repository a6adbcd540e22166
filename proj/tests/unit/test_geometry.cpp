#include <doctest.h>

#include <cmath>

#include "claimclust/geometry.hpp"
#include "claimclust/random.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace claimclust;

namespace {

EmbeddingMatrix rows(std::initializer_list<std::initializer_list<float>> values) {
    EmbeddingMatrix m;
    const auto n = static_cast<Index>(values.size());
    const auto d = static_cast<Index>(values.begin()->size());
    m.data.resize(n, d);
    Index i = 0;
    for (const auto& r : values) {
        Index j = 0;
        for (float v : r) m.data(i, j++) = v;
        m.ids.push_back("r" + std::to_string(i));
        ++i;
    }
    return m;
}

EmbeddingMatrix random_unit(Index n, Index d, Rng& rng) {
    EmbeddingMatrix m;
    m.data.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) m.data(i, j) = static_cast<float>(rng.normal());
        m.ids.push_back("r" + std::to_string(i));
    }
    return normalize_rows(m);
}

}  // namespace

TEST_SUITE("geometry") {
    TEST_CASE("normalize_rows") {
        const auto out = normalize_rows(rows({{3, 4}, {1, 0}}));
        CHECK(out.data(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
        CHECK(out.data(0, 1) == doctest::Approx(0.8).epsilon(1e-7));
        CHECK(out.data(1, 0) == 1.0f);
        CHECK(out.data(1, 1) == 0.0f);
        CHECK(out.ids == std::vector<std::string>{"r0", "r1"});

        try {
            normalize_rows(rows({{1, 1}, {0, 0}}));
            FAIL("expected a zero-norm error");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find("'r1'") != std::string::npos);
        }
    }

    TEST_CASE("property: normalized rows have unit norm and normalizing twice is stable") {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            EmbeddingMatrix m;
            const auto n = static_cast<Index>(1 + rng.uniform_index(10));
            const auto d = static_cast<Index>(1 + rng.uniform_index(40));
            m.data.resize(n, d);
            for (Index i = 0; i < n; ++i) {
                m.ids.push_back(std::to_string(i));
                const double mag = std::pow(10.0, rng.uniform01() * 8 - 4);
                for (Index j = 0; j < d; ++j) m.data(i, j) = static_cast<float>(mag * (rng.normal() + 0.01));
            }
            const auto once = normalize_rows(m);
            const auto twice = normalize_rows(once);
            for (Index i = 0; i < n; ++i) {
                CHECK(std::abs(norm64(once.data.row(i).data(), d) - 1.0) <= 1e-6);
                for (Index j = 0; j < d; ++j) CHECK(std::abs(twice.data(i, j) - once.data(i, j)) <= 1e-7);
            }
        }
    }

    TEST_CASE("cosine_distance examples and errors") {
        Eigen::VectorXd u(3), v(3), w(3);
        u << 1, 0, 0;
        v << 0, 1, 0;
        CHECK(cosine_distance(u, u) == 0.0);
        CHECK(cosine_distance(u, v) == 1.0);
        CHECK(cosine_distance(u, (-u).eval()) == 2.0);
        w << 0, 0, 0;
        CHECK_THROWS_AS(cosine_distance(u, w), InputError);
        Eigen::VectorXd short_v(2);
        short_v << 1, 0;
        CHECK_THROWS_AS(cosine_distance(u, short_v), InputError);
    }

    TEST_CASE("property: symmetry, range, and the unit-sphere identity with squared Euclidean distance") {
        Rng rng(5);
        for (int trial = 0; trial < 500; ++trial) {
            const auto d = static_cast<Index>(1 + rng.uniform_index(32));
            Eigen::VectorXf u(d), v(d);
            for (Index j = 0; j < d; ++j) {
                u(j) = static_cast<float>(rng.normal() * 3);
                v(j) = static_cast<float>(rng.normal() * 0.1);
            }
            const double duv = cosine_distance(u, v);
            CHECK(duv == cosine_distance(v, u));
            CHECK(duv >= 0.0);
            CHECK(duv <= 2.0);
            const Eigen::VectorXd uu = u.cast<double>().normalized();
            const Eigen::VectorXd vv = v.cast<double>().normalized();
            CHECK(std::abs(cosine_distance(uu, vv) - (uu - vv).squaredNorm() / 2) <= 1e-5);
        }
    }

    TEST_CASE("pairwise on basis vectors") {
        const auto dm = pairwise_cosine_distances(rows({{1, 0}, {0, 1}, {1, 0}}), 2);
        CHECK(dm.values == std::vector<float>{1.0f, 0.0f, 1.0f});
        CHECK(dm(2, 1) == 1.0f);
        CHECK(dm(1, 1) == 0.0f);
    }

    TEST_CASE("pairwise is chunk invariant and bitwise equal to a double loop") {
        Rng rng(9);
        const auto m = random_unit(50, 8, rng);
        const MatrixD x = m.data.cast<double>();
        std::vector<float> naive;
        for (Index i = 0; i < 50; ++i) {
            for (Index j = i + 1; j < 50; ++j) {
                double dot = 0;
                for (Index c = 0; c < 8; ++c) dot += x(i, c) * x(j, c);
                naive.push_back(static_cast<float>(std::clamp(1.0 - dot, 0.0, 2.0)));
            }
        }
        for (Index chunk : {1, 7, 50}) CHECK(pairwise_cosine_distances(m, chunk).values == naive);
    }

    TEST_CASE("pairwise errors") {
        CHECK_THROWS_AS(pairwise_cosine_distances(rows({{1, 0}}), 1), InputError);
        Rng rng(1);
        CHECK_THROWS_AS(pairwise_cosine_distances(random_unit(100, 2, rng), 10, 100), Error);
    }

    TEST_CASE("pair distance stats") {
        const auto m = rows({{1, 0}, {1, 0}, {0, 1}, {-1, 0}});
        const std::vector<ClaimPair> same = {{0, 1, PairLabel::kSimilar}};
        const auto s = pair_distance_stats(m, same, LabelFilter::kSimilar);
        CHECK(s.count == 1);
        CHECK(s.mean == 0.0);
        CHECK(s.std == 0.0);

        const std::vector<ClaimPair> spread = {
            {0, 1, PairLabel::kSimilar}, {0, 2, PairLabel::kDissimilar}, {0, 3, PairLabel::kDissimilar}};
        const auto all = pair_distance_stats(m, spread, LabelFilter::kAll);
        CHECK(all.count == 3);
        CHECK(all.mean == doctest::Approx(1.0));
        CHECK(all.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
        CHECK(all.histogram.front() == 1);
        CHECK(all.histogram[25] == 1);
        CHECK(all.histogram.back() == 1);
        std::size_t total = 0;
        for (auto c : all.histogram) total += c;
        CHECK(total == all.count);

        CHECK(pair_distance_stats(m, spread, LabelFilter::kDissimilar).count == 2);
        CHECK_THROWS_AS(pair_distance_stats(m, same, LabelFilter::kDissimilar), InputError);
        CHECK(parse_label_filter("similar") == LabelFilter::kSimilar);
        CHECK_THROWS_AS(parse_label_filter("maybe"), InputError);
    }

    TEST_CASE("stats CSV has 50 bins") {
        claimclust::testing::TempDir dir;
        PairDistanceStats s;
        s.histogram[3] = 7;
        write_stats_csv(s, dir / "s.csv");
        const auto text = claimclust::testing::slurp(dir / "s.csv");
        CHECK(text.rfind("bin_left,count\n0,0\n0.04,0\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 51);
        CHECK(text.find("\n0.12,7\n") != std::string::npos);
    }
}
