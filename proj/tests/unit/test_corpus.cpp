#include <doctest.h>

#include <cstring>
#include <set>

#include "claimclust/corpus.hpp"
#include "claimclust/error.hpp"
#include "claimclust/random.hpp"
#include "tempdir.hpp"

using namespace claimclust;
using claimclust::testing::slurp;
using claimclust::testing::TempDir;

namespace {

std::string claim_line(const std::string& id, const std::string& lang, const std::string& cluster) {
    return R"({"id":")" + id + R"(","text":"text of )" + id + R"(","lang":")" + lang + R"(","cluster":")" + cluster +
           "\"}\n";
}

std::string three_claims() { return claim_line("c1", "en", "k1") + claim_line("c2", "es", "k1") + claim_line("c3", "en", "k2"); }

template <typename F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

// Raw CEV1 bytes assembled by hand, independent of the writer.
std::string cev_bytes(std::uint64_t n, std::uint32_t d, const std::vector<float>& values, const std::string& ids,
                      const char* magic = "CEV1", std::uint32_t version = 1) {
    std::string out(magic, 4);
    auto put = [&](const void* p, std::size_t k) { out.append(static_cast<const char*>(p), k); };
    put(&version, 4);
    put(&n, 8);
    put(&d, 4);
    put(values.data(), values.size() * 4);
    const std::uint64_t len = ids.size();
    put(&len, 8);
    out += ids;
    return out;
}

}  // namespace

TEST_SUITE("corpus") {
    TEST_CASE("claims load in file order with counts") {
        TempDir dir;
        const auto corpus = load_claims(dir.write("c.jsonl", three_claims()));
        REQUIRE(corpus.size() == 3);
        CHECK(corpus.ids() == std::vector<std::string>{"c1", "c2", "c3"});
        CHECK(corpus.position("c2") == Index{1});
        CHECK_FALSE(corpus.position("zz").has_value());
        const auto counts = corpus.counts();
        CHECK(counts.claims == 3);
        CHECK(counts.clusters == 2);
        CHECK(counts.languages == 2);
        CHECK(corpus.fully_labeled());
    }

    TEST_CASE("empty file gives an empty corpus") {
        TempDir dir;
        const auto corpus = load_claims(dir.write("c.jsonl", ""));
        CHECK(corpus.empty());
        const auto counts = corpus.counts();
        CHECK(counts.claims == 0);
        CHECK(counts.clusters == 0);
        CHECK(counts.languages == 0);
    }

    TEST_CASE("duplicate id names the id and the line") {
        TempDir dir;
        const auto path = dir.write("c.jsonl", claim_line("c1", "en", "k") + claim_line("c1", "en", "k"));
        const auto msg = error_of([&] { load_claims(path); });
        CHECK(msg.find("'c1'") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);
    }

    TEST_CASE("malformed line and missing field carry the line number") {
        TempDir dir;
        auto msg = error_of([&] { load_claims(dir.write("a.jsonl", claim_line("c1", "en", "k") + "{not json\n")); });
        CHECK(msg.find(":2:") != std::string::npos);
        msg = error_of([&] { load_claims(dir.write("b.jsonl", R"({"id":"c1","lang":"en"})" "\n")); });
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("'text'") != std::string::npos);
    }

    TEST_CASE("unlabeled claims and topics are optional; unknown keys ignored") {
        TempDir dir;
        const auto corpus = load_claims(dir.write(
            "c.jsonl", R"({"id":"a","text":"t","lang":"en","cluster":null,"topic":2,"extra":[1,2]})" "\n"
                       R"({"id":"b","text":"t","lang":"en","cluster":"k"})" "\n"));
        CHECK_FALSE(corpus[0].gt_cluster.has_value());
        CHECK(corpus[0].topic_group == 2);
        CHECK_FALSE(corpus[1].topic_group.has_value());
        CHECK_FALSE(corpus.fully_labeled());
        CHECK(corpus.labeled_positions() == std::vector<Index>{1});
        CHECK(corpus.counts().clusters == 1);
    }

    TEST_CASE("dataset-scale counts: 1187 claims, 197 clusters, 22 languages") {
        // Synthetic stand-in with the same statistics (including one 28-claim cluster).
        std::string text;
        Index id = 0;
        for (int c = 0; c < 197; ++c) {
            const int size = c == 0 ? 28 : (c <= 179 ? 6 : 5);
            for (int m = 0; m < size && id < 1187; ++m, ++id) {
                text += claim_line("c" + std::to_string(id), "l" + std::to_string(id % 22), "k" + std::to_string(c));
            }
        }
        REQUIRE(id == 1187);
        TempDir dir;
        const auto counts = load_claims(dir.write("c.jsonl", text)).counts();
        CHECK(counts.claims == 1187);
        CHECK(counts.clusters == 197);
        CHECK(counts.languages == 22);
    }

    TEST_CASE("pairs: minimal, self-pair, dedup, conflict") {
        TempDir dir;
        const auto corpus = load_claims(dir.write("c.jsonl", three_claims()));
        const auto pairs = load_pairs(dir.write("p.jsonl", R"({"a":"c2","b":"c1","label":"similar"})" "\n"), corpus);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].a == 0);
        CHECK(pairs[0].b == 1);
        CHECK(count_pairs(pairs).similar == 1);
        CHECK(count_pairs(pairs).dissimilar == 0);

        CHECK(error_of([&] {
                  load_pairs(dir.write("s.jsonl", R"({"a":"c1","b":"c1","label":"similar"})" "\n"), corpus);
              }).find("self-pair") != std::string::npos);

        const auto dedup = load_pairs(dir.write("d.jsonl", R"({"a":"c1","b":"c2","label":"similar"})" "\n"
                                                           R"({"a":"c2","b":"c1","label":"similar"})" "\n"),
                                      corpus);
        CHECK(dedup.size() == 1);

        const auto msg = error_of([&] {
            load_pairs(dir.write("x.jsonl", R"({"a":"c1","b":"c2","label":"similar"})" "\n"
                                            R"({"a":"c2","b":"c1","label":"dissimilar"})" "\n"),
                       corpus);
        });
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);

        CHECK(error_of([&] {
                  load_pairs(dir.write("u.jsonl", R"({"a":"c1","b":"zz","label":"similar"})" "\n"), corpus);
              }).find("'zz'") != std::string::npos);
    }

    TEST_CASE("CEV1 minimal file loads and reorders to corpus order") {
        TempDir dir;
        const auto corpus = load_claims(dir.write("c.jsonl", claim_line("c1", "en", "k") + claim_line("c2", "en", "k")));
        const auto path = dir.write("e.cev", cev_bytes(2, 3, {1, 2, 3, 4, 5, 6}, "c2\nc1"));
        const auto m = load_embeddings(path, corpus);
        REQUIRE(m.rows() == 2);
        REQUIRE(m.dim() == 3);
        CHECK(m.ids == std::vector<std::string>{"c1", "c2"});
        CHECK(m.data(0, 0) == 4.0f);
        CHECK(m.data(1, 2) == 3.0f);
    }

    TEST_CASE("CEV1 corrupt inputs") {
        TempDir dir;
        const auto corpus = load_claims(dir.write("c.jsonl", claim_line("c1", "en", "k") + claim_line("c2", "en", "k")));
        auto msg = error_of([&] { load_embeddings(dir.write("t.cev", cev_bytes(2, 3, {1, 2, 3, 4, 5, 6}, "c1\nc2").substr(0, 30)), corpus); });
        CHECK(msg.find("truncated") != std::string::npos);
        CHECK(msg.find("expected 24") != std::string::npos);
        CHECK(msg.find("found 10") != std::string::npos);
        msg = error_of([&] { load_embeddings(dir.write("m.cev", cev_bytes(2, 1, {1, 2}, "c1\nc2", "CEVX")), corpus); });
        CHECK(msg.find("magic") != std::string::npos);
        msg = error_of([&] { load_embeddings(dir.write("v.cev", cev_bytes(2, 1, {1, 2}, "c1\nc2", "CEV1", 2)), corpus); });
        CHECK(msg.find("version") != std::string::npos);
        msg = error_of([&] { load_embeddings(dir.write("i.cev", cev_bytes(2, 1, {1, 2}, "c1\nc9")), corpus); });
        CHECK(msg.find("'c9'") != std::string::npos);
        CHECK(msg.find("'c2'") != std::string::npos);
        const float nan = std::numeric_limits<float>::quiet_NaN();
        msg = error_of([&] { load_embeddings(dir.write("n.cev", cev_bytes(2, 2, {1, 2, 3, nan}, "c1\nc2")), corpus); });
        CHECK(msg.find("row 1, column 1") != std::string::npos);
    }

    TEST_CASE("id mismatch lists at most 10 offenders") {
        TempDir dir;
        std::string claims, ids;
        std::vector<float> values;
        for (int i = 0; i < 15; ++i) {
            claims += claim_line("c" + std::to_string(i), "en", "k");
            ids += (i ? "\n" : "") + std::string("x") + std::to_string(i);
            values.push_back(1.0f);
        }
        const auto corpus = load_claims(dir.write("c.jsonl", claims));
        const auto msg = error_of([&] { load_embeddings(dir.write("e.cev", cev_bytes(15, 1, values, ids)), corpus); });
        std::size_t quotes = 0;
        for (char ch : msg) quotes += ch == '\'' ? 1 : 0;
        CHECK(quotes == 20);
    }

    TEST_CASE("1x1 file has the exact layout size and deterministic bytes") {
        TempDir dir;
        EmbeddingMatrix m;
        m.ids = {"a"};
        m.data.resize(1, 1);
        m.data(0, 0) = 0.5f;
        write_embeddings(m, dir / "a.cev");
        write_embeddings(m, dir / "b.cev");
        const auto bytes = slurp(dir / "a.cev");
        CHECK(bytes.size() == 4 + 4 + 8 + 4 + 4 + 8 + 1);
        CHECK(bytes == cev_bytes(1, 1, {0.5f}, "a"));
        CHECK(bytes == slurp(dir / "b.cev"));
    }

    TEST_CASE("empty matrix is rejected") {
        TempDir dir;
        EmbeddingMatrix m;
        m.data.resize(0, 4);
        CHECK_THROWS_AS(write_embeddings(m, dir / "e.cev"), InputError);
    }

    TEST_CASE("property: write then read is exact for random matrices") {
        TempDir dir;
        Rng rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const auto n = static_cast<Index>(1 + rng.uniform_index(20));
            const auto d = static_cast<Index>(1 + rng.uniform_index(9));
            EmbeddingMatrix m;
            m.data.resize(n, d);
            for (Index i = 0; i < n; ++i) {
                m.ids.push_back("id-" + std::to_string(rng.next()) + "-" + std::to_string(i));
                for (Index j = 0; j < d; ++j) {
                    // Arbitrary finite bit patterns, including subnormals and signed zero.
                    std::uint32_t bits = static_cast<std::uint32_t>(rng.next());
                    float f;
                    std::memcpy(&f, &bits, 4);
                    if (!std::isfinite(f)) f = -0.0f;
                    m.data(i, j) = f;
                }
            }
            write_embeddings(m, dir / "r.cev");
            const auto back = read_embeddings(dir / "r.cev");
            REQUIRE(back.ids == m.ids);
            REQUIRE(back.rows() == n);
            REQUIRE(back.dim() == d);
            CHECK(std::memcmp(back.data.data(), m.data.data(), static_cast<std::size_t>(n * d) * 4) == 0);
            write_embeddings(back, dir / "r2.cev");
            CHECK(slurp(dir / "r.cev") == slurp(dir / "r2.cev"));
        }
    }
}
