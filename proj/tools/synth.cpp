// Writes the synthetic fixtures (claims, pairs, embeddings) used by the tests
// so the CLI pipeline can be exercised end to end.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "claimclust/error.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace claimclust;

int main(int argc, char** argv) {
    CLI::App app{"claimclust-synth: write synthetic claim fixtures"};
    app.require_subcommand(1);

    fs::path out_dir = ".";
    fixtures::TwoViewParams tv;
    auto* two_view = app.add_subcommand("two-view", "two-language fixture with train pairs");
    two_view->add_option("--out-dir", out_dir)->required();
    two_view->add_option("--seed", tv.seed);
    two_view->add_option("--topics", tv.topics);

    Index n = 500, k = 10, d = 16;
    double spread = 0.1;
    std::uint64_t seed = 0;
    auto* blobs = app.add_subcommand("blobs", "Gaussian blobs on the unit sphere, one cluster per blob");
    blobs->add_option("--out-dir", out_dir)->required();
    blobs->add_option("--n", n);
    blobs->add_option("--k", k);
    blobs->add_option("--d", d);
    blobs->add_option("--spread", spread);
    blobs->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);
    try {
        fs::create_directories(out_dir);
        if (*two_view) {
            const auto f = fixtures::two_view_fixture(tv);
            fixtures::write_claims_jsonl(f.corpus, out_dir / "claims.jsonl");
            fixtures::write_pairs_jsonl(f.corpus, f.pairs, out_dir / "pairs.jsonl");
            write_embeddings(f.embeddings, out_dir / "embeddings.cev");
        } else {
            const auto b = fixtures::sphere_blobs(n, k, d, spread, seed);
            std::vector<Claim> claims;
            for (Index i = 0; i < n; ++i) {
                const auto& id = b.matrix.ids[static_cast<std::size_t>(i)];
                claims.push_back({id, "point " + id, "xx", "b" + std::to_string(b.labels[static_cast<std::size_t>(i)]),
                                  std::nullopt});
            }
            fixtures::write_claims_jsonl(Corpus(std::move(claims)), out_dir / "claims.jsonl");
            write_embeddings(b.matrix, out_dir / "embeddings.cev");
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
