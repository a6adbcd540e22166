#include <doctest.h>

#include <cmath>
#include <cstring>

#include "claimclust/adapter.hpp"
#include "claimclust/random.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace claimclust;
using claimclust::testing::slurp;
using claimclust::testing::TempDir;

namespace {

MatrixD gaussian(Index r, Index c, Rng& rng) {
    MatrixD m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    }
    return m;
}

BasicAdapter<double> random_model(Index d_out, Index d_in, bool bias, Rng& rng) {
    BasicAdapter<double> m;
    m.weight = MatrixD::Identity(d_out, d_in) + 0.3 * gaussian(d_out, d_in, rng);
    if (bias) m.bias = 0.2 * gaussian(d_out, 1, rng).col(0);
    m.scale = 1.0 + 19.0 * rng.uniform01();
    return m;
}

double gradient_error(const MatrixD& a, const MatrixD& p, const BasicAdapter<double>& model, bool symmetric) {
    return gradcheck::worst_relative_error(a, p, model, symmetric);
}

EmbeddingMatrix to_embeddings(const MatrixD& x) {
    EmbeddingMatrix m;
    m.data = x.cast<float>();
    for (Index i = 0; i < x.rows(); ++i) m.ids.push_back("x" + std::to_string(i));
    return m;
}

}  // namespace

TEST_SUITE("adapter") {
    TEST_CASE("single-pair batch has zero loss") {
        Rng rng(1);
        const auto model = random_model(4, 4, true, rng);
        const auto r = mnrl_loss_and_grad<double>(gaussian(1, 4, rng), gaussian(1, 4, rng), model, false);
        CHECK(r.loss == 0.0);
    }

    TEST_CASE("identical projections give ln B") {
        const auto model = BasicAdapter<double>::identity(3, false, 20.0);
        MatrixD x(8, 3);
        for (Index i = 0; i < 8; ++i) x.row(i) << 1.0 + i, 2.0 + 2.0 * i, 0.5 + 0.5 * i;  // one direction, varied norms
        for (bool sym : {false, true}) {
            CHECK(mnrl_loss_and_grad<double>(x, x, model, sym).loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));
        }
    }

    TEST_CASE("analytic gradient matches finite differences on a 4x5 batch") {
        Rng rng(2);
        const auto model = random_model(5, 5, true, rng);
        const MatrixD a = gaussian(4, 5, rng), p = gaussian(4, 5, rng);
        CHECK(gradient_error(a, p, model, false) < 1e-4);
        CHECK(gradient_error(a, p, model, true) < 1e-4);
    }

    TEST_CASE("property: gradients across random batches, shapes and bias settings") {
        Rng rng(3);
        for (int trial = 0; trial < 40; ++trial) {
            const auto b = static_cast<Index>(1 + rng.uniform_index(8));
            const auto d_in = static_cast<Index>(1 + rng.uniform_index(16));
            const auto d_out = static_cast<Index>(1 + rng.uniform_index(16));
            const auto model = random_model(d_out, d_in, trial % 3 != 0, rng);
            const MatrixD a = gaussian(b, d_in, rng), p = gaussian(b, d_in, rng);
            CHECK(gradient_error(a, p, model, trial % 2 == 0) < 1e-4);
        }
    }

    TEST_CASE("property: loss is non-negative and invariant to positive row rescaling") {
        Rng rng(4);
        for (int trial = 0; trial < 100; ++trial) {
            const auto b = static_cast<Index>(1 + rng.uniform_index(8));
            const auto d = static_cast<Index>(1 + rng.uniform_index(10));
            const auto model = random_model(d, d, false, rng);
            MatrixD a = gaussian(b, d, rng);
            const MatrixD p = gaussian(b, d, rng);
            const double loss = mnrl_loss_and_grad<double>(a, p, model, false).loss;
            CHECK(loss >= 0.0);
            a.row(static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(b)))) *= 3.0;
            CHECK(mnrl_loss_and_grad<double>(a, p, model, false).loss == doctest::Approx(loss).epsilon(1e-12));
        }
    }

    TEST_CASE("loss reaches zero when the diagonal dominates beyond precision") {
        auto model = BasicAdapter<double>::identity(4, false, 1000.0);
        const MatrixD e = MatrixD::Identity(4, 4);
        CHECK(mnrl_loss_and_grad<double>(e, e, model, false).loss == 0.0);
        model.scale = 1.0;
        CHECK(mnrl_loss_and_grad<double>(e, e, model, false).loss > 0.0);
    }

    TEST_CASE("zero projection is an error") {
        auto model = BasicAdapter<double>::identity(2, false, 20.0);
        MatrixD a(2, 2);
        a << 1, 0, 0, 0;
        CHECK_THROWS_AS(mnrl_loss_and_grad<double>(a, a, model, false), Error);
    }

    TEST_CASE("apply: identity, scaled identity, random projections") {
        Rng rng(5);
        MatrixD x = gaussian(20, 6, rng);
        x.rowwise().normalize();
        const auto emb = to_embeddings(x);
        auto model = AdapterModel::identity(6, true, 20.0f);
        auto out = apply_adapter(emb, model);
        CHECK(out.ids == emb.ids);
        CHECK((out.data - emb.data).cwiseAbs().maxCoeff() <= 1e-6f);

        model.weight *= 2.0f;
        out = apply_adapter(emb, model);
        CHECK((out.data - emb.data).cwiseAbs().maxCoeff() <= 1e-6f);

        model.weight = gaussian(9, 6, rng).cast<float>();
        model.bias = gaussian(9, 1, rng).col(0).cast<float>();
        out = apply_adapter(emb, model);
        REQUIRE(out.dim() == 9);
        for (Index i = 0; i < out.rows(); ++i) CHECK(std::abs(out.data.row(i).cast<double>().norm() - 1.0) <= 1e-6);
    }

    TEST_CASE("apply reports the claim whose projection vanishes") {
        EmbeddingMatrix emb;
        emb.ids = {"ok", "bad"};
        emb.data.resize(2, 2);
        emb.data << 1, 0, 0, 1;
        auto model = AdapterModel::identity(2, false, 20.0f);
        model.weight(1, 1) = 0.0f;
        try {
            apply_adapter(emb, model);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("'bad'") != std::string::npos);
        }
    }

    TEST_CASE("save/load round trip is bit exact, with and without bias") {
        TempDir dir;
        Rng rng(6);
        AdapterModel m;
        m.weight = gaussian(3, 5, rng).cast<float>();
        m.bias = gaussian(3, 1, rng).col(0).cast<float>();
        m.scale = 17.5f;
        m.meta = {42, 3, 1e-3, 16, true};
        save_adapter(m, dir / "a.c2va");
        const auto back = load_adapter(dir / "a.c2va");
        CHECK(std::memcmp(back.weight.data(), m.weight.data(), 15 * 4) == 0);
        REQUIRE(back.bias.has_value());
        CHECK(std::memcmp(back.bias->data(), m.bias->data(), 3 * 4) == 0);
        CHECK(back.scale == m.scale);
        CHECK(back.meta == m.meta);

        m.bias.reset();
        save_adapter(m, dir / "b.c2va");
        const auto nb = load_adapter(dir / "b.c2va");
        CHECK_FALSE(nb.bias.has_value());
        // Layout: 4 magic + 4 version + 4 d_in + 4 d_out + 1 has_bias + W + scale + 8 + meta.
        const auto bytes = slurp(dir / "b.c2va");
        CHECK(bytes.substr(0, 4) == "C2VA");
        CHECK(bytes[16] == 0);
        std::uint64_t meta_len = 0;
        std::memcpy(&meta_len, bytes.data() + 17 + 15 * 4 + 4, 8);
        CHECK(bytes.size() == 17 + 15 * 4 + 4 + 8 + meta_len);

        EmbeddingMatrix emb;
        emb.ids = {"a"};
        emb.data = gaussian(1, 5, rng).cast<float>();
        const VectorD expect = (m.weight.cast<double>() * emb.data.row(0).transpose().cast<double>()).normalized();
        const auto out = apply_adapter(emb, nb);
        CHECK((out.data.row(0).transpose().cast<double>() - expect).cwiseAbs().maxCoeff() <= 1e-6);
    }

    TEST_CASE("corrupt adapter files") {
        TempDir dir;
        auto m = AdapterModel::identity(4, true, 20.0f);
        save_adapter(m, dir / "a.c2va");
        const auto bytes = slurp(dir / "a.c2va");
        const auto trunc = dir.write("t.c2va", bytes.substr(0, 40));
        try {
            load_adapter(trunc);
            FAIL("expected a truncation error");
        } catch (const InputError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("expected") != std::string::npos);
            CHECK(msg.find("23") != std::string::npos);  // 40 - 17 header bytes remain
        }
        CHECK_THROWS_AS(load_adapter(dir.write("m.c2va", "XXXX" + bytes.substr(4))), InputError);
    }

    TEST_CASE("training: zero learning rate keeps the identity; seeds make runs byte-identical") {
        fixtures::TwoViewParams p;
        p.topics = 8;
        const auto f = fixtures::two_view_fixture(p);
        TrainConfig cfg;
        cfg.learning_rate = 0.0;
        cfg.batch_size = 8;
        auto [frozen, trace0] = train_adapter(f.embeddings, f.pairs, cfg);
        CHECK(frozen.weight == RowMatrix<float>::Identity(p.d, p.d));
        CHECK(frozen.bias->isZero(0));
        CHECK(trace0.step_losses.size() == 25);  // 4 train topics x 5 clusters x 10 pairs = 200 pairs

        cfg.learning_rate = 1e-3;
        cfg.seed = 42;
        TempDir dir;
        const auto [m1, t1] = train_adapter(f.embeddings, f.pairs, cfg);
        const auto [m2, t2] = train_adapter(f.embeddings, f.pairs, cfg);
        save_adapter(m1, dir / "1.c2va");
        save_adapter(m2, dir / "2.c2va");
        CHECK(slurp(dir / "1.c2va") == slurp(dir / "2.c2va"));
        CHECK(t1.step_losses == t2.step_losses);
        for (double l : t1.step_losses) {
            CHECK(std::isfinite(l));
            CHECK(l >= 0.0);
        }
        cfg.seed = 43;
        const auto [m3, t3] = train_adapter(f.embeddings, f.pairs, cfg);
        CHECK(t3.step_losses != t1.step_losses);
    }

    TEST_CASE("training batches and remainders") {
        fixtures::TwoViewParams p;
        p.topics = 2;  // 10 clusters of 5 -> group 1 has 5 clusters, 50 similar pairs
        const auto f = fixtures::two_view_fixture(p);
        REQUIRE(std::count_if(f.pairs.begin(), f.pairs.end(), [](const ClaimPair& x) { return x.label == PairLabel::kSimilar; }) == 50);
        TrainConfig cfg;
        cfg.batch_size = 7;  // 7 full batches + remainder 1 (dropped)
        cfg.epochs = 2;
        const auto [m, t] = train_adapter(f.embeddings, f.pairs, cfg);
        CHECK(t.step_losses.size() == 14);
        CHECK(t.epoch_mean_losses.size() == 2);
        cfg.batch_size = 8;  // 6 full batches + remainder 2 (trained)
        cfg.epochs = 1;
        CHECK(train_adapter(f.embeddings, f.pairs, cfg).second.step_losses.size() == 7);
        REQUIRE(t.negative_before.has_value());

        const std::vector<ClaimPair> one = {f.pairs.front()};
        CHECK_THROWS_AS(train_adapter(f.embeddings, one, cfg), InputError);
        cfg.batch_size = 1;
        CHECK_THROWS_AS(train_adapter(f.embeddings, f.pairs, cfg), InputError);
    }
}
