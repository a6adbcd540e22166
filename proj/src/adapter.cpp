#include "claimclust/adapter.hpp"

#include <cstring>
#include <numeric>

#include <json.hpp>

#include "claimclust/random.hpp"
#include "io_util.hpp"

namespace claimclust {

void TrainConfig::validate() const {
    if (batch_size < 2) throw InputError("batch_size must be >= 2");
    if (!(learning_rate >= 0.0)) throw InputError("learning_rate must be >= 0");
    if (epochs < 1) throw InputError("epochs must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("scale must be a positive finite number");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InputError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw InputError("Adam epsilon must be positive");
}

namespace {

// Adam over one contiguous parameter block.
class AdamState {
  public:
    explicit AdamState(Index size) : m_(VectorD::Zero(size)), v_(VectorD::Zero(size)) {}

    void step(double* param, const double* grad, const TrainConfig& cfg, long t) {
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (Index i = 0; i < m_.size(); ++i) {
            m_(i) = cfg.beta1 * m_(i) + (1.0 - cfg.beta1) * grad[i];
            v_(i) = cfg.beta2 * v_(i) + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double m_hat = m_(i) / bc1;
            const double v_hat = v_(i) / bc2;
            param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }

  private:
    VectorD m_;
    VectorD v_;
};

void gather_rows(const MatrixF& source, std::span<const Index> rows, MatrixD& out) {
    out.resize(static_cast<Index>(rows.size()), source.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = source.row(rows[i]).cast<double>();
    }
}

}  // namespace

std::pair<AdapterModel, TrainTrace> train_adapter(const EmbeddingMatrix& embeddings,
                                                  std::span<const ClaimPair> pairs, const TrainConfig& config) {
    config.validate();
    const Index d = embeddings.dim();
    if (d < 1) throw InputError("embeddings have no columns");
    std::vector<ClaimPair> positives;
    std::vector<ClaimPair> negatives;
    for (const auto& p : pairs) {
        if (p.a < 0 || p.b < 0 || p.a >= embeddings.rows() || p.b >= embeddings.rows()) {
            throw InputError("training pair references a row outside the embedding matrix");
        }
        (p.label == PairLabel::kSimilar ? positives : negatives).push_back(p);
    }
    if (positives.size() < 2) {
        throw InputError("training needs at least 2 similar pairs, got " + std::to_string(positives.size()));
    }

    TrainTrace trace;
    trace.positive_before = pair_distance_stats(embeddings, positives, LabelFilter::kSimilar);
    if (!negatives.empty()) trace.negative_before = pair_distance_stats(embeddings, negatives, LabelFilter::kDissimilar);

    auto model = BasicAdapter<double>::identity(d, /*with_bias=*/true, config.scale);
    AdamState weight_state(d * d);
    AdamState bias_state(d);

    Rng rng(config.seed);
    std::vector<std::size_t> order(positives.size());
    const auto batch = static_cast<std::size_t>(config.batch_size);
    std::vector<Index> anchor_rows, positive_rows;
    MatrixD anchors, targets;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_sum = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            if (stop - start < 2) break;  // a lone pair has no in-batch negatives
            anchor_rows.clear();
            positive_rows.clear();
            for (std::size_t k = start; k < stop; ++k) {
                anchor_rows.push_back(positives[order[k]].a);
                positive_rows.push_back(positives[order[k]].b);
            }
            gather_rows(embeddings.data, anchor_rows, anchors);
            gather_rows(embeddings.data, positive_rows, targets);
            const auto result = mnrl_loss_and_grad<double>(anchors, targets, model, config.symmetric);
            if (!std::isfinite(result.loss)) throw Error("training loss became non-finite at step " + std::to_string(step));
            ++step;
            weight_state.step(model.weight.data(), result.grad_weight.data(), config, step);
            bias_state.step(model.bias->data(), result.grad_bias.data(), config, step);
            trace.step_losses.push_back(result.loss);
            epoch_sum += result.loss;
            ++epoch_steps;
        }
        trace.epoch_mean_losses.push_back(epoch_steps ? epoch_sum / static_cast<double>(epoch_steps) : 0.0);
    }

    AdapterModel trained = model.cast<float>();
    trained.meta = {config.seed, config.epochs, config.learning_rate, config.batch_size, config.symmetric};
    trained.validate();

    const EmbeddingMatrix projected = apply_adapter(embeddings, trained);
    trace.positive_after = pair_distance_stats(projected, positives, LabelFilter::kSimilar);
    if (!negatives.empty()) trace.negative_after = pair_distance_stats(projected, negatives, LabelFilter::kDissimilar);
    return {std::move(trained), std::move(trace)};
}

EmbeddingMatrix apply_adapter(const EmbeddingMatrix& embeddings, const AdapterModel& model) {
    model.validate();
    if (embeddings.dim() != model.d_in()) {
        throw InputError("adapter expects dimension " + std::to_string(model.d_in()) + ", embeddings have " +
                         std::to_string(embeddings.dim()));
    }
    const MatrixD weight = model.weight.cast<double>();
    MatrixD z = embeddings.data.cast<double>() * weight.transpose();
    if (model.bias) z.rowwise() += model.bias->cast<double>().transpose();
    EmbeddingMatrix out;
    out.ids = embeddings.ids;
    out.data.resize(z.rows(), z.cols());
    for (Index r = 0; r < z.rows(); ++r) {
        const double norm = z.row(r).norm();
        if (!(norm >= kMinNorm)) {
            throw Error("adapter maps claim '" + embeddings.ids[static_cast<std::size_t>(r)] + "' to a zero vector");
        }
        out.data.row(r) = (z.row(r) / norm).cast<float>();
    }
    return out;
}

namespace {

constexpr char kC2vaMagic[4] = {'C', '2', 'V', 'A'};
constexpr std::uint32_t kC2vaVersion = 1;

}  // namespace

void save_adapter(const AdapterModel& model, const std::filesystem::path& path) {
    model.validate();
    io::ByteWriter w;
    w.write_bytes(kC2vaMagic, 4);
    w.write<std::uint32_t>(kC2vaVersion);
    w.write<std::uint32_t>(static_cast<std::uint32_t>(model.d_in()));
    w.write<std::uint32_t>(static_cast<std::uint32_t>(model.d_out()));
    w.write<std::uint8_t>(model.bias ? 1 : 0);
    w.write_floats(model.weight.data(), static_cast<std::size_t>(model.weight.size()));
    if (model.bias) w.write_floats(model.bias->data(), static_cast<std::size_t>(model.bias->size()));
    w.write<float>(model.scale);
    const nlohmann::json meta = {
        {"seed", model.meta.seed},
        {"epochs", model.meta.epochs},
        {"lr", model.meta.learning_rate},
        {"batch_size", model.meta.batch_size},
        {"symmetric", model.meta.symmetric},
    };
    const std::string blob = meta.dump();
    w.write<std::uint64_t>(blob.size());
    w.write_bytes(blob.data(), blob.size());
    io::write_file(path, w.bytes());
}

AdapterModel load_adapter(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kC2vaMagic, 4) != 0) {
        throw InputError(path.string() + ": bad magic (expected 'C2VA')");
    }
    io::ByteReader r(bytes, path.string());
    r.skip(4);
    const auto version = r.read<std::uint32_t>("version");
    if (version != kC2vaVersion) throw InputError(path.string() + ": unsupported version " + std::to_string(version));
    const auto d_in = r.read<std::uint32_t>("d_in");
    const auto d_out = r.read<std::uint32_t>("d_out");
    const auto has_bias = r.read<std::uint8_t>("has_bias");
    if (d_in < 1 || d_out < 1) throw InputError(path.string() + ": adapter dimensions must be >= 1");
    if (has_bias > 1) throw InputError(path.string() + ": has_bias must be 0 or 1");
    const std::uint64_t floats = std::uint64_t{d_in} * d_out + (has_bias ? d_out : 0) + 1;
    if (r.remaining() < floats * 4 + 8) {
        throw InputError(path.string() + ": truncated payload: expected at least " + std::to_string(floats * 4 + 8) +
                         " bytes after the header, found " + std::to_string(r.remaining()));
    }
    AdapterModel model;
    model.weight.resize(d_out, d_in);
    r.read_floats(model.weight.data(), static_cast<std::size_t>(model.weight.size()));
    if (has_bias) {
        model.bias = VectorF(d_out);
        r.read_floats(model.bias->data(), d_out);
    }
    model.scale = r.read<float>("scale");
    const auto meta_len = r.read<std::uint64_t>("meta length");
    if (r.remaining() != meta_len) {
        throw InputError(path.string() + ": meta block: expected " + std::to_string(meta_len) + " bytes, found " +
                         std::to_string(r.remaining()));
    }
    try {
        const auto meta = nlohmann::json::parse(r.read_string(static_cast<std::size_t>(meta_len)));
        model.meta.seed = meta.at("seed").get<std::uint64_t>();
        model.meta.epochs = meta.at("epochs").get<int>();
        model.meta.learning_rate = meta.at("lr").get<double>();
        model.meta.batch_size = meta.at("batch_size").get<int>();
        model.meta.symmetric = meta.at("symmetric").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": invalid meta JSON (" + e.what() + ")");
    }
    model.validate();
    return model;
}

}  // namespace claimclust
