#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "claimclust/corpus.hpp"
#include "claimclust/error.hpp"
#include "claimclust/geometry.hpp"
#include "claimclust/types.hpp"

namespace claimclust {

struct TrainMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    bool symmetric = false;

    bool operator==(const TrainMeta&) const = default;
};

// Linear projection followed by L2 normalization: f(x) = normalize(W x + bias).
template <typename Scalar>
struct BasicAdapter {
    RowMatrix<Scalar> weight;            // d_out x d_in
    std::optional<Vector<Scalar>> bias;  // d_out
    Scalar scale = Scalar(20);           // similarity multiplier inside the softmax
    TrainMeta meta;

    Index d_in() const { return weight.cols(); }
    Index d_out() const { return weight.rows(); }

    static BasicAdapter identity(Index d, bool with_bias, Scalar scale) {
        BasicAdapter m;
        m.weight = RowMatrix<Scalar>::Identity(d, d);
        if (with_bias) m.bias = Vector<Scalar>::Zero(d);
        m.scale = scale;
        return m;
    }

    template <typename Other>
    BasicAdapter<Other> cast() const {
        BasicAdapter<Other> out;
        out.weight = weight.template cast<Other>();
        if (bias) out.bias = bias->template cast<Other>();
        out.scale = static_cast<Other>(scale);
        out.meta = meta;
        return out;
    }

    // Throws InputError if dimensions are empty, entries non-finite or scale <= 0.
    void validate() const {
        if (d_in() < 1 || d_out() < 1) throw InputError("adapter dimensions must be >= 1");
        if (bias && bias->size() != d_out()) throw InputError("adapter bias length does not match d_out");
        if (!weight.allFinite() || (bias && !bias->allFinite()) || !std::isfinite(static_cast<double>(scale))) {
            throw InputError("adapter has non-finite parameters");
        }
        if (!(scale > Scalar(0))) throw InputError("adapter scale must be positive");
    }
};

using AdapterModel = BasicAdapter<float>;

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 1e-5;
    int epochs = 1;
    std::uint64_t seed = 0;
    double scale = 20.0;
    bool symmetric = false;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

template <typename Scalar>
struct MnrlResult {
    Scalar loss = Scalar(0);
    RowMatrix<Scalar> grad_weight;
    Vector<Scalar> grad_bias;  // zero-length when the model has no bias
};

namespace detail {

// Projects rows and normalizes them; `norms` receives the pre-normalization norms.
template <typename Scalar>
RowMatrix<Scalar> project_rows(const Eigen::Ref<const RowMatrix<Scalar>>& x, const BasicAdapter<Scalar>& model,
                               Vector<Scalar>& norms) {
    RowMatrix<Scalar> z = x * model.weight.transpose();
    if (model.bias) z.rowwise() += model.bias->transpose();
    norms = z.rowwise().norm();
    for (Index i = 0; i < z.rows(); ++i) {
        if (!(norms(i) >= Scalar(kMinNorm))) throw Error("projected row " + std::to_string(i) + " has zero norm");
        z.row(i) /= norms(i);
    }
    return z;
}

// Row-wise softmax cross-entropy against the diagonal. Returns the mean loss and
// writes d(loss)/d(logits) into `grad`.
template <typename Scalar>
Scalar diagonal_cross_entropy(const RowMatrix<Scalar>& logits, RowMatrix<Scalar>& grad) {
    const Index b = logits.rows();
    grad.resize(b, b);
    Scalar total = 0;
    for (Index i = 0; i < b; ++i) {
        const Scalar peak = logits.row(i).maxCoeff();
        Scalar sum = 0;
        for (Index j = 0; j < b; ++j) sum += std::exp(logits(i, j) - peak);
        const Scalar lse = peak + std::log(sum);
        total += lse - logits(i, i);
        for (Index j = 0; j < b; ++j) grad(i, j) = std::exp(logits(i, j) - lse) / Scalar(b);
        grad(i, i) -= Scalar(1) / Scalar(b);
    }
    return total / Scalar(b);
}

// Backpropagates through u = z / |z| given the normalized rows and norms.
template <typename Scalar>
RowMatrix<Scalar> normalize_backward(const RowMatrix<Scalar>& unit, const Vector<Scalar>& norms,
                                     const RowMatrix<Scalar>& grad_unit) {
    RowMatrix<Scalar> out(unit.rows(), unit.cols());
    for (Index i = 0; i < unit.rows(); ++i) {
        const Scalar radial = unit.row(i).dot(grad_unit.row(i));
        out.row(i) = (grad_unit.row(i) - radial * unit.row(i)) / norms(i);
    }
    return out;
}

}  // namespace detail

// Multiple Negatives Ranking Loss over a batch of (anchor_i, positive_i) rows:
// every other positive in the batch is a negative for anchor_i.
//   loss = -(1/B) sum_i log softmax_j(scale * cos(f(a_i), f(p_j)))[j = i]
// With `symmetric`, the loss is the mean of the anchor->positive and
// positive->anchor directions. Gradients are exact.
template <typename Scalar>
MnrlResult<Scalar> mnrl_loss_and_grad(const Eigen::Ref<const RowMatrix<Scalar>>& anchors,
                                      const Eigen::Ref<const RowMatrix<Scalar>>& positives,
                                      const BasicAdapter<Scalar>& model, bool symmetric) {
    if (anchors.rows() < 1 || anchors.rows() != positives.rows()) {
        throw InputError("MNRL needs equally sized, non-empty anchor and positive batches");
    }
    if (anchors.cols() != model.d_in() || positives.cols() != model.d_in()) {
        throw InputError("MNRL batch dimension does not match the adapter input dimension");
    }
    Vector<Scalar> norm_a, norm_p;
    const RowMatrix<Scalar> u = detail::project_rows<Scalar>(anchors, model, norm_a);
    const RowMatrix<Scalar> v = detail::project_rows<Scalar>(positives, model, norm_p);
    const RowMatrix<Scalar> logits = model.scale * (u * v.transpose());

    MnrlResult<Scalar> out;
    RowMatrix<Scalar> grad_logits;
    out.loss = detail::diagonal_cross_entropy<Scalar>(logits, grad_logits);
    if (symmetric) {
        RowMatrix<Scalar> grad_reverse;
        const RowMatrix<Scalar> reversed = logits.transpose();
        const Scalar reverse_loss = detail::diagonal_cross_entropy<Scalar>(reversed, grad_reverse);
        out.loss = (out.loss + reverse_loss) / Scalar(2);
        grad_logits = (grad_logits + grad_reverse.transpose()) / Scalar(2);
    }
    const RowMatrix<Scalar> grad_sim = model.scale * grad_logits;
    const RowMatrix<Scalar> grad_u = grad_sim * v;
    const RowMatrix<Scalar> grad_v = grad_sim.transpose() * u;
    const RowMatrix<Scalar> grad_za = detail::normalize_backward<Scalar>(u, norm_a, grad_u);
    const RowMatrix<Scalar> grad_zp = detail::normalize_backward<Scalar>(v, norm_p, grad_v);

    out.grad_weight = grad_za.transpose() * anchors + grad_zp.transpose() * positives;
    if (model.bias) {
        out.grad_bias = (grad_za.colwise().sum() + grad_zp.colwise().sum()).transpose();
    }
    return out;
}

struct TrainTrace {
    std::vector<double> step_losses;
    std::vector<double> epoch_mean_losses;
    PairDistanceStats positive_before;
    PairDistanceStats positive_after;
    std::optional<PairDistanceStats> negative_before;
    std::optional<PairDistanceStats> negative_after;
};

// Trains on the similar pairs only. Dissimilar pairs, if present, feed the
// negative-pair statistics of the trace.
std::pair<AdapterModel, TrainTrace> train_adapter(const EmbeddingMatrix& embeddings,
                                                  std::span<const ClaimPair> pairs, const TrainConfig& config);

EmbeddingMatrix apply_adapter(const EmbeddingMatrix& embeddings, const AdapterModel& model);

void save_adapter(const AdapterModel& model, const std::filesystem::path& path);
AdapterModel load_adapter(const std::filesystem::path& path);

}  // namespace claimclust
