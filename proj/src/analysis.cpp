#include "claimclust/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "claimclust/error.hpp"
#include "csv_util.hpp"

namespace claimclust {

ErrorReport split_mismerge(const ClusterAssignment& truth, const ClusterAssignment& pred) {
    if (truth.size() != pred.size()) {
        throw InputError("split_mismerge: truth has " + std::to_string(truth.size()) + " labels, pred has " +
                         std::to_string(pred.size()));
    }
    const auto n = static_cast<std::size_t>(truth.size());
    // First partner label seen per cluster; -2 marks "more than one".
    constexpr Index kUnseen = -1;
    constexpr Index kMixed = -2;
    std::vector<Index> truth_pred(static_cast<std::size_t>(truth.k), kUnseen);
    std::vector<Index> pred_truth(static_cast<std::size_t>(pred.k), kUnseen);
    auto note = [](Index& slot, Index label) {
        if (slot == kUnseen) {
            slot = label;
        } else if (slot != label) {
            slot = kMixed;
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        note(truth_pred[static_cast<std::size_t>(truth.labels[i])], pred.labels[i]);
        note(pred_truth[static_cast<std::size_t>(pred.labels[i])], truth.labels[i]);
    }
    ErrorReport r;
    // A truth cluster spanning two predicted clusters necessarily has size >= 2.
    r.split_count = std::count(truth_pred.begin(), truth_pred.end(), kMixed);
    r.mismerge_count = std::count(pred_truth.begin(), pred_truth.end(), kMixed);
    r.split_flags.resize(n);
    r.mismerge_flags.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.split_flags[i] = truth_pred[static_cast<std::size_t>(truth.labels[i])] == kMixed;
        r.mismerge_flags[i] = pred_truth[static_cast<std::size_t>(pred.labels[i])] == kMixed;
    }
    return r;
}

LanguageErrorRates language_error_rates(const Corpus& corpus, const ErrorReport& report) {
    const auto n = static_cast<std::size_t>(corpus.size());
    if (report.split_flags.size() != n || report.mismerge_flags.size() != n) {
        throw InputError("error report covers " + std::to_string(report.split_flags.size()) +
                         " claims but the corpus has " + std::to_string(n));
    }
    std::map<std::string, std::pair<Index, Index>> flagged;
    LanguageErrorRates rates;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& lang = corpus[static_cast<Index>(i)].lang;
        auto& rate = rates[lang];
        auto& f = flagged[lang];
        ++rate.occurrences;
        f.first += report.split_flags[i] ? 1 : 0;
        f.second += report.mismerge_flags[i] ? 1 : 0;
    }
    for (auto& [lang, rate] : rates) {
        const auto& f = flagged[lang];
        rate.split_rate = static_cast<double>(f.first) / static_cast<double>(rate.occurrences);
        rate.mismerge_rate = static_cast<double>(f.second) / static_cast<double>(rate.occurrences);
    }
    return rates;
}

namespace {

EmbeddingMatrix take_rows(const EmbeddingMatrix& m, std::span<const Index> rows) {
    EmbeddingMatrix out;
    out.data.resize(static_cast<Index>(rows.size()), m.dim());
    out.ids.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.data.row(static_cast<Index>(r)) = m.data.row(rows[r]);
        out.ids.push_back(m.ids[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

ClassMetrics class_metrics(const ClusterAssignment& truth, const ClusterAssignment& pred,
                           const EmbeddingMatrix& embeddings, std::span<const Index> members, Index sample_cap,
                           std::uint64_t seed) {
    const auto t = truth.restrict_to(members);
    const auto p = pred.restrict_to(members);
    ClassMetrics m;
    m.claims = static_cast<Index>(members.size());
    m.clusters = t.k;
    m.ari = ari(t, p);
    m.ami = ami(t, p);
    const SilhouetteEvaluator evaluator(take_rows(embeddings, members), sample_cap, seed);
    m.silhouette = evaluator.score(p);
    return m;
}

}  // namespace

GainReport lingual_gain(const Corpus& corpus, const ClusterAssignment& truth, const GainInputs& in,
                        Index sample_cap, std::uint64_t seed) {
    const Index n = corpus.size();
    for (const auto* a : {&truth, &in.base_pred, &in.refined_pred}) {
        if (a->size() != n) throw InputError("lingual_gain: assignment length does not match the corpus");
    }
    for (const auto* e : {&in.base_embeddings, &in.refined_embeddings}) {
        if (e->rows() != n) throw InputError("lingual_gain: embedding rows do not match the corpus");
    }
    std::vector<std::set<std::string>> langs(static_cast<std::size_t>(truth.k));
    for (Index i = 0; i < n; ++i) langs[static_cast<std::size_t>(truth.labels[static_cast<std::size_t>(i)])].insert(corpus[i].lang);

    std::vector<Index> mono;
    std::vector<Index> multi;
    for (Index i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(truth.labels[static_cast<std::size_t>(i)]);
        (langs[c].size() > 1 ? multi : mono).push_back(i);
    }
    auto score = [&](const std::vector<Index>& members) -> std::optional<ClassGain> {
        if (members.size() < 2) return std::nullopt;
        ClassGain g;
        g.base = class_metrics(truth, in.base_pred, in.base_embeddings, members, sample_cap, seed);
        g.refined = class_metrics(truth, in.refined_pred, in.refined_embeddings, members, sample_cap, seed);
        g.ari_gain = g.refined.ari - g.base.ari;
        g.ami_gain = g.refined.ami - g.base.ami;
        g.silhouette_gain = g.refined.silhouette - g.base.silhouette;
        return g;
    };
    return {score(mono), score(multi)};
}

double trapezoid_auc(std::span<const Index> ks, std::span<const double> values) {
    if (ks.empty() || ks.size() != values.size()) throw InputError("trapezoid_auc needs equal, non-empty series");
    if (ks.size() == 1) return values[0];
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
        const auto width = static_cast<double>(ks[i + 1] - ks[i]);
        if (!(width > 0)) throw InputError("trapezoid_auc needs strictly increasing k");
        area += 0.5 * (values[i] + values[i + 1]) * width;
    }
    return area / static_cast<double>(ks.back() - ks.front());
}

SweepCurve config_sweep(const EmbeddingMatrix& matrix, const Dendrogram& dendrogram, const ClusterAssignment& truth,
                        Index k_true, double band, Index k_step, Index sample_cap, std::uint64_t seed,
                        std::span<const Index> labeled) {
    const Index n = dendrogram.n;
    const Index expected_truth = labeled.empty() ? n : static_cast<Index>(labeled.size());
    if (matrix.rows() != n || truth.size() != expected_truth) {
        throw InputError("config_sweep: inputs are not aligned");
    }
    if (k_step < 1) throw InputError("k_step must be >= 1");
    if (!(band >= 0.0) || !std::isfinite(band)) throw InputError("band must be a finite non-negative number");
    // Tolerance keeps e.g. 0.9 * 10 from rounding past an integer.
    const auto kt = static_cast<double>(k_true);
    const Index lo = std::max<Index>(2, static_cast<Index>(std::ceil((1.0 - band) * kt - 1e-9)));
    const Index hi = std::min<Index>(n - 1, static_cast<Index>(std::floor((1.0 + band) * kt + 1e-9)));
    if (lo > hi) {
        throw InputError("empty k range: [" + std::to_string(lo) + ", " + std::to_string(hi) + "] for k_true " +
                         std::to_string(k_true) + " and n " + std::to_string(n));
    }
    const SilhouetteEvaluator evaluator(matrix, sample_cap, seed);
    SweepCurve curve;
    std::vector<Index> ks;
    std::vector<double> a, m, s;
    for (Index k = lo; k <= hi; k += k_step) {
        const auto pred = cut_by_count(dendrogram, k);
        const auto scored = labeled.empty() ? pred : pred.restrict_to(labeled);
        SweepSample p{k, ari(truth, scored), ami(truth, scored), evaluator.score(pred)};
        curve.points.push_back(p);
        ks.push_back(k);
        a.push_back(p.ari);
        m.push_back(p.ami);
        s.push_back(p.silhouette);
    }
    curve.auc_ari = trapezoid_auc(ks, a);
    curve.auc_ami = trapezoid_auc(ks, m);
    curve.auc_ss = trapezoid_auc(ks, s);
    curve.max_ari = *std::max_element(a.begin(), a.end());
    curve.max_ami = *std::max_element(m.begin(), m.end());
    return curve;
}

void write_language_rates_csv(const LanguageErrorRates& rates, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "language,split_rate,mismerge_rate,occurrences\n";
    for (const auto& [lang, r] : rates) {
        out << csv::quote(lang) << ',' << csv::format_double(r.split_rate) << ','
            << csv::format_double(r.mismerge_rate) << ',' << r.occurrences << '\n';
    }
}

void write_sweep_csv(const SweepCurve& curve, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "k,ari,ami,ss\n";
    for (const auto& p : curve.points) {
        out << p.k << ',' << csv::format_double(p.ari) << ',' << csv::format_double(p.ami) << ','
            << csv::format_double(p.silhouette) << '\n';
    }
}

void write_error_flags_csv(std::span<const std::string> ids, const ErrorReport& report,
                           const std::filesystem::path& path) {
    if (ids.size() != report.split_flags.size()) throw InputError("error flags do not match the id list");
    auto out = csv::open_out(path);
    out << "claim_id,split,mismerge\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << csv::quote(ids[i]) << ',' << (report.split_flags[i] ? 1 : 0) << ','
            << (report.mismerge_flags[i] ? 1 : 0) << '\n';
    }
}

}  // namespace claimclust
