#include "claimclust/report.hpp"

namespace claimclust {

Json to_json(const CorpusCounts& c) {
    return {{"claims", c.claims}, {"clusters", c.clusters}, {"languages", c.languages}};
}

Json to_json(const PairCounts& c) { return {{"similar", c.similar}, {"dissimilar", c.dissimilar}}; }

Json to_json(const PairDistanceStats& s) {
    Json bins = Json::array();
    for (auto count : s.histogram) bins.push_back(count);
    return {{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"bins", std::move(bins)}};
}

Json to_json(const TrainTrace& t) {
    Json j = {{"step_losses", t.step_losses},
              {"epoch_mean_losses", t.epoch_mean_losses},
              {"positive_before", to_json(t.positive_before)},
              {"positive_after", to_json(t.positive_after)}};
    j["negative_before"] = t.negative_before ? to_json(*t.negative_before) : Json(nullptr);
    j["negative_after"] = t.negative_after ? to_json(*t.negative_after) : Json(nullptr);
    return j;
}

Json to_json(const TrainMeta& m) {
    return {{"seed", m.seed},
            {"epochs", m.epochs},
            {"lr", m.learning_rate},
            {"batch_size", m.batch_size},
            {"symmetric", m.symmetric}};
}

Json to_json(const SweepPoint& p) {
    return {{"threshold", p.threshold}, {"k", p.k}, {"silhouette", p.silhouette}, {"degenerate", p.degenerate}};
}

namespace {

Json points_json(const std::vector<SweepPoint>& points) {
    Json out = Json::array();
    for (const auto& p : points) out.push_back(to_json(p));
    return out;
}

}  // namespace

Json to_json(const AutotuneResult& r) {
    return {{"best_threshold", r.best_threshold},
            {"best_silhouette", r.best_silhouette},
            {"best_k", r.best_k},
            {"grid", points_json(r.grid)},
            {"refinement", points_json(r.refinement)}};
}

Json to_json(const EvaluationReport& r) {
    return {{"ari", r.ari},
            {"ami", r.ami},
            {"homogeneity", r.homogeneity},
            {"completeness", r.completeness},
            {"v_measure", r.v_measure},
            {"silhouette", r.silhouette},
            {"silhouette_degenerate", r.silhouette_degenerate},
            {"k_pred", r.k_pred},
            {"k_true", r.k_true}};
}

Json to_json(const ErrorReport& r) {
    return {{"split_count", r.split_count}, {"mismerge_count", r.mismerge_count}};
}

Json to_json(const LanguageErrorRates& rates) {
    Json out = Json::object();
    for (const auto& [lang, r] : rates) {
        out[lang] = {{"split_rate", r.split_rate}, {"mismerge_rate", r.mismerge_rate}, {"occurrences", r.occurrences}};
    }
    return out;
}

namespace {

Json class_json(const ClassMetrics& m) {
    return {{"claims", m.claims}, {"clusters", m.clusters}, {"ari", m.ari}, {"ami", m.ami}, {"silhouette", m.silhouette}};
}

Json gain_json(const std::optional<ClassGain>& g) {
    if (!g) return nullptr;
    return {{"base", class_json(g->base)},
            {"refined", class_json(g->refined)},
            {"gain", {{"ari", g->ari_gain}, {"ami", g->ami_gain}, {"silhouette", g->silhouette_gain}}}};
}

}  // namespace

Json to_json(const GainReport& r) {
    return {{"monolingual", gain_json(r.monolingual)}, {"multilingual", gain_json(r.multilingual)}};
}

Json to_json(const SweepCurve& c) {
    Json points = Json::array();
    for (const auto& p : c.points) {
        points.push_back({{"k", p.k}, {"ari", p.ari}, {"ami", p.ami}, {"silhouette", p.silhouette}});
    }
    return {{"points", std::move(points)}, {"auc_ari", c.auc_ari}, {"auc_ami", c.auc_ami},
            {"auc_ss", c.auc_ss},          {"max_ari", c.max_ari}, {"max_ami", c.max_ami}};
}

}  // namespace claimclust
