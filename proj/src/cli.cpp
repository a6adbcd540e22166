#include "claimclust/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <variant>

#include "claimclust/analysis.hpp"
#include "claimclust/error.hpp"
#include "claimclust/hac.hpp"
#include "claimclust/metrics.hpp"
#include "csv_util.hpp"

namespace claimclust {

namespace fs = std::filesystem;

namespace {

using FieldRef = std::variant<std::string*, int*, Index*, std::uint64_t*, double*, bool*, std::optional<double>*>;

struct Key {
    const char* name;
    std::function<FieldRef(RunConfig&)> field;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"claims", [](RunConfig& c) -> FieldRef { return &c.claims; }},
        {"pairs", [](RunConfig& c) -> FieldRef { return &c.pairs; }},
        {"embeddings", [](RunConfig& c) -> FieldRef { return &c.embeddings; }},
        {"adapter", [](RunConfig& c) -> FieldRef { return &c.adapter; }},
        {"out_dir", [](RunConfig& c) -> FieldRef { return &c.out_dir; }},
        {"projected", [](RunConfig& c) -> FieldRef { return &c.projected; }},
        {"base_embeddings", [](RunConfig& c) -> FieldRef { return &c.base_embeddings; }},
        {"base_assignment", [](RunConfig& c) -> FieldRef { return &c.base_assignment; }},
        {"assignment", [](RunConfig& c) -> FieldRef { return &c.assignment; }},
        {"dendrogram", [](RunConfig& c) -> FieldRef { return &c.dendrogram; }},
        {"batch_size", [](RunConfig& c) -> FieldRef { return &c.train.batch_size; }},
        {"learning_rate", [](RunConfig& c) -> FieldRef { return &c.train.learning_rate; }},
        {"epochs", [](RunConfig& c) -> FieldRef { return &c.train.epochs; }},
        {"scale", [](RunConfig& c) -> FieldRef { return &c.train.scale; }},
        {"symmetric", [](RunConfig& c) -> FieldRef { return &c.train.symmetric; }},
        {"auto_threshold", [](RunConfig& c) -> FieldRef { return &c.auto_threshold; }},
        {"threshold", [](RunConfig& c) -> FieldRef { return &c.threshold; }},
        {"grid_lo", [](RunConfig& c) -> FieldRef { return &c.autotune.grid_lo; }},
        {"grid_hi", [](RunConfig& c) -> FieldRef { return &c.autotune.grid_hi; }},
        {"step", [](RunConfig& c) -> FieldRef { return &c.autotune.step; }},
        {"refine_count", [](RunConfig& c) -> FieldRef { return &c.autotune.refine_count; }},
        {"sample_cap", [](RunConfig& c) -> FieldRef { return &c.autotune.sample_cap; }},
        {"subset_size", [](RunConfig& c) -> FieldRef { return &c.subset_size; }},
        {"subsets", [](RunConfig& c) -> FieldRef { return &c.subsets; }},
        {"band", [](RunConfig& c) -> FieldRef { return &c.band; }},
        {"k_step", [](RunConfig& c) -> FieldRef { return &c.k_step; }},
        {"k_true", [](RunConfig& c) -> FieldRef { return &c.k_true; }},
        {"label_filter", [](RunConfig& c) -> FieldRef { return &c.label_filter; }},
        {"ward_backend", [](RunConfig& c) -> FieldRef { return &c.ward_backend; }},
        {"seed", [](RunConfig& c) -> FieldRef { return &c.seed; }},
        {"memory_cap", [](RunConfig& c) -> FieldRef { return &c.memory_cap; }},
    };
    return table;
}

std::string kebab(std::string name) {
    std::replace(name.begin(), name.end(), '_', '-');
    return name;
}

template <typename Int>
void assign_integer(Int* dst, const Json& v, const std::string& key) {
    if (!v.is_number_integer()) throw InputError("config key '" + key + "' must be an integer");
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
            throw InputError("config key '" + key + "' is out of range");
        }
        *dst = static_cast<Int>(u);
        return;
    }
    const auto s = v.get<std::int64_t>();
    if (s < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
        (s > 0 && static_cast<std::uint64_t>(s) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))) {
        throw InputError("config key '" + key + "' is out of range");
    }
    *dst = static_cast<Int>(s);
}

void assign(FieldRef ref, const Json& v, const std::string& key) {
    std::visit(
        [&](auto* dst) {
            using T = std::remove_pointer_t<decltype(dst)>;
            if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw InputError("config key '" + key + "' must be a string");
                *dst = v.get<std::string>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw InputError("config key '" + key + "' must be a boolean");
                *dst = v.get<bool>();
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw InputError("config key '" + key + "' must be a number");
                *dst = v.get<double>();
            } else if constexpr (std::is_same_v<T, std::optional<double>>) {
                if (v.is_null()) {
                    dst->reset();
                } else if (v.is_number()) {
                    *dst = v.get<double>();
                } else {
                    throw InputError("config key '" + key + "' must be a number or null");
                }
            } else {
                assign_integer(dst, v, key);
            }
        },
        ref);
}

Json flag_value(FieldRef ref, const std::string& text, const std::string& flag) {
    auto fail = [&]() -> Json { throw InputError("invalid value '" + text + "' for " + flag); };
    return std::visit(
        [&](auto* dst) -> Json {
            using T = std::remove_pointer_t<decltype(dst)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return text;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (text == "true" || text == "1") return true;
                if (text == "false" || text == "0") return false;
                return fail();
            } else if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::optional<double>>) {
                if (std::is_same_v<T, std::optional<double>> && text == "null") return nullptr;
                double x = 0.0;
                const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
                if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return fail();
                return x;
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                std::uint64_t x = 0;
                const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
                if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return fail();
                return x;
            } else {
                std::int64_t x = 0;
                const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
                if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return fail();
                return x;
            }
        },
        ref);
}

}  // namespace

void RunConfig::merge(const Json& object) {
    if (!object.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [name, value] : object.items()) {
        const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return name == k.name; });
        if (it == keys().end()) throw InputError("unknown config key '" + name + "'");
        assign(it->field(*this), value, name);
    }
}

Json RunConfig::to_json() const {
    Json out = Json::object();
    auto& self = const_cast<RunConfig&>(*this);  // field accessors are shared with merge(); nothing is written
    for (const auto& key : keys()) {
        std::visit(
            [&](auto* v) {
                using T = std::remove_pointer_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::optional<double>>) {
                    out[key.name] = *v ? Json(**v) : Json(nullptr);
                } else {
                    out[key.name] = *v;
                }
            },
            key.field(self));
    }
    return out;
}

void RunConfig::validate() const {
    TrainConfig t = train;
    t.seed = seed;
    t.validate();
    autotune.validate();
    if (threshold && !std::isfinite(*threshold)) throw InputError("threshold must be finite");
    if (subset_size < 2) throw InputError("subset_size must be >= 2");
    if (subsets < 1) throw InputError("subsets must be >= 1");
    if (!(band >= 0.0) || !std::isfinite(band)) throw InputError("band must be a finite number >= 0");
    if (k_step < 1) throw InputError("k_step must be >= 1");
    if (k_true < 0) throw InputError("k_true must be >= 0");
    parse_label_filter(label_filter);
    if (ward_backend != "on-demand" && ward_backend != "condensed") {
        throw InputError("ward_backend must be 'on-demand' or 'condensed'");
    }
    if (memory_cap == 0) throw InputError("memory_cap must be positive");
    if (out_dir.empty()) throw InputError("out_dir must not be empty");
}

namespace {

constexpr std::array<const char*, 9> kCommands = {"ingest-check", "train",  "project", "cluster", "evaluate",
                                                  "errors",       "gain",   "sweep",   "pairdist"};

std::string usage() {
    std::string u = "usage: claimclust <subcommand> [--config FILE] [--key value ...]\nsubcommands:";
    for (const char* c : kCommands) u += std::string(" ") + c;
    u += "\nconfig keys (as --kebab-case flags):";
    for (const auto& k : keys()) u += " --" + kebab(k.name);
    return u + "\n";
}

struct Context {
    std::string command;
    RunConfig config;
    fs::path out_dir;
    std::shared_ptr<spdlog::logger> log;

    fs::path out(const std::string& name) const { return out_dir / name; }
};

const std::string& require(const std::string& value, const char* key) {
    if (value.empty()) throw InputError("missing required config key '" + std::string(key) + "'");
    if (!fs::exists(value)) throw InputError(std::string(key) + ": file not found: '" + value + "'");
    return value;
}

class Timer {
  public:
    Timer(spdlog::logger& log, std::string what)
        : log_(log), what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
        log_.info("{} took {:.3f} s", what_, dt.count());
    }

  private:
    spdlog::logger& log_;
    std::string what_;
    std::chrono::steady_clock::time_point start_;
};

WardOptions ward_options(const RunConfig& c) {
    WardOptions w;
    w.backend = c.ward_backend == "condensed" ? WardBackend::kCondensed : WardBackend::kOnDemand;
    w.memory_cap_bytes = static_cast<std::size_t>(c.memory_cap);
    return w;
}

AutotuneParams autotune_params(const RunConfig& c) {
    AutotuneParams p = c.autotune;
    p.seed = c.seed;
    return p;
}

Json cmd_ingest_check(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    Json r = {{"corpus", to_json(corpus.counts())}, {"fully_labeled", corpus.fully_labeled()}};
    r["pairs"] = nullptr;
    r["embeddings"] = nullptr;
    if (!c.pairs.empty()) r["pairs"] = to_json(count_pairs(load_pairs(require(c.pairs, "pairs"), corpus)));
    if (!c.embeddings.empty()) {
        const auto m = load_embeddings(require(c.embeddings, "embeddings"), corpus);
        r["embeddings"] = {{"n", m.rows()}, {"d", m.dim()}};
    }
    ctx.log->info("{} claims checked", corpus.size());
    return r;
}

Json cmd_train(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto pairs = load_pairs(require(c.pairs, "pairs"), corpus);
    const auto embeddings = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    TrainConfig tc = c.train;
    tc.seed = c.seed;
    auto [model, trace] = [&] {
        Timer t(*ctx.log, "training");
        return train_adapter(embeddings, pairs, tc);
    }();
    const fs::path adapter_path = c.adapter.empty() ? ctx.out("adapter.c2va") : fs::path(c.adapter);
    save_adapter(model, adapter_path);

    auto losses = csv::open_out(ctx.out("train_losses.csv"));
    losses << "step,loss\n";
    for (std::size_t i = 0; i < trace.step_losses.size(); ++i) {
        losses << i << ',' << csv::format_double(trace.step_losses[i]) << '\n';
    }
    write_stats_csv(trace.positive_before, ctx.out("positive_before.csv"));
    write_stats_csv(trace.positive_after, ctx.out("positive_after.csv"));
    if (trace.negative_before) write_stats_csv(*trace.negative_before, ctx.out("negative_before.csv"));
    if (trace.negative_after) write_stats_csv(*trace.negative_after, ctx.out("negative_after.csv"));

    return {{"adapter", adapter_path.string()},
            {"d_in", model.d_in()},
            {"d_out", model.d_out()},
            {"pairs", to_json(count_pairs(pairs))},
            {"meta", to_json(model.meta)},
            {"trace", to_json(trace)}};
}

Json cmd_project(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto embeddings = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    const auto model = load_adapter(require(c.adapter, "adapter"));
    const auto projected = apply_adapter(embeddings, model);
    const fs::path path = c.projected.empty() ? ctx.out("projected.cev") : fs::path(c.projected);
    write_embeddings(projected, path);
    return {{"output", path.string()}, {"n", projected.rows()}, {"d", projected.dim()}};
}

Json cmd_cluster(Context& ctx) {
    const auto& c = ctx.config;
    if (!c.auto_threshold && !c.threshold) {
        throw InputError("cluster needs either auto_threshold = true or a threshold");
    }
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto matrix = normalize_rows(load_embeddings(require(c.embeddings, "embeddings"), corpus));
    const auto ward = ward_options(c);
    const Dendrogram dendrogram = [&] {
        Timer t(*ctx.log, "dendrogram");
        return build_dendrogram(matrix, ward);
    }();
    write_dendrogram_csv(dendrogram, ctx.out("dendrogram.csv"));

    Json autotune = nullptr;
    double threshold = c.threshold.value_or(0.0);
    if (c.auto_threshold) {
        Timer t(*ctx.log, "threshold selection");
        const auto params = autotune_params(c);
        if (matrix.rows() > c.subset_size) {
            const auto avg = subset_average_threshold(matrix, c.subset_size, c.subsets, params, ward);
            threshold = avg.mean_threshold;
            Json runs = Json::array();
            for (std::size_t i = 0; i < avg.runs.size(); ++i) {
                runs.push_back(to_json(avg.runs[i]));
                write_sweep_points_csv(avg.runs[i].grid, ctx.out("autotune_grid_" + std::to_string(i) + ".csv"));
                write_sweep_points_csv(avg.runs[i].refinement,
                                       ctx.out("autotune_refinement_" + std::to_string(i) + ".csv"));
            }
            Json thresholds = Json::array();
            for (const auto& r : avg.runs) thresholds.push_back(r.best_threshold);
            autotune = {{"mean_threshold", avg.mean_threshold},
                        {"subset_thresholds", std::move(thresholds)},
                        {"runs", std::move(runs)}};
        } else {
            const auto result = select_threshold(matrix, dendrogram, params);
            threshold = result.best_threshold;
            write_sweep_points_csv(result.grid, ctx.out("autotune_grid.csv"));
            write_sweep_points_csv(result.refinement, ctx.out("autotune_refinement.csv"));
            autotune = to_json(result);
        }
    }
    const auto assignment = cut_by_threshold(dendrogram, threshold);
    write_assignment_csv(matrix.ids, assignment, ctx.out("assignment.csv"));
    ctx.log->info("cut at {} gives {} clusters", threshold, assignment.k);
    return {{"n", matrix.rows()},
            {"threshold", threshold},
            {"k", assignment.k},
            {"dendrogram", ctx.out("dendrogram.csv").string()},
            {"assignment", ctx.out("assignment.csv").string()},
            {"autotune", std::move(autotune)}};
}

// Supervised metrics only see claims with a ground-truth cluster.
struct Supervised {
    std::vector<Index> positions;
    Corpus corpus;
    ClusterAssignment truth;
};

Supervised supervised(const Corpus& corpus) {
    Supervised s;
    s.positions = corpus.labeled_positions();
    if (s.positions.empty()) throw InputError("no claim has a gt_cluster; supervised metrics need labels");
    s.corpus = corpus.subset(s.positions);
    s.truth = ground_truth(s.corpus);
    return s;
}

EmbeddingMatrix take_rows(const EmbeddingMatrix& m, std::span<const Index> rows) {
    EmbeddingMatrix out;
    out.data.resize(static_cast<Index>(rows.size()), m.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.data.row(static_cast<Index>(r)) = m.data.row(rows[r]);
        out.ids.push_back(m.ids[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

Json cmd_evaluate(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto matrix = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    const auto pred = read_assignment_csv(require(c.assignment, "assignment"), corpus);
    const auto sup = supervised(corpus);
    const auto [score, detail] = silhouette(matrix, pred, c.autotune.sample_cap, c.seed);
    write_silhouette_csv(matrix.ids, detail, ctx.out("silhouette.csv"));
    Json r = to_json(evaluate(sup.truth, pred.restrict_to(sup.positions), score, detail.degenerate));
    r["labeled_claims"] = sup.positions.size();
    return r;
}

Json cmd_errors(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto pred = read_assignment_csv(require(c.assignment, "assignment"), corpus);
    const auto sup = supervised(corpus);
    const auto report = split_mismerge(sup.truth, pred.restrict_to(sup.positions));
    const auto rates = language_error_rates(sup.corpus, report);
    write_language_rates_csv(rates, ctx.out("language_rates.csv"));
    write_error_flags_csv(sup.corpus.ids(), report, ctx.out("error_flags.csv"));
    return {{"errors", to_json(report)}, {"language_rates", to_json(rates)}};
}

Json cmd_gain(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto base_emb = load_embeddings(require(c.base_embeddings, "base_embeddings"), corpus);
    const auto base_pred = read_assignment_csv(require(c.base_assignment, "base_assignment"), corpus);
    const auto emb = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    const auto pred = read_assignment_csv(require(c.assignment, "assignment"), corpus);
    const auto sup = supervised(corpus);
    const auto sub_base_emb = take_rows(base_emb, sup.positions);
    const auto sub_base_pred = base_pred.restrict_to(sup.positions);
    const auto sub_emb = take_rows(emb, sup.positions);
    const auto sub_pred = pred.restrict_to(sup.positions);
    const auto report = lingual_gain(sup.corpus, sup.truth, {sub_base_emb, sub_base_pred, sub_emb, sub_pred},
                                     c.autotune.sample_cap, c.seed);
    return to_json(report);
}

Json cmd_sweep(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto matrix = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    const auto dendrogram = read_dendrogram_csv(require(c.dendrogram, "dendrogram"));
    if (dendrogram.n != corpus.size()) {
        throw InputError("dendrogram has " + std::to_string(dendrogram.n) + " leaves but the corpus has " +
                         std::to_string(corpus.size()) + " claims");
    }
    const auto sup = supervised(corpus);
    const Index k_true = c.k_true > 0 ? c.k_true : sup.truth.k;
    const auto labeled = corpus.fully_labeled() ? std::span<const Index>{} : std::span<const Index>(sup.positions);
    const auto curve = config_sweep(matrix, dendrogram, sup.truth, k_true, c.band, c.k_step, c.autotune.sample_cap,
                                    c.seed, labeled);
    write_sweep_csv(curve, ctx.out("sweep.csv"));
    Json r = to_json(curve);
    r["k_true"] = k_true;
    return r;
}

Json cmd_pairdist(Context& ctx) {
    const auto& c = ctx.config;
    const Corpus corpus = load_claims(require(c.claims, "claims"));
    const auto pairs = load_pairs(require(c.pairs, "pairs"), corpus);
    const auto matrix = load_embeddings(require(c.embeddings, "embeddings"), corpus);
    const auto filter = parse_label_filter(c.label_filter);
    const auto stats = pair_distance_stats(matrix, pairs, filter);
    write_stats_csv(stats, ctx.out("pairdist.csv"));
    Json r = to_json(stats);
    r["label_filter"] = to_string(filter);
    return r;
}

Json dispatch(Context& ctx) {
    static const std::vector<std::pair<std::string, Json (*)(Context&)>> table = {
        {"ingest-check", cmd_ingest_check}, {"train", cmd_train},       {"project", cmd_project},
        {"cluster", cmd_cluster},           {"evaluate", cmd_evaluate}, {"errors", cmd_errors},
        {"gain", cmd_gain},                 {"sweep", cmd_sweep},       {"pairdist", cmd_pairdist},
    };
    for (const auto& [name, fn] : table) {
        if (name == ctx.command) return fn(ctx);
    }
    throw InputError("unknown subcommand '" + ctx.command + "'");
}

spdlog::level::level_enum log_level(std::ostream& err) {
    const char* env = std::getenv(kLogEnvVar);
    if (env == nullptr || *env == '\0') return spdlog::level::warn;
    const std::string name = env;
    for (int l = spdlog::level::trace; l < spdlog::level::n_levels; ++l) {
        const auto level = static_cast<spdlog::level::level_enum>(l);
        const auto sv = spdlog::level::to_string_view(level);
        if (name == std::string_view(sv.data(), sv.size())) return level;
    }
    err << "warning: ignoring unrecognized " << kLogEnvVar << "='" << name << "'\n";
    return spdlog::level::warn;
}

RunConfig parse_config(std::span<const std::string> args, std::ostream& out, bool& help) {
    CLI::App app{"claimclust " + args[0]};
    app.set_help_flag("-h,--help");
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");

    RunConfig probe;
    std::vector<std::string> raw(keys().size());
    const auto flags = std::make_unique<bool[]>(keys().size());
    std::vector<CLI::Option*> options(keys().size());
    for (std::size_t i = 0; i < keys().size(); ++i) {
        const std::string flag = "--" + kebab(keys()[i].name);
        if (std::holds_alternative<bool*>(keys()[i].field(probe))) {
            options[i] = app.add_flag(flag, flags[i]);
        } else {
            options[i] = app.add_option(flag, raw[i]);
        }
    }
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help() << usage();
        help = true;
        return {};
    } catch (const CLI::ParseError& e) {
        throw InputError(std::string(e.what()) + "\n" + usage());
    }

    RunConfig config;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw InputError("cannot open config '" + config_path + "'");
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw InputError(config_path + ": " + e.what());
        }
        try {
            config.merge(j);
        } catch (const InputError& e) {
            throw InputError(config_path + ": " + e.what());
        }
    }
    Json overrides = Json::object();
    for (std::size_t i = 0; i < keys().size(); ++i) {
        if (options[i]->count() == 0) continue;
        const std::string name = keys()[i].name;
        overrides[name] = std::holds_alternative<bool*>(keys()[i].field(probe))
                              ? Json(flags[i])
                              : flag_value(keys()[i].field(probe), raw[i], "--" + kebab(name));
    }
    config.merge(overrides);
    config.validate();
    return config;
}

}  // namespace

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    if (args.empty() || std::find(kCommands.begin(), kCommands.end(), args[0]) == kCommands.end()) {
        if (!args.empty() && (args[0] == "-h" || args[0] == "--help")) {
            out << usage();
            return 0;
        }
        err << (args.empty() ? "missing subcommand" : "unknown subcommand '" + args[0] + "'") << "\n" << usage();
        return 2;
    }
    std::shared_ptr<spdlog::logger> log;
    try {
        bool help = false;
        Context ctx{args[0], parse_config(args, out, help), {}, nullptr};
        if (help) return 0;
        ctx.out_dir = ctx.config.out_dir;
        fs::create_directories(ctx.out_dir);

        auto console = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
        console->set_level(log_level(err));
        console->set_pattern("[%l] %v");
        auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>((ctx.out(ctx.command + ".log")).string(), true);
        file->set_level(spdlog::level::info);
        log = std::make_shared<spdlog::logger>("claimclust", spdlog::sinks_init_list{console, file});
        log->set_level(spdlog::level::trace);
        log->flush_on(spdlog::level::trace);
        ctx.log = log;
        log->info("{} started", ctx.command);

        Json report = Json::object();
        report["command"] = ctx.command;
        report["seed"] = ctx.config.seed;
        report["config"] = ctx.config.to_json();
        report["result"] = dispatch(ctx);

        const fs::path path = ctx.out(ctx.command + ".json");
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open '" + path.string() + "' for writing");
        f << report.dump(2) << '\n';
        if (!f) throw Error("failed writing '" + path.string() + "'");
        log->info("{} finished", ctx.command);
        out << path.string() << '\n';
        return 0;
    } catch (const InputError& e) {
        if (log) log->error("{}", e.what());
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        if (log) log->error("{}", e.what());
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace claimclust
