#pragma once

// Stage runners shared by the CLI subcommands and the full pipeline.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/analysis.hpp"
#include "gwprof/default_profiles.hpp"
#include "gwprof/evaluate.hpp"
#include "gwprof/features.hpp"
#include "gwprof/ingest.hpp"
#include "gwprof/io.hpp"
#include "gwprof/labeler.hpp"
#include "gwprof/rules.hpp"
#include "gwprof/synthgen.hpp"

namespace gwprof {

namespace fs = std::filesystem;

inline constexpr int kReportSchemaVersion = 1;

enum class Granularity { Coarse, Fine };

inline std::string to_string(Granularity g) { return g == Granularity::Coarse ? "coarse" : "fine"; }

inline Granularity granularity_from_string(std::string_view s) {
    if (s == "coarse") return Granularity::Coarse;
    if (s == "fine") return Granularity::Fine;
    throw ConfigError("granularity must be 'coarse' or 'fine', got '" + std::string(s) + "'");
}

struct PipelineConfig {
    fs::path out_dir = "out";
    std::uint64_t seed = 7;
    std::optional<fs::path> profiles;  // generator profiles; built-in set if unset
    std::optional<fs::path> rules;     // labeling ruleset; built-in set if unset
    std::optional<int> homes;          // override the profile file's corpus size
    std::optional<int> days;
    int min_days = 3;
    int session_gap_min = 15;
    double evf = kDefaultEvf;
    std::vector<std::size_t> cfs_k{10, 20};
    int folds = 10;
    int inner_folds = 5;
    std::vector<Granularity> granularities{Granularity::Coarse, Granularity::Fine};
    std::size_t oui_top_n = 20;
    std::vector<int> sweep_thresholds{1, 2, 3, 4, 5, 6, 8, 10, 14, 21, 30};
    Granularity sweep_granularity = Granularity::Coarse;
    double sweep_c = 1.0;
    int max_antecedents = 3;
    bool smote = true;
    unsigned threads = 0;

    // Training selection. Baseline ZeroR is always evaluated.
    std::vector<ModelKind> models{ModelKind::Svm, ModelKind::Cart};
    bool tune = true;         // grid search; otherwise default hyperparameters
    bool use_oui = false;     // fold OUI columns into the reported models
    std::optional<fs::path> model_out;  // single-model output file

    // Explicit artifact paths; anything unset lives under out_dir.
    std::map<std::string, fs::path> paths;

    fs::path artifact(const std::string& key, const fs::path& fallback) const {
        auto it = paths.find(key);
        return it == paths.end() ? fallback : it->second;
    }
    fs::path corpus_dir() const { return artifact("corpus_dir", out_dir / "corpus"); }
    fs::path trace() const { return artifact("trace", corpus_dir() / "trace.jsonl"); }
    fs::path truth() const { return artifact("truth", corpus_dir() / "truth.json"); }
    fs::path synth_report() const { return artifact("synth_report", out_dir / "synth.json"); }
    fs::path timelines() const { return artifact("timelines", out_dir / "timelines.bin"); }
    fs::path timelines_all() const { return artifact("timelines_all", out_dir / "timelines_all.bin"); }
    fs::path population() const { return artifact("population", out_dir / "population.json"); }
    fs::path labels() const { return artifact("labels", out_dir / "labels.json"); }
    fs::path features() const { return artifact("features", out_dir / "features.csv"); }
    fs::path features_aux() const { return artifact("features_aux", out_dir / "features_aux.csv"); }
    fs::path extract_report() const { return artifact("extract_report", out_dir / "extract.json"); }
    fs::path analysis() const { return artifact("analysis", out_dir / "analysis.json"); }
    fs::path train_report() const { return artifact("train_report", out_dir / "train.json"); }
    fs::path models_dir() const { return artifact("models_dir", out_dir / "models"); }
    fs::path sweep_report() const { return artifact("sweep_report", out_dir / "sweep.json"); }
    fs::path rules_json() const { return artifact("rules_json", out_dir / "rules.json"); }
    fs::path rules_md() const { return artifact("rules_md", out_dir / "rules.md"); }
    fs::path summary() const { return artifact("summary", out_dir / "summary.md"); }
    fs::path timing() const { return artifact("timing", out_dir / "timing.json"); }
};

/// Reads a pipeline config. Relative paths resolve against `base`; unknown
/// keys are rejected so typos surface as config errors.
inline PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base = ".") {
    static const std::set<std::string> known{"out_dir", "seed", "profiles", "rules", "homes", "days", "min_days", "session_gap_min",
                                             "evf", "cfs_k", "folds", "inner_folds", "granularity", "oui_top_n",
                                             "sweep_thresholds", "sweep_granularity", "sweep_c", "max_antecedents",
                                             "smote", "threads", "models", "tune", "use_oui", "paths",
                                             "schema_version"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    PipelineConfig c;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    try {
        if (j.contains("out_dir")) c.out_dir = resolve(j["out_dir"].get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("profiles")) c.profiles = resolve(j["profiles"].get<std::string>());
        if (j.contains("rules")) c.rules = resolve(j["rules"].get<std::string>());
        if (j.contains("homes")) c.homes = j["homes"].get<int>();
        if (j.contains("days")) c.days = j["days"].get<int>();
        c.min_days = j.value("min_days", c.min_days);
        c.session_gap_min = j.value("session_gap_min", c.session_gap_min);
        c.evf = j.value("evf", c.evf);
        if (j.contains("cfs_k")) c.cfs_k = j["cfs_k"].get<std::vector<std::size_t>>();
        c.folds = j.value("folds", c.folds);
        c.inner_folds = j.value("inner_folds", c.inner_folds);
        if (j.contains("granularity")) {
            const auto g = j["granularity"].get<std::string>();
            if (g == "both") {
                c.granularities = {Granularity::Coarse, Granularity::Fine};
            } else {
                c.granularities = {granularity_from_string(g)};
            }
        }
        c.oui_top_n = j.value("oui_top_n", c.oui_top_n);
        if (j.contains("sweep_thresholds")) c.sweep_thresholds = j["sweep_thresholds"].get<std::vector<int>>();
        if (j.contains("sweep_granularity")) c.sweep_granularity = granularity_from_string(j["sweep_granularity"].get<std::string>());
        c.sweep_c = j.value("sweep_c", c.sweep_c);
        c.max_antecedents = j.value("max_antecedents", c.max_antecedents);
        c.smote = j.value("smote", c.smote);
        c.threads = j.value("threads", c.threads);
        if (j.contains("models")) {
            c.models.clear();
            for (const auto& m : j["models"]) c.models.push_back(model_kind_from_string(m.get<std::string>()));
        }
        c.tune = j.value("tune", c.tune);
        c.use_oui = j.value("use_oui", c.use_oui);
        if (j.contains("paths")) {
            for (const auto& [key, value] : j["paths"].items()) c.paths[key] = resolve(value.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.min_days < 1) throw ConfigError("min_days must be >= 1");
    if (c.session_gap_min < 1) throw ConfigError("session_gap_min must be >= 1");
    if (c.folds < 2 || c.inner_folds < 2) throw ConfigError("folds must be >= 2");
    if (!(c.evf > 0)) throw ConfigError("evf must be positive");
    if (c.cfs_k.empty()) throw ConfigError("cfs_k needs at least one value");
    for (auto k : c.cfs_k) {
        if (k < 1) throw ConfigError("cfs_k values must be >= 1");
    }
    for (int t : c.sweep_thresholds) {
        if (t < 1) throw ConfigError("sweep thresholds must be >= 1");
    }
    if (c.homes && *c.homes < 1) throw ConfigError("homes must be >= 1");
    if (c.days && *c.days < 1) throw ConfigError("days must be >= 1");
    if (!(c.sweep_c > 0)) throw ConfigError("sweep_c must be positive");
    if (c.max_antecedents < 1) throw ConfigError("max_antecedents must be >= 1");
    return c;
}

inline PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    nlohmann::json j;
    try {
        std::ifstream is(path);
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// Helpers

inline ProfileSet load_profiles(const PipelineConfig& c) {
    if (c.profiles) {
        if (!fs::exists(*c.profiles)) throw ConfigError("profile file not found: " + c.profiles->string());
        nlohmann::json j;
        try {
            std::ifstream is(*c.profiles);
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(c.profiles->string() + ": " + e.what());
        }
        return parse_profiles(j);
    }
    return parse_profiles(nlohmann::json::parse(kDefaultProfilesJson));
}

inline LabelRuleset load_rules(const PipelineConfig& c) {
    if (!c.rules) return default_ruleset();
    if (!fs::exists(*c.rules)) throw ConfigError("ruleset not found: " + c.rules->string());
    nlohmann::json j;
    try {
        std::ifstream is(*c.rules);
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(c.rules->string() + ": " + e.what());
    }
    return parse_ruleset(j);
}

inline void require_input(const std::string& stage, const fs::path& p) {
    if (!fs::exists(p)) throw StageError(stage, "missing input " + p.string());
}

inline void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

/// Rows of `rows` that carry a label at granularity `g`, as a dataset whose
/// classes are the present ones in taxonomy order.
struct LabeledData {
    Dataset ds;
    std::vector<std::string> macs;
    std::vector<std::size_t> source_rows;
};

inline LabeledData build_dataset(const FeatureRows& rows, const std::map<std::string, GroundTruthLabel>& labels,
                                 Granularity g) {
    std::vector<std::string> all_names;
    if (g == Granularity::Coarse) {
        for (auto c : kAllCoarse) all_names.emplace_back(to_string(c));
    } else {
        for (auto f : kAllFine) all_names.emplace_back(to_string(f));
    }
    std::vector<int> raw_label;
    std::vector<std::size_t> picked;
    for (std::size_t r = 0; r < rows.macs.size(); ++r) {
        auto it = labels.find(rows.macs[r]);
        if (it == labels.end()) continue;
        if (g == Granularity::Coarse && it->second.coarse) {
            raw_label.push_back(static_cast<int>(*it->second.coarse));
        } else if (g == Granularity::Fine && it->second.fine) {
            raw_label.push_back(static_cast<int>(*it->second.fine));
        } else {
            continue;
        }
        picked.push_back(r);
    }
    std::set<int> present(raw_label.begin(), raw_label.end());
    std::map<int, int> remap;
    LabeledData out;
    for (int p : present) {
        remap[p] = static_cast<int>(out.ds.class_names.size());
        out.ds.class_names.push_back(all_names[static_cast<std::size_t>(p)]);
    }
    out.ds.feature_names = rows.table.names;
    out.ds.x = rows.table.values.select_rows(picked);
    for (int l : raw_label) out.ds.y.push_back(remap[l]);
    for (auto r : picked) out.macs.push_back(rows.macs[r]);
    out.source_rows = std::move(picked);
    return out;
}

/// Keeps only classes with at least `min_size` rows and re-indexes them.
inline std::pair<LabeledData, std::vector<std::string>> keep_classes_with(const LabeledData& in, std::size_t min_size) {
    const auto counts = in.ds.class_counts();
    LabeledData out;
    std::vector<std::string> dropped;
    std::map<int, int> remap;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] >= min_size) {
            remap[static_cast<int>(c)] = static_cast<int>(out.ds.class_names.size());
            out.ds.class_names.push_back(in.ds.class_names[c]);
        } else if (counts[c] > 0) {
            dropped.push_back(in.ds.class_names[c]);
        }
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < in.ds.size(); ++i) {
        if (remap.contains(in.ds.y[i])) keep.push_back(i);
    }
    out.ds.feature_names = in.ds.feature_names;
    out.ds.x = in.ds.x.select_rows(keep);
    for (auto i : keep) {
        out.ds.y.push_back(remap[in.ds.y[i]]);
        out.macs.push_back(in.macs[i]);
        out.source_rows.push_back(in.source_rows[i]);
    }
    return {std::move(out), std::move(dropped)};
}

inline nlohmann::json class_counts_json(const Dataset& ds) {
    nlohmann::json j = nlohmann::json::object();
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) j[ds.class_names[c]] = counts[c];
    return j;
}

inline std::vector<Oui> ouis_of(const std::vector<std::string>& macs) {
    std::vector<Oui> out;
    out.reserve(macs.size());
    for (const auto& m : macs) out.push_back(parse_mac(m).oui());
    return out;
}

/// Features for each timeline; failures are listed rather than fatal.
struct Extraction {
    FeatureRows rows;
    std::vector<int> active_days;
    nlohmann::json skipped = nlohmann::json::array();
};

inline Extraction extract_all(const std::vector<DeviceTimeline>& timelines, Timestamp session_gap, unsigned threads) {
    std::vector<std::optional<FeatureVector>> fv(timelines.size());
    std::vector<int> days(timelines.size(), 0);
    std::vector<std::string> errors(timelines.size());
    parallel_for(
        timelines.size(),
        [&](std::size_t i) {
            try {
                fv[i] = extract_features(timelines[i], session_gap);
                days[i] = active_days(timeline_deltas(timelines[i]));
            } catch (const InsufficientData& e) {
                errors[i] = e.what();
            } catch (const InsufficientSamples& e) {
                errors[i] = e.what();
            }
        },
        threads);
    Extraction out;
    out.rows.table.names.assign(kFeatureNames.begin(), kFeatureNames.end());
    out.rows.table.values = Matrix(0, kFeatureCount);
    for (std::size_t i = 0; i < timelines.size(); ++i) {
        if (!fv[i]) {
            out.skipped.push_back({{"mac", timelines[i].descriptor.mac.to_string()}, {"reason", errors[i]}});
            continue;
        }
        out.rows.macs.push_back(timelines[i].descriptor.mac.to_string());
        out.rows.table.values.append_row(fv[i]->values);
        out.active_days.push_back(days[i]);
    }
    return out;
}

/// Columns to log-rescale: from analysis.json when present, else decided here.
inline std::vector<std::string> rescaled_columns(const PipelineConfig& c, const FeatureTable& raw) {
    if (fs::exists(c.analysis())) return read_json(c.analysis()).at("rescaled").get<std::vector<std::string>>();
    FeatureTable copy = raw;
    return rescale_skewed(copy, c.evf).rescaled;
}

// ---------------------------------------------------------------------------
// Stages. Each returns a short JSON summary for logs.

inline nlohmann::json stage_synth(const PipelineConfig& c) {
    ProfileSet set = load_profiles(c);
    CorpusConfig cc = set.corpus;
    cc.seed = c.seed;
    if (c.homes) cc.homes = *c.homes;
    if (c.days) cc.days = *c.days;
    ensure_dir(c.out_dir);
    const auto s = generate_corpus(set, cc, c.corpus_dir(), c.threads);
    nlohmann::json j{{"schema_version", kReportSchemaVersion}, {"seed", cc.seed}, {"homes", cc.homes},
                     {"days", cc.days}, {"devices", s.devices}, {"records", s.records},
                     {"bytes", s.bytes}, {"guests", s.guests}, {"per_fine", s.per_fine}};
    write_json(c.synth_report(), j);
    return j;
}

inline nlohmann::json stage_ingest(const PipelineConfig& c) {
    require_input("ingest", c.trace());
    std::ifstream in(c.trace(), std::ios::binary);
    auto timelines = parse_trace(in);
    const auto filtered = filter_population(timelines, c.min_days);
    ensure_dir(c.out_dir);
    write_timelines(c.timelines_all(), timelines);
    write_timelines(c.timelines(), filtered.kept);
    nlohmann::json j = to_json(filtered.report);
    j["schema_version"] = kReportSchemaVersion;
    j["min_days"] = c.min_days;
    write_json(c.population(), j);
    return j;
}

inline nlohmann::json stage_label(const PipelineConfig& c) {
    require_input("label", c.timelines_all());
    const auto rules = load_rules(c);
    const auto timelines = read_timelines(c.timelines_all());
    std::vector<GroundTruthLabel> labels(timelines.size());
    parallel_for(timelines.size(), [&](std::size_t i) { labels[i] = label_device(timelines[i], rules); }, c.threads);
    write_json(c.labels(), labels_to_json(labels));

    // Fill the labeled tallies of the funnel.
    auto filtered = filter_population(timelines, c.min_days);
    std::set<MacAddress> kept;
    for (const auto& t : filtered.kept) kept.insert(t.descriptor.mac);
    std::map<std::string, std::size_t> rejected;
    for (const auto& l : labels) {
        if (!kept.contains(l.mac)) continue;
        if (l.coarse) ++filtered.report.coarse_labeled;
        if (l.fine) ++filtered.report.fine_labeled;
        if (!l.rejected.empty()) ++rejected[l.rejected];
    }
    nlohmann::json j = to_json(filtered.report);
    j["schema_version"] = kReportSchemaVersion;
    j["min_days"] = c.min_days;
    j["rejected"] = rejected;
    write_json(c.population(), j);
    return j;
}

inline nlohmann::json stage_extract(const PipelineConfig& c) {
    require_input("extract", c.timelines());
    const auto timelines = read_timelines(c.timelines());
    auto ex = extract_all(timelines, Timestamp{60} * c.session_gap_min, c.threads);
    write_csv(c.features(), ex.rows);
    FeatureRows aux;
    aux.macs = ex.rows.macs;
    aux.table.names = {"traffic_days"};
    aux.table.values = Matrix(0, 1);
    for (int d : ex.active_days) aux.table.values.append_row(std::vector<double>{static_cast<double>(d)});
    write_csv(c.features_aux(), aux);
    nlohmann::json j{{"schema_version", kReportSchemaVersion}, {"devices", timelines.size()},
                     {"extracted", ex.rows.macs.size()}, {"skipped", ex.skipped}};
    write_json(c.extract_report(), j);
    return {{"extracted", ex.rows.macs.size()}, {"skipped", ex.skipped.size()}};
}

inline nlohmann::json stage_analyze(const PipelineConfig& c) {
    require_input("analyze", c.features());
    require_input("analyze", c.labels());
    FeatureRows rows = read_csv(c.features());
    const auto labels = labels_from_json(read_json(c.labels()));
    if (rows.macs.size() < 2) throw EmptyDataset("analysis needs at least two devices");
    const auto rescale = rescale_skewed(rows.table, c.evf);

    nlohmann::json skew = nlohmann::json::array();
    for (const auto& e : rescale.report) skew.push_back(to_json(e));
    const auto p = pca(rows.table.values, true);
    nlohmann::json pca_j{{"standardized", true},
                         {"explained_variance_ratio", p.explained_variance_ratio},
                         {"cumulative", p.cumulative},
                         {"components_for_90", p.components_for(0.90)},
                         {"components_for_95", p.components_for(0.95)}};
    nlohmann::json dropped = nlohmann::json::array();
    for (auto d : p.dropped_columns) dropped.push_back(rows.table.names[d]);
    pca_j["dropped_constant"] = dropped;

    nlohmann::json cfs = nlohmann::json::object();
    const std::size_t kmax = *std::max_element(c.cfs_k.begin(), c.cfs_k.end());
    for (auto g : c.granularities) {
        const auto data = build_dataset(rows, labels, g);
        if (data.ds.size() == 0) throw EmptyDataset("no labeled devices at " + to_string(g) + " granularity");
        const auto ranking = cfs_select(data.ds.x, data.ds.y, kmax, data.ds.feature_names);
        nlohmann::json gj{{"devices", data.ds.size()}, {"merit", ranking.merit}};
        for (auto k : c.cfs_k) {
            const auto n = std::min<std::size_t>(k, ranking.selected.size());
            gj["top_" + std::to_string(k)] = std::vector<std::string>(ranking.selected.begin(), ranking.selected.begin() + static_cast<std::ptrdiff_t>(n));
        }
        cfs[to_string(g)] = gj;
    }
    nlohmann::json j{{"schema_version", kReportSchemaVersion},
                     {"evf", c.evf},
                     {"rescaled", rescale.rescaled},
                     {"skew", skew},
                     {"pca", pca_j},
                     {"cfs", cfs}};
    write_json(c.analysis(), j);
    return {{"rescaled", rescale.rescaled.size()}, {"components_for_95", p.components_for(0.95)}};
}

/// Features and labels prepared for training: rescaled, labeled, classes
/// smaller than the fold count dropped.
inline std::pair<LabeledData, std::vector<std::string>> training_data(const PipelineConfig& c, const FeatureRows& raw,
                                                                      const std::map<std::string, GroundTruthLabel>& labels,
                                                                      const std::vector<std::string>& rescaled, Granularity g,
                                                                      std::size_t min_class_size) {
    FeatureRows rows = raw;
    apply_rescaling(rows.table, rescaled);
    (void)c;
    return keep_classes_with(build_dataset(rows, labels, g), min_class_size);
}

inline nlohmann::json stage_train(const PipelineConfig& c) {
    require_input("train", c.features());
    require_input("train", c.labels());
    const FeatureRows raw = read_csv(c.features());
    const auto labels = labels_from_json(read_json(c.labels()));
    const auto rescaled = rescaled_columns(c, raw.table);
    if (c.model_out && (c.models.size() != 1 || c.granularities.size() != 1)) {
        throw ConfigError("--out for a model file needs exactly one model and one granularity");
    }
    ensure_dir(c.models_dir());
    const std::uint64_t seed = derive_seed(c.seed, 3);

    nlohmann::json out{{"schema_version", kReportSchemaVersion}, {"folds", c.folds}, {"inner_folds", c.inner_folds}};
    nlohmann::json brief = nlohmann::json::object();
    for (auto g : c.granularities) {
        auto [data, dropped] = training_data(c, raw, labels, rescaled, g, static_cast<std::size_t>(c.folds));
        const Dataset& ds = data.ds;
        if (ds.size() == 0) throw EmptyDataset("no trainable devices at " + to_string(g) + " granularity");
        if (ds.n_classes() < 2) throw SingleClass("only one class left at " + to_string(g) + " granularity");
        nlohmann::json gj{{"devices", ds.size()}, {"classes", ds.class_names}, {"class_counts", class_counts_json(ds)},
                          {"dropped_classes", dropped}, {"features", ds.feature_names.size()}};

        const auto zeror = cross_validate(ds, ModelSpec{ModelKind::ZeroR}, c.folds, seed, c.threads);
        gj["zeror"] = to_json(zeror);
        const Dataset with_oui = encode_oui(ds, ouis_of(data.macs), c.oui_top_n);
        const Dataset& fit_on = c.use_oui ? with_oui : ds;
        gj["oui_in_models"] = c.use_oui;
        nlohmann::json oui_j{{"top_n", c.oui_top_n}};
        for (auto kind : c.models) {
            if (kind == ModelKind::ZeroR) continue;
            const auto name = to_string(kind);
            ModelSpec best = default_spec(kind);
            const auto defaults = cross_validate(fit_on, best, c.folds, seed, c.threads);
            gj[name + "_default"] = to_json(defaults);
            if (c.tune) {
                const auto grid = default_grid(kind);
                const auto tuned = grid_search(fit_on, grid, c.folds, c.inner_folds, seed, c.threads);
                gj[name] = to_json(tuned, grid);
                gj[name + "_tuning_gain"] = tuned.report.accuracy - defaults.accuracy;
                best = tuned.best;
                brief[to_string(g) + "_" + name] = tuned.report.accuracy;
            } else {
                gj[name] = {{"best", to_json(best)}, {"report", to_json(defaults)}};
                brief[to_string(g) + "_" + name] = defaults.accuracy;
            }

            // Same hyperparameters and folds with and without vendor columns.
            const auto plain = cross_validate(ds, best, c.folds, seed, c.threads);
            const auto oui = cross_validate(with_oui, best, c.folds, seed, c.threads);
            oui_j[name] = {{"spec", to_json(best)}, {"without", plain.accuracy}, {"with", oui.accuracy},
                           {"gain", oui.accuracy - plain.accuracy}};

            best.seed = derive_seed(seed, 99);
            const Model m = train_model(fit_on, best);
            write_json(c.model_out ? *c.model_out : c.models_dir() / (to_string(g) + "_" + name + ".json"),
                       model_to_json(m, best, fit_on));
        }
        const bool zeror_only = c.models.size() == 1 && c.models.front() == ModelKind::ZeroR;
        const Model z = train_model(ds, ModelSpec{ModelKind::ZeroR});
        write_json(zeror_only && c.model_out ? *c.model_out : c.models_dir() / (to_string(g) + "_zeror.json"),
                   model_to_json(z, ModelSpec{ModelKind::ZeroR}, ds));
        gj["oui"] = oui_j;
        brief[to_string(g) + "_zeror"] = zeror.accuracy;
        out[to_string(g)] = gj;
    }
    write_json(c.train_report(), out);
    return brief;
}

inline nlohmann::json stage_sweep(const PipelineConfig& c) {
    require_input("sweep", c.timelines_all());
    require_input("sweep", c.labels());
    const auto all = read_timelines(c.timelines_all());
    const auto labels = labels_from_json(read_json(c.labels()));
    // Every reliable wireless device with any traffic; thresholds filter below.
    const auto population = filter_population(all, 1);
    auto ex = extract_all(population.kept, Timestamp{60} * c.session_gap_min, c.threads);
    rescale_skewed(ex.rows.table, c.evf);
    const auto data = build_dataset(ex.rows, labels, c.sweep_granularity);
    std::vector<int> days;
    for (auto r : data.source_rows) days.push_back(ex.active_days[r]);
    const ModelSpec spec{ModelKind::Svm, c.sweep_c, 2, true, 1};
    const auto points = data_sufficiency_sweep(data.ds, days, c.sweep_thresholds, spec, c.folds,
                                               derive_seed(c.seed, 4), c.threads);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : points) arr.push_back(to_json(p));
    nlohmann::json j{{"schema_version", kReportSchemaVersion}, {"granularity", to_string(c.sweep_granularity)},
                     {"model", to_json(spec)}, {"points", arr}};
    write_json(c.sweep_report(), j);
    return {{"thresholds", c.sweep_thresholds.size()}};
}

inline nlohmann::json stage_rules(const PipelineConfig& c) {
    require_input("rules", c.features());
    require_input("rules", c.features_aux());
    require_input("rules", c.labels());
    FeatureRows rows = read_csv(c.features());
    const FeatureRows aux = read_csv(c.features_aux());
    if (aux.macs != rows.macs) throw LengthMismatch("features_aux.csv rows do not match features.csv");
    apply_rescaling(rows.table, rescaled_columns(c, rows.table));
    // traffic_days rides along as an extra, rules-only column.
    Matrix x(rows.macs.size(), rows.table.names.size() + 1);
    for (std::size_t r = 0; r < rows.macs.size(); ++r) {
        auto src = rows.table.values.row(r);
        std::copy(src.begin(), src.end(), x.row(r).begin());
        x(r, rows.table.names.size()) = aux.table.values(r, 0);
    }
    rows.table.values = std::move(x);
    rows.table.names.push_back("traffic_days");

    const auto labels = labels_from_json(read_json(c.labels()));
    auto [data, dropped] = keep_classes_with(build_dataset(rows, labels, Granularity::Fine), 2);
    const auto rules = rules_for_all_classes(data.ds, c.smote, derive_seed(c.seed, 5), c.max_antecedents, c.threads);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rules) arr.push_back(to_json(r));
    nlohmann::json j{{"schema_version", kReportSchemaVersion}, {"granularity", "fine"}, {"smote", c.smote},
                     {"class_counts", class_counts_json(data.ds)}, {"dropped_classes", dropped}, {"rules", arr}};
    write_json(c.rules_json(), j);
    write_text(c.rules_md(), rules_markdown(rules));
    return {{"rules", rules.size()}};
}

namespace detail {

inline std::string pct(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v * 100;
    return os.str();
}

}  // namespace detail

/// Human-readable digest of whichever reports exist.
inline nlohmann::json stage_summary(const PipelineConfig& c) {
    std::ostringstream md;
    md << "# Device classification summary\n\n";
    if (fs::exists(c.population())) {
        const auto p = read_json(c.population());
        md << "## Population\n\n| Stage | Devices |\n|---|---|\n";
        for (const char* k : {"total", "wired", "wireless", "transient", "nontransient", "coarse_labeled", "fine_labeled"}) {
            md << "| " << k << " | " << p.value(k, 0) << " |\n";
        }
        md << "\n`wired` includes " << p.value("unreliable_counters", 0) << " devices dropped for 16-bit counters.\n\n";
    }
    if (fs::exists(c.train_report())) {
        const auto t = read_json(c.train_report());
        md << "## Accuracy (" << t.value("folds", 10) << "-fold cross-validation)\n\n";
        md << "| Granularity | ZeroR | SVM | CART | SVM gain | CART gain | SVM +OUI | CART +OUI |\n|---|---|---|---|---|---|---|---|\n";
        for (const char* g : {"coarse", "fine"}) {
            if (!t.contains(g) || !t[g].contains("svm") || !t[g].contains("cart")) continue;
            const auto& gj = t[g];
            const double z = gj["zeror"]["accuracy"].get<double>();
            const double s = gj["svm"]["report"]["accuracy"].get<double>();
            const double k = gj["cart"]["report"]["accuracy"].get<double>();
            md << "| " << g << " | " << detail::pct(z) << " | " << detail::pct(s) << " | " << detail::pct(k) << " | "
               << detail::pct(s - z) << " | " << detail::pct(k - z) << " | "
               << detail::pct(gj["oui"]["svm"]["with"].get<double>()) << " | "
               << detail::pct(gj["oui"]["cart"]["with"].get<double>()) << " |\n";
        }
        md << "\nAccuracies in percent; gains are percentage points over ZeroR.\n\n";
    }
    if (fs::exists(c.sweep_report())) {
        const auto s = read_json(c.sweep_report());
        md << "## Data sufficiency (" << s["granularity"].get<std::string>() << ", SVM)\n\n";
        md << "| Min active days | Devices | Improvement over ZeroR |\n|---|---|---|\n";
        for (const auto& p : s["points"]) {
            md << "| " << p["threshold"].get<int>() << " | " << p["evaluated"].get<std::size_t>() << " | "
               << (p.contains("improvement") ? detail::pct(p["improvement"].get<double>()) : p.value("error", std::string("-")))
               << " |\n";
        }
        md << '\n';
    }
    if (fs::exists(c.rules_md())) {
        std::ifstream is(c.rules_md());
        md << "## Per-class rules\n\n" << is.rdbuf() << '\n';
    }
    write_text(c.summary(), md.str());
    return {{"summary", c.summary().string()}};
}

struct StageSpec {
    std::string name;
    std::function<nlohmann::json(const PipelineConfig&)> run;
};

inline std::vector<StageSpec> pipeline_stages() {
    return {{"synth", stage_synth},   {"ingest", stage_ingest}, {"label", stage_label},
            {"extract", stage_extract}, {"analyze", stage_analyze}, {"train", stage_train},
            {"sweep", stage_sweep},   {"rules", stage_rules},   {"summary", stage_summary}};
}

/// Runs one stage, turning any non-config failure into StageError(stage).
inline nlohmann::json run_stage(const std::string& name, const std::function<nlohmann::json(const PipelineConfig&)>& fn,
                                const PipelineConfig& c) {
    try {
        return fn(c);
    } catch (const ConfigError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

/// Runs every stage in order and writes timing.json. Throws ConfigError or StageError.
inline nlohmann::json run_pipeline(const PipelineConfig& c, std::ostream& log) {
    ensure_dir(c.out_dir);
    nlohmann::json timing{{"schema_version", kReportSchemaVersion}};
    nlohmann::json results = nlohmann::json::object();
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& s : pipeline_stages()) {
        const auto start = std::chrono::steady_clock::now();
        log << "[" << s.name << "] running\n" << std::flush;
        results[s.name] = run_stage(s.name, s.run, c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        timing[s.name + "_seconds"] = secs;
        log << "[" << s.name << "] done in " << std::fixed << std::setprecision(1) << secs << " s: "
            << results[s.name].dump() << '\n'
            << std::flush;
    }
    timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(c.timing(), timing);
    return results;
}

}  // namespace gwprof
