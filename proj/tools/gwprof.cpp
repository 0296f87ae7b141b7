// gwprof: device-type profiling from gateway telemetry.

#include <charconv>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gwprof/pipeline.hpp"

namespace {

using gwprof::ConfigError;
using gwprof::PipelineConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

// "1..30" is every day count in the range; otherwise a comma list.
std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    if (auto dots = s.find(".."); dots != std::string::npos) {
        const int lo = parse_int(s.substr(0, dots)), hi = parse_int(s.substr(dots + 2));
        if (lo > hi) throw ConfigError("empty range '" + s + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(parse_int(s.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

// Flags that override the config file. Each binds to a default shown in
// --help and is applied only when given on the command line.
struct Overrides {
    std::vector<std::function<void(PipelineConfig&)>> apply;

    template <class T, class F>
    CLI::Option* add(CLI::App* app, const std::string& name, T& target, const std::string& help, F fn) {
        auto* opt = app->add_option(name, target, help)->capture_default_str();
        apply.push_back([opt, &target, fn](PipelineConfig& c) {
            if (opt->count() > 0) fn(c, target);
        });
        return opt;
    }

    template <class T>
    CLI::Option* path(CLI::App* app, const std::string& name, const std::string& key, T& target, const std::string& help) {
        return add(app, name, target, help, [key](PipelineConfig& c, const std::string& v) { c.paths[key] = v; });
    }
};

struct Cli {
    CLI::App app{"gwprof: classify home-network devices from gateway telemetry"};
    std::string config_path;
    Overrides ov;
    std::string selected;

    // Bound flag storage; values here are what --help reports as defaults.
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    unsigned threads = 0;
    std::string profiles, rules_file, out, in, report, timelines, labels, features, aux, analysis, md;
    int homes = 240, days = 90, min_days = 3, session_gap_min = 15, folds = 10, inner_folds = 5;
    int max_antecedents = 3;
    double evf = 6.0, sweep_c = 1.0;
    std::string cfs_k = "10,20", granularity = "both", sweep_granularity = "coarse", model = "all";
    std::string grid = "default", oui = "compare", thresholds = "1,2,3,4,5,6,8,10,14,21,30";
    bool no_smote = false;

    void common(CLI::App* sub) {
        sub->add_option("--config", config_path, "pipeline config JSON");
        ov.add(sub, "--out-dir", out_dir, "directory for artifacts not given explicitly",
               [](PipelineConfig& c, const std::string& v) { c.out_dir = v; });
        ov.add(sub, "--seed", seed, "root random seed", [](PipelineConfig& c, std::uint64_t v) { c.seed = v; });
        ov.add(sub, "--threads", threads, "worker threads (0 = hardware)", [](PipelineConfig& c, unsigned v) { c.threads = v; });
    }

    void min_days_flag(CLI::App* sub) {
        ov.add(sub, "--min-days", min_days, "minimum active days for a device to be kept",
               [](PipelineConfig& c, int v) { c.min_days = v; });
    }
    void gap_flag(CLI::App* sub) {
        ov.add(sub, "--session-gap-min", session_gap_min, "silence in minutes that ends a session",
               [](PipelineConfig& c, int v) { c.session_gap_min = v; });
    }
    void evf_flag(CLI::App* sub) {
        ov.add(sub, "--evf", evf, "extreme-value factor for skew detection", [](PipelineConfig& c, double v) { c.evf = v; });
    }
    void folds_flag(CLI::App* sub) {
        ov.add(sub, "--folds", folds, "cross-validation folds", [](PipelineConfig& c, int v) { c.folds = v; });
    }
    void synth_flags(CLI::App* sub) {
        ov.add(sub, "--profiles", profiles, "generator profile JSON (built-in set if omitted)",
               [](PipelineConfig& c, const std::string& v) { c.profiles = v; });
        ov.add(sub, "--homes", homes, "homes to simulate", [](PipelineConfig& c, int v) { c.homes = v; });
        ov.add(sub, "--days", days, "days per home", [](PipelineConfig& c, int v) { c.days = v; });
    }
    void cfs_flag(CLI::App* sub) {
        ov.add(sub, "--cfs-k", cfs_k, "feature-subset sizes to report", [](PipelineConfig& c, const std::string& v) {
            c.cfs_k.clear();
            for (int k : parse_int_list(v)) {
                if (k < 1) throw ConfigError("--cfs-k values must be >= 1");
                c.cfs_k.push_back(static_cast<std::size_t>(k));
            }
        });
    }
    void granularity_flag(CLI::App* sub) {
        ov.add(sub, "--granularity", granularity, "coarse, fine or both", [](PipelineConfig& c, const std::string& v) {
            if (v == "both") {
                c.granularities = {gwprof::Granularity::Coarse, gwprof::Granularity::Fine};
            } else {
                c.granularities = {gwprof::granularity_from_string(v)};
            }
        });
    }
    void train_flags(CLI::App* sub) {
        ov.add(sub, "--model", model, "svm, cart, zeror or all", [](PipelineConfig& c, const std::string& v) {
            if (v == "all") {
                c.models = {gwprof::ModelKind::Svm, gwprof::ModelKind::Cart};
            } else {
                c.models = {gwprof::model_kind_from_string(v)};
            }
        });
        ov.add(sub, "--grid", grid, "'default' grid search or 'none'", [](PipelineConfig& c, const std::string& v) {
            if (v != "default" && v != "none") throw ConfigError("--grid must be 'default' or 'none'");
            c.tune = v == "default";
        });
        ov.add(sub, "--oui", oui, "'compare', or 'top:N' to train with N vendor columns",
               [](PipelineConfig& c, const std::string& v) {
                   if (v == "compare") {
                       c.use_oui = false;
                   } else if (v.rfind("top:", 0) == 0) {
                       const int n = parse_int(v.substr(4));
                       if (n < 0) throw ConfigError("--oui top:N needs N >= 0");
                       c.use_oui = true;
                       c.oui_top_n = static_cast<std::size_t>(n);
                   } else {
                       throw ConfigError("--oui must be 'compare' or 'top:N'");
                   }
               });
        ov.add(sub, "--inner-folds", inner_folds, "folds of the inner tuning loop",
               [](PipelineConfig& c, int v) { c.inner_folds = v; });
    }
    void sweep_flags(CLI::App* sub) {
        ov.add(sub, "--thresholds", thresholds, "minimum-active-day thresholds, list or a..b range",
               [](PipelineConfig& c, const std::string& v) { c.sweep_thresholds = parse_int_list(v); });
        ov.add(sub, "--sweep-granularity", sweep_granularity, "label granularity for the sweep",
               [](PipelineConfig& c, const std::string& v) { c.sweep_granularity = gwprof::granularity_from_string(v); });
        ov.add(sub, "--sweep-c", sweep_c, "SVM cost for the sweep", [](PipelineConfig& c, double v) { c.sweep_c = v; });
    }
    void rules_flags(CLI::App* sub) {
        ov.add(sub, "--max-antecedents", max_antecedents, "longest rule considered",
               [](PipelineConfig& c, int v) { c.max_antecedents = v; });
        auto* flag = sub->add_flag("--no-smote", no_smote, "learn rules without minority oversampling");
        ov.apply.push_back([flag](PipelineConfig& c) {
            if (flag->count() > 0) c.smote = false;
        });
    }
    void rules_file_flag(CLI::App* sub) {
        ov.add(sub, "--rules", rules_file, "labeling ruleset JSON (built-in set if omitted)",
               [](PipelineConfig& c, const std::string& v) { c.rules = v; });
    }

    CLI::App* subcommand(const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([this, name] { selected = name; });
        common(sub);
        return sub;
    }

    Cli() {
        app.require_subcommand(1);

        auto* synth = subcommand("synth", "generate a synthetic telemetry corpus");
        synth_flags(synth);
        ov.path(synth, "--out", "corpus_dir", out, "corpus directory");

        auto* ingest = subcommand("ingest", "parse a trace into per-device timelines");
        ov.path(ingest, "--in", "trace", in, "trace JSONL");
        min_days_flag(ingest);
        ov.path(ingest, "--out", "timelines", out, "kept timelines");
        ov.path(ingest, "--report", "population", report, "population funnel JSON");

        auto* label = subcommand("label", "derive ground-truth labels from hostnames");
        ov.add(label, "--timelines", timelines, "timelines to label", [](PipelineConfig& c, const std::string& v) {
            c.paths["timelines_all"] = v;
        });
        rules_file_flag(label);
        min_days_flag(label);
        ov.path(label, "--out", "labels", out, "labels JSON");

        auto* extract = subcommand("extract", "compute the feature matrix");
        ov.path(extract, "--timelines", "timelines", timelines, "kept timelines");
        gap_flag(extract);
        ov.path(extract, "--out", "features", out, "features CSV");
        ov.path(extract, "--aux", "features_aux", aux, "per-device active-day CSV");

        auto* analyze = subcommand("analyze", "skew, PCA and feature-subset analysis");
        ov.path(analyze, "--features", "features", features, "features CSV");
        ov.path(analyze, "--labels", "labels", labels, "labels JSON");
        evf_flag(analyze);
        cfs_flag(analyze);
        granularity_flag(analyze);
        ov.path(analyze, "--out", "analysis", out, "analysis JSON");

        auto* train = subcommand("train", "cross-validate and fit classifiers");
        ov.path(train, "--features", "features", features, "features CSV");
        ov.path(train, "--labels", "labels", labels, "labels JSON");
        ov.path(train, "--analysis", "analysis", analysis, "analysis JSON naming rescaled columns");
        evf_flag(train);
        granularity_flag(train);
        train_flags(train);
        folds_flag(train);
        ov.add(train, "--out", out, "model JSON (one model, one granularity)",
               [](PipelineConfig& c, const std::string& v) { c.model_out = v; });
        ov.path(train, "--models-dir", "models_dir", md, "directory for fitted models");
        ov.path(train, "--report", "train_report", report, "evaluation JSON");

        auto* sweep = subcommand("sweep", "accuracy against minimum active days");
        ov.path(sweep, "--timelines", "timelines_all", timelines, "all timelines");
        ov.path(sweep, "--labels", "labels", labels, "labels JSON");
        sweep_flags(sweep);
        gap_flag(sweep);
        evf_flag(sweep);
        folds_flag(sweep);
        ov.path(sweep, "--out", "sweep_report", out, "sweep JSON");

        auto* rules = subcommand("rules", "one conjunctive rule per fine class");
        ov.path(rules, "--features", "features", features, "features CSV");
        ov.path(rules, "--aux", "features_aux", aux, "per-device active-day CSV");
        ov.path(rules, "--labels", "labels", labels, "labels JSON");
        ov.path(rules, "--analysis", "analysis", analysis, "analysis JSON naming rescaled columns");
        evf_flag(rules);
        rules_flags(rules);
        ov.path(rules, "--out", "rules_json", out, "rules JSON");
        ov.path(rules, "--md", "rules_md", md, "rules Markdown table");

        auto* summary = subcommand("summary", "render summary.md from existing reports");
        ov.path(summary, "--out", "summary", out, "summary Markdown");

        auto* run = subcommand("run", "every stage in order");
        synth_flags(run);
        rules_file_flag(run);
        min_days_flag(run);
        gap_flag(run);
        evf_flag(run);
        cfs_flag(run);
        granularity_flag(run);
        train_flags(run);
        folds_flag(run);
        sweep_flags(run);
        rules_flags(run);
    }

    PipelineConfig config() const {
        PipelineConfig c = config_path.empty() ? PipelineConfig{} : gwprof::load_config(config_path);
        for (const auto& f : ov.apply) f(c);
        return c;
    }
};

// Flags can break what the config file parser already checked.
void validate(const PipelineConfig& c) {
    if (c.min_days < 1) throw ConfigError("min_days must be >= 1");
    if (c.session_gap_min < 1) throw ConfigError("session_gap_min must be >= 1");
    if (c.folds < 2 || c.inner_folds < 2) throw ConfigError("folds must be >= 2");
    if (!(c.evf > 0)) throw ConfigError("evf must be positive");
    if (c.cfs_k.empty()) throw ConfigError("cfs_k needs at least one value");
    if (c.homes && *c.homes < 1) throw ConfigError("homes must be >= 1");
    if (c.days && *c.days < 1) throw ConfigError("days must be >= 1");
    if (c.max_antecedents < 1) throw ConfigError("max_antecedents must be >= 1");
    if (!(c.sweep_c > 0)) throw ConfigError("sweep c must be positive");
    for (int t : c.sweep_thresholds) {
        if (t < 1) throw ConfigError("sweep thresholds must be >= 1");
    }
    if (c.models.empty()) throw ConfigError("no models selected");
}

}  // namespace

int main(int argc, char** argv) {
    Cli cli;
    try {
        cli.app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.app.exit(e);
        return kExitConfig;
    } catch (const gwprof::Error& e) {
        std::cerr << "gwprof: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const PipelineConfig c = cli.config();
        validate(c);
        if (cli.selected == "run") {
            gwprof::run_pipeline(c, std::cerr);
        } else {
            for (const auto& s : gwprof::pipeline_stages()) {
                if (s.name != cli.selected) continue;
                const auto brief = gwprof::run_stage(s.name, s.run, c);
                std::cout << brief.dump() << '\n';
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "gwprof: " << e.what() << '\n';
        return kExitConfig;
    } catch (const gwprof::StageError& e) {
        std::cerr << "gwprof: stage '" << e.stage() << "' failed: " << e.what() << '\n';
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "gwprof: " << e.what() << '\n';
        return kExitStage;
    }
    return kExitOk;
}
