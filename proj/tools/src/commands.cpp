#include "fallwatch/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fallwatch/checkpoint.hpp"
#include "fallwatch/error.hpp"
#include "fallwatch/evaluation.hpp"
#include "fallwatch/hashing.hpp"
#include "fallwatch/report.hpp"
#include "fallwatch/scoring.hpp"
#include "fallwatch/synth.hpp"
#include "fallwatch/training.hpp"

namespace fs = std::filesystem;

namespace fallwatch::cli {

namespace {

const std::vector<std::string> kSynthKeys = {"out",         "seed",        "synth.train",        "synth.test",
                                             "synth.falls", "synth.style", "synth.train_frames", "synth.test_frames"};
const std::vector<std::string> kDataKeys = {"data.root", "data.labels", "data.modality", "data.participants",
                                            "data.cache"};
const std::vector<std::string> kTrainKeys = {"out",          "seed",           "window.length",    "model.channels",
                                             "train.epochs", "train.batch_size", "train.learning_rate",
                                             "train.stride", "train.purity"};
const std::vector<std::string> kScoreKeys = {"out", "checkpoint", "window.stride", "score.chunk"};
const std::vector<std::string> kEvaluateKeys = {"out", "scores", "eval.family", "eval.k_sweep"};
const std::vector<std::string> kReportKeys = {"out", "report"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// --- dataset selection shared by train and score -------------------------------

enum class Role { Train, Test };

bool participant_matches(const std::string& name, const std::vector<std::string>& patterns) {
    return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
        if (!p.empty() && p.back() == '*') return name.rfind(p.substr(0, p.size() - 1), 0) == 0;
        return name == p;
    });
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<CanonicalClip> load_selection(const RunConfig& cfg, Role role, std::ostream& out, std::ostream& err) {
    const fs::path root = cfg.existing_path("data.root");
    const fs::path labels_path = cfg.has("data.labels") ? cfg.existing_path("data.labels") : root / "labels.csv";

    LabelTable labels;
    if (fs::exists(labels_path)) {
        auto loaded = load_labels(labels_path);
        for (const auto& r : loaded.rejects)
            err << "warning: " << labels_path.string() << " line " << r.line << ": " << r.reason << "\n";
        labels = std::move(loaded.table);
    } else if (role == Role::Test) {
        throw DataError("label file not found: " + labels_path.string());
    } else {
        err << "warning: no label file at " << labels_path.string() << "; training clips cannot be checked for falls\n";
    }

    const Catalog catalog = scan_dataset(root);
    for (const auto& s : catalog.skips) err << "warning: skipped " << s.path.string() << ": " << s.reason << "\n";

    ModalityName modality;
    const std::string wanted = cfg.text("data.modality");
    if (wanted.empty() || wanted == "auto") {
        std::set<ModalityName> present;
        for (const auto& e : catalog.entries) present.insert(e.modality);
        if (present.empty()) throw DataError("no clips found under " + root.string());
        if (present.size() > 1) {
            std::string names;
            for (auto m : present) names += (names.empty() ? "" : ", ") + std::string(to_string(m));
            throw ConfigError("several modalities present (" + names + "); choose one with --modality");
        }
        modality = *present.begin();
    } else {
        auto parsed = parse_modality(wanted);
        if (!parsed) throw ConfigError("unknown modality '" + wanted + "'");
        modality = *parsed;
    }

    std::set<std::string> labelled;
    for (const auto& [key, rows] : labels.rows) labelled.insert(key.participant);
    const auto patterns = split_list(cfg.text("data.participants"));

    CanonicalizeOptions options;
    std::optional<CanonicalCache> cache;
    if (cfg.has("data.cache")) cache.emplace(cfg.text("data.cache"));

    std::vector<CanonicalClip> clips;
    for (const auto& entry : catalog.entries) {
        if (entry.modality != modality) continue;
        const auto& who = entry.trial.participant;
        const bool chosen = patterns.empty() ? (labelled.count(who) != 0) == (role == Role::Test)
                                             : participant_matches(who, patterns);
        if (!chosen) continue;
        const VideoClip raw = load_clip(entry);
        std::size_t unusable = 0;
        const auto key = label_key(entry.trial, modality);
        const auto frame_label = frame_labels(raw, labels.spans(key, &unusable));
        if (unusable)
            err << "warning: " << who << " " << entry.trial.short_name() << ": " << unusable
                << " label row(s) lack a start or end frame\n";
        clips.push_back(cache ? cache->get_or_compute(raw, frame_label, options) : canonicalize(raw, frame_label, options));
    }
    if (clips.empty())
        throw DataError(std::string("no ") + (role == Role::Train ? "training" : "test") + " clips selected for " +
                        std::string(to_string(modality)));
    out << "selected " << clips.size() << " " << to_string(modality) << " clip(s)\n";
    return clips;
}

ModelConfig model_config(const RunConfig& cfg) {
    ModelConfig model;
    model.window_length = static_cast<int>(cfg.count("window.length"));
    model.seed = cfg.seed();
    const auto channels = parse_int_list(cfg.text("model.channels"), "channel");
    model.stages.clear();
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (i == 0) model.stages.push_back({channels[i], {5, 3, 3}, {1, 2, 2}});
        else model.stages.push_back({channels[i], {3, 3, 3}, {2, 2, 2}});
    }
    model.validate();
    return model;
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
    SuiteConfig suite;
    suite.train_n = cfg.count("synth.train");
    suite.test_n = cfg.count("synth.test");
    suite.falls_per_test = cfg.count("synth.falls");
    suite.train_frames = cfg.count("synth.train_frames");
    suite.test_frames = cfg.count("synth.test_frames");
    suite.style = parse_scene_style(cfg.text("synth.style"));
    suite.seed = cfg.seed();
    const fs::path dir = cfg.require("out");

    const auto result = generate_suite(suite, dir);
    out << "clips: " << result.clips << "\n";
    out << "labels: " << result.labels.string() << "\n";
    out << "manifest: " << result.manifest.string() << "\n";
    out << "content sha256: " << result.content_hash << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const fs::path dir = cfg.require("out");
    const ModelConfig model_cfg = model_config(cfg);
    TrainConfig train_cfg;
    train_cfg.epochs = static_cast<int>(cfg.count("train.epochs"));
    train_cfg.batch_size = cfg.count("train.batch_size");
    train_cfg.learning_rate = cfg.real("train.learning_rate");
    train_cfg.seed = cfg.seed();
    train_cfg.validate();

    PurityPolicy policy;
    const std::string purity = cfg.text("train.purity");
    if (purity == "reject") policy = PurityPolicy::Reject;
    else if (purity == "skip-fall-windows") policy = PurityPolicy::SkipFallWindows;
    else throw ConfigError("--purity must be reject or skip-fall-windows, got '" + purity + "'");

    const WindowSpec spec{static_cast<std::size_t>(model_cfg.window_length), cfg.count("train.stride")};
    auto stream = TrainingStream::from_clips(load_selection(cfg, Role::Train, out, err), spec, policy);
    if (stream.empty()) throw DataError("no training windows: every selected clip is shorter than the window");
    out << "training on " << stream.size() << " windows\n";

    cfg.write_echo("train", dir);
    Autoencoder3d<float> model(model_cfg);
    const auto result = train(model, stream, train_cfg, [&](const EpochLog& e) {
        out << "epoch " << e.epoch << "/" << train_cfg.epochs << " loss " << e.mean_loss << "\n" << std::flush;
    });
    write_training_log(result.epochs, dir / "training_log.csv");
    const fs::path checkpoint = dir / "checkpoint.fwck";
    Checkpoint::capture(model, train_cfg, result).save(checkpoint);
    out << "checkpoint: " << checkpoint.string() << "\n";
    out << "checkpoint sha256: " << sha256_file(checkpoint) << "\n";
}

void cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const fs::path dir = cfg.require("out");
    const fs::path checkpoint_path = cfg.existing_path("checkpoint");
    const Checkpoint checkpoint = Checkpoint::load(checkpoint_path);
    const auto model = checkpoint.instantiate();
    const WindowSpec spec{static_cast<std::size_t>(checkpoint.model.window_length), cfg.count("window.stride")};
    const std::size_t chunk = cfg.count("score.chunk");

    ScoreSet set;
    for (const auto& clip : load_selection(cfg, Role::Test, out, err)) {
        ScoreSkip skip;
        if (auto scores = score_video(model, clip, spec, &skip, chunk)) set.videos.push_back(std::move(*scores));
        else set.skips.push_back(std::move(skip));
    }
    cfg.write_echo("score", dir);
    write_score_set(set, dir);
    out << "scored " << set.videos.size() << " video(s), skipped " << set.skips.size() << "\n";
    for (const auto& s : set.skips) out << "  skipped " << s.video_id << ": " << s.reason << "\n";
    out << "scores: " << dir.string() << "\n";
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const fs::path dir = cfg.require("out");
    const ScoreSet set = read_score_set(cfg.existing_path("scores"));
    EvalOptions options;
    options.family = parse_family_selection(cfg.text("eval.family"));
    options.ks = parse_k_list(cfg.text("eval.k_sweep"));

    std::vector<std::string> dropped;
    const EvalReport report = evaluate(set, options, &dropped);
    for (const auto& d : dropped) err << "warning: no evaluable video for " << d << "\n";
    cfg.write_echo("evaluate", dir);
    const auto rendered = render_report(report, dir);

    for (const auto& m : report.modalities) {
        out << to_string(m.modality) << ": " << m.counts.videos_evaluated << " video(s) evaluated\n";
        for (auto f : families(report.family)) {
            const auto& pv = m.per_video.summary(f);
            out << "  per-video AUC ROC (" << to_string(f) << ") " << format6(pv.roc ? std::optional(pv.roc->mean) : std::nullopt)
                << "  global AUC ROC (" << to_string(f) << ") " << format6(m.global.family(f).roc) << "\n";
        }
    }
    for (const auto& o : rendered.omitted) out << "omitted " << o.path << ": " << o.reason << "\n";
    out << "report: " << (dir / "report.json").string() << "\n";
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = cfg.require("out");
    const fs::path source = cfg.existing_path("report");
    std::ifstream in(source);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cannot parse " + source.string() + ": " + e.what());
    }
    const auto rendered = render_report(EvalReport::from_json(j), dir);
    for (const auto& o : rendered.omitted) out << "omitted " << o.path << ": " << o.reason << "\n";
    out << "rendered " << rendered.files.size() << " file(s) into " << dir.string() << "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"fallwatch: unsupervised fall detection from video with a 3D convolutional autoencoder"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "flat 'key = value' config file");
    app.footer(
        "Settings resolve as: command-line flag > FALLWATCH_<KEY> environment variable > config file > default.\n"
        "Config keys are dotted (train.epochs, model.channels, ...); the environment name upper-cases the key and\n"
        "replaces dots with underscores (FALLWATCH_TRAIN_EPOCHS). Exit codes: 0 ok, 1 failure, 2 usage or\n"
        "configuration, 3 data (including purity violations), 4 integrity.");

    struct Command {
        CLI::App* app;
        std::vector<std::string> keys;
    };
    std::map<std::string, std::string> given;
    std::map<std::string, CLI::Option*> flags;
    std::vector<Command> commands;
    auto add = [&](const std::string& name, const std::string& description, std::vector<std::string> keys) {
        CLI::App* sub = app.add_subcommand(name, description);
        for (const auto& key : keys) {
            const auto& spec = option(key);
            auto* opt = sub->add_option(spec.flag, given[key], spec.help);
            if (!spec.fallback.empty()) opt->default_str(spec.fallback);
            flags[name + "/" + key] = opt;
        }
        commands.push_back({sub, std::move(keys)});
    };
    add("synth", "write a synthetic dataset in the ingest layout", kSynthKeys);
    add("train", "train the autoencoder on fall-free clips", join(kDataKeys, kTrainKeys));
    add("score", "score test clips with a checkpoint", join(kDataKeys, kScoreKeys));
    add("evaluate", "compute AUC tables and render the report", kEvaluateKeys);
    add("report", "re-render tables and plots from report.json", kReportKeys);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        for (const auto& c : commands) {
            if (!c.app->parsed()) continue;
            const std::string name = c.app->get_name();
            std::map<std::string, std::string> cli_values;
            for (const auto& key : c.keys)
                if (flags[name + "/" + key]->count() > 0) cli_values[key] = given[key];
            std::optional<fs::path> file;
            if (!config_file.empty()) file = config_file;
            else if (env) {
                if (auto e = env("FALLWATCH_CONFIG")) file = *e;
            }
            const RunConfig cfg = RunConfig::resolve(c.keys, cli_values, file, env);
            if (name == "synth") cmd_synth(cfg, out);
            else if (name == "train") cmd_train(cfg, out, err);
            else if (name == "score") cmd_score(cfg, out, err);
            else if (name == "evaluate") cmd_evaluate(cfg, out, err);
            else cmd_report(cfg, out);
        }
        return kExitOk;
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::Config:
                err << "error: " << e.what() << "\n";
                return kExitUsage;
            case ErrorKind::Data:
                err << (dynamic_cast<const PurityError*>(&e) ? "purity violation: " : "data error: ") << e.what()
                    << "\n";
                return kExitData;
            case ErrorKind::Integrity:
                err << "integrity error: " << e.what() << "\n";
                return kExitIntegrity;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitFailure;
}

}  // namespace fallwatch::cli
