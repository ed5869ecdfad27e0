#include "beamxfer/cli.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/evaluation.hpp"
#include "beamxfer/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace beamxfer::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Params {
    std::string scenario, target_scenario, dataset, manifest;
    std::string out = ".";
    std::vector<int> gnb, target_gnb;
    std::uint64_t seed = 1;
    bool zero_shot = false;
    double fine_tune_fraction = 0.0;
    std::size_t min_size = 0;
    std::optional<int> epochs, batch_size;
    std::optional<double> lr;
    std::optional<long> min_steps;
    int jobs = 1;
    std::string profile = "default";
    std::vector<double> fractions{0.05, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t target_cap = 0;

    // generate
    double area_size = 500.0;
    int buildings = 40;
    int gnb_count = 27;
    double grid_resolution = 1.0;
    double min_gnb_spacing = 40.0;
    double building_size_min = 15.0, building_size_max = 60.0;
    double height_min = 12.0, height_max = 40.0;
    double street_width = 6.0;
    int max_reflections = 4;
};

// Options left out of the manifest echo.
const std::set<std::string> kNotEchoed{"help", "manifest", "jobs", "out"};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

std::string short_id(const std::string& fingerprint) { return fingerprint.substr(0, 12); }

bool practical(const Params& p) { return p.profile == "practical"; }

TrainConfig train_config(const Params& p) {
    TrainConfig c = practical(p) ? practical_train_config() : default_train_config();
    if (p.epochs) {
        // Keep the schedule shape when the epoch budget changes.
        const double stretch = static_cast<double>(*p.epochs) / static_cast<double>(c.epochs);
        for (int& m : c.milestones) m = static_cast<int>(std::lround(m * stretch));
        c.epochs = *p.epochs;
    }
    if (p.lr) c.initial_lr = *p.lr;
    if (p.batch_size) c.batch_size = *p.batch_size;
    if (p.min_steps) c.min_steps = *p.min_steps;
    c.validate();
    return c;
}

json config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"initial_lr", c.initial_lr},
            {"milestones", c.milestones}, {"lr_gamma", c.lr_gamma},     {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2}, {"adam_eps", c.adam_eps},     {"loss_weights", c.loss_weights},
            {"min_steps", c.min_steps},   {"frozen_layers", c.frozen_layers}};
}

double fine_tune_fraction(const Params& p) { return p.zero_shot ? 0.0 : p.fine_tune_fraction; }

Scenario require_scenario(const std::string& path, const char* flag) {
    if (path.empty()) fail(ErrorKind::InvalidParameter, std::string(flag) + " is required");
    return load_scenario(path);
}

std::vector<int> gnb_ids_or_all(const std::vector<int>& ids, const Scenario& s) {
    if (!ids.empty()) {
        for (int id : ids) s.gnb(id);
        return ids;
    }
    std::vector<int> all;
    for (const auto& g : s.gnbs) all.push_back(g.id);
    return all;
}

struct Loaded {
    Scenario scenario;
    std::string id;
};

Loaded load(const std::string& path, const char* flag) {
    Loaded l{require_scenario(path, flag), {}};
    l.id = short_id(scenario_fingerprint(l.scenario));
    return l;
}

void add_datasets(DatasetIndex& index, const Loaded& l, const std::vector<int>& ids, int jobs) {
    for (int id : ids) {
        GnbKey key{l.id, id};
        if (!index.contains(key)) index.emplace(key, build_dataset(l.scenario, l.scenario.gnb(id), jobs));
    }
}

std::vector<GnbKey> keys_of(const std::string& sid, const std::vector<int>& ids) {
    std::vector<GnbKey> keys;
    for (int id : ids) keys.push_back({sid, id});
    return keys;
}

// ---- commands ---------------------------------------------------------------

json cmd_generate(const Params& p) {
    CityParams c;
    c.area = Area{{0.0, 0.0}, {p.area_size, p.area_size}};
    c.building_count = p.buildings;
    c.building_size_min_m = p.building_size_min;
    c.building_size_max_m = p.building_size_max;
    c.building_height_min_m = p.height_min;
    c.building_height_max_m = p.height_max;
    c.street_width_m = p.street_width;
    c.gnb_count = p.gnb_count;
    c.min_gnb_spacing_m = p.min_gnb_spacing;
    c.grid_resolution_m = p.grid_resolution;
    c.rf.max_reflections = p.max_reflections;
    if (practical(p)) c.rf.rss_threshold_dbm = kPracticalRssThresholdDbm;
    c.seed = p.seed;
    const Scenario s = generate_synthetic_city(c);
    const fs::path path = fs::path(p.out) / "scenario.json";
    save_scenario(s, path);
    std::cout << "scenario " << short_id(scenario_fingerprint(s)) << ": " << s.buildings.size() << " buildings, "
              << s.gnbs.size() << " gNBs -> " << path.string() << '\n';
    return {{"rf", {{"rss_threshold_dbm", c.rf.rss_threshold_dbm}, {"max_reflections", c.rf.max_reflections}}}};
}

json cmd_dataset(const Params& p) {
    const Loaded l = load(p.scenario, "--scenario");
    std::vector<GnbCoverage> stats;
    for (int id : gnb_ids_or_all(p.gnb, l.scenario)) {
        const GnbSurvey survey = survey_gnb(l.scenario, l.scenario.gnb(id), p.jobs);
        save_dataset(survey.dataset, fs::path(p.out) / ("dataset_" + l.id + "_g" + std::to_string(id) + ".csv"));
        stats.push_back(coverage_of(survey));
    }
    write_coverage_csv(stats, fs::path(p.out) / ("coverage_" + l.id + ".csv"));
    std::cout << coverage_table(stats);
    return {};
}

json cmd_train(const Params& p) {
    BplDataset data;
    if (!p.dataset.empty()) {
        data = load_dataset(p.dataset);
    } else {
        const Loaded l = load(p.scenario, "--scenario or --dataset");
        if (p.gnb.size() != 1) fail(ErrorKind::InvalidParameter, "train needs exactly one --gnb");
        data = build_dataset(l.scenario, l.scenario.gnb(p.gnb[0]), p.jobs);
    }
    const GnbKey key{short_id(data.scenario_fingerprint), data.gnb_id};
    TrainConfig config = train_config(p);
    config.seed = reference_seed(p.seed, key);
    const ReferenceModel ref = train_reference(data, config, dataset_split_spec(p.seed, key));

    const std::string stem = key.scenario_id + "_g" + std::to_string(key.gnb_id) + "_s" + std::to_string(p.seed);
    save_checkpoint(ref.checkpoint, fs::path(p.out) / ("model_" + stem + ".ckpt"));
    std::ostringstream hist;
    hist << "epoch,lr,train_loss,val_top1\n";
    for (const auto& e : ref.checkpoint.history)
        hist << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.train_loss) << ','
             << (std::isnan(e.val_top1) ? std::string() : format_double(e.val_top1)) << '\n';
    write_text(fs::path(p.out) / ("history_" + stem + ".csv"), hist.str());
    const json result{{"gnb", key.str()},
                      {"train_size", ref.split.train.size()},
                      {"val_size", ref.split.val.size()},
                      {"test_size", ref.split.test.size()},
                      {"top1", ref.baseline.top1},
                      {"best_in_top5", ref.baseline.best_in_top5}};
    write_text(fs::path(p.out) / ("train_" + stem + ".json"), result.dump(2) + "\n");
    std::cout << "gNB " << key.str() << ": top-1 " << format_double(ref.baseline.top1) << ", best-in-top-5 "
              << format_double(ref.baseline.best_in_top5) << " on " << ref.baseline.sample_count << " test samples\n";
    return {{"train_config", config_json(config)}};
}

json cmd_transfer(const Params& p) {
    const Loaded ref = load(p.scenario, "--scenario");
    const Loaded tgt = p.target_scenario.empty() ? ref : load(p.target_scenario, "--target-scenario");
    if (p.gnb.size() != 1 || p.target_gnb.size() != 1)
        fail(ErrorKind::InvalidParameter, "transfer needs exactly one --gnb and one --target-gnb");
    TransferJob job;
    job.reference = {ref.id, p.gnb[0]};
    job.target = {tgt.id, p.target_gnb[0]};
    job.fine_tune_fraction = fine_tune_fraction(p);
    job.min_fine_tune_size = p.min_size;
    job.train_config = train_config(p);
    job.fine_tune_config = job.train_config;
    job.seed = p.seed;
    const BplDataset rd = build_dataset(ref.scenario, ref.scenario.gnb(job.reference.gnb_id), p.jobs);
    const BplDataset td = build_dataset(tgt.scenario, tgt.scenario.gnb(job.target.gnb_id), p.jobs);
    const TransferResult r = run_transfer_job(job, rd, td, fs::path(p.out));
    const std::string name = "transfer_" + ref.id + "_g" + std::to_string(job.reference.gnb_id) + "_" + tgt.id + "_g" +
                             std::to_string(job.target.gnb_id) + "_" + fraction_tag(job.fine_tune_fraction) + "_s" +
                             std::to_string(p.seed) + ".json";
    write_text(fs::path(p.out) / name, transfer_result_json(r));
    std::cout << "zero-shot top-1 " << format_double(r.zero_shot.top1);
    if (r.fine_tuned) std::cout << ", fine-tuned top-1 " << format_double(r.fine_tuned->top1);
    std::cout << '\n';
    return {{"train_config", config_json(job.train_config)}};
}

json cmd_matrix(const Params& p) {
    const Loaded ref = load(p.scenario, "--scenario");
    const bool inter = !p.target_scenario.empty();
    const Loaded tgt = inter ? load(p.target_scenario, "--target-scenario") : ref;
    const std::vector<int> ref_ids = gnb_ids_or_all(p.gnb, ref.scenario);
    const std::vector<int> tgt_ids = !p.target_gnb.empty() ? gnb_ids_or_all(p.target_gnb, tgt.scenario)
                                     : inter                ? gnb_ids_or_all({}, tgt.scenario)
                                                            : ref_ids;
    DatasetIndex index;
    add_datasets(index, ref, ref_ids, p.jobs);
    add_datasets(index, tgt, tgt_ids, p.jobs);

    const TrainConfig config = train_config(p);
    MatrixTemplate tmpl;
    tmpl.fine_tune_fraction = fine_tune_fraction(p);
    tmpl.min_fine_tune_size = p.min_size;
    tmpl.fine_tune_config = config;
    ReferenceCache cache(index, config, p.seed);
    const MatrixResult m = accuracy_matrix(cache, keys_of(ref.id, ref_ids), keys_of(tgt.id, tgt_ids), tmpl, p.jobs);

    const std::string stem = "matrix_" + ref.id + "_" + tgt.id + "_" + fraction_tag(tmpl.fine_tune_fraction) + "_m" +
                             std::to_string(p.min_size) + "_s" + std::to_string(p.seed);
    const fs::path out(p.out);
    write_matrix_csv(m.top1, out / (stem + "_top1.csv"));
    write_matrix_csv(m.best_in_top5, out / (stem + "_best_in_top5.csv"));
    if (tmpl.fine_tune_fraction > 0.0) {
        write_matrix_csv(m.zero_shot_top1, out / (stem + "_zero_shot_top1.csv"));
        write_matrix_csv(m.zero_shot_best_in_top5, out / (stem + "_zero_shot_best_in_top5.csv"));
    }
    write_text(out / (stem + ".json"), matrix_summary_json(m, tmpl, p.seed));

    std::cout << "top-1 accuracy (rows: reference, cols: target)\n";
    for (std::size_t r = 0; r < m.top1.rows.size(); ++r) {
        std::cout << m.top1.rows[r].str();
        for (double v : m.top1.values[r]) std::cout << '\t' << std::round(v * 1000.0) / 10.0;
        std::cout << '\n';
    }
    return {{"train_config", config_json(config)}};
}

json cmd_sweep(const Params& p) {
    const Loaded ref = load(p.scenario, "--scenario");
    const Loaded tgt = p.target_scenario.empty() ? ref : load(p.target_scenario, "--target-scenario");
    if (p.gnb.size() != 1 || p.target_gnb.size() != 1)
        fail(ErrorKind::InvalidParameter, "sweep needs exactly one --gnb and one --target-gnb");
    SweepSpec spec;
    spec.reference = {ref.id, p.gnb[0]};
    spec.target = {tgt.id, p.target_gnb[0]};
    spec.fractions = p.fractions;
    spec.seeds = p.seeds;
    spec.min_fine_tune_size = p.min_size;
    spec.target_cap = p.target_cap;
    spec.train_config = train_config(p);
    spec.fine_tune_config = spec.train_config;
    DatasetIndex index;
    add_datasets(index, ref, p.gnb, p.jobs);
    add_datasets(index, tgt, p.target_gnb, p.jobs);
    const SweepResult r = fine_tune_sweep(index, spec, p.jobs);

    const std::string stem = "sweep_" + ref.id + "_g" + std::to_string(spec.reference.gnb_id) + "_" + tgt.id + "_g" +
                             std::to_string(spec.target.gnb_id) + "_cap" + std::to_string(p.target_cap) + "_m" +
                             std::to_string(p.min_size);
    write_sweep_csv(r, fs::path(p.out) / (stem + ".csv"));
    write_text(fs::path(p.out) / (stem + ".json"), sweep_summary_json(r));
    for (const auto& c : mean_curve(r))
        std::cout << "fraction " << format_double(c.fraction) << ": top-1 " << format_double(c.top1.mean) << " +- "
                  << format_double(c.top1.std) << '\n';
    return {{"train_config", config_json(spec.train_config)}};
}

// ---- argument handling ------------------------------------------------------

struct Command {
    std::string name;
    std::string description;
    json (*body)(const Params&);
    std::vector<std::string> options;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> list{
        {"generate", "Generate a synthetic city scenario", cmd_generate,
         {"area-size", "buildings", "gnb-count", "grid-resolution", "min-gnb-spacing", "building-size-min",
          "building-size-max", "height-min", "height-max", "street-width", "max-reflections"}},
        {"dataset", "Trace a scenario and write per-gNB beam datasets and coverage", cmd_dataset, {"scenario", "gnb"}},
        {"train", "Train a reference model on one gNB", cmd_train,
         {"scenario", "dataset", "gnb", "epochs", "lr", "batch-size", "min-steps"}},
        {"transfer", "Zero-shot and fine-tuned transfer for one gNB pair", cmd_transfer,
         {"scenario", "target-scenario", "gnb", "target-gnb", "zero-shot", "fine-tune-fraction", "min-size", "epochs",
          "lr", "batch-size", "min-steps"}},
        {"matrix", "Accuracy matrix over reference and target gNBs", cmd_matrix,
         {"scenario", "target-scenario", "gnb", "target-gnb", "zero-shot", "fine-tune-fraction", "min-size", "epochs",
          "lr", "batch-size", "min-steps"}},
        {"sweep", "Accuracy versus fine-tuning fraction", cmd_sweep,
         {"scenario", "target-scenario", "gnb", "target-gnb", "fractions", "seeds", "target-cap", "min-size", "epochs",
          "lr", "batch-size", "min-steps"}},
    };
    return list;
}

void add_option(CLI::App& app, Params& p, const std::string& name) {
    const std::string flag = "--" + name;
    if (name == "scenario") app.add_option(flag, p.scenario, "Scenario JSON file");
    else if (name == "target-scenario") app.add_option(flag, p.target_scenario, "Target scenario JSON file (default: --scenario)");
    else if (name == "dataset") app.add_option(flag, p.dataset, "Dataset CSV written by the dataset command");
    else if (name == "gnb") app.add_option(flag, p.gnb, "Reference gNB id(s)")->delimiter(',');
    else if (name == "target-gnb") app.add_option(flag, p.target_gnb, "Target gNB id(s)")->delimiter(',');
    else if (name == "zero-shot") app.add_flag(flag, p.zero_shot, "Evaluate without fine-tuning");
    else if (name == "fine-tune-fraction") app.add_option(flag, p.fine_tune_fraction, "Fraction of the target pool used for fine-tuning")->check(CLI::Range(0.0, 1.0));
    else if (name == "min-size") app.add_option(flag, p.min_size, "Minimum fine-tuning subset size");
    else if (name == "epochs") app.add_option(flag, p.epochs, "Training epochs (milestones scale with it)");
    else if (name == "lr") app.add_option(flag, p.lr, "Initial learning rate");
    else if (name == "batch-size") app.add_option(flag, p.batch_size, "Mini-batch size");
    else if (name == "min-steps") app.add_option(flag, p.min_steps, "Minimum optimizer steps per training run");
    else if (name == "fractions") app.add_option(flag, p.fractions, "Fine-tuning fractions")->delimiter(',');
    else if (name == "seeds") app.add_option(flag, p.seeds, "Master seeds to average over")->delimiter(',');
    else if (name == "target-cap") app.add_option(flag, p.target_cap, "Cap the target dataset to this many samples (0: off)");
    else if (name == "area-size") app.add_option(flag, p.area_size, "Side of the square study area in metres");
    else if (name == "buildings") app.add_option(flag, p.buildings, "Number of buildings");
    else if (name == "gnb-count") app.add_option(flag, p.gnb_count, "Number of gNBs");
    else if (name == "grid-resolution") app.add_option(flag, p.grid_resolution, "UE grid spacing in metres");
    else if (name == "min-gnb-spacing") app.add_option(flag, p.min_gnb_spacing, "Minimum distance between gNBs in metres");
    else if (name == "building-size-min") app.add_option(flag, p.building_size_min, "Smallest building side in metres");
    else if (name == "building-size-max") app.add_option(flag, p.building_size_max, "Largest building side in metres");
    else if (name == "height-min") app.add_option(flag, p.height_min, "Lowest building height in metres");
    else if (name == "height-max") app.add_option(flag, p.height_max, "Highest building height in metres");
    else if (name == "street-width") app.add_option(flag, p.street_width, "Minimum clearance between buildings in metres");
    else if (name == "max-reflections") app.add_option(flag, p.max_reflections, "Maximum wall reflections per path");
}

void add_common(CLI::App& app, Params& p) {
    app.add_option("--seed", p.seed, "Master seed");
    app.add_option("--out", p.out, "Output directory");
    app.add_option("--jobs", p.jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--profile", p.profile, "default or practical")->check(CLI::IsMember({"default", "practical"}));
    app.add_option("--manifest", p.manifest, "JSON manifest supplying any option not given on the command line");
}

std::string scalar_token(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
}

// Tokens for the manifest options not already given on the command line.
std::vector<std::string> manifest_tokens(const CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open manifest " + path);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, "manifest " + path + ": " + e.what());
    }
    if (m.contains("command") && m["command"] != sub.get_name())
        fail(ErrorKind::InvalidParameter, "manifest is for command '" + m["command"].get<std::string>() + "'");
    const json& opts = m.contains("options") ? m["options"] : m;
    if (!opts.is_object()) fail(ErrorKind::Parse, "manifest options must be an object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : opts.items()) {
        if (key == "command" || key == "tool_version" || key == "resolved" || key == "help" || key == "manifest") continue;
        const CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) fail(ErrorKind::Parse, "manifest option '" + key + "' is not valid for " + sub.get_name());
        if (opt->count() > 0) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back("--" + key);
            continue;
        }
        tokens.push_back("--" + key);
        if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar_token(v);
            tokens.push_back(joined);
        } else {
            tokens.push_back(scalar_token(value));
        }
    }
    return tokens;
}

json echo_options(const CLI::App& sub, const std::set<std::string>& flags) {
    json opts = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (kNotEchoed.contains(name) || opt->count() == 0) continue;
        if (flags.contains(name)) {
            opts[name] = true;
            continue;
        }
        std::vector<std::string> values;
        for (const auto& r : opt->results()) {
            std::stringstream ss(r);
            for (std::string item; std::getline(ss, item, ',');) values.push_back(item);
        }
        if (opt->get_expected_max() > 1) opts[name] = values;
        else opts[name] = values.empty() ? std::string() : values.back();
    }
    return opts;
}

void print_error(std::string_view kind, const std::string& message) {
    std::cerr << json{{"error", {{"kind", std::string(kind)}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv) {
    Params p;
    CLI::App app{"Beam-pair prediction and cross-gNB transfer learning on synthetic mm-wave cities", "beamxfer"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    std::set<std::string> flags{"zero-shot"};
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const Command& c : commands()) {
        CLI::App* sub = app.add_subcommand(c.name, c.description);
        add_common(*sub, p);
        for (const auto& o : c.options) add_option(*sub, p, o);
        subs.emplace_back(sub, &c);
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
        for (auto& [sub, cmd] : subs) {
            if (sub->parsed() && !p.manifest.empty()) {
                const auto extra = manifest_tokens(*sub, p.manifest);
                if (!extra.empty()) {
                    args.insert(args.end(), extra.begin(), extra.end());
                    app.clear();
                    p = Params{};
                    rev.assign(args.rbegin(), args.rend());
                    app.parse(rev);
                }
            }
        }
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage_error", e.what());
        return 2;
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.what());
        return 2;
    }

    for (auto& [sub, cmd] : subs) {
        if (!sub->parsed()) continue;
        try {
            fs::create_directories(p.out);
            const json resolved = cmd->body(p);
            json manifest{{"command", cmd->name},
                          {"tool_version", kToolVersion},
                          {"options", echo_options(*sub, flags)},
                          {"resolved", resolved.is_null() ? json::object() : resolved}};
            manifest["resolved"]["seed"] = p.seed;
            manifest["resolved"]["profile"] = p.profile;
            write_text(fs::path(p.out) / "manifest.json", manifest.dump(2) + "\n");
            return 0;
        } catch (const Error& e) {
            print_error(to_string(e.kind()), e.what());
            return 1;
        } catch (const std::exception& e) {
            print_error("internal_error", e.what());
            return 1;
        }
    }
    return 2;
}

}  // namespace beamxfer::cli
