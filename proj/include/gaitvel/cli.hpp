#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitvel/evaluation.hpp"
#include "gaitvel/events.hpp"
#include "gaitvel/features.hpp"
#include "gaitvel/groundtruth.hpp"
#include "gaitvel/manifest.hpp"
#include "gaitvel/model_io.hpp"
#include "gaitvel/report.hpp"
#include "gaitvel/simulator.hpp"
#include "gaitvel/svr.hpp"
#include "gaitvel/transitions.hpp"

namespace gaitvel::cli {

namespace detail {

inline std::vector<SensorEvent> load_events(const std::string& path) {
    std::istringstream in(read_text_file(path));
    return parse_event_csv(in);
}

inline std::vector<SensorEvent> load_events_excluding(const std::string& events_path,
                                                      const std::string& exclusions_path,
                                                      int tz_offset_minutes) {
    std::vector<SensorEvent> events = load_events(events_path);
    if (exclusions_path.empty()) return events;
    std::istringstream in(read_text_file(exclusions_path));
    for (const ExclusionCalendar& cal : parse_exclusion_csv(in)) {
        std::vector<SensorEvent> mine, others;
        for (SensorEvent& ev : events)
            (ev.participant == cal.participant ? mine : others).push_back(std::move(ev));
        mine = apply_exclusions(mine, cal, tz_offset_minutes);
        events = std::move(others);
        events.insert(events.end(), mine.begin(), mine.end());
    }
    std::stable_sort(events.begin(), events.end(), [](const SensorEvent& a, const SensorEvent& b) {
        if (a.participant != b.participant) return a.participant < b.participant;
        if (a.time.ms != b.time.ms) return a.time.ms < b.time.ms;
        return a.sensor_id < b.sensor_id;
    });
    return events;
}

inline HouseholdConfig load_config_or_default(const std::string& path, int days) {
    if (path.empty()) return default_household(days);
    std::istringstream in(read_text_file(path));
    return parse_household_config(in);
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise("cannot create directory ", dir, ": ", ec.message());
}

inline std::string side_manifest_path(const std::string& out_file) {
    return out_file + ".manifest.json";
}

struct TrainJoin {
    std::vector<double> x;
    std::vector<double> y;
};

inline TrainJoin join_training_rows(const std::vector<FeatureSample>& features,
                                    const std::vector<DailyVelocity>& targets, FeatureKind kind,
                                    const RoomPair& pair) {
    std::vector<FeatureSample> filtered;
    for (const FeatureSample& f : features)
        if (f.kind == kind && f.from_room == pair.first && f.to_room == pair.second)
            filtered.push_back(f);
    TrainJoin join;
    for (const MatchedRow& row : join_daily(filtered, targets)) {
        join.x.push_back(row.x);
        join.y.push_back(row.y);
    }
    return join;
}

inline RoomPair parse_pair_flag(const std::string& s) {
    const std::size_t colon = s.find(':');
    require(colon != std::string::npos && colon > 0 && colon + 1 < s.size(),
            "--pair wants from:to, got '", s, "'");
    return {s.substr(0, colon), s.substr(colon + 1)};
}

inline FeatureKind parse_kind_flag(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return parse_feature_kind(s);
}

inline void emit_plots(const nlohmann::json& report, const std::string& plots_dir) {
    ensure_dir(plots_dir);
    const std::filesystem::path base(plots_dir);
    write_text_file((base / "fig4_kind_vs_population_error.csv").string(), fig4_csv(report));
    write_text_file((base / "fig5_true_vs_predicted.csv").string(), fig5_csv(report));
}

// ---- subcommand bodies ----

inline void run_simulate(const std::string& config_path, int days, std::uint64_t seed,
                         const std::string& out_dir) {
    HouseholdConfig cfg = load_config_or_default(config_path, days);
    cfg.seed = seed;
    const SimResult result = simulate(cfg, days);
    export_simulation(result, cfg, out_dir);
    write_text_file((std::filesystem::path(out_dir) / "house.cfg").string(),
                    format_household_config(cfg));

    RunManifest m;
    m.subcommand = "simulate";
    m.seed = seed;
    m.has_seed = true;
    m.value("days", std::to_string(days));
    m.value("out_dir", out_dir);
    if (!config_path.empty()) {
        m.value("config", config_path);
        m.input(config_path);
    } else {
        m.value("config", "(default household)");
    }
    write_manifest(m, (std::filesystem::path(out_dir) / "manifest.json").string());
}

inline void run_ingest(const std::string& in_path, const std::string& exclusions_path,
                       int tz_offset_minutes, const std::string& out_path) {
    const std::vector<SensorEvent> events =
        load_events_excluding(in_path, exclusions_path, tz_offset_minutes);
    write_text_file(out_path, serialize_events(events));

    RunManifest m;
    m.subcommand = "ingest";
    m.value("in", in_path);
    m.value("tz_offset_minutes", std::to_string(tz_offset_minutes));
    m.value("out", out_path);
    m.input(in_path);
    if (!exclusions_path.empty()) {
        m.value("exclusions", exclusions_path);
        m.input(exclusions_path);
    }
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_extract_transitions(const std::string& in_path,
                                    const std::string& exclusions_path, double cap_seconds,
                                    std::int64_t min_count, int tz_offset_minutes,
                                    const std::string& out_path) {
    const std::vector<SensorEvent> events =
        load_events_excluding(in_path, exclusions_path, tz_offset_minutes);
    std::vector<TransitionRecord> records =
        extract_transitions(split_days(events, tz_offset_minutes));
    records = censor_dwell(records, cap_seconds);
    records = filter_rare_pairs(records, census(records), min_count);
    write_text_file(out_path, serialize_transitions(records));

    RunManifest m;
    m.subcommand = "extract-transitions";
    m.value("in", in_path);
    m.value("cap_seconds", format_double(cap_seconds));
    m.value("min_count", std::to_string(min_count));
    m.value("tz_offset_minutes", std::to_string(tz_offset_minutes));
    m.value("out", out_path);
    m.input(in_path);
    if (!exclusions_path.empty()) {
        m.value("exclusions", exclusions_path);
        m.input(exclusions_path);
    }
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_ground_truth(const std::string& in_path, const std::string& geometry_path,
                             std::uint64_t seed, const std::string& out_path,
                             const std::string& qq_path, int tz_offset_minutes) {
    const std::vector<SensorEvent> events = load_events(in_path);
    std::istringstream gin(read_text_file(geometry_path));
    const LineGeometry geometry = parse_line_geometry_csv(gin);
    const GroundTruthResult result =
        compute_ground_truth(events, geometry, seed, 10.0, tz_offset_minutes);
    write_text_file(out_path, serialize_daily_velocity(result.daily));

    if (!qq_path.empty()) {
        std::map<std::string, std::vector<double>> retained;
        for (const VelocityEstimate& e : result.retained)
            retained[e.participant].push_back(e.velocity_cmps);
        std::string csv = "participant,normal_quantile,velocity_cm_s\n";
        for (const auto& [participant, values] : retained) {
            for (const auto& [q, v] : qq_pairs(values)) {
                csv += participant;
                csv += ',';
                csv += format_double(q);
                csv += ',';
                csv += format_double(v);
                csv += '\n';
            }
        }
        write_text_file(qq_path, csv);
    }

    RunManifest m;
    m.subcommand = "ground-truth";
    m.seed = seed;
    m.has_seed = true;
    m.value("in", in_path);
    m.value("line_geometry", geometry_path);
    m.value("tz_offset_minutes", std::to_string(tz_offset_minutes));
    m.value("out", out_path);
    if (!qq_path.empty()) m.value("qq_report", qq_path);
    m.input(in_path);
    m.input(geometry_path);
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_features(const std::string& transitions_path, const std::string& mode,
                         int window_days, const std::string& clinic_path,
                         const std::string& out_path) {
    std::istringstream tin(read_text_file(transitions_path));
    const std::vector<TransitionRecord> records = parse_transition_csv(tin);
    std::vector<FeatureSample> samples;
    if (mode == "daily") {
        samples = daily_features(records);
    } else if (mode == "window") {
        require(!clinic_path.empty(), "--clinic is required in window mode");
        require(window_days == 15 || window_days == 30,
                "--window-days must be 15 or 30, got ", window_days);
        std::istringstream cin_(read_text_file(clinic_path));
        const std::vector<ClinicMeasurement> clinic = parse_clinic_csv(cin_);
        std::vector<std::pair<std::string, CivilDate>> centers;
        centers.reserve(clinic.size());
        for (const ClinicMeasurement& c : clinic) centers.emplace_back(c.participant, c.date);
        samples = window_features(records, centers, window_days / 2);
    } else {
        raise("--mode must be daily or window, got '", mode, "'");
    }
    write_text_file(out_path, serialize_features(samples));

    RunManifest m;
    m.subcommand = "features";
    m.value("transitions", transitions_path);
    m.value("mode", mode);
    m.value("out", out_path);
    m.input(transitions_path);
    if (mode == "window") {
        m.value("window_days", std::to_string(window_days));
        m.value("clinic", clinic_path);
        m.input(clinic_path);
    }
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_train(const std::string& features_path, const std::string& targets_path,
                      const std::string& kind_flag, const std::string& pair_flag, double epsilon,
                      std::uint64_t seed, const std::string& out_path) {
    const FeatureKind kind = parse_kind_flag(kind_flag);
    const RoomPair pair = parse_pair_flag(pair_flag);
    std::istringstream fin(read_text_file(features_path));
    const std::vector<FeatureSample> features = parse_feature_csv(fin);
    std::istringstream tin(read_text_file(targets_path));
    const std::vector<DailyVelocity> targets = parse_daily_velocity_csv(tin);
    const TrainJoin join = join_training_rows(features, targets, kind, pair);
    require(join.x.size() >= 2, "no matched samples: need >= 2 joined rows for ",
            pair_label(pair), " [", to_string(kind), "], got ", join.x.size());

    SvrParams params;
    params.epsilon = epsilon;
    params.C = choose_c(join.x, join.y, params, mix_seed(seed, fnv1a64("train")));
    const SvrModel model = train_model(join.x, join.y, params);
    write_text_file(out_path, save_model(model));

    RunManifest m;
    m.subcommand = "train";
    m.seed = seed;
    m.has_seed = true;
    m.value("features", features_path);
    m.value("targets", targets_path);
    m.value("kind", std::string(to_string(kind)));
    m.value("pair", pair_label(pair));
    m.value("epsilon", format_double(epsilon));
    m.value("chosen_c", format_double(params.C));
    m.value("out", out_path);
    m.input(features_path);
    m.input(targets_path);
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_evaluate(const std::string& features_path, const std::string& targets_path,
                         const std::string& mode, int window_days, double epsilon,
                         std::uint64_t seed, const std::string& out_path,
                         const std::string& plots_dir) {
    std::istringstream fin(read_text_file(features_path));
    const std::vector<FeatureSample> features = parse_feature_csv(fin);
    SvrParams params;
    params.epsilon = epsilon;

    EvaluationReport report;
    if (mode == "daily") {
        std::istringstream tin(read_text_file(targets_path));
        report = evaluate_daily(features, parse_daily_velocity_csv(tin), params, 5, seed);
    } else if (mode == "clinical") {
        std::istringstream tin(read_text_file(targets_path));
        report = evaluate_clinical(features, parse_clinic_csv(tin), window_days, params, 5, seed);
    } else {
        raise("--mode must be daily or clinical, got '", mode, "'");
    }
    require(report.matched_rows > 0, "no matched samples");

    const nlohmann::json doc = report_to_json(report);
    write_text_file(out_path, doc.dump(2) + "\n");
    if (!plots_dir.empty()) emit_plots(doc, plots_dir);

    RunManifest m;
    m.subcommand = "evaluate";
    m.seed = seed;
    m.has_seed = true;
    m.value("features", features_path);
    m.value("targets", targets_path);
    m.value("mode", mode);
    if (mode == "clinical") m.value("window_days", std::to_string(window_days));
    m.value("epsilon", format_double(epsilon));
    m.value("out", out_path);
    if (!plots_dir.empty()) m.value("plots_dir", plots_dir);
    m.input(features_path);
    m.input(targets_path);
    write_manifest(m, side_manifest_path(out_path));
}

inline void run_report(const std::string& in_path, const std::string& out_path,
                       const std::string& plots_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(in_path));
    } catch (const nlohmann::json::exception& e) {
        raise("report json: ", e.what());
    }
    try {
        const std::string text = render_report_text(doc);
        if (out_path.empty()) std::cout << text;
        else write_text_file(out_path, text);
        if (!plots_dir.empty()) emit_plots(doc, plots_dir);
    } catch (const nlohmann::json::exception& e) {
        raise("report json: ", e.what());
    }
}

inline void run_pipeline(const std::string& config_path, int days, std::uint64_t seed,
                         const std::string& out_dir, double epsilon, double cap_seconds,
                         std::int64_t min_count) {
    ensure_dir(out_dir);
    const std::filesystem::path base(out_dir);
    const std::string sim_dir = (base / "sim").string();
    run_simulate(config_path, days, seed, sim_dir);

    const std::string events_path = (base / "sim" / "events.csv").string();
    const std::string transitions_path = (base / "transitions.csv").string();
    run_extract_transitions(events_path, "", cap_seconds, min_count, 0, transitions_path);

    const std::string daily_path = (base / "daily_velocity.csv").string();
    run_ground_truth(events_path, (base / "sim" / "line.csv").string(),
                     mix_seed(seed, fnv1a64("ground-truth")), daily_path,
                     (base / "qq.csv").string(), 0);

    const std::string features_path = (base / "features.csv").string();
    run_features(transitions_path, "daily", 0, "", features_path);

    const std::string report_path = (base / "report.json").string();
    run_evaluate(features_path, daily_path, "daily", 0, epsilon,
                 mix_seed(seed, fnv1a64("evaluate")), report_path, (base / "plots").string());

    run_report(report_path, (base / "report.txt").string(), "");

    RunManifest m;
    m.subcommand = "pipeline";
    m.seed = seed;
    m.has_seed = true;
    m.value("days", std::to_string(days));
    m.value("epsilon", format_double(epsilon));
    m.value("cap_seconds", format_double(cap_seconds));
    m.value("min_count", std::to_string(min_count));
    m.value("out_dir", out_dir);
    if (!config_path.empty()) {
        m.value("config", config_path);
        m.input(config_path);
    } else {
        m.value("config", "(default household)");
    }
    write_manifest(m, (base / "manifest.json").string());
}

} // namespace detail

// Builds the CLI and executes one subcommand. Returns the process exit code:
// 0 success, 1 runtime failure, 2 usage error.
inline int run(std::vector<std::string> args) {
    CLI::App app{"gait velocity estimation from in-home motion sensor transitions", "gaitvel"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for every subcommand");

    // simulate
    std::string sim_config, sim_out_dir;
    int sim_days = 730;
    std::uint64_t sim_seed = 0;
    CLI::App* sim = app.add_subcommand("simulate", "generate a labeled household event stream");
    sim->add_option("--config", sim_config, "household config file (default: built-in household)")
        ->check(CLI::ExistingFile);
    sim->add_option("--days", sim_days, "number of study days")->required();
    sim->add_option("--seed", sim_seed, "random seed")->required();
    sim->add_option("--out-dir", sim_out_dir, "output directory")->required();

    // ingest
    std::string ing_in, ing_excl, ing_out;
    int ing_tz = 0;
    CLI::App* ing = app.add_subcommand("ingest", "validate and normalize an event stream");
    ing->add_option("--in", ing_in, "events csv")->required()->check(CLI::ExistingFile);
    ing->add_option("--exclusions", ing_excl, "exclusion calendar csv")->check(CLI::ExistingFile);
    ing->add_option("--tz-offset-minutes", ing_tz, "home-local timezone offset");
    ing->add_option("--out", ing_out, "normalized events csv")->required();

    // extract-transitions
    std::string ext_in, ext_excl, ext_out;
    double ext_cap = 60.0;
    std::int64_t ext_min_count = 50;
    int ext_tz = 0;
    CLI::App* ext = app.add_subcommand("extract-transitions",
                                       "room-to-room transition records from events");
    ext->add_option("--in", ext_in, "events csv")->required()->check(CLI::ExistingFile);
    ext->add_option("--exclusions", ext_excl, "exclusion calendar csv")->check(CLI::ExistingFile);
    ext->add_option("--cap-seconds", ext_cap, "dwell cap in seconds");
    ext->add_option("--min-count", ext_min_count, "minimum per-pair record count (strict >)");
    ext->add_option("--tz-offset-minutes", ext_tz, "home-local timezone offset");
    ext->add_option("--out", ext_out, "transitions csv")->required();

    // ground-truth
    std::string gt_in, gt_geom, gt_out, gt_qq;
    std::uint64_t gt_seed = 0;
    int gt_tz = 0;
    CLI::App* gt = app.add_subcommand("ground-truth",
                                      "daily velocities from sensor-line walks");
    gt->add_option("--in", gt_in, "events csv")->required()->check(CLI::ExistingFile);
    gt->add_option("--line-geometry", gt_geom, "line geometry csv")
        ->required()
        ->check(CLI::ExistingFile);
    gt->add_option("--seed", gt_seed, "random seed")->required();
    gt->add_option("--tz-offset-minutes", gt_tz, "home-local timezone offset");
    gt->add_option("--out", gt_out, "daily velocity csv")->required();
    gt->add_option("--qq-report", gt_qq, "write paired quantiles for Q-Q plotting");

    // features
    std::string feat_trans, feat_mode = "daily", feat_clinic, feat_out;
    int feat_window = 15;
    CLI::App* feat = app.add_subcommand("features", "distributional transition-time features");
    feat->add_option("--transitions", feat_trans, "transitions csv")
        ->required()
        ->check(CLI::ExistingFile);
    feat->add_option("--mode", feat_mode, "daily or window");
    feat->add_option("--window-days", feat_window, "window width (15 or 30) in window mode");
    feat->add_option("--clinic", feat_clinic, "clinic csv giving window centers")
        ->check(CLI::ExistingFile);
    feat->add_option("--out", feat_out, "features csv")->required();

    // train
    std::string tr_features, tr_targets, tr_kind, tr_pair, tr_out;
    double tr_epsilon = 0.1;
    std::uint64_t tr_seed = 0;
    CLI::App* tr = app.add_subcommand("train", "fit one SVR model for a (pair, kind) cell");
    tr->add_option("--features", tr_features, "features csv")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--targets", tr_targets, "daily velocity csv")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--kind", tr_kind, "feature kind (p10|p15|p20|q1|mean|median)")->required();
    tr->add_option("--pair", tr_pair, "room pair as from:to")->required();
    tr->add_option("--epsilon", tr_epsilon, "tube half-width in standardized units");
    tr->add_option("--seed", tr_seed, "fold-shuffle seed for the C grid search");
    tr->add_option("--out", tr_out, "model json")->required();

    // evaluate
    std::string ev_features, ev_targets, ev_mode = "daily", ev_out, ev_plots;
    int ev_window = 15;
    double ev_epsilon = 0.1;
    std::uint64_t ev_seed = 0;
    CLI::App* ev = app.add_subcommand("evaluate", "cross-validated RMSE per (pair, kind)");
    ev->add_option("--features", ev_features, "features csv")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_option("--targets", ev_targets, "daily velocity csv or clinic csv")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_option("--mode", ev_mode, "daily or clinical");
    ev->add_option("--window-days", ev_window, "window width (15 or 30) in clinical mode");
    ev->add_option("--epsilon", ev_epsilon, "tube half-width in standardized units");
    ev->add_option("--seed", ev_seed, "random seed")->required();
    ev->add_option("--out", ev_out, "report json")->required();
    ev->add_option("--plots-dir", ev_plots, "directory for plot-ready csv files");

    // report
    std::string rep_in, rep_out, rep_plots;
    CLI::App* rep = app.add_subcommand("report", "render report.json as text and plot csv");
    rep->add_option("--in", rep_in, "report json")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", rep_out, "text output (default: stdout)");
    rep->add_option("--plots-dir", rep_plots, "directory for plot-ready csv files");

    // pipeline
    std::string pl_config, pl_out_dir;
    int pl_days = 730;
    std::uint64_t pl_seed = 0;
    double pl_epsilon = 0.1, pl_cap = 60.0;
    std::int64_t pl_min_count = 50;
    CLI::App* pl = app.add_subcommand("pipeline",
                                      "simulate -> transitions -> ground truth -> features -> "
                                      "evaluate -> report");
    pl->add_option("--config", pl_config, "household config file (default: built-in household)")
        ->check(CLI::ExistingFile);
    pl->add_option("--days", pl_days, "number of study days")->required();
    pl->add_option("--seed", pl_seed, "random seed")->required();
    pl->add_option("--out-dir", pl_out_dir, "output directory")->required();
    pl->add_option("--epsilon", pl_epsilon, "tube half-width in standardized units");
    pl->add_option("--cap-seconds", pl_cap, "dwell cap in seconds");
    pl->add_option("--min-count", pl_min_count, "minimum per-pair record count (strict >)");

    std::reverse(args.begin(), args.end()); // CLI11 consumes back to front
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    try {
        if (sim->parsed()) {
            detail::run_simulate(sim_config, sim_days, sim_seed, sim_out_dir);
        } else if (ing->parsed()) {
            detail::run_ingest(ing_in, ing_excl, ing_tz, ing_out);
        } else if (ext->parsed()) {
            detail::run_extract_transitions(ext_in, ext_excl, ext_cap, ext_min_count, ext_tz,
                                            ext_out);
        } else if (gt->parsed()) {
            detail::run_ground_truth(gt_in, gt_geom, gt_seed, gt_out, gt_qq, gt_tz);
        } else if (feat->parsed()) {
            detail::run_features(feat_trans, feat_mode, feat_window, feat_clinic, feat_out);
        } else if (tr->parsed()) {
            detail::run_train(tr_features, tr_targets, tr_kind, tr_pair, tr_epsilon, tr_seed,
                              tr_out);
        } else if (ev->parsed()) {
            detail::run_evaluate(ev_features, ev_targets, ev_mode, ev_window, ev_epsilon, ev_seed,
                                 ev_out, ev_plots);
        } else if (rep->parsed()) {
            detail::run_report(rep_in, rep_out, rep_plots);
        } else if (pl->parsed()) {
            detail::run_pipeline(pl_config, pl_days, pl_seed, pl_out_dir, pl_epsilon, pl_cap,
                                 pl_min_count);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

} // namespace gaitvel::cli
