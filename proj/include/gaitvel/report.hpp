#pragma once

#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gaitvel/evaluation.hpp"

namespace gaitvel {

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const CellResult& cr : report.cells) {
        nlohmann::json folds = nlohmann::json::array();
        for (const FoldAudit& f : cr.cv.folds)
            folds.push_back({{"chosen_c", f.chosen_c},
                             {"rmse", f.rmse},
                             {"train_n", f.train_idx.size()},
                             {"test_n", f.test_idx.size()}});
        cells.push_back({{"participant", cr.cell.participant},
                         {"from", cr.cell.pair.first},
                         {"to", cr.cell.pair.second},
                         {"kind", std::string(to_string(cr.cell.kind))},
                         {"rmse_mean_cm_s", cr.cell.rmse_mean},
                         {"rmse_sd_cm_s", cr.cell.rmse_sd},
                         {"n_samples", cr.cell.n_samples},
                         {"leave_one_out", cr.cell.leave_one_out},
                         {"skipped", cr.cell.skipped()},
                         {"skip_reason", cr.cell.skip_reason},
                         {"folds", std::move(folds)}});
    }
    nlohmann::json doc{{"schema_version", kReportSchemaVersion},
                       {"mode", to_string(report.mode)},
                       {"seed", report.seed},
                       {"rows",
                        {{"features", report.feature_rows},
                         {"targets", report.target_rows},
                         {"matched", report.matched_rows}}},
                       {"cells", std::move(cells)}};
    if (report.mode == EvalMode::Clinical) doc["window_days"] = report.window_days;
    if (report.has_population) {
        nlohmann::json kinds = nlohmann::json::object();
        for (const auto& [kind, value] : report.population.kind_mean_rmse)
            kinds[std::string(to_string(kind))] = value;
        nlohmann::json order = nlohmann::json::array();
        for (FeatureKind kind : report.population.kind_order)
            order.push_back(std::string(to_string(kind)));
        nlohmann::json best = nlohmann::json::object();
        for (const auto& [participant, cell] : report.population.best_by_participant)
            best[participant] = {{"from", cell.pair.first},
                                 {"to", cell.pair.second},
                                 {"kind", std::string(to_string(cell.kind))},
                                 {"rmse_mean_cm_s", cell.rmse_mean},
                                 {"rmse_sd_cm_s", cell.rmse_sd}};
        doc["population"] = {{"kind_mean_rmse_cm_s", std::move(kinds)},
                             {"kind_order", std::move(order)},
                             {"best_by_participant", std::move(best)}};
    }
    const auto scatter = best_cell_scatter(report);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [truth, pred] : scatter) points.push_back({truth, pred});
    doc["scatter"] = std::move(points);
    if (scatter.size() >= 3) {
        std::vector<double> t, p;
        for (const auto& [truth, pred] : scatter) {
            t.push_back(truth);
            p.push_back(pred);
        }
        const RegressionSummary reg = predicted_vs_true(t, p);
        doc["predicted_vs_true"] = {
            {"slope", reg.slope}, {"intercept", reg.intercept}, {"r_squared", reg.r_squared}};
    }
    return doc;
}

// Population error per feature kind, one row per kind that produced cells.
inline std::string fig4_csv(const nlohmann::json& report) {
    std::string out = "kind,population_mean_rmse_cm_s\n";
    if (report.contains("population")) {
        const auto& kinds = report.at("population").at("kind_mean_rmse_cm_s");
        for (FeatureKind kind : kAllFeatureKinds) {
            const std::string key{to_string(kind)};
            if (kinds.contains(key)) {
                out += key;
                out += ',';
                out += format_double(kinds.at(key).get<double>());
                out += '\n';
            }
        }
    }
    return out;
}

// True vs predicted scatter backing the y = x diagnostic.
inline std::string fig5_csv(const nlohmann::json& report) {
    std::string out = "true_cm_s,predicted_cm_s\n";
    if (report.contains("scatter")) {
        for (const auto& point : report.at("scatter")) {
            out += format_double(point.at(0).get<double>());
            out += ',';
            out += format_double(point.at(1).get<double>());
            out += '\n';
        }
    }
    return out;
}

inline std::string render_report_text(const nlohmann::json& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "Gait velocity evaluation (" << report.at("mode").get<std::string>() << " mode";
    if (report.contains("window_days"))
        out << ", " << report.at("window_days").get<int>() << "-day windows";
    out << ", seed " << report.at("seed").get<std::uint64_t>() << ")\n";
    const auto& rows = report.at("rows");
    out << "Rows: " << rows.at("features").get<std::size_t>() << " features, "
        << rows.at("targets").get<std::size_t>() << " targets, "
        << rows.at("matched").get<std::size_t>() << " matched\n";

    if (report.contains("population")) {
        out << "\nPopulation error by feature kind (mean over participants of their "
               "best pair, cm/s):\n";
        const auto& kinds = report.at("population").at("kind_mean_rmse_cm_s");
        for (const auto& key : report.at("population").at("kind_order"))
            out << "  " << std::left << std::setw(8) << key.get<std::string>() << ' '
                << kinds.at(key.get<std::string>()).get<double>() << '\n';
        out << "\nBest cell per participant:\n";
        for (const auto& [participant, best] :
             report.at("population").at("best_by_participant").items())
            out << "  " << participant << ": " << best.at("from").get<std::string>() << " -> "
                << best.at("to").get<std::string>() << " [" << best.at("kind").get<std::string>()
                << "] " << best.at("rmse_mean_cm_s").get<double>() << " +/- "
                << best.at("rmse_sd_cm_s").get<double>() << '\n';
    }
    if (report.contains("predicted_vs_true")) {
        const auto& reg = report.at("predicted_vs_true");
        out << "\nPredicted vs true: slope " << reg.at("slope").get<double>() << ", intercept "
            << reg.at("intercept").get<double>() << ", r^2 " << std::setprecision(4)
            << reg.at("r_squared").get<double>() << std::setprecision(2) << '\n';
    }

    std::size_t skipped = 0;
    for (const auto& cell : report.at("cells"))
        if (cell.at("skipped").get<bool>()) ++skipped;
    out << "\nCells: " << report.at("cells").size() << " evaluated, " << skipped << " skipped\n";
    for (const auto& cell : report.at("cells")) {
        if (cell.at("skipped").get<bool>()) continue;
        out << "  " << cell.at("participant").get<std::string>() << ' '
            << cell.at("from").get<std::string>() << " -> " << cell.at("to").get<std::string>()
            << " [" << cell.at("kind").get<std::string>() << "] "
            << cell.at("rmse_mean_cm_s").get<double>() << " +/- "
            << cell.at("rmse_sd_cm_s").get<double>() << " (n="
            << cell.at("n_samples").get<std::size_t>()
            << (cell.at("leave_one_out").get<bool>() ? ", leave-one-out" : "") << ")\n";
    }
    if (skipped > 0) {
        out << "Skipped cells:\n";
        for (const auto& cell : report.at("cells")) {
            if (!cell.at("skipped").get<bool>()) continue;
            out << "  " << cell.at("participant").get<std::string>() << ' '
                << cell.at("from").get<std::string>() << " -> " << cell.at("to").get<std::string>()
                << " [" << cell.at("kind").get<std::string>() << "]: "
                << cell.at("skip_reason").get<std::string>() << '\n';
        }
    }
    return out.str();
}

} // namespace gaitvel
