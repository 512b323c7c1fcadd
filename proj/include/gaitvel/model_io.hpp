#pragma once

#include <string>

#include <json.hpp>

#include "gaitvel/svr.hpp"

namespace gaitvel {

inline constexpr int kModelSchemaVersion = 1;

// Model document: everything predict() needs, in solver units plus the two
// training-fold transforms.
inline nlohmann::json model_to_json(const SvrModel& model) {
    nlohmann::json alphas = nlohmann::json::array();
    for (std::size_t i = 0; i < model.fit.alpha.size(); ++i)
        alphas.push_back({model.fit.alpha[i], model.fit.alpha_star[i]});
    return nlohmann::json{
        {"schema_version", kModelSchemaVersion},
        {"w", model.fit.w},
        {"b", model.fit.b},
        {"alphas", std::move(alphas)},
        {"scaler", {{"min", model.scaler.min}, {"max", model.scaler.max}}},
        {"target_standardizer", {{"mean", model.targets.mean}, {"sd", model.targets.sd}}},
        {"params",
         {{"C", model.params.C},
          {"epsilon", model.params.epsilon},
          {"tolerance", model.params.tolerance},
          {"max_iter", model.params.max_iter}}},
    };
}

inline std::string save_model(const SvrModel& model) {
    return model_to_json(model).dump(2) + "\n";
}

inline SvrModel load_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        raise("model json: ", e.what());
    }
    try {
        require(doc.at("schema_version").get<int>() == kModelSchemaVersion,
                "model json: unsupported schema_version ", doc.at("schema_version").dump());
        SvrModel model;
        model.fit.w = doc.at("w").get<double>();
        model.fit.b = doc.at("b").get<double>();
        model.params.C = doc.at("params").at("C").get<double>();
        model.params.epsilon = doc.at("params").at("epsilon").get<double>();
        model.params.tolerance = doc.at("params").at("tolerance").get<double>();
        model.params.max_iter = doc.at("params").at("max_iter").get<int>();
        model.scaler.min = doc.at("scaler").at("min").get<double>();
        model.scaler.max = doc.at("scaler").at("max").get<double>();
        model.targets.mean = doc.at("target_standardizer").at("mean").get<double>();
        model.targets.sd = doc.at("target_standardizer").at("sd").get<double>();
        for (const auto& pair : doc.at("alphas")) {
            require(pair.is_array() && pair.size() == 2, "model json: alphas entries must be pairs");
            const double a = pair[0].get<double>();
            const double as = pair[1].get<double>();
            require(a >= 0 && a <= model.params.C && as >= 0 && as <= model.params.C,
                    "model json: alpha pair outside [0, C]");
            model.fit.alpha.push_back(a);
            model.fit.alpha_star.push_back(as);
        }
        require(model.scaler.max > model.scaler.min, "model json: scaler max must exceed min");
        require(model.targets.sd > 0, "model json: target sd must be > 0");
        require(model.params.C > 0 && model.params.epsilon >= 0, "model json: invalid params");
        return model;
    } catch (const nlohmann::json::exception& e) {
        raise("model json: ", e.what());
    }
}

} // namespace gaitvel
