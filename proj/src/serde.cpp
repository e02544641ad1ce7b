#include "c2f/serde.hpp"

#include "c2f/policy.hpp"

namespace c2f {

nlohmann::json profile_to_json(const DatasetProfile& p) {
    return {
        {"name", p.name},
        {"r_min", p.r_min},
        {"r_max", p.r_max},
        {"class_edges_acc7", p.class_edges_acc7},
        {"class_edges_acc5", p.class_edges_acc5},
        {"neutral_band", p.neutral_band},
    };
}

DatasetProfile profile_from_json(const nlohmann::json& j) {
    try {
        DatasetProfile p;
        p.name = j.at("name").get<std::string>();
        p.r_min = j.at("r_min").get<double>();
        p.r_max = j.at("r_max").get<double>();
        p.class_edges_acc7 = j.value("class_edges_acc7", std::vector<double>{});
        p.class_edges_acc5 = j.value("class_edges_acc5", std::vector<double>{});
        p.neutral_band = j.value("neutral_band", 0.0);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
}

nlohmann::json policy_config_to_json(const PolicyConfig& cfg) {
    return {
        {"d", cfg.d},
        {"h", cfg.h},
        {"n_think", cfg.n_think},
        {"max_think", cfg.max_think},
        {"max_len", cfg.max_len},
        {"init_scale", cfg.init_scale},
        {"init_seed", cfg.init_seed},
        {"grammar_masked", cfg.grammar_masked},
        {"profile", profile_to_json(cfg.profile)},
    };
}

PolicyConfig policy_config_from_json(const nlohmann::json& j) {
    try {
        PolicyConfig cfg;
        cfg.d = j.value("d", cfg.d);
        cfg.h = j.value("h", cfg.h);
        cfg.n_think = j.value("n_think", cfg.n_think);
        cfg.max_think = j.value("max_think", cfg.max_think);
        cfg.max_len = j.value("max_len", cfg.max_len);
        cfg.init_scale = j.value("init_scale", cfg.init_scale);
        cfg.init_seed = j.value("init_seed", cfg.init_seed);
        cfg.grammar_masked = j.value("grammar_masked", cfg.grammar_masked);
        if (j.contains("profile")) cfg.profile = profile_from_json(j.at("profile"));
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("policy config: ") + e.what());
    }
}

}  // namespace c2f
