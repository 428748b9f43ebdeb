#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metafuse/metafuse.hpp"

namespace metafuse::cli {

using nlohmann::json;

struct ComponentEntry {
    std::string path;  // resolved against the config file's directory
    std::string name;
    std::string domain;
    FeatureType type = FeatureType::continuous;
};

struct PipelineConfig {
    std::string source;  // file the config was read from
    std::string uid = "uid";
    std::uint64_t seed = 42;
    std::vector<ComponentEntry> components;
    std::vector<ComponentEntry> targets;
    std::size_t nrow = 20;
    SettingsOptions settings;
    std::vector<std::string> clust_algs{"spectral_eigen", "spectral_rot"};
    std::array<std::vector<std::string>, 5> metrics{{{"euclidean"}, {"euclidean"}, {"euclidean"}, {"gower"}, {"gower"}}};

    MetricsRegistry metrics_registry() const {
        auto r = MetricsRegistry::empty();
        for (auto t : kAllFeatureTypes)
            for (const auto& m : metrics[type_index(t)]) r.add(t, m);
        r.validate();
        return r;
    }

    ClustAlgsRegistry clust_algs_registry() const {
        auto r = ClustAlgsRegistry::empty();
        for (const auto& a : clust_algs) r.add(a);
        return r;
    }

    RegistrySizes registry_sizes() const {
        RegistrySizes s;
        s.clust_algs = clust_algs.size();
        for (std::size_t i = 0; i < 5; ++i) s.metrics[i] = metrics[i].size();
        return s;
    }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require(j.is_object(), "config", where + " must be an object");
    for (const auto& [key, _] : j.items())
        require(allowed.count(key) > 0, "config", "unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline std::vector<ComponentEntry> parse_components(const json& arr, const std::filesystem::path& base, const std::string& where) {
    require(arr.is_array() && !arr.empty(), "config", where + " must be a nonempty array");
    std::vector<ComponentEntry> out;
    for (const auto& c : arr) {
        reject_unknown_keys(c, {"path", "name", "domain", "type"}, where + " entry");
        for (const char* k : {"path", "name", "type"})
            require(c.contains(k), "config", where + " entry is missing '" + k + "'");
        ComponentEntry e;
        const std::filesystem::path p = c.at("path").get<std::string>();
        e.path = (p.is_absolute() ? p : base / p).lexically_normal().string();
        e.name = c.at("name").get<std::string>();
        e.domain = get_or<std::string>(c, "domain", e.name);
        e.type = parse_feature_type(c.at("type").get<std::string>());
        out.push_back(std::move(e));
    }
    return out;
}

inline void parse_settings(const json& s, PipelineConfig& cfg) {
    reject_unknown_keys(s,
                        {"nrow", "min_alpha", "max_alpha", "alpha_values", "min_k", "max_k", "k_values", "min_t", "max_t",
                         "t_values", "snf_schemes", "clust_algs", "dropout", "min_removed_inputs", "max_removed_inputs"},
                        "settings");
    auto& o = cfg.settings;
    cfg.nrow = get_or<std::size_t>(s, "nrow", cfg.nrow);
    o.min_alpha = get_or(s, "min_alpha", o.min_alpha);
    o.max_alpha = get_or(s, "max_alpha", o.max_alpha);
    o.alpha_values = get_or(s, "alpha_values", o.alpha_values);
    o.min_k = get_or(s, "min_k", o.min_k);
    o.max_k = get_or(s, "max_k", o.max_k);
    o.k_values = get_or(s, "k_values", o.k_values);
    o.min_t = get_or(s, "min_t", o.min_t);
    o.max_t = get_or(s, "max_t", o.max_t);
    o.t_values = get_or(s, "t_values", o.t_values);
    o.snf_schemes = get_or(s, "snf_schemes", o.snf_schemes);
    o.clust_algs = get_or(s, "clust_algs", o.clust_algs);
    if (s.contains("dropout")) o.dropout = parse_dropout(s.at("dropout").get<std::string>());
    o.min_removed_inputs = get_or(s, "min_removed_inputs", o.min_removed_inputs);
    if (s.contains("max_removed_inputs") && !s.at("max_removed_inputs").is_null())
        o.max_removed_inputs = s.at("max_removed_inputs").get<int>();
}

inline void parse_registry(const json& r, PipelineConfig& cfg) {
    reject_unknown_keys(r, {"clust_algs", "metrics"}, "registry");
    if (r.contains("clust_algs")) {
        cfg.clust_algs = r.at("clust_algs").get<std::vector<std::string>>();
        require(!cfg.clust_algs.empty(), "config", "registry.clust_algs must not be empty");
        for (const auto& a : cfg.clust_algs) (void)builtin_clust_alg(a);
    }
    if (r.contains("metrics")) {
        const auto& m = r.at("metrics");
        reject_unknown_keys(m, {"continuous", "discrete", "ordinal", "categorical", "mixed"}, "registry.metrics");
        for (const auto& [type, names] : m.items()) {
            auto list = names.get<std::vector<std::string>>();
            require(!list.empty(), "config", "registry.metrics." + type + " must not be empty");
            for (const auto& n : list) (void)builtin_metric(n);
            cfg.metrics[type_index(parse_feature_type(type))] = std::move(list);
        }
    }
}

}  // namespace detail

inline PipelineConfig parse_config(const json& j, const std::filesystem::path& base, const std::string& source) {
    detail::reject_unknown_keys(j, {"uid", "seed", "components", "targets", "settings", "registry"}, "config");
    require(j.contains("components"), "config", "'components' is required");
    PipelineConfig cfg;
    cfg.source = source;
    cfg.uid = detail::get_or<std::string>(j, "uid", cfg.uid);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.components = detail::parse_components(j.at("components"), base, "components");
    if (j.contains("targets")) cfg.targets = detail::parse_components(j.at("targets"), base, "targets");
    if (j.contains("settings")) detail::parse_settings(j.at("settings"), cfg);
    if (j.contains("registry")) detail::parse_registry(j.at("registry"), cfg);
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw Error("config", path + ": " + e.what());
    }
    try {
        return parse_config(j, std::filesystem::path(path).parent_path(), path);
    } catch (const json::exception& e) {
        throw Error("config", path + ": " + e.what());
    }
}

inline std::vector<ComponentSpec> read_specs(const std::vector<ComponentEntry>& entries) {
    std::vector<ComponentSpec> specs;
    for (const auto& e : entries) specs.push_back({csv::read(e.path), e.name, e.domain, e.type});
    return specs;
}

inline DataList load_data_list(const PipelineConfig& cfg) { return build_data_list(read_specs(cfg.components), cfg.uid); }

inline DataList load_target_list(const PipelineConfig& cfg) {
    require(!cfg.targets.empty(), "config", cfg.source + " defines no targets");
    return build_data_list(read_specs(cfg.targets), cfg.uid);
}

}  // namespace metafuse::cli
