#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparkle/baselines.hpp"
#include "sparkle/common.hpp"
#include "sparkle/environments.hpp"
#include "sparkle/kernel.hpp"
#include "sparkle/policy.hpp"

namespace sparkle {

using nlohmann::json;

/// Unknown keys are configuration errors; silent typos in experiment specs
/// are worse than loud ones.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->template get<T>();
}

inline std::unique_ptr<Environment> make_environment(const json& spec) {
    const std::string kind = spec.at("env").get<std::string>();
    if (kind == "sine") {
        check_keys(spec, {"env", "d", "s", "K", "noise_var", "low", "high"},
                   "env.sine");
        return std::make_unique<SineEnv>(
            spec.at("d").get<int>(), spec.at("s").get<int>(),
            spec.at("K").get<int>(), get_or(spec, "noise_var", 0.05),
            get_or(spec, "low", -5.0), get_or(spec, "high", 5.0));
    }
    if (kind == "lower_bound") {
        check_keys(spec,
                   {"env", "T", "m", "alpha", "d", "noise_var", "signs",
                    "sign_seed"},
                   "env.lower_bound");
        return std::make_unique<LowerBoundEnv>(
            spec.at("T").get<long long>(), spec.at("m").get<double>(),
            spec.at("alpha").get<double>(), get_or(spec, "d", 1),
            get_or(spec, "noise_var", 0.24),
            get_or(spec, "signs", std::vector<int>{}),
            get_or<std::uint64_t>(spec, "sign_seed", 0));
    }
    throw ConfigError("unknown environment '" + kind + "'");
}

struct PolicySpec {
    std::string kind;
    json params;
};

struct ExperimentConfig {
    json env_spec;
    std::vector<PolicySpec> policies;
    long long T = 0;
    int replications = 1;
    std::uint64_t seed_base = 0;
    std::string out_dir = "out";
    int threads = 1;
    bool svg = false;
    bool traces = false;
    SparkleSettings sparkle; // shared by sparkle and the KRR skeleton
    json canonical;          // normalized copy used for hashing/manifest

    static ExperimentConfig from_json(const json& j);
};

inline SparkleSettings parse_sparkle_settings(const json& j, long long T) {
    check_keys(j, {"C1", "C3", "C4", "m", "s0", "kernel", "fit_tol", "max_sweeps"},
               "sparkle");
    SparkleSettings s;
    s.T = T;
    s.C1 = get_or(j, "C1", 7e-5);
    s.m = get_or(j, "m", 2.5);
    s.s0 = get_or(j, "s0", 1);
    s.reg.C3 = get_or(j, "C3", 0.01);
    s.reg.C4 = get_or(j, "C4", 1.0);
    s.reg.m = s.m;
    if (j.contains("kernel")) {
        s.kernel = j.at("kernel").get<KernelSpec>();
    } else {
        s.kernel.smoothness_m = s.m;
    }
    s.fit.tol = get_or(j, "fit_tol", 1e-8);
    s.fit.max_sweeps = get_or(j, "max_sweeps", 500);
    return s;
}

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                           const Environment& env,
                                           const SparkleSettings& settings,
                                           long long T) {
    const int K = env.num_arms();
    const int d = env.dim();
    const json& p = spec.params;
    if (spec.kind == "sparkle") {
        check_keys(p, {"policy"}, "policy.sparkle");
        SparkleSettings s = settings;
        s.T = T;
        return make_sparkle_policy(K, d, s);
    }
    if (spec.kind == "lasso_bandit") {
        check_keys(p,
                   {"policy", "degree", "q0", "h0", "lambda1", "lambda20",
                    "feature_scale"},
                   "policy.lasso_bandit");
        return std::make_unique<LassoBandit>(
            K, d, get_or(p, "degree", 10), get_or(p, "q0", 1),
            get_or(p, "h0", 5.0), get_or(p, "lambda1", 0.01),
            get_or(p, "lambda20", 0.01), get_or(p, "feature_scale", 5.0));
    }
    if (spec.kind == "knn_ucb") {
        check_keys(p, {"policy", "theta"}, "policy.knn_ucb");
        return std::make_unique<KnnUcb>(K, d, get_or(p, "theta", 2.0));
    }
    if (spec.kind == "krr") {
        check_keys(p, {"policy", "variant", "lambda0"}, "policy.krr");
        const std::string variant = get_or<std::string>(p, "variant", "naive");
        if (variant != "naive" && variant != "additive")
            throw ConfigError("policy.krr: variant must be naive or additive");
        return make_krr_policy(K, d, T, settings.s0, settings.m, settings.C1,
                               settings.kernel,
                               variant == "naive" ? KrrVariant::Naive
                                                  : KrrVariant::Additive,
                               get_or(p, "lambda0", 0.01));
    }
    if (spec.kind == "oracle") {
        check_keys(p, {"policy"}, "policy.oracle");
        return std::make_unique<OraclePolicy>(env);
    }
    throw ConfigError("unknown policy '" + spec.kind + "'");
}

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
    // a manifest can be replayed directly: the config it ran is embedded
    if (j.contains("schema_version") && j.contains("config"))
        return from_json(j.at("config"));

    check_keys(j,
               {"env", "policies", "T", "replications", "seed_base", "out_dir",
                "threads", "svg", "traces", "sparkle"},
               "config");
    ExperimentConfig cfg;
    cfg.env_spec = j.at("env");
    cfg.T = j.at("T").get<long long>();
    if (cfg.T < 1) throw ConfigError("config: T must be >= 1");
    cfg.replications = get_or(j, "replications", 1);
    if (cfg.replications < 1) throw ConfigError("config: replications must be >= 1");
    cfg.seed_base = get_or<std::uint64_t>(j, "seed_base", 0);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "out");
    cfg.threads = get_or(j, "threads", 1);
    cfg.svg = get_or(j, "svg", false);
    cfg.traces = get_or(j, "traces", false);
    cfg.sparkle = parse_sparkle_settings(j.value("sparkle", json::object()), cfg.T);

    if (!j.contains("policies") || !j.at("policies").is_array() ||
        j.at("policies").empty())
        throw ConfigError("config: policies must be a nonempty array");
    for (const auto& pj : j.at("policies")) {
        PolicySpec spec;
        spec.kind = pj.at("policy").get<std::string>();
        spec.params = pj;
        cfg.policies.push_back(std::move(spec));
    }

    // validate eagerly: every referenced policy must be constructible
    auto env = make_environment(cfg.env_spec);
    for (const auto& spec : cfg.policies)
        (void)make_policy(spec, *env, cfg.sparkle, cfg.T);

    cfg.canonical = j;
    return cfg;
}

/// FNV-1a over the canonical JSON dump; stable across runs.
inline std::string config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace sparkle
