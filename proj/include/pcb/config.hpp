#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcb/models.hpp"
#include "pcb/strategy.hpp"

// Experiment configuration: JSON ingestion, validation, and model/space
// construction. The schema is documented in the README with shipped
// examples under configs/.
namespace pcb {

using nlohmann::json;

struct ModelConfig {
    std::string family;  // bernoulli | gaussian | ar1
    std::vector<int> group_sizes;
    std::vector<double> phase_times;      // gaussian, ar1
    std::vector<double> ar_coefficients;  // ar1
    double clamp_epsilon = 1e-6;          // bernoulli
};

struct SpaceConfig {
    std::vector<ParameterPoint> points;  // native finite space
    std::optional<Box> box;              // grid space
    std::vector<int> resolution;
    std::optional<double> delta;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Staged;
    StagedPolicyConfig staged{};
};

struct WaldConfig {
    JobId job{1, 1};
    ParameterPoint theta0;
    ParameterPoint theta_q;
    std::vector<double> thresholds{50.0};
    int replications = 5000;
    long long step_cap = 10'000'000;
};

struct ExperimentConfig {
    ModelConfig model;
    SpaceConfig space;
    std::vector<ParameterPoint> truths;
    std::vector<long long> horizons;
    int replications = 1;
    std::vector<PolicyConfig> policies;
    uint64_t seed = 1;
    int threads = 0;            // 0 = hardware concurrency
    std::string out_dir;        // default output directory; CLI --out wins
    InfoTolerances info_tol{};
    double kl_zero_tol = 1e-12;
    double feasibility_tol = 1e-9;
    std::optional<WaldConfig> wald;
};

inline std::unique_ptr<PopulationModel> make_model(const ModelConfig& mc) {
    GroupStructure groups(mc.group_sizes);
    if (mc.family == "bernoulli")
        return std::make_unique<BernoulliModel>(std::move(groups), mc.clamp_epsilon);
    if (mc.family == "gaussian")
        return std::make_unique<GaussianIidModel>(std::move(groups), mc.phase_times);
    if (mc.family == "ar1")
        return std::make_unique<Ar1Model>(std::move(groups), mc.phase_times,
                                          mc.ar_coefficients);
    throw ConfigError("unknown model family: " + mc.family);
}

inline ParameterSpace make_space(const SpaceConfig& sc) {
    if (sc.box) {
        if (!sc.points.empty())
            throw ConfigError("space: give either explicit points or a box, not both");
        return ParameterSpace::from_box(*sc.box, sc.resolution, sc.delta);
    }
    return ParameterSpace::from_points(sc.points, sc.delta);
}

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& pc, const PopulationModel& model,
                                           const ParameterSpace& space,
                                           const PartitionReport& part, size_t theta_true,
                                           long long horizon) {
    switch (pc.kind) {
        case PolicyKind::Staged:
            return std::make_unique<StagedPolicy>(model, space, part, horizon, pc.staged);
        case PolicyKind::Oracle:
            return std::make_unique<OraclePolicy>(model, space, part, theta_true, horizon);
        case PolicyKind::RoundRobin:
            return std::make_unique<RoundRobinPolicy>(model, horizon);
        case PolicyKind::GreedyMle:
            return std::make_unique<GreedyMlePolicy>(model, space, horizon);
    }
    throw ConfigError("unknown policy kind");
}

// --- JSON helpers ---

namespace detail {

inline ParameterPoint point_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("parameter point must be an array of numbers");
    ParameterPoint p;
    for (const auto& v : j) p.coords.push_back(v.get<double>());
    return p;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

}  // namespace detail

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "staged") return PolicyKind::Staged;
    if (s == "oracle") return PolicyKind::Oracle;
    if (s == "round-robin") return PolicyKind::RoundRobin;
    if (s == "greedy-mle") return PolicyKind::GreedyMle;
    throw ConfigError("unknown policy kind: " + s);
}

inline PolicyConfig parse_policy(const json& j) {
    PolicyConfig pc;
    pc.kind = policy_kind_from_string(j.value("kind", std::string("staged")));
    if (j.contains("n0")) pc.staged.n0 = j.at("n0").get<int>();
    if (j.contains("n1")) pc.staged.n1 = j.at("n1").get<int>();
    if (j.contains("delta")) pc.staged.delta = j.at("delta").get<double>();
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "track-lambda")
            pc.staged.mode = RejectionMode::TrackLambda;
        else if (m == "infimum")
            pc.staged.mode = RejectionMode::Infimum;
        else
            throw ConfigError("unknown rejection mode: " + m);
    }
    pc.staged.reestimate = detail::get_or(j, "reestimate", false);
    if (j.contains("restrict_rows_to_strict"))
        pc.staged.allocation.restrict_rows_to_strict = j.at("restrict_rows_to_strict").get<bool>();
    return pc;
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    if (!j.contains("model")) throw ConfigError("config requires a \"model\" section");
    const json& jm = j.at("model");
    cfg.model.family = jm.value("family", std::string());
    if (!jm.contains("group_sizes")) throw ConfigError("model requires group_sizes");
    cfg.model.group_sizes = jm.at("group_sizes").get<std::vector<int>>();
    cfg.model.phase_times = detail::get_or(jm, "phase_times", std::vector<double>{});
    cfg.model.ar_coefficients = detail::get_or(jm, "ar_coefficients", std::vector<double>{});
    cfg.model.clamp_epsilon = detail::get_or(jm, "clamp_epsilon", 1e-6);

    if (!j.contains("space")) throw ConfigError("config requires a \"space\" section");
    const json& js = j.at("space");
    if (js.contains("points"))
        for (const auto& p : js.at("points")) cfg.space.points.push_back(detail::point_from_json(p));
    if (js.contains("box")) {
        Box box;
        box.lower = js.at("box").at("lower").get<std::vector<double>>();
        box.upper = js.at("box").at("upper").get<std::vector<double>>();
        cfg.space.box = box;
        cfg.space.resolution = js.at("box").at("resolution").get<std::vector<int>>();
    }
    if (js.contains("delta")) cfg.space.delta = js.at("delta").get<double>();

    if (j.contains("truth")) {
        const json& jt = j.at("truth");
        if (jt.is_array() && !jt.empty() && jt.front().is_array())
            for (const auto& p : jt) cfg.truths.push_back(detail::point_from_json(p));
        else
            cfg.truths.push_back(detail::point_from_json(jt));
    }

    cfg.horizons = detail::get_or(j, "horizons", std::vector<long long>{});
    cfg.replications = detail::get_or(j, "replications", 1);
    cfg.seed = detail::get_or<uint64_t>(j, "seed", 1);
    cfg.threads = detail::get_or(j, "threads", 0);
    cfg.out_dir = detail::get_or(j, "out_dir", std::string());

    if (j.contains("policies"))
        for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p));
    else if (j.contains("policy"))
        cfg.policies.push_back(parse_policy(j.at("policy")));

    if (j.contains("tolerances")) {
        const json& jt = j.at("tolerances");
        cfg.info_tol.mean_rel = detail::get_or(jt, "mean_tol_rel", cfg.info_tol.mean_rel);
        cfg.kl_zero_tol = detail::get_or(jt, "kl_zero_tol", cfg.kl_zero_tol);
        cfg.feasibility_tol = detail::get_or(jt, "feasibility_tol", cfg.feasibility_tol);
        cfg.info_tol.kl_zero = cfg.kl_zero_tol;
    }

    if (j.contains("wald")) {
        const json& jw = j.at("wald");
        WaldConfig w;
        if (jw.contains("job")) {
            const auto v = jw.at("job").get<std::vector<int>>();
            if (v.size() != 2) throw ConfigError("wald.job must be [group, index]");
            w.job = JobId{v[0], v[1]};
        }
        w.theta0 = detail::point_from_json(jw.at("theta0"));
        w.theta_q = detail::point_from_json(jw.at("theta_q"));
        w.thresholds = detail::get_or(jw, "thresholds", w.thresholds);
        w.replications = detail::get_or(jw, "replications", w.replications);
        w.step_cap = detail::get_or(jw, "step_cap", w.step_cap);
        cfg.wald = w;
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
    return parse_config(j);
}

// Structural validation that needs the constructed model and space.
struct ValidatedExperiment {
    ExperimentConfig config;
    std::unique_ptr<PopulationModel> model;
    ParameterSpace space;
    PartitionReport part;
    std::vector<size_t> truth_indices;
};

inline ValidatedExperiment validate_experiment(ExperimentConfig cfg,
                                               bool require_simulation_fields = true) {
    ValidatedExperiment v;
    v.model = make_model(cfg.model);
    v.space = make_space(cfg.space);
    for (const auto& p : v.space.points())
        if (p.dim() != v.model->param_dim())
            throw ConfigError("space dimension does not match the model family");
    v.part = partition(*v.model, v.space, cfg.info_tol);

    for (const auto& t : cfg.truths) {
        if (t.dim() != v.space.dim())
            throw ConfigError("true parameter dimension does not match the space");
        const auto idx = v.space.find(t);
        if (!idx) throw ConfigError("true parameter is not a point of the space");
        v.truth_indices.push_back(*idx);
    }
    if (require_simulation_fields) {
        if (cfg.truths.empty()) throw ConfigError("simulation requires at least one true parameter");
        if (cfg.horizons.empty()) throw ConfigError("simulation requires horizons");
        long long prev = 0;
        for (long long n : cfg.horizons) {
            if (n <= prev) throw ConfigError("horizons must be positive and increasing");
            prev = n;
        }
        if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
        if (cfg.policies.empty()) cfg.policies.push_back(PolicyConfig{});
    }
    v.config = std::move(cfg);
    return v;
}

}  // namespace pcb
