#include "coxhawkes/config.hpp"

#include <fstream>
#include <set>

#include "coxhawkes/errors.hpp"
#include "coxhawkes/mathutil.hpp"

namespace coxhawkes {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: expected object at " + path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" + path + it.key() + "'");
        }
    }
}

double get_number(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError("config: missing key '" + path + key + "'");
    if (!j.at(key).is_number()) {
        throw ConfigError("config: key '" + path + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) {
        throw ConfigError("config: key '" + path + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

Interval parse_interval(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError("config: '" + path + "' must be a [lo, hi] number pair");
    }
    return Interval{j[0].get<double>(), j[1].get<double>()};
}

Domain parse_domain(const json& j) {
    reject_unknown_keys(j, {"t_max", "x_range", "y_range"}, "domain.");
    Domain d;
    d.t_max = get_number(j, "t_max", "domain.");
    if (j.contains("x_range")) d.x_range = parse_interval(j.at("x_range"), "domain.x_range");
    if (j.contains("y_range")) d.y_range = parse_interval(j.at("y_range"), "domain.y_range");
    d.validate();
    return d;
}

TriggerParams parse_trigger(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"alpha", "beta", "sigma_x2", "sigma_y2"}, path);
    TriggerParams p;
    p.alpha = get_number(j, "alpha", path);
    p.beta = get_number(j, "beta", path);
    p.sigma_x2 = get_number(j, "sigma_x2", path);
    p.sigma_y2 = get_number(j, "sigma_y2", path);
    p.validate();
    return p;
}

GPHyper parse_gp(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"length_scale", "variance"}, path);
    GPHyper h;
    h.length_scale = get_number(j, "length_scale", path);
    h.variance = get_number(j, "variance", path);
    h.validate();
    return h;
}

PriorSpec parse_priors(const json& j) {
    reject_unknown_keys(j, {"a0", "alpha", "beta", "sigma_x2", "sigma_y2"}, "priors.");
    PriorSpec p;
    if (j.contains("a0")) {
        reject_unknown_keys(j.at("a0"), {"mean", "sd"}, "priors.a0.");
        p.a0_mean = get_number_or(j.at("a0"), "mean", p.a0_mean, "priors.a0.");
        p.a0_sd = get_number_or(j.at("a0"), "sd", p.a0_sd, "priors.a0.");
    }
    auto tn = [&](const char* key, TruncatedNormal& dst) {
        if (!j.contains(key)) return;
        const std::string path = std::string("priors.") + key + ".";
        reject_unknown_keys(j.at(key), {"loc", "scale"}, path);
        dst.loc = get_number_or(j.at(key), "loc", dst.loc, path);
        dst.scale = get_number_or(j.at(key), "scale", dst.scale, path);
    };
    tn("alpha", p.alpha);
    tn("beta", p.beta);
    tn("sigma_x2", p.sigma_x2);
    tn("sigma_y2", p.sigma_y2);
    p.validate();
    return p;
}

McmcConfig parse_mcmc(const json& j, const McmcConfig& defaults, const std::string& path) {
    reject_unknown_keys(j,
                        {"chains", "samples", "warmup", "leapfrog_steps", "leapfrog_jitter",
                         "target_accept", "adapt_mass"},
                        path);
    McmcConfig m = defaults;
    m.n_chains = static_cast<int>(get_number_or(j, "chains", m.n_chains, path));
    m.n_samples = static_cast<int>(get_number_or(j, "samples", m.n_samples, path));
    m.n_warmup = static_cast<int>(get_number_or(j, "warmup", m.n_warmup, path));
    m.leapfrog_steps =
        static_cast<int>(get_number_or(j, "leapfrog_steps", m.leapfrog_steps, path));
    m.leapfrog_jitter = get_number_or(j, "leapfrog_jitter", m.leapfrog_jitter, path);
    m.target_accept = get_number_or(j, "target_accept", m.target_accept, path);
    if (j.contains("adapt_mass")) {
        if (!j.at("adapt_mass").is_boolean()) {
            throw ConfigError("config: '" + path + "adapt_mass' must be a boolean");
        }
        m.adapt_mass = j.at("adapt_mass").get<bool>();
    }
    m.validate();
    return m;
}

GeneratorEntry parse_generator(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"model", "a0", "trigger", "gp_t", "gp_s"}, path);
    GeneratorEntry g;
    if (!j.contains("model")) throw ConfigError("config: missing '" + path + "model'");
    g.model = model_kind_from_string(j.at("model").get<std::string>());
    g.a0 = get_number(j, "a0", path);
    if (j.contains("trigger")) g.trigger = parse_trigger(j.at("trigger"), path + "trigger.");
    if (j.contains("gp_t")) g.gp_t = parse_gp(j.at("gp_t"), path + "gp_t.");
    if (j.contains("gp_s")) g.gp_s = parse_gp(j.at("gp_s"), path + "gp_s.");
    return g;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j,
                        {"domain", "model", "a0", "trigger", "gp_t", "gp_s", "grids",
                         "var_frac", "priors", "mcmc", "temporal_cutoff", "sim",
                         "prediction", "experiment", "basis_cache_dir", "seed", "threads"},
                        "");
    RunConfig cfg;
    if (!j.contains("domain")) throw ConfigError("config: missing 'domain'");
    cfg.domain = parse_domain(j.at("domain"));
    if (!j.contains("model")) throw ConfigError("config: missing 'model'");
    cfg.model = model_kind_from_string(j.at("model").get<std::string>());
    cfg.a0 = get_number_or(j, "a0", 0.0, "");
    if (j.contains("trigger")) cfg.trigger = parse_trigger(j.at("trigger"), "trigger.");
    if (j.contains("gp_t")) cfg.gp_t = parse_gp(j.at("gp_t"), "gp_t.");
    if (j.contains("gp_s")) cfg.gp_s = parse_gp(j.at("gp_s"), "gp_s.");
    if (j.contains("grids")) {
        reject_unknown_keys(j.at("grids"), {"n_t", "n_x", "n_y"}, "grids.");
        cfg.n_t = static_cast<int>(get_number_or(j.at("grids"), "n_t", cfg.n_t, "grids."));
        cfg.n_x = static_cast<int>(get_number_or(j.at("grids"), "n_x", cfg.n_x, "grids."));
        cfg.n_y = static_cast<int>(get_number_or(j.at("grids"), "n_y", cfg.n_y, "grids."));
    }
    cfg.var_frac = get_number_or(j, "var_frac", cfg.var_frac, "");
    if (j.contains("priors")) cfg.priors = parse_priors(j.at("priors"));
    if (j.contains("mcmc")) cfg.mcmc = parse_mcmc(j.at("mcmc"), cfg.mcmc, "mcmc.");
    cfg.temporal_cutoff = get_number_or(j, "temporal_cutoff", cfg.temporal_cutoff, "");
    if (j.contains("sim")) {
        reject_unknown_keys(j.at("sim"), {"rejection_sampler", "max_events"}, "sim.");
        if (j.at("sim").contains("rejection_sampler")) {
            cfg.rejection_sampler = j.at("sim").at("rejection_sampler").get<bool>();
        }
        cfg.max_events = static_cast<std::size_t>(
            get_number_or(j.at("sim"), "max_events", static_cast<double>(cfg.max_events),
                          "sim."));
    }
    if (j.contains("prediction")) {
        const json& p = j.at("prediction");
        reject_unknown_keys(p, {"k", "replicates", "posterior_draws", "window"},
                            "prediction.");
        cfg.prediction.k = static_cast<int>(get_number_or(p, "k", cfg.prediction.k, "prediction."));
        cfg.prediction.replicates = static_cast<int>(
            get_number_or(p, "replicates", cfg.prediction.replicates, "prediction."));
        cfg.prediction.posterior_draws = static_cast<int>(get_number_or(
            p, "posterior_draws", cfg.prediction.posterior_draws, "prediction."));
        cfg.prediction.window = get_number_or(p, "window", cfg.prediction.window, "prediction.");
    }
    if (j.contains("experiment")) {
        const json& e = j.at("experiment");
        reject_unknown_keys(e,
                            {"n_datasets", "n_predictions", "k", "train_frac", "inference",
                             "mcmc", "generators"},
                            "experiment.");
        cfg.experiment.present = true;
        cfg.experiment.n_datasets = static_cast<int>(
            get_number_or(e, "n_datasets", cfg.experiment.n_datasets, "experiment."));
        cfg.experiment.n_predictions = static_cast<int>(
            get_number_or(e, "n_predictions", cfg.experiment.n_predictions, "experiment."));
        cfg.experiment.k =
            static_cast<int>(get_number_or(e, "k", cfg.experiment.k, "experiment."));
        cfg.experiment.train_frac =
            get_number_or(e, "train_frac", cfg.experiment.train_frac, "experiment.");
        if (e.contains("inference")) {
            cfg.experiment.inference.clear();
            for (const auto& name : e.at("inference")) {
                cfg.experiment.inference.push_back(
                    model_kind_from_string(name.get<std::string>()));
            }
        }
        cfg.experiment.mcmc = cfg.mcmc;
        if (e.contains("mcmc")) {
            cfg.experiment.mcmc = parse_mcmc(e.at("mcmc"), cfg.mcmc, "experiment.mcmc.");
        }
        if (!e.contains("generators")) {
            throw ConfigError("config: experiment requires 'generators'");
        }
        int gi = 0;
        for (const auto& g : e.at("generators")) {
            cfg.experiment.generators.push_back(parse_generator(
                g, "experiment.generators[" + std::to_string(gi++) + "]."));
        }
    }
    if (j.contains("basis_cache_dir")) {
        cfg.basis_cache_dir = j.at("basis_cache_dir").get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
            throw ConfigError("config: 'seed' must be an integer");
        }
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.threads = static_cast<int>(get_number_or(j, "threads", cfg.threads, ""));
    if (cfg.threads < 1) throw ConfigError("config: threads must be >= 1");

    // Model-kind requirements are checked here so schema errors surface
    // before any compute.
    if (model_has_trigger(cfg.model) && !cfg.trigger) {
        throw ConfigError("config: model '" + to_string(cfg.model) +
                          "' requires a 'trigger' section");
    }
    if (model_has_gp(cfg.model) && (!cfg.gp_t || !cfg.gp_s)) {
        throw ConfigError("config: model '" + to_string(cfg.model) +
                          "' requires 'gp_t' and 'gp_s' sections");
    }
    for (const GeneratorEntry& g : cfg.experiment.generators) {
        if (model_has_trigger(g.model) && !g.trigger) {
            throw ConfigError("config: generator '" + to_string(g.model) +
                              "' requires trigger parameters");
        }
        if (model_has_gp(g.model) &&
            ((!g.gp_t && !cfg.gp_t) || (!g.gp_s && !cfg.gp_s))) {
            throw ConfigError("config: generator '" + to_string(g.model) +
                              "' requires GP hyperparameters");
        }
    }

    cfg.config_hash = fnv1a_hash(j.dump());
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return from_json(j);
}

SimConfig RunConfig::sim_config() const {
    SimConfig s;
    s.domain = domain;
    s.kind = model;
    s.a0 = a0;
    s.trigger = trigger;
    s.gp_t = gp_t;
    s.gp_s = gp_s;
    s.n_t_cells = n_t;
    s.n_x_cells = n_x;
    s.n_y_cells = n_y;
    s.var_frac = var_frac;
    s.seed = seed;
    s.use_rejection_sampler = rejection_sampler;
    s.max_events = max_events;
    s.validate();
    return s;
}

SimConfig RunConfig::sim_config_for(const GeneratorEntry& gen) const {
    SimConfig s = sim_config();
    s.kind = gen.model;
    s.a0 = gen.a0;
    s.trigger = gen.trigger;
    s.gp_t = gen.gp_t ? gen.gp_t : gp_t;
    s.gp_s = gen.gp_s ? gen.gp_s : gp_s;
    s.use_rejection_sampler = false;
    s.validate();
    return s;
}

}  // namespace coxhawkes
