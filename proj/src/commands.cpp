#include "coxhawkes/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "coxhawkes/csv.hpp"
#include "coxhawkes/errors.hpp"
#include "coxhawkes/predict_eval.hpp"

namespace coxhawkes {

namespace {

using nlohmann::json;

std::string sidecar_path(const std::string& out_csv) {
    if (out_csv.size() > 4 && out_csv.substr(out_csv.size() - 4) == ".csv") {
        return out_csv.substr(0, out_csv.size() - 4) + "_truth.json";
    }
    return out_csv + "_truth.json";
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

json trigger_json(const TriggerParams& p) {
    return json{{"alpha", p.alpha},
                {"beta", p.beta},
                {"sigma_x2", p.sigma_x2},
                {"sigma_y2", p.sigma_y2}};
}

LowRankBasis basis_with_cache(const RunConfig& cfg, const std::string& tag,
                              const std::string& spec,
                              const std::function<LowRankBasis()>& compute) {
    if (cfg.basis_cache_dir.empty()) return compute();
    std::filesystem::create_directories(cfg.basis_cache_dir);
    const std::string path =
        cfg.basis_cache_dir + "/basis_" + tag + "_" +
        std::to_string(fnv1a_hash(spec)) + ".txt";
    if (std::filesystem::exists(path)) {
        return load_basis_file(path, spec);
    }
    LowRankBasis basis = compute();
    save_basis_file(path, basis, spec);
    return basis;
}

}  // namespace

Model build_model(const RunConfig& cfg, EventSet events) {
    std::optional<Grid1D> grid_t;
    std::optional<Grid2D> grid_s;
    std::optional<LowRankBasis> basis_t;
    std::optional<LowRankBasis> basis_s;
    if (model_has_gp(cfg.model)) {
        grid_t = Grid1D::over(cfg.domain.t_max, cfg.n_t);
        grid_s = Grid2D::over(cfg.domain.x_range, cfg.domain.y_range, cfg.n_x, cfg.n_y);
        const std::string spec_t = grid_spec_string(*grid_t, *cfg.gp_t, cfg.var_frac);
        const std::string spec_s = grid_spec_string(*grid_s, *cfg.gp_s, cfg.var_frac);
        basis_t = basis_with_cache(cfg, "t", spec_t, [&] {
            return precompute_basis(*grid_t, *cfg.gp_t, cfg.var_frac);
        });
        basis_s = basis_with_cache(cfg, "s", spec_s, [&] {
            return precompute_basis(*grid_s, *cfg.gp_s, cfg.var_frac);
        });
    }
    return Model(cfg.model, std::move(events), cfg.domain, std::move(grid_t),
                 std::move(grid_s), std::move(basis_t), std::move(basis_s), cfg.priors,
                 cfg.temporal_cutoff);
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_csv) {
    SimResult result = simulate(cfg.sim_config());
    write_events_csv_file(out_csv, result.events, CsvMetadata{cfg.config_hash, cfg.seed});

    json truth;
    truth["config_hash"] = cfg.config_hash;
    truth["seed"] = cfg.seed;
    truth["model"] = to_string(cfg.model);
    truth["a0"] = cfg.a0;
    if (cfg.trigger) truth["trigger"] = trigger_json(*cfg.trigger);
    if (cfg.gp_t) {
        truth["gp_t"] = {{"length_scale", cfg.gp_t->length_scale},
                         {"variance", cfg.gp_t->variance}};
    }
    if (cfg.gp_s) {
        truth["gp_s"] = {{"length_scale", cfg.gp_s->length_scale},
                         {"variance", cfg.gp_s->variance}};
    }
    truth["domain"] = {{"t_max", cfg.domain.t_max},
                       {"x_range", {cfg.domain.x_range.lo, cfg.domain.x_range.hi}},
                       {"y_range", {cfg.domain.y_range.lo, cfg.domain.y_range.hi}}};
    truth["grids"] = {{"n_t", cfg.n_t}, {"n_x", cfg.n_x}, {"n_y", cfg.n_y}};
    truth["z_t"] = result.z_t;
    truth["z_s"] = result.z_s;
    truth["f_t"] = result.f_t.values;
    truth["f_s"] = result.f_s.values;
    truth["n_events"] = result.events.size();
    truth["background_count"] = result.background_count;
    truth["offspring_count"] = result.offspring_count;
    write_json_file(sidecar_path(out_csv), truth);
}

void write_trace_csv(const std::string& path, const PosteriorSamples& samples,
                     const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
    out << "chain,draw";
    for (const auto& name : param_names(samples.kind, samples.m_t, samples.m_s)) {
        out << ',' << name;
    }
    out << "\n";
    for (std::size_t c = 0; c < samples.chains.size(); ++c) {
        for (std::size_t d = 0; d < samples.chains[c].size(); ++d) {
            out << c << ',' << d;
            for (double v : constrained_values(samples.chains[c][d], samples.kind)) {
                out << ',' << format_double(v);
            }
            out << "\n";
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

PosteriorSamples read_trace_csv(const std::string& path, const RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file: " + path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    PosteriorSamples samples;
    samples.kind = cfg.model;
    samples.m_t = 0;
    samples.m_s = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> fields;
        while (std::getline(ls, cell, ',')) fields.push_back(cell);
        if (header.empty()) {
            header = fields;
            if (header.size() < 3 || header[0] != "chain" || header[1] != "draw") {
                throw DataError("trace: malformed header at line " + std::to_string(line_no));
            }
            for (const auto& h : header) {
                if (h.rfind("z_t_", 0) == 0) ++samples.m_t;
                if (h.rfind("z_s_", 0) == 0) ++samples.m_s;
            }
            const auto expected = param_names(cfg.model, samples.m_t, samples.m_s);
            if (header.size() != expected.size() + 2) {
                throw DataError("trace: column set does not match model '" +
                                to_string(cfg.model) + "'");
            }
            continue;
        }
        if (fields.size() != header.size()) {
            throw DataError("trace: line " + std::to_string(line_no) +
                            ": wrong field count");
        }
        try {
            const std::size_t chain = std::stoul(fields[0]);
            while (samples.chains.size() <= chain) samples.chains.emplace_back();
            ParamState s;
            std::size_t k = 2;
            s.a0 = std::stod(fields[k++]);
            if (model_has_trigger(cfg.model)) {
                s.trigger.alpha = std::stod(fields[k++]);
                s.trigger.beta = std::stod(fields[k++]);
                s.trigger.sigma_x2 = std::stod(fields[k++]);
                s.trigger.sigma_y2 = std::stod(fields[k++]);
            } else {
                s.trigger = TriggerParams{0.0, 1.0, 1.0, 1.0};
            }
            for (int i = 0; i < samples.m_t; ++i) s.z_t.push_back(std::stod(fields[k++]));
            for (int i = 0; i < samples.m_s; ++i) s.z_s.push_back(std::stod(fields[k++]));
            samples.chains[chain].push_back(std::move(s));
        } catch (const std::exception&) {
            throw DataError("trace: line " + std::to_string(line_no) + ": parse error");
        }
    }
    if (samples.chains.empty()) throw DataError("trace: no draws in " + path);
    samples.stats.resize(samples.chains.size());
    return samples;
}

ParamState posterior_mean_state(const PosteriorSamples& samples) {
    const auto draws = samples.combined();
    if (draws.empty()) throw InsufficientDataError("posterior mean: no draws");
    ParamState mean = draws.front();
    mean.a0 = 0.0;
    mean.trigger = TriggerParams{0.0, 0.0, 0.0, 0.0};
    std::fill(mean.z_t.begin(), mean.z_t.end(), 0.0);
    std::fill(mean.z_s.begin(), mean.z_s.end(), 0.0);
    const double n = static_cast<double>(draws.size());
    for (const ParamState& s : draws) {
        mean.a0 += s.a0 / n;
        mean.trigger.alpha += s.trigger.alpha / n;
        mean.trigger.beta += s.trigger.beta / n;
        mean.trigger.sigma_x2 += s.trigger.sigma_x2 / n;
        mean.trigger.sigma_y2 += s.trigger.sigma_y2 / n;
        for (std::size_t i = 0; i < mean.z_t.size(); ++i) mean.z_t[i] += s.z_t[i] / n;
        for (std::size_t i = 0; i < mean.z_s.size(); ++i) mean.z_s[i] += s.z_s[i] / n;
    }
    if (!model_has_trigger(samples.kind)) mean.trigger = TriggerParams{0.0, 1.0, 1.0, 1.0};
    return mean;
}

void cmd_fit(const RunConfig& cfg, const std::string& events_csv,
             const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Model model = build_model(cfg, EventSet::from_unsorted(read_events_csv_file(events_csv)));
    McmcConfig mcmc = cfg.mcmc;
    mcmc.seed = cfg.seed;
    mcmc.threads = cfg.threads;
    PosteriorSamples samples = fit(model, mcmc);

    write_trace_csv(out_dir + "/trace.csv", samples, cfg);

    json summary;
    summary["config_hash"] = cfg.config_hash;
    summary["seed"] = cfg.seed;
    summary["model"] = to_string(cfg.model);
    summary["n_events"] = model.events().size();
    summary["chains"] = samples.n_chains();
    summary["draws_per_chain"] = samples.draws_per_chain();
    summary["divergences"] = samples.total_divergences();
    summary["underflows"] = model.underflow_total();
    json chain_stats = json::array();
    for (const auto& s : samples.stats) {
        chain_stats.push_back({{"mean_accept", s.mean_accept},
                               {"divergences", s.divergences},
                               {"step_size", s.step_size}});
    }
    summary["chain_stats"] = chain_stats;
    json params = json::object();
    for (const ParamSummary& p : summarize(samples)) {
        params[p.name] = {{"mean", p.mean}, {"sd", p.sd},   {"q05", p.q05},
                          {"q50", p.q50},   {"q95", p.q95}, {"rhat", p.rhat},
                          {"ess", p.ess}};
    }
    summary["params"] = params;
    write_json_file(out_dir + "/summary.json", summary);

    if (model_has_gp(cfg.model)) {
        const FieldSummary ft = posterior_field(samples, *model.basis_t(), true);
        const FieldSummary fs = posterior_field(samples, *model.basis_s(), false);
        std::ofstream out_t(out_dir + "/field_t.csv");
        out_t << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
        out_t << "cell_index,t_center,mean,q05,q95\n";
        for (int i = 0; i < model.grid_t()->n_t; ++i) {
            out_t << i << ',' << format_double(model.grid_t()->centers[i]) << ','
                  << format_double(ft.mean[i]) << ',' << format_double(ft.quantiles[0][i])
                  << ',' << format_double(ft.quantiles[1][i]) << "\n";
        }
        std::ofstream out_s(out_dir + "/field_s.csv");
        out_s << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
        out_s << "cell_index,x_center,y_center,mean,q05,q95\n";
        for (std::size_t i = 0; i < model.grid_s()->size(); ++i) {
            out_s << i << ',' << format_double(model.grid_s()->centers_x[i]) << ','
                  << format_double(model.grid_s()->centers_y[i]) << ','
                  << format_double(fs.mean[i]) << ',' << format_double(fs.quantiles[0][i])
                  << ',' << format_double(fs.quantiles[1][i]) << "\n";
        }
    }
}

void cmd_predict(const RunConfig& cfg, const std::string& events_csv,
                 const std::string& trace_csv, const std::string& out_dir,
                 const std::optional<std::string>& test_csv) {
    std::filesystem::create_directories(out_dir);
    Model model = build_model(cfg, EventSet::from_unsorted(read_events_csv_file(events_csv)));
    PosteriorSamples samples = read_trace_csv(trace_csv, cfg);
    if (model_has_gp(cfg.model) &&
        (samples.m_t != model.m_t() || samples.m_s != model.m_s())) {
        throw DataError("predict: trace coefficient counts do not match the basis ranks");
    }

    const auto combined = samples.combined();
    const std::size_t n_sel = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.prediction.posterior_draws), combined.size());
    if (n_sel == 0) throw DataError("predict: empty trace");
    std::vector<const ParamState*> sel;
    for (std::size_t j = 0; j < n_sel; ++j) {
        sel.push_back(&combined[j * combined.size() / n_sel]);
    }

    RngStream root(cfg.seed);
    std::ofstream out(out_dir + "/predicted.csv");
    if (!out) throw DataError("cannot open for writing: " + out_dir + "/predicted.csv");
    out << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
    out << "replicate,t,x,y\n";

    std::vector<Event> test;
    if (test_csv) {
        test = read_events_csv_file(*test_csv);
        std::stable_sort(test.begin(), test.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        if (test.size() < static_cast<std::size_t>(cfg.prediction.k)) {
            throw DataError("predict: test set has fewer than k events");
        }
        test.resize(cfg.prediction.k);
    }
    const RmseScales scales{cfg.domain.t_max, cfg.domain.x_range.length(),
                            cfg.domain.y_range.length()};
    std::vector<double> scores;
    for (int r = 0; r < cfg.prediction.replicates; ++r) {
        RngStream rng = root.child(static_cast<std::uint64_t>(r) + 1);
        const auto events = predict_next_events(model, *sel[r % sel.size()],
                                                cfg.prediction.k, rng,
                                                cfg.prediction.window);
        for (const Event& e : events) {
            out << r << ',' << format_double(e.t) << ',' << format_double(e.x) << ','
                << format_double(e.y) << "\n";
        }
        if (!test.empty()) scores.push_back(rmse(events, test, scales));
    }
    if (!test.empty()) {
        json score;
        score["config_hash"] = cfg.config_hash;
        score["seed"] = cfg.seed;
        score["k"] = cfg.prediction.k;
        score["replicates"] = cfg.prediction.replicates;
        score["mean_rmse"] = mean_of(scores);
        score["se"] = std::sqrt(variance_of(scores) / static_cast<double>(scores.size()));
        score["scores"] = scores;
        write_json_file(out_dir + "/score.json", score);
    }
}

void cmd_experiment(const RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.experiment.present) {
        throw ConfigError("experiment: config has no 'experiment' section");
    }
    std::filesystem::create_directories(out_dir);
    ExperimentConfig ec;
    for (const GeneratorEntry& g : cfg.experiment.generators) {
        ec.generators.push_back(cfg.sim_config_for(g));
    }
    ec.inference_kinds = cfg.experiment.inference;
    ec.n_datasets = cfg.experiment.n_datasets;
    ec.n_predictions = cfg.experiment.n_predictions;
    ec.k = cfg.experiment.k;
    ec.train_frac = cfg.experiment.train_frac;
    ec.mcmc = cfg.experiment.mcmc;
    ec.mcmc.threads = 1;
    ec.priors = cfg.priors;
    if (cfg.gp_t) ec.fit_gp_t = *cfg.gp_t;
    if (cfg.gp_s) ec.fit_gp_s = *cfg.gp_s;
    ec.fit_n_t = cfg.n_t;
    ec.fit_n_x = cfg.n_x;
    ec.fit_n_y = cfg.n_y;
    ec.fit_var_frac = cfg.var_frac;
    ec.temporal_cutoff = cfg.temporal_cutoff;
    ec.n_posterior_draws = cfg.prediction.posterior_draws;
    ec.seed = cfg.seed;
    ec.checkpoint_dir = out_dir + "/checkpoints";

    const ExperimentReport report = run_misspecification_experiment(ec);

    std::ofstream table(out_dir + "/report_table.csv");
    table << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
    write_report_table_csv(table, report);
    std::ofstream longf(out_dir + "/report_long.csv");
    longf << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
    write_report_long_csv(longf, report);

    long total_scores = 0;
    for (const auto& c : report.cells) total_scores += c.n_scores;
    if (total_scores == 0) throw NumericalError("experiment: every cell failed");
}

void cmd_diagnose(const RunConfig& cfg, const std::string& events_csv,
                  const std::string& trace_csv, const std::string& out_json) {
    Model model = build_model(cfg, EventSet::from_unsorted(read_events_csv_file(events_csv)));
    PosteriorSamples samples = read_trace_csv(trace_csv, cfg);
    const ParamState mean = posterior_mean_state(samples);

    json out;
    out["config_hash"] = cfg.config_hash;
    out["seed"] = cfg.seed;
    out["n_events"] = model.events().size();

    // Residual check through the fitted temporal compensator.
    try {
        const TemporalCompensator comp = model.temporal_compensator(mean);
        const KsResult ks = ks_residual_test(
            model.events(), [&comp](double t) { return comp(t); });
        out["ks_statistic"] = ks.statistic;
        out["ks_p_value"] = ks.p_value;
    } catch (const InsufficientDataError& e) {
        out["ks_error"] = e.what();
    }

    // Analytic gradient against central finite differences at the posterior
    // mean.
    std::vector<double> u = model.pack(mean);
    const std::vector<double> grad = model.grad_log_posterior(u);
    double max_rel = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double saved = u[i];
        u[i] = saved + h;
        const double hi = model.log_posterior(u);
        u[i] = saved - h;
        const double lo = model.log_posterior(u);
        u[i] = saved;
        const double fd = (hi - lo) / (2.0 * h);
        const double rel = std::fabs(grad[i] - fd) /
                           std::max({1.0, std::fabs(grad[i]), std::fabs(fd)});
        max_rel = std::max(max_rel, rel);
    }
    out["grad_max_rel_error"] = max_rel;
    out["underflows"] = model.underflow_total();
    write_json_file(out_json, out);
}

}  // namespace coxhawkes
