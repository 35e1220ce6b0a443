#include "coxhawkes/predict_eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "coxhawkes/csv.hpp"
#include "coxhawkes/errors.hpp"
#include "coxhawkes/mathutil.hpp"

namespace coxhawkes {

namespace {

// One forward pass over the extension window (t0, t1]; prior_new holds
// already-materialized events in (T_train, t0] whose cascades must also spill
// into this window. Returns the new events, unsorted.
std::vector<Event> simulate_extension(const Model& model, const ParamState& draw,
                                      double t0, double t1, RngStream& rng,
                                      const std::vector<Event>& prior_new) {
    const Domain& dom = model.domain();
    const bool gp = model_has_gp(model.kind());
    const bool trig = model_has_trigger(model.kind()) && draw.trigger.alpha > 0.0;
    std::vector<Event> out;

    // Background: temporally constant beyond the grid (last-cell value),
    // spatially distributed as exp(f_s) over the cells.
    double ft_last = 0.0;
    std::vector<double> cum_s;
    double qs = dom.area();
    GridField fs;
    if (gp) {
        GridField ft = sample_field(*model.basis_t(), draw.z_t);
        fs = sample_field(*model.basis_s(), draw.z_s);
        ft_last = ft.values.back();
        const Grid2D& gs = *model.grid_s();
        cum_s.resize(gs.size());
        double acc = 0.0;
        for (std::size_t c = 0; c < gs.size(); ++c) {
            cum_s[c] = (acc += std::exp(fs.values[c]) * gs.cell_area);
        }
        qs = cum_s.back();
    }
    const double bg_mass = std::exp(draw.a0 + ft_last) * qs * (t1 - t0);
    const std::uint64_t n_bg = rng.poisson(bg_mass);
    for (std::uint64_t i = 0; i < n_bg; ++i) {
        Event e;
        e.t = t0 + rng.uniform() * (t1 - t0);
        if (gp) {
            const Grid2D& gs = *model.grid_s();
            const std::size_t c = rng.categorical_from_cumulative(cum_s);
            e.x = gs.centers_x[c] + (rng.uniform() - 0.5) * gs.x_range.length() / gs.n_x;
            e.y = gs.centers_y[c] + (rng.uniform() - 0.5) * gs.y_range.length() / gs.n_y;
        } else {
            e.x = rng.uniform(dom.x_range.lo, dom.x_range.hi);
            e.y = rng.uniform(dom.y_range.lo, dom.y_range.hi);
        }
        e.gen = 0;
        out.push_back(e);
    }

    if (!trig) return out;
    const TriggerParams& p = draw.trigger;
    const double sx = std::sqrt(p.sigma_x2);
    const double sy = std::sqrt(p.sigma_y2);

    // Offspring of earlier events whose kernels reach past t0: the observed
    // history plus any events already materialized in previous extension
    // windows. The unrealized part of each offspring process on (t0, t1] is
    // Poisson with the truncated-exponential mass, independent of what was
    // already realized before t0.
    std::vector<Event> frontier;
    auto spill_over = [&](const Event& h) {
        const double lo = t0 - h.t;
        const double hi = t1 - h.t;
        const double e_lo = std::exp(-p.beta * lo);
        const double e_hi = std::exp(-p.beta * hi);
        const double mass = p.alpha * (e_lo - e_hi);
        const std::uint64_t c = rng.poisson(mass);
        const int next_gen = h.gen ? *h.gen + 1 : 1;
        for (std::uint64_t j = 0; j < c; ++j) {
            Event child;
            const double u = rng.uniform();
            child.t = h.t - std::log(e_lo - u * (e_lo - e_hi)) / p.beta;
            child.x = h.x + sx * rng.normal();
            child.y = h.y + sy * rng.normal();
            child.gen = next_gen;
            if (!dom.x_range.contains(child.x) || !dom.y_range.contains(child.y)) continue;
            frontier.push_back(child);
        }
    };
    for (const Event& h : model.events()) spill_over(h);
    for (const Event& h : prior_new) spill_over(h);

    // Cascades of the new events (background and spill-over offspring alike)
    // inside the extension window.
    Domain ext_dom = dom;
    ext_dom.t_max = t1;
    std::vector<Event> generation = out;
    generation.insert(generation.end(), frontier.begin(), frontier.end());
    out.insert(out.end(), frontier.begin(), frontier.end());
    while (!generation.empty()) {
        std::vector<Event> next;
        for (const Event& parent : generation) {
            auto children = simulate_offspring(parent, p, ext_dom, rng);
            for (Event& ch : children) {
                next.push_back(ch);
                out.push_back(ch);
            }
        }
        if (out.size() > 1000000) {
            throw NumericalError("predict_next_events: cascade exceeded 1e6 events");
        }
        generation = std::move(next);
    }
    return out;
}

}  // namespace

std::vector<Event> predict_next_events(const Model& model, const ParamState& draw, int k,
                                       RngStream& rng, double initial_window) {
    if (k < 0) throw ConfigError("predict_next_events: k must be >= 0");
    if (k == 0) return {};
    const double t0 = model.domain().t_max;
    double window = initial_window;
    if (!(window > 0.0)) {
        // Rough horizon from the homogeneous rate of the history.
        const double rate =
            std::max(static_cast<double>(model.events().size()), 1.0) / t0;
        window = std::min(std::max(2.0 * k / rate, 0.01 * t0), 10.0 * t0);
    }
    RngStream base = rng.child(rng.next_u64());
    // Windows extend one realization rightward (a short window is grown, not
    // redrawn), so the law of the first k arrivals does not depend on the
    // window schedule.
    std::vector<Event> events;
    double lo = t0;
    constexpr int kMaxDoublings = 6;
    for (int attempt = 0; attempt <= kMaxDoublings; ++attempt) {
        RngStream attempt_rng = base.child(static_cast<std::uint64_t>(attempt));
        std::vector<Event> fresh =
            simulate_extension(model, draw, lo, lo + window, attempt_rng, events);
        events.insert(events.end(), fresh.begin(), fresh.end());
        if (events.size() >= static_cast<std::size_t>(k)) {
            std::stable_sort(events.begin(), events.end(),
                             [](const Event& a, const Event& b) { return a.t < b.t; });
            events.resize(k);
            return events;
        }
        lo += window;
        window *= 2.0;
    }
    std::ostringstream os;
    os << "predict_next_events: fewer than " << k
       << " events materialized before the extension cap";
    throw NumericalError(os.str());
}

double rmse(const std::vector<Event>& predicted, const std::vector<Event>& actual,
            const RmseScales& scales) {
    if (predicted.size() != actual.size()) {
        throw DataError("rmse: sequences must have equal length");
    }
    if (predicted.empty()) return 0.0;
    auto sorted = [](const std::vector<Event>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i].t < v[i - 1].t) return false;
        }
        return true;
    };
    if (!sorted(predicted) || !sorted(actual)) {
        throw DataError("rmse: sequences must be time-sorted");
    }
    if (!(scales.t_scale > 0.0 && scales.x_scale > 0.0 && scales.y_scale > 0.0)) {
        throw ConfigError("rmse: scales must be positive");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double dt = (predicted[i].t - actual[i].t) / scales.t_scale;
        const double dx = (predicted[i].x - actual[i].x) / scales.x_scale;
        const double dy = (predicted[i].y - actual[i].y) / scales.y_scale;
        ss += dt * dt + dx * dx + dy * dy;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

void ExperimentConfig::validate() const {
    if (generators.empty() || inference_kinds.empty()) {
        throw ConfigError("experiment: need at least one generator and one inference kind");
    }
    for (const SimConfig& g : generators) g.validate();
    if (n_datasets < 1 || n_predictions < 1 || k < 1) {
        throw ConfigError("experiment: n_datasets, n_predictions, k must be >= 1");
    }
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw ConfigError("experiment: train_frac must lie in (0, 1)");
    }
    if (n_posterior_draws < 1) throw ConfigError("experiment: n_posterior_draws >= 1");
    mcmc.validate();
    priors.validate();
}

const ExperimentCell& ExperimentReport::cell(ModelKind generator, ModelKind inference) const {
    for (const auto& c : cells) {
        if (c.generator == generator && c.inference == inference) return c;
    }
    throw ConfigError("experiment report: no such cell");
}

namespace {

struct DatasetScores {
    // inference kind name -> replicate scores
    std::map<std::string, std::vector<double>> scores;
    std::map<std::string, long> failures;
};

std::string checkpoint_path(const std::string& dir, ModelKind gen, int dataset) {
    return dir + "/cell_" + to_string(gen) + "_" + std::to_string(dataset) + ".json";
}

bool load_checkpoint(const std::string& path, DatasetScores& out) {
    std::ifstream in(path);
    if (!in) return false;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) return false;
    try {
        for (auto& [key, arr] : j.at("scores").items()) {
            out.scores[key] = arr.get<std::vector<double>>();
        }
        for (auto& [key, v] : j.at("failures").items()) {
            out.failures[key] = v.get<long>();
        }
    } catch (const nlohmann::json::exception&) {
        return false;
    }
    return true;
}

void save_checkpoint(const std::string& path, const DatasetScores& scores) {
    nlohmann::json j;
    j["scores"] = nlohmann::json::object();
    j["failures"] = nlohmann::json::object();
    for (const auto& [key, v] : scores.scores) j["scores"][key] = v;
    for (const auto& [key, v] : scores.failures) j["failures"][key] = v;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace

ExperimentReport run_misspecification_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
    }
    RngStream root(cfg.seed);

    // All generators share the domain; the fit-side grids and bases are
    // reused across datasets.
    const Domain full_dom = cfg.generators.front().domain;
    const double t_train = cfg.train_frac * full_dom.t_max;
    Domain train_dom = full_dom;
    train_dom.t_max = t_train;
    const Grid1D fit_grid_t = Grid1D::over(t_train, cfg.fit_n_t);
    const Grid2D fit_grid_s =
        Grid2D::over(full_dom.x_range, full_dom.y_range, cfg.fit_n_x, cfg.fit_n_y);
    const LowRankBasis fit_basis_t = precompute_basis(fit_grid_t, cfg.fit_gp_t, cfg.fit_var_frac);
    const LowRankBasis fit_basis_s = precompute_basis(fit_grid_s, cfg.fit_gp_s, cfg.fit_var_frac);
    const RmseScales scales{t_train, full_dom.x_range.length(), full_dom.y_range.length()};

    ExperimentReport report;
    report.inference_kinds = cfg.inference_kinds;
    std::map<std::string, std::vector<double>> pooled;   // "gen/inf" -> scores
    std::map<std::string, long> pooled_failures;

    for (std::size_t gi = 0; gi < cfg.generators.size(); ++gi) {
        const SimConfig& gen_cfg = cfg.generators[gi];
        report.generators.push_back(gen_cfg.kind);
        for (int d = 0; d < cfg.n_datasets; ++d) {
            DatasetScores ds;
            const std::string ckpt = cfg.checkpoint_dir.empty()
                                         ? std::string{}
                                         : checkpoint_path(cfg.checkpoint_dir, gen_cfg.kind, d);
            bool restored = !ckpt.empty() && load_checkpoint(ckpt, ds);
            if (!restored) {
                RngStream cell_rng = root.child(gi * 1000 + static_cast<std::uint64_t>(d));
                // Redraw until the held-out window has k events to score
                // against; attempts are bounded and seed-derived.
                SimResult sim;
                std::vector<Event> test;
                bool usable = false;
                for (std::uint64_t attempt = 0; attempt < 20 && !usable; ++attempt) {
                    SimConfig attempt_cfg = gen_cfg;
                    attempt_cfg.seed = cell_rng.child(attempt).next_u64();
                    sim = simulate(attempt_cfg);
                    test.clear();
                    std::vector<Event> train;
                    for (const Event& e : sim.events) {
                        (e.t < t_train ? train : test).push_back(e);
                    }
                    usable = test.size() >= static_cast<std::size_t>(cfg.k) && !train.empty();
                }
                if (!usable) {
                    for (ModelKind m : cfg.inference_kinds) {
                        ds.failures[to_string(m)] += cfg.n_predictions;
                    }
                } else {
                    std::vector<Event> train;
                    for (const Event& e : sim.events) {
                        if (e.t < t_train) {
                            Event copy = e;
                            copy.gen.reset();  // labels are not observable
                            train.push_back(copy);
                        }
                    }
                    test.resize(cfg.k);
                    for (ModelKind m : cfg.inference_kinds) {
                        const std::string mname = to_string(m);
                        try {
                            Model model(m, EventSet::from_unsorted(train), train_dom,
                                        model_has_gp(m) ? std::optional{fit_grid_t} : std::nullopt,
                                        model_has_gp(m) ? std::optional{fit_grid_s} : std::nullopt,
                                        model_has_gp(m) ? std::optional{fit_basis_t} : std::nullopt,
                                        model_has_gp(m) ? std::optional{fit_basis_s} : std::nullopt,
                                        cfg.priors, cfg.temporal_cutoff);
                            McmcConfig mcmc = cfg.mcmc;
                            mcmc.seed = cell_rng.child(100 + static_cast<std::uint64_t>(m))
                                            .next_u64();
                            PosteriorSamples post = fit(model, mcmc);
                            const auto combined = post.combined();
                            const std::size_t n_sel = std::min<std::size_t>(
                                static_cast<std::size_t>(cfg.n_posterior_draws), combined.size());
                            if (n_sel == 0) throw NumericalError("no posterior draws");
                            std::vector<const ParamState*> sel;
                            for (std::size_t j = 0; j < n_sel; ++j) {
                                sel.push_back(&combined[j * combined.size() / n_sel]);
                            }
                            auto& scores = ds.scores[mname];
                            for (int r = 0; r < cfg.n_predictions; ++r) {
                                RngStream pred_rng = cell_rng.child(
                                    10000 + static_cast<std::uint64_t>(m) * 1000 + r);
                                try {
                                    auto pred = predict_next_events(
                                        model, *sel[r % sel.size()], cfg.k, pred_rng);
                                    scores.push_back(rmse(pred, test, scales));
                                } catch (const NumericalError&) {
                                    ++ds.failures[mname];
                                }
                            }
                        } catch (const std::exception&) {
                            ds.failures[mname] += cfg.n_predictions;
                        }
                    }
                }
                if (!ckpt.empty()) save_checkpoint(ckpt, ds);
            }
            for (ModelKind m : cfg.inference_kinds) {
                const std::string mname = to_string(m);
                const std::string key = to_string(gen_cfg.kind) + "/" + mname;
                if (auto it = ds.scores.find(mname); it != ds.scores.end()) {
                    auto& dst = pooled[key];
                    dst.insert(dst.end(), it->second.begin(), it->second.end());
                }
                if (auto it = ds.failures.find(mname); it != ds.failures.end()) {
                    pooled_failures[key] += it->second;
                }
            }
        }
    }

    for (ModelKind g : report.generators) {
        for (ModelKind m : cfg.inference_kinds) {
            const std::string key = to_string(g) + "/" + to_string(m);
            ExperimentCell cell;
            cell.generator = g;
            cell.inference = m;
            const auto& scores = pooled[key];
            cell.n_scores = static_cast<long>(scores.size());
            cell.n_failures = pooled_failures[key];
            if (!scores.empty()) {
                cell.mean_rmse = mean_of(scores);
                cell.se = std::sqrt(variance_of(scores) /
                                    static_cast<double>(scores.size()));
            }
            report.cells.push_back(cell);
        }
    }
    return report;
}

void write_report_table_csv(std::ostream& out, const ExperimentReport& report) {
    out << "generator";
    for (ModelKind m : report.inference_kinds) out << ',' << to_string(m);
    out << "\n";
    for (ModelKind g : report.generators) {
        out << to_string(g);
        for (ModelKind m : report.inference_kinds) {
            const auto& c = report.cell(g, m);
            out << ",\"" << format_double(c.mean_rmse) << " (" << format_double(c.se)
                << ")\"";
        }
        out << "\n";
    }
}

void write_report_long_csv(std::ostream& out, const ExperimentReport& report) {
    out << "generator,inference,mean_rmse,se,n_scores,n_failures\n";
    for (const auto& c : report.cells) {
        out << to_string(c.generator) << ',' << to_string(c.inference) << ','
            << format_double(c.mean_rmse) << ',' << format_double(c.se) << ','
            << c.n_scores << ',' << c.n_failures << "\n";
    }
}

}  // namespace coxhawkes
