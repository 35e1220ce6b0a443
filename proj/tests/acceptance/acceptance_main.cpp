// Acceptance suite: one numbered criterion per run (--criterion N) or all in
// sequence (--all). Each criterion prints a single [PASS]/[FAIL] line plus
// supporting detail; the exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "coxhawkes/commands.hpp"
#include "coxhawkes/csv.hpp"
#include "coxhawkes/kernels.hpp"
#include "coxhawkes/predict_eval.hpp"

using namespace coxhawkes;

namespace {

const Domain kExp1Dom{50.0, {0.0, 1.0}, {0.0, 1.0}};
const TriggerParams kExp1Trig{0.5, 0.7, 0.5, 0.5};
const GPHyper kExp1GpT{10.0, 1.0};
const GPHyper kExp1GpS{0.25, 1.0};

SimConfig exp1_sim(std::uint64_t seed) {
    SimConfig c;
    c.domain = kExp1Dom;
    c.kind = ModelKind::cox_hawkes;
    c.a0 = 0.8;
    c.trigger = kExp1Trig;
    c.gp_t = kExp1GpT;
    c.gp_s = kExp1GpS;
    c.seed = seed;
    return c;
}

struct Exp1Parts {
    Grid1D grid_t;
    Grid2D grid_s;
    LowRankBasis basis_t;
    LowRankBasis basis_s;
};

const Exp1Parts& exp1_parts() {
    static const Exp1Parts parts = [] {
        Exp1Parts p{Grid1D::over(50.0, 50), Grid2D::over({0.0, 1.0}, {0.0, 1.0}, 25, 25),
                    {}, {}};
        p.basis_t = precompute_basis(p.grid_t, kExp1GpT, 0.99);
        p.basis_s = precompute_basis(p.grid_s, kExp1GpS, 0.99);
        return p;
    }();
    return parts;
}

Model exp1_model(EventSet events, double cutoff = 30.0) {
    const Exp1Parts& p = exp1_parts();
    return Model(ModelKind::cox_hawkes, std::move(events), kExp1Dom, p.grid_t, p.grid_s,
                 p.basis_t, p.basis_s, PriorSpec{}, cutoff);
}

bool report(int criterion, bool pass, const std::string& what) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": "
              << what << std::endl;
    return pass;
}

std::vector<Event> uniform_events(std::size_t n, const Domain& dom, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<Event> ev;
    for (std::size_t i = 0; i < n; ++i) {
        ev.push_back(Event{rng.uniform() * dom.t_max,
                           rng.uniform(dom.x_range.lo, dom.x_range.hi),
                           rng.uniform(dom.y_range.lo, dom.y_range.hi)});
    }
    return ev;
}

ParamState random_cox_state(const Model& model, std::uint64_t seed) {
    RngStream rng(seed);
    ParamState s;
    s.a0 = rng.normal(0.5, 0.5);
    s.trigger.alpha = 0.2 + 0.5 * rng.uniform();
    s.trigger.beta = 0.3 + rng.uniform();
    s.trigger.sigma_x2 = 0.1 + 0.6 * rng.uniform();
    s.trigger.sigma_y2 = 0.1 + 0.6 * rng.uniform();
    s.z_t.resize(model.m_t());
    s.z_s.resize(model.m_s());
    for (double& z : s.z_t) z = rng.normal();
    for (double& z : s.z_s) z = rng.normal();
    return s;
}

// ---------------------------------------------------------------------------
// 1. Parameter recovery at the Experiment-1 configuration.
bool criterion_1() {
    const int n_reps = 20;
    const char* names[] = {"a0", "alpha", "beta", "sigma_x2", "sigma_y2"};
    const double truths[] = {0.8, 0.5, 0.7, 0.5, 0.5};
    int covered[5] = {0, 0, 0, 0, 0};
    double worst_rhat = 0.0;
    int total_divergences = 0;
    bool accept_in_window = true;

    for (int rep = 0; rep < n_reps; ++rep) {
        const SimResult sim = simulate(exp1_sim(100 + rep));
        Model model = exp1_model(sim.events);
        McmcConfig cfg;
        cfg.n_chains = 3;
        cfg.n_samples = 1500;
        cfg.n_warmup = 500;
        cfg.leapfrog_steps = 16;
        cfg.adapt_mass = true;
        cfg.seed = 9000 + rep;
        const PosteriorSamples post = fit(model, cfg);
        total_divergences += post.total_divergences();
        double rep_worst = 0.0;
        for (const auto& summary : summarize(post)) {
            rep_worst = std::max(rep_worst, summary.rhat);
        }
        worst_rhat = std::max(worst_rhat, rep_worst);
        std::cout << "  rep " << rep << ": n=" << sim.events.size();
        for (int p = 0; p < 5; ++p) {
            const auto chains = parameter_chains(post, names[p]);
            std::vector<double> all;
            for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
            const double lo = quantile(all, 0.05);
            const double hi = quantile(all, 0.95);
            const bool cover = lo <= truths[p] && truths[p] <= hi;
            covered[p] += cover;
            std::cout << ' ' << names[p] << (cover ? "+" : "-");
        }
        for (const auto& cs : post.stats) {
            if (cs.mean_accept < 0.65 || cs.mean_accept > 0.95) accept_in_window = false;
        }
        std::cout << " rhat=" << rep_worst << std::endl;
    }

    bool pass = worst_rhat <= 1.05;
    std::ostringstream os;
    os << "parameter recovery: coverage";
    for (int p = 0; p < 5; ++p) {
        os << ' ' << names[p] << '=' << covered[p] << '/' << n_reps;
        if (covered[p] < 16) pass = false;
    }
    os << ", worst rhat " << worst_rhat << " (<= 1.05)"
       << ", divergences " << total_divergences
       << ", accept in [0.65,0.95] " << (accept_in_window ? "yes" : "no");
    return report(1, pass, os.str());
}

// ---------------------------------------------------------------------------
// 2. Simulation calibration at the Experiment-1 configuration.
bool criterion_2() {
    const int n_seeds = 20;
    double total = 0.0;
    double bg = 0.0, off = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const SimResult sim = simulate(exp1_sim(200 + s));
        total += static_cast<double>(sim.events.size());
        bg += static_cast<double>(sim.background_count);
        off += static_cast<double>(sim.offspring_count);
    }
    const double mean_count = total / n_seeds;
    const double ratio = off > 0.0 ? bg / off : std::numeric_limits<double>::infinity();
    const bool count_ok = mean_count >= 160.0 && mean_count <= 260.0;
    const bool ratio_ok = ratio >= 0.7 && ratio <= 1.4;
    std::ostringstream os;
    os << "simulation calibration: mean count " << mean_count
       << " (target [160, 260]), background:offspring " << ratio
       << " (target [0.7, 1.4])";
    return report(2, count_ok && ratio_ok, os.str());
}

// ---------------------------------------------------------------------------
// 3. Kernel mass identity over an expanding domain.
bool criterion_3() {
    bool pass = true;
    std::ostringstream os;
    os << "kernel mass identity:";
    const TriggerParams sets[] = {kExp1Trig, {0.73, 0.18, 0.09, 0.04}};
    for (const TriggerParams& p : sets) {
        // Temporal factor at an infinity proxy (40 e-folds), spatial factor on
        // rectangles expanding by whole sigma radii around the source.
        const double temporal = trigger_temporal_mass(0.0, 40.0 / p.beta, p);
        const double sx = std::sqrt(p.sigma_x2);
        const double sy = std::sqrt(p.sigma_y2);
        double prev = 0.0;
        double final_gap = 1.0;
        bool monotone = true;
        for (int r = 1; r <= 10; ++r) {
            Domain dom{1.0, {-r * sx, r * sx}, {-r * sy, r * sy}};
            const double mass = temporal * trigger_spatial_mass(0.0, 0.0, dom, p);
            if (mass + 1e-15 < prev) monotone = false;
            prev = mass;
            final_gap = std::fabs(mass - p.alpha);
        }
        const double exact = std::fabs(trigger_temporal_mass(0.0, 1e6, p) - p.alpha);
        os << " [alpha=" << p.alpha << ": gap at 10 radii " << final_gap
           << ", infinity-proxy gap " << exact << "]";
        if (!monotone || final_gap >= 1e-6 || exact >= 1e-9) pass = false;
    }
    os << " (monotone, < 1e-6 at 10 radii, < 1e-9 at the proxy)";
    return report(3, pass, os.str());
}

// ---------------------------------------------------------------------------
// 4. Analytic gradients against central finite differences.
bool criterion_4() {
    Model model = exp1_model(EventSet::from_unsorted(uniform_events(50, kExp1Dom, 4001)),
                             0.0);
    const double h = 1e-5;
    double max_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ParamState s = random_cox_state(model, 4100 + trial);
        std::vector<double> u = model.pack(s);
        const std::vector<double> grad = model.grad_log_posterior(u);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double saved = u[i];
            u[i] = saved + h;
            const double hi = model.log_posterior(u);
            u[i] = saved - h;
            const double lo = model.log_posterior(u);
            u[i] = saved;
            const double fd = (hi - lo) / (2.0 * h);
            max_rel = std::max(max_rel, std::fabs(grad[i] - fd) /
                                            std::max({1.0, std::fabs(grad[i]),
                                                      std::fabs(fd)}));
        }
    }
    std::ostringstream os;
    os << "gradient vs finite differences: max relative error " << max_rel
       << " over 20 states (< 1e-4)";
    return report(4, max_rel < 1e-4, os.str());
}

// ---------------------------------------------------------------------------
// 5. Compensator quadrature against Monte-Carlo integration.
bool criterion_5() {
    const SimResult sim = simulate(exp1_sim(501));
    Model model = exp1_model(sim.events, 0.0);
    bool pass = true;
    std::ostringstream os;
    os << "compensator vs Monte Carlo (1e6 points):";
    for (int trial = 0; trial < 5; ++trial) {
        const ParamState s = random_cox_state(model, 5200 + trial);
        const double quad = model.compensator_total(s);
        RngStream rng(5300 + trial);
        const std::size_t n = 1000000;
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = model.intensity_at(
                rng.uniform() * kExp1Dom.t_max,
                rng.uniform(kExp1Dom.x_range.lo, kExp1Dom.x_range.hi),
                rng.uniform(kExp1Dom.y_range.lo, kExp1Dom.y_range.hi), s);
            sum += v;
            sumsq += v * v;
        }
        const double vol = kExp1Dom.volume();
        const double mc = sum / n * vol;
        const double se =
            std::sqrt((sumsq / n - (sum / n) * (sum / n)) / n) * vol;
        const double dev = std::fabs(mc - quad) / se;
        os << " state" << trial << "=" << dev << "se";
        if (dev > 3.0) pass = false;
    }
    os << " (each within 3 se)";
    return report(5, pass, os.str());
}

// ---------------------------------------------------------------------------
// 6. Low-rank generator fidelity.
bool criterion_6() {
    const Exp1Parts& p = exp1_parts();
    const Eigen::MatrixXd K = build_covariance(p.grid_t, kExp1GpT);
    RngStream rng(600);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.grid_t.n_t, p.grid_t.n_t);
    std::vector<double> z(p.basis_t.rank());
    const int n_draws = 10000;
    for (int d = 0; d < n_draws; ++d) {
        for (double& v : z) v = rng.normal();
        const GridField f = sample_field(p.basis_t, z);
        Eigen::Map<const Eigen::VectorXd> fv(f.values.data(), p.grid_t.n_t);
        acc.noalias() += fv * fv.transpose();
    }
    acc /= static_cast<double>(n_draws);
    const double frob = (acc - K).norm() / K.norm();

    // Exact reconstruction at var_frac = 1 on grids of at most 100 points.
    const LowRankBasis full_t = precompute_basis(p.grid_t, kExp1GpT, 1.0);
    const double exact_t = (K - full_t.basis * full_t.basis.transpose()).norm() / K.norm();
    const Grid2D small = Grid2D::over({0.0, 1.0}, {0.0, 1.0}, 10, 10);
    const Eigen::MatrixXd Ks = build_covariance(small, kExp1GpS);
    const LowRankBasis full_s = precompute_basis(small, kExp1GpS, 1.0);
    const double exact_s =
        (Ks - full_s.basis * full_s.basis.transpose()).norm() / Ks.norm();

    std::ostringstream os;
    os << "generator fidelity: empirical-cov Frobenius error " << frob
       << " at var_frac 0.99 (< 0.05); exact reconstruction " << exact_t << " / "
       << exact_s << " at var_frac 1 (< 1e-6)";
    return report(6, frob < 0.05 && exact_t < 1e-6 && exact_s < 1e-6, os.str());
}

// ---------------------------------------------------------------------------
// 7. Time-rescaling residuals under the true compensator.
bool criterion_7() {
    const int n_runs = 200;
    int rejections = 0;
    int usable = 0;
    for (int r = 0; r < n_runs; ++r) {
        const SimResult sim = simulate(exp1_sim(700 + r));
        if (sim.events.size() < 5) continue;
        ++usable;
        Model model = exp1_model(sim.events, 0.0);
        ParamState truth;
        truth.a0 = 0.8;
        truth.trigger = kExp1Trig;
        truth.z_t = sim.z_t;
        truth.z_s = sim.z_s;
        const TemporalCompensator comp = model.temporal_compensator(truth);
        const KsResult ks =
            ks_residual_test(sim.events, [&comp](double t) { return comp(t); });
        if (ks.p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / usable;
    std::ostringstream os;
    os << "time-rescaling residuals: KS rejection rate " << rate << " (" << rejections
       << "/" << usable << ", <= 0.10 at the 5% level)";
    return report(7, rate <= 0.10, os.str());
}

// ---------------------------------------------------------------------------
// 8. Misspecification ordering on the generator x inference grid.
bool criterion_8() {
    ExperimentConfig cfg;
    Domain dom{50.0, {0.0, 1.0}, {0.0, 1.0}};
    const GPHyper gen_gp_t{10.0, 0.5};
    const GPHyper gen_gp_s{0.25, 1.5};
    {
        SimConfig g;
        g.domain = dom;
        g.kind = ModelKind::lgcp;
        g.a0 = 0.8;
        g.gp_t = gen_gp_t;
        g.gp_s = gen_gp_s;
        cfg.generators.push_back(g);
    }
    {
        SimConfig g;
        g.domain = dom;
        g.kind = ModelKind::cox_hawkes;
        g.a0 = 0.16;
        g.trigger = TriggerParams{0.5, 1.0, 0.01, 0.01};
        g.gp_t = gen_gp_t;
        g.gp_s = gen_gp_s;
        cfg.generators.push_back(g);
    }
    {
        SimConfig g;
        g.domain = dom;
        g.kind = ModelKind::hawkes_const_bg;
        g.a0 = 1.06;
        g.trigger = TriggerParams{0.55, 1.0, 0.004, 0.004};
        cfg.generators.push_back(g);
    }
    {
        SimConfig g;
        g.domain = dom;
        g.kind = ModelKind::poisson;
        g.a0 = 1.7918;
        cfg.generators.push_back(g);
    }
    cfg.inference_kinds = {ModelKind::lgcp, ModelKind::cox_hawkes,
                           ModelKind::hawkes_const_bg, ModelKind::poisson};
    cfg.n_datasets = 10;
    cfg.n_predictions = 50;
    cfg.k = 10;
    cfg.train_frac = 0.8;
    cfg.mcmc.n_chains = 2;
    cfg.mcmc.n_samples = 600;
    cfg.mcmc.n_warmup = 250;
    cfg.mcmc.leapfrog_steps = 14;
    cfg.mcmc.adapt_mass = true;
    // Weakly-informative shrinkage on the branching factor keeps excitation
    // from mimicking hotspot persistence on excitation-free data; the
    // flexible model-side spatial field makes that mimicry cost something.
    cfg.priors.alpha = TruncatedNormal{0.0, 0.4};
    cfg.fit_gp_t = kExp1GpT;
    cfg.fit_gp_s = GPHyper{0.25, 1.5};
    cfg.n_posterior_draws = 50;
    cfg.seed = 1;

    const ExperimentReport rep = run_misspecification_experiment(cfg);
    std::map<ModelKind, std::map<ModelKind, double>> table;
    long failures = 0;
    for (const auto& c : rep.cells) {
        table[c.generator][c.inference] = c.mean_rmse;
        failures += c.n_failures;
    }
    bool pass = true;
    std::ostringstream os;
    os << "misspecification ordering:";
    for (const auto& [gen, row] : table) {
        std::vector<std::pair<double, ModelKind>> ranked;
        for (const auto& [inf, v] : row) ranked.push_back({v, inf});
        std::sort(ranked.begin(), ranked.end());
        std::cout << "  row " << to_string(gen) << ":";
        for (const auto& [v, inf] : ranked) std::cout << ' ' << to_string(inf) << '=' << v;
        std::cout << std::endl;
        const bool diag = ranked.front().second == gen;
        if (!diag) pass = false;
        os << " [" << to_string(gen) << ": true-lowest " << (diag ? "yes" : "NO");
        if (gen != ModelKind::poisson) {
            // The paper's claims concern the three structured generator rows;
            // in the poisson row the baseline is the true model itself.
            const bool poisson_worst = ranked.back().second == ModelKind::poisson;
            std::size_t cox_rank = 0;
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                if (ranked[i].second == ModelKind::cox_hawkes) cox_rank = i + 1;
            }
            if (!poisson_worst || cox_rank > 2) pass = false;
            os << ", poisson-worst " << (poisson_worst ? "yes" : "NO") << ", cox rank "
               << cox_rank;
        }
        os << "]";
    }
    os << ", failures " << failures;
    return report(8, pass, os.str());
}

// ---------------------------------------------------------------------------
// 9. Pairwise likelihood term against a brute-force double loop.
bool criterion_9() {
    const Exp1Parts& gp = exp1_parts();
    Model model = exp1_model(EventSet::from_unsorted(uniform_events(200, kExp1Dom, 901)),
                             0.0);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const ParamState s = random_cox_state(model, 910 + trial);
        const EventSet& sorted = model.events();
        const GridField ft = sample_field(gp.basis_t, s.z_t);
        const GridField fs = sample_field(gp.basis_s, s.z_s);
        double point_sum = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double lambda =
                std::exp(s.a0 + field_at(ft, gp.grid_t, sorted[i].t) +
                         field_at(fs, gp.grid_s, sorted[i].x, sorted[i].y));
            for (std::size_t j = 0; j < sorted.size(); ++j) {
                if (sorted[j].t < sorted[i].t) {
                    lambda += trigger_intensity(sorted[i].t - sorted[j].t,
                                                sorted[i].x - sorted[j].x,
                                                sorted[i].y - sorted[j].y, s.trigger);
                }
            }
            point_sum += std::log(lambda);
        }
        double qt = 0.0, qs = 0.0;
        for (double v : ft.values) qt += std::exp(v);
        qt *= gp.grid_t.cell_width;
        for (double v : fs.values) qs += std::exp(v);
        qs *= gp.grid_s.cell_area;
        double comp = std::exp(s.a0) * qt * qs;
        for (const Event& e : sorted) {
            comp += trigger_temporal_mass(e.t, kExp1Dom.t_max, s.trigger) *
                    trigger_spatial_mass(e.x, e.y, kExp1Dom, s.trigger);
        }
        const double brute = point_sum - comp;
        const double fast = model.log_likelihood(s);
        worst = std::max(worst, std::fabs(fast - brute) / std::fabs(brute));
    }
    std::ostringstream os;
    os << "brute-force likelihood equivalence: worst relative deviation " << worst
       << " on n = 200 (<= 1e-12)";
    return report(9, worst <= 1e-12, os.str());
}

// ---------------------------------------------------------------------------
// 10. Byte-for-byte determinism of the command pipeline.
bool criterion_10() {
    namespace fs = std::filesystem;
    const std::string dir = "acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    const auto cfg = RunConfig::from_json(nlohmann::json::parse(R"({
      "domain": {"t_max": 20.0, "x_range": [0.0, 1.0], "y_range": [0.0, 1.0]},
      "model": "cox_hawkes",
      "a0": 0.6,
      "trigger": {"alpha": 0.4, "beta": 1.0, "sigma_x2": 0.05, "sigma_y2": 0.05},
      "gp_t": {"length_scale": 5.0, "variance": 0.5},
      "gp_s": {"length_scale": 0.4, "variance": 0.5},
      "grids": {"n_t": 20, "n_x": 8, "n_y": 8},
      "mcmc": {"chains": 2, "samples": 200, "warmup": 80, "leapfrog_steps": 10,
               "adapt_mass": true},
      "prediction": {"k": 3, "replicates": 5, "posterior_draws": 5},
      "experiment": {
        "n_datasets": 2, "n_predictions": 2, "k": 2,
        "inference": ["poisson"],
        "mcmc": {"chains": 1, "samples": 120, "warmup": 40, "leapfrog_steps": 8},
        "generators": [{"model": "poisson", "a0": 1.4}]
      },
      "seed": 77
    })"));

    bool pass = true;
    std::ostringstream os;
    os << "determinism:";
    for (int round = 0; round < 2; ++round) {
        const std::string r = dir + "/r" + std::to_string(round);
        fs::create_directories(r);
        cmd_simulate(cfg, r + "/events.csv");
        cmd_fit(cfg, r + "/events.csv", r + "/fit");
        cmd_predict(cfg, r + "/events.csv", r + "/fit/trace.csv", r + "/pred",
                    r + "/events.csv");
        cmd_experiment(cfg, r + "/exp");
        cmd_diagnose(cfg, r + "/events.csv", r + "/fit/trace.csv", r + "/diagnose.json");
    }
    const char* artifacts[] = {"events.csv",       "events_truth.json",
                               "fit/trace.csv",    "fit/summary.json",
                               "fit/field_t.csv",  "fit/field_s.csv",
                               "pred/predicted.csv", "pred/score.json",
                               "exp/report_table.csv", "exp/report_long.csv",
                               "diagnose.json"};
    for (const char* artifact : artifacts) {
        const bool same = slurp(dir + "/r0/" + artifact) == slurp(dir + "/r1/" + artifact) &&
                          !slurp(dir + "/r0/" + artifact).empty();
        if (!same) {
            pass = false;
            os << " MISMATCH " << artifact;
        }
    }
    os << (pass ? " all artifacts byte-identical across reruns" : "");
    fs::remove_all(dir);
    return report(10, pass, os.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected.push_back(std::atoi(argv[++i]));
        } else if (std::strcmp(argv[i], "--all") == 0) {
            for (int c = 1; c <= 10; ++c) selected.push_back(c);
        }
    }
    if (selected.empty()) {
        std::cerr << "usage: acceptance --criterion N | --all" << std::endl;
        return 64;
    }
    bool (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                            criterion_5, criterion_6, criterion_7, criterion_8,
                            criterion_9, criterion_10};
    int failures = 0;
    for (int c : selected) {
        if (c < 1 || c > 10) {
            std::cerr << "unknown criterion " << c << std::endl;
            return 64;
        }
        try {
            if (!criteria[c - 1]()) ++failures;
        } catch (const std::exception& e) {
            std::cout << "[FAIL] criterion " << c << ": exception: " << e.what()
                      << std::endl;
            ++failures;
        }
    }
    return failures;
}
