#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "coxhawkes/commands.hpp"
#include "coxhawkes/errors.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> threads_override;
};

coxhawkes::RunConfig load(const CommonOpts& opts) {
    coxhawkes::RunConfig cfg = coxhawkes::RunConfig::from_file(opts.config);
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    if (opts.threads_override) cfg.threads = *opts.threads_override;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "Run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    auto* seed = cmd->add_option("--seed", "Override the config seed");
    seed->each([&opts](const std::string& v) { opts.seed_override = std::stoull(v); });
    auto* threads = cmd->add_option("--threads", "Override the config thread count");
    threads->each([&opts](const std::string& v) { opts.threads_override = std::stoi(v); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatiotemporal Cox-Hawkes point processes: simulation, exact "
                 "likelihood inference, prediction, and evaluation"};
    app.require_subcommand(1);

    CommonOpts sim_opts, fit_opts, pred_opts, exp_opts, diag_opts;
    std::string sim_out, fit_events, fit_out, pred_events, pred_trace, pred_out;
    std::string exp_out, diag_events, diag_trace, diag_out;
    std::string pred_test;

    auto* sim = app.add_subcommand("simulate", "Draw a dataset and its ground truths");
    add_common(sim, sim_opts);
    sim->add_option("--out", sim_out, "Output events CSV")->required();

    auto* fitc = app.add_subcommand("fit", "Run MCMC on an event CSV");
    add_common(fitc, fit_opts);
    fitc->add_option("--events", fit_events, "Input events CSV")
        ->required()
        ->check(CLI::ExistingFile);
    fitc->add_option("--out", fit_out, "Output directory")->required();

    auto* pred = app.add_subcommand("predict", "Predict future events from a fitted trace");
    add_common(pred, pred_opts);
    pred->add_option("--events", pred_events, "History events CSV")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--trace", pred_trace, "Posterior trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--out", pred_out, "Output directory")->required();
    pred->add_option("--test", pred_test, "Held-out events CSV for scoring")
        ->check(CLI::ExistingFile);

    auto* expc = app.add_subcommand("experiment", "Run the misspecification grid");
    add_common(expc, exp_opts);
    expc->add_option("--out", exp_out, "Output directory")->required();

    auto* diag = app.add_subcommand("diagnose",
                                    "Residual KS test and gradient check on a fitted run");
    add_common(diag, diag_opts);
    diag->add_option("--events", diag_events, "Events CSV")
        ->required()
        ->check(CLI::ExistingFile);
    diag->add_option("--trace", diag_trace, "Posterior trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    diag->add_option("--out", diag_out, "Output JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            coxhawkes::cmd_simulate(load(sim_opts), sim_out);
        } else if (fitc->parsed()) {
            coxhawkes::cmd_fit(load(fit_opts), fit_events, fit_out);
        } else if (pred->parsed()) {
            coxhawkes::cmd_predict(load(pred_opts), pred_events, pred_trace, pred_out,
                                   pred_test.empty()
                                       ? std::nullopt
                                       : std::optional<std::string>{pred_test});
        } else if (expc->parsed()) {
            coxhawkes::cmd_experiment(load(exp_opts), exp_out);
        } else if (diag->parsed()) {
            coxhawkes::cmd_diagnose(load(diag_opts), diag_events, diag_trace, diag_out);
        }
    } catch (const coxhawkes::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const coxhawkes::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const coxhawkes::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
