#pragma once

#include <optional>
#include <string>

#include "coxhawkes/config.hpp"

namespace coxhawkes {

// Subcommand bodies shared by the CLI binary and the test suites. Each writes
// its artifacts and throws ConfigError / DataError / NumericalError on
// failure; the binary maps those to exit codes 2 / 3 / 4.

// Events CSV plus a JSON sidecar recording every ground truth.
void cmd_simulate(const RunConfig& cfg, const std::string& out_csv);

// Trace CSV, summary JSON, and posterior field CSVs under out_dir.
void cmd_fit(const RunConfig& cfg, const std::string& events_csv,
             const std::string& out_dir);

// Replicate-labeled predicted events; scores against test events when given.
void cmd_predict(const RunConfig& cfg, const std::string& events_csv,
                 const std::string& trace_csv, const std::string& out_dir,
                 const std::optional<std::string>& test_csv = std::nullopt);

// Table-shaped and long-format experiment reports, with per-cell checkpoints.
void cmd_experiment(const RunConfig& cfg, const std::string& out_dir);

// Time-rescaling KS residual test and an analytic-vs-finite-difference
// gradient check at the posterior mean of a fitted run.
void cmd_diagnose(const RunConfig& cfg, const std::string& events_csv,
                  const std::string& trace_csv, const std::string& out_json);

// Helpers shared with tests.
Model build_model(const RunConfig& cfg, EventSet events);
void write_trace_csv(const std::string& path, const PosteriorSamples& samples,
                     const RunConfig& cfg);
PosteriorSamples read_trace_csv(const std::string& path, const RunConfig& cfg);
ParamState posterior_mean_state(const PosteriorSamples& samples);

}  // namespace coxhawkes
