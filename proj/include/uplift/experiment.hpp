#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uplift/baseline.hpp"
#include "uplift/metrics.hpp"
#include "uplift/scorer.hpp"
#include "uplift/synth.hpp"
#include "uplift/train.hpp"
#include "uplift/types.hpp"

namespace uplift {

enum class SolverChoice { threshold, lagrangian, greedy };

SolverChoice solver_choice_from(const std::string& name);
const char* to_string(SolverChoice s);

// Full pipeline description. The JSON layout mirrors the field names; see
// ExperimentConfig::from_json.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    bool use_synth = true;
    SynthConfig synth;
    std::string synth_generator = "auto";  // auto | btap | mtbap
    std::string csv_path;
    SchemaConfig schema;

    LossKind loss = LossKind::dpm;
    ScorerKind scorer = ScorerKind::tabular;
    TrainConfig train;

    SolverChoice solver = SolverChoice::threshold;
    double epsilon = 1e-3;
    std::vector<double> budgets;           // absolute, ascending
    std::vector<double> budget_fractions;  // of the maximal incremental spend

    std::vector<std::string> metrics;  // auuc | aucc | mt_aucc | eom_sweep
    std::optional<BaselineKind> baseline;

    static ExperimentConfig from_json(const std::string& text);
    std::string to_json() const;
    void validate() const;
};

struct AllocationSummary {
    double budget = 0.0;
    double alpha_star = 0.0;
    double consumed = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool feasible = true;
    double eom_reward = 0.0;
    double eom_cost = 0.0;
};

struct RunReport {
    std::string config_json;
    std::uint64_t input_hash = 0;
    double gamma = 1.0;
    std::vector<double> loss_trace;
    std::map<std::string, double> metric_values;
    std::map<std::string, std::vector<CurvePoint>> curves;
    std::vector<AllocationSummary> allocations;
    std::vector<AllocationSummary> baseline_allocations;
    int repaired_rows = 0;
    long long skipped_batches = 0;
    std::string model_json;
    std::vector<int> final_allocation;
    std::map<std::string, double> timings_ms;

    std::string to_json() const;
    static RunReport from_json(const std::string& text);
};

// synth/ingest -> train -> predict -> allocate per budget -> evaluate.
// Every random stream derives from cfg.seed, so a config reproduces its
// report byte for byte (timings aside).
RunReport run_experiment(const ExperimentConfig& cfg);

// Writes report.json, metrics.csv, curve_<metric>.csv per curve, model.json
// and allocation.csv under dir.
void emit_report(const RunReport& report, const std::string& dir);

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 1469598103934665603ull);

}  // namespace uplift
