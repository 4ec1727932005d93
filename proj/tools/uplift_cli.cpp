// Command-line front end: synth, ingest, train, allocate, evaluate, sweep,
// bench. Every subcommand writes its artifacts under --out and prints the
// main result path(s) on stdout.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "uplift/acceptance.hpp"
#include "uplift/csv.hpp"
#include "uplift/errors.hpp"
#include "uplift/experiment.hpp"
#include "uplift/metrics.hpp"
#include "uplift/solve.hpp"
#include "uplift/synth.hpp"
#include "uplift/train.hpp"

namespace {

using namespace uplift;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << body;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

SchemaConfig load_schema(const std::string& path, int fallback_dim) {
    if (path.empty()) return default_schema(fallback_dim);
    return ExperimentConfig::from_json(
               "{\"dataset\":{\"csv\":\"x\",\"schema\":" + slurp(path) +
               "},\"loss\":\"dum\"}")
        .schema;
}

int cmd_synth(const SynthConfig& scfg, const std::string& generator,
              const std::string& out_dir) {
    ensure_dir(out_dir);
    const bool btap = generator == "btap" || (generator == "auto" && scfg.L == 2);
    const auto [ds, gt] = btap ? gen_btap_dataset(scfg) : gen_mtbap_dataset(scfg);
    emit_csv(ds, out_dir + "/dataset.csv");
    write_ground_truth_csv(gt, out_dir + "/ground_truth.csv");
    std::cout << out_dir << "/dataset.csv\n" << out_dir << "/ground_truth.csv\n";
    return 0;
}

int cmd_ingest(const std::string& csv, const std::string& schema_path,
               const std::string& out_dir) {
    if (schema_path.empty()) throw ConfigError("ingest needs --schema");
    const SchemaConfig schema = load_schema(schema_path, 0);
    const IngestResult res = ingest_csv(csv, schema);
    ensure_dir(out_dir);
    emit_csv(res.dataset, out_dir + "/canonical.csv");
    spit(out_dir + "/level_map.json", res.level_map_json());
    spit(out_dir + "/diagnostics.json", validate_dataset(res.dataset).to_json());
    std::cout << out_dir << "/canonical.csv\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            std::uint64_t seed_override, bool have_seed) {
    ExperimentConfig cfg = ExperimentConfig::from_json(slurp(config_path));
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (have_seed) cfg.seed = seed_override;
    const RunReport rep = run_experiment(cfg);
    emit_report(rep, cfg.out_dir);
    std::cout << cfg.out_dir << "/report.json\n";
    return 0;
}

int cmd_allocate(const std::string& instance_path, const std::string& model_path,
                 const std::string& data_path, double budget, double epsilon,
                 const std::string& solver, const std::string& out_dir) {
    ensure_dir(out_dir);
    Allocation alloc;
    double alpha_star = 0.0;
    int iterations = 0;
    if (!instance_path.empty()) {
        const InstanceCsv inst_csv = read_instance_csv(instance_path);
        const MultiTreatmentInstance inst(inst_csv.r, inst_csv.c, inst_csv.rows,
                                          inst_csv.levels);
        DualSearchResult res;
        if (solver == "threshold") {
            const MarginalTable table = compute_marginals(inst);
            res = threshold_mtbap(table, inst.costs(), budget, epsilon,
                                   &inst.rewards());
        } else {
            res = lagrangian_mtbap(inst, budget, epsilon);
        }
        alloc = res.allocation;
        alpha_star = res.alpha_star;
        iterations = res.iterations;
    } else {
        if (model_path.empty() || data_path.empty())
            throw ConfigError("allocate needs --instance, or --model with --data");
        const LoadedModel model = LoadedModel::from_json(slurp(model_path));
        const IngestResult data =
            ingest_csv(data_path, default_schema(model.scorer.feature_dim()));
        const DecisionTable table = predict_decision_factor(
            model.scorer, data.dataset, model.loss, model.gamma);
        if (model.loss != LossKind::dpm)
            throw ConfigError(
                "prediction-driven allocation needs a marginal-utility model; "
                "rank-only models have no cost estimates to meter the budget");
        // Decisions threshold the predicted utilities; without response
        // matrices the budget is metered on the predictions themselves.
        MarginalTable table_pred = make_marginal_table(
            table.value, data.dataset.total(), model.n_levels);
        const auto [repaired, count] = isotonic_repair(table_pred);
        std::vector<double> cost_proxy(data.dataset.total() *
                                       static_cast<std::size_t>(model.n_levels));
        for (std::size_t i = 0; i < data.dataset.total(); ++i)
            for (int j = 1; j < model.n_levels; ++j)
                cost_proxy[i * static_cast<std::size_t>(model.n_levels) +
                           static_cast<std::size_t>(j)] = static_cast<double>(j);
        const DualSearchResult res =
            threshold_mtbap(repaired, cost_proxy, budget, epsilon);
        alloc = res.allocation;
        alpha_star = res.alpha_star;
        iterations = res.iterations;
        if (count > 0)
            std::fprintf(stderr, "repaired %d non-monotone prediction rows\n", count);
    }
    {
        std::string csv = "individual,level\n";
        for (std::size_t i = 0; i < alloc.chosen.size(); ++i)
            csv += std::to_string(i) + "," + std::to_string(alloc.chosen[i]) + "\n";
        spit(out_dir + "/allocation.csv", csv);
    }
    {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "{\n  \"alpha_star\": %.17g,\n  \"consumed\": %.17g,\n"
                      "  \"objective\": %.17g,\n  \"iterations\": %d\n}\n",
                      alpha_star, alloc.consumed_cost, alloc.objective, iterations);
        spit(out_dir + "/summary.json", buf);
    }
    std::cout << out_dir << "/allocation.csv\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& schema_path, const std::string& metrics_csv,
                 const std::string& out_dir) {
    const LoadedModel model = LoadedModel::from_json(slurp(model_path));
    const SchemaConfig schema = load_schema(schema_path, model.scorer.feature_dim());
    const IngestResult data = ingest_csv(data_path, schema);
    const DecisionTable table =
        predict_decision_factor(model.scorer, data.dataset, model.loss, model.gamma);

    std::map<std::string, double> values;
    std::map<std::string, std::vector<CurvePoint>> curves;
    std::stringstream names(metrics_csv);
    std::string name;
    while (std::getline(names, name, ',')) {
        if (name == "auuc") {
            const CostCurve c = cost_curve(binary_quintuples(data.dataset, table.score),
                                           CurveAxis::fraction);
            values["auuc"] = mt_aucc(c);
            curves["auuc"] = c.points;
        } else if (name == "aucc") {
            const CostCurve c = cost_curve(binary_quintuples(data.dataset, table.score),
                                           CurveAxis::cost);
            values["aucc"] = mt_aucc(c);
            curves["aucc"] = c.points;
        } else if (name == "mt_aucc") {
            const CostCurve c = mt_cost_curve(build_quintuples(data.dataset, table.score));
            values["mt_aucc"] = mt_aucc(c);
            curves["mt_aucc"] = c.points;
        } else {
            throw ConfigError("unknown metric '" + name + "'");
        }
    }
    ensure_dir(out_dir);
    {
        std::ostringstream j;
        j << "{\n";
        bool first = true;
        for (const auto& [k, v] : values) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            j << (first ? "" : ",\n") << "  \"" << k << "\": " << buf;
            first = false;
        }
        j << ",\n  \"curves\": {";
        bool firstc = true;
        for (const auto& [k, pts] : curves) {
            j << (firstc ? "" : ", ") << "\"" << k << "\": [";
            for (std::size_t p = 0; p < pts.size(); ++p) {
                char buf[80];
                std::snprintf(buf, sizeof(buf), "%s[%.17g,%.17g]", p ? "," : "",
                              pts[p].x, pts[p].y);
                j << buf;
            }
            j << "]";
            firstc = false;
        }
        j << "}\n}\n";
        spit(out_dir + "/evaluation.json", j.str());
    }
    for (const auto& [k, pts] : curves) {
        std::string csv = "x,y\n";
        char buf[96];
        for (const CurvePoint& p : pts) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.x, p.y);
            csv += buf;
        }
        spit(out_dir + "/curve_" + k + ".csv", csv);
    }
    std::cout << out_dir << "/evaluation.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct decision-factor learning and budget allocation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic trial dataset");
    SynthConfig scfg;
    scfg.n = 10000;
    std::string generator = "auto", out_dir = "out";
    int vocab = 0;
    bool stratified = false;
    synth->add_option("--n", scfg.n, "sample count");
    synth->add_option("--d", scfg.d, "feature dimension");
    synth->add_option("--L", scfg.L, "treatment levels");
    synth->add_option("--noise", scfg.noise_scale, "noise scale");
    synth->add_option("--seed", scfg.seed, "seed");
    synth->add_option("--vocab", vocab, "feature vocabulary size (0 = continuous)");
    synth->add_flag("--stratified", stratified, "balance every (key, level) cell");
    synth->add_option("--generator", generator, "auto | btap | mtbap");
    synth->add_option("--out", out_dir, "output directory");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a CSV");
    std::string csv_path, schema_path;
    ingest->add_option("--csv", csv_path, "input CSV")->required();
    ingest->add_option("--schema", schema_path, "schema JSON")->required();
    ingest->add_option("--out", out_dir, "output directory");

    // train / sweep share the config-driven runner
    auto* train_cmd = app.add_subcommand("train", "train a model from a config");
    auto* sweep_cmd = app.add_subcommand("sweep", "full pipeline with budget sweep");
    std::string config_path, run_out;
    std::uint64_t seed_override = 0;
    bool have_seed = false;
    for (auto* cmd : {train_cmd, sweep_cmd}) {
        cmd->add_option("--config", config_path, "experiment config JSON")->required();
        cmd->add_option("--out", run_out, "output directory override");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t v) {
                seed_override = v;
                have_seed = true;
            },
            "master seed override");
    }

    // allocate
    auto* alloc_cmd = app.add_subcommand("allocate", "solve a budget allocation");
    std::string instance_path, model_path, data_path, solver = "threshold";
    double budget = 0.0, epsilon = 1e-3;
    alloc_cmd->add_option("--instance", instance_path, "instance CSV (r_j, c_j columns)");
    alloc_cmd->add_option("--model", model_path, "model JSON (prediction-driven)");
    alloc_cmd->add_option("--data", data_path, "dataset CSV for --model");
    alloc_cmd->add_option("--budget", budget, "budget")->required();
    alloc_cmd->add_option("--epsilon", epsilon, "budget slack tolerance");
    alloc_cmd->add_option("--solver", solver, "threshold | lagrangian");
    alloc_cmd->add_option("--out", out_dir, "output directory");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a trained model");
    std::string metrics = "auuc";
    eval_cmd->add_option("--model", model_path, "model JSON")->required();
    eval_cmd->add_option("--data", data_path, "dataset CSV")->required();
    eval_cmd->add_option("--schema", schema_path, "schema JSON (default f0..fk layout)");
    eval_cmd->add_option("--metrics", metrics, "comma list: auuc,aucc,mt_aucc");
    eval_cmd->add_option("--out", out_dir, "output directory");

    // bench
    auto* bench = app.add_subcommand("bench", "run the acceptance suite");
    std::string filter;
    bench->add_option("--filter", filter, "criterion name substring");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            scfg.vocab_size = vocab;
            scfg.assignment = stratified ? Assignment::stratified : Assignment::random;
            return cmd_synth(scfg, generator, out_dir);
        }
        if (ingest->parsed()) return cmd_ingest(csv_path, schema_path, out_dir);
        if (train_cmd->parsed() || sweep_cmd->parsed())
            return cmd_run(config_path, run_out, seed_override, have_seed);
        if (alloc_cmd->parsed())
            return cmd_allocate(instance_path, model_path, data_path, budget, epsilon,
                                solver, out_dir);
        if (eval_cmd->parsed())
            return cmd_evaluate(model_path, data_path, schema_path, metrics, out_dir);
        if (bench->parsed())
            return uplift::acceptance::all_passed(uplift::acceptance::run_all(filter))
                       ? 0
                       : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
