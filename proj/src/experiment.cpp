#include "uplift/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "uplift/csv.hpp"
#include "uplift/errors.hpp"
#include "uplift/rng.hpp"
#include "uplift/solve.hpp"

namespace uplift {

using nlohmann::json;

SolverChoice solver_choice_from(const std::string& name) {
    if (name == "threshold") return SolverChoice::threshold;
    if (name == "lagrangian") return SolverChoice::lagrangian;
    if (name == "greedy") return SolverChoice::greedy;
    throw ConfigError("unknown solver '" + name + "'");
}

const char* to_string(SolverChoice s) {
    switch (s) {
        case SolverChoice::threshold: return "threshold";
        case SolverChoice::lagrangian: return "lagrangian";
        case SolverChoice::greedy: return "greedy";
    }
    return "?";
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

json synth_to_json(const SynthConfig& s) {
    json j;
    j["n"] = s.n;
    j["d"] = s.d;
    j["L"] = s.L;
    j["noise_scale"] = s.noise_scale;
    if (!s.propensity.empty()) j["propensity"] = s.propensity;
    j["seed"] = s.seed;
    j["vocab_size"] = s.vocab_size;
    j["assignment"] = s.assignment == Assignment::stratified ? "stratified" : "random";
    j["ell_lo"] = s.ell_lo;
    j["ell_hi"] = s.ell_hi;
    return j;
}

SynthConfig synth_from_json(const json& j) {
    SynthConfig s;
    s.n = j.at("n").get<std::size_t>();
    if (j.contains("d")) s.d = j.at("d").get<int>();
    if (j.contains("L")) s.L = j.at("L").get<int>();
    if (j.contains("noise_scale")) s.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("propensity")) s.propensity = j.at("propensity").get<std::vector<double>>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("vocab_size")) s.vocab_size = j.at("vocab_size").get<int>();
    if (j.contains("assignment"))
        s.assignment = j.at("assignment").get<std::string>() == "stratified"
                           ? Assignment::stratified
                           : Assignment::random;
    if (j.contains("ell_lo")) s.ell_lo = j.at("ell_lo").get<double>();
    if (j.contains("ell_hi")) s.ell_hi = j.at("ell_hi").get<double>();
    return s;
}

json schema_to_json(const SchemaConfig& s) {
    json j;
    j["features"] = s.feature_columns;
    j["treatment"] = s.treatment_column;
    j["reward"] = s.reward_column;
    if (s.cost_column) j["cost"] = *s.cost_column;
    return j;
}

SchemaConfig schema_from_json(const json& j) {
    SchemaConfig s;
    s.feature_columns = j.at("features").get<std::vector<std::string>>();
    s.treatment_column = j.at("treatment").get<std::string>();
    s.reward_column = j.at("reward").get<std::string>();
    if (j.contains("cost") && !j.at("cost").is_null())
        s.cost_column = j.at("cost").get<std::string>();
    return s;
}

json train_to_json(const TrainConfig& t) {
    json j;
    j["learning_rate"] = t.learning_rate;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["seed"] = t.seed;
    if (t.scale_gamma) j["scale_gamma"] = *t.scale_gamma;
    j["truncate_hi"] = t.truncate_hi;
    j["halve_lr_on_increase"] = t.halve_lr_on_increase;
    return j;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    if (j.contains("learning_rate")) t.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("epochs")) t.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<int>();
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scale_gamma") && !j.at("scale_gamma").is_null())
        t.scale_gamma = j.at("scale_gamma").get<double>();
    if (j.contains("truncate_hi")) t.truncate_hi = j.at("truncate_hi").get<double>();
    if (j.contains("halve_lr_on_increase"))
        t.halve_lr_on_increase = j.at("halve_lr_on_increase").get<bool>();
    return t;
}

struct StageClock {
    std::map<std::string, double>& sink;
    std::chrono::steady_clock::time_point last = std::chrono::steady_clock::now();

    void lap(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        sink[name] =
            std::chrono::duration<double, std::milli>(now - last).count();
        last = now;
    }
};

// Failures surface with the stage that raised them.
template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(std::string("stage ") + name + ": " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    const json& ds = j.at("dataset");
    if (ds.contains("synth")) {
        c.use_synth = true;
        c.synth = synth_from_json(ds.at("synth"));
        if (ds.contains("generator")) c.synth_generator = ds.at("generator").get<std::string>();
    } else if (ds.contains("csv")) {
        c.use_synth = false;
        c.csv_path = ds.at("csv").get<std::string>();
        c.schema = schema_from_json(ds.at("schema"));
    } else {
        throw ConfigError("dataset must specify either synth or csv");
    }
    c.loss = loss_kind_from(j.at("loss").get<std::string>());
    if (j.contains("scorer")) c.scorer = scorer_kind_from(j.at("scorer").get<std::string>());
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
    if (j.contains("solver")) c.solver = solver_choice_from(j.at("solver").get<std::string>());
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("budgets")) c.budgets = j.at("budgets").get<std::vector<double>>();
    if (j.contains("budget_fractions"))
        c.budget_fractions = j.at("budget_fractions").get<std::vector<double>>();
    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (j.contains("baseline") && !j.at("baseline").is_null())
        c.baseline = baseline_kind_from(j.at("baseline").get<std::string>());
    return c;
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    if (use_synth) {
        j["dataset"]["synth"] = synth_to_json(synth);
        j["dataset"]["generator"] = synth_generator;
    } else {
        j["dataset"]["csv"] = csv_path;
        j["dataset"]["schema"] = schema_to_json(schema);
    }
    j["loss"] = to_string(loss);
    j["scorer"] = to_string(scorer);
    j["train"] = train_to_json(train);
    j["solver"] = to_string(solver);
    j["epsilon"] = epsilon;
    j["budgets"] = budgets;
    j["budget_fractions"] = budget_fractions;
    j["metrics"] = metrics;
    if (baseline) j["baseline"] = to_string(*baseline);
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    const int L = use_synth ? synth.L : 2;  // csv level count is known at ingest
    if (use_synth) {
        try {
            (void)heads_for(loss, L);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("loss/level mismatch: ") + e.what());
        }
        if (synth_generator != "auto" && synth_generator != "btap" &&
            synth_generator != "mtbap")
            throw ConfigError("generator must be auto, btap or mtbap");
        if (synth_generator == "btap" && synth.L != 2)
            throw ConfigError("btap generator requires L = 2");
    } else if (csv_path.empty()) {
        throw ConfigError("csv dataset needs a path");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    double prev = 0.0;
    for (const double b : budgets) {
        if (b < prev) throw ConfigError("budgets must be ascending and non-negative");
        prev = b;
    }
    for (const double f : budget_fractions)
        if (f < 0.0 || f > 1.0) throw ConfigError("budget fractions must lie in [0, 1]");
    for (const std::string& m : metrics)
        if (m != "auuc" && m != "aucc" && m != "mt_aucc" && m != "eom_sweep")
            throw ConfigError("unknown metric '" + m + "'");
    if ((solver == SolverChoice::lagrangian) &&
        !(budgets.empty() && budget_fractions.empty()))
        throw ConfigError(
            "the model pipeline allocates from decision-factor predictions; use "
            "threshold (utility comparisons) or greedy (rank), lagrangian drives the "
            "two-phase baseline");
    if (solver == SolverChoice::greedy && use_synth && synth.L != 2)
        throw ConfigError("greedy allocation applies to the binary problem only");
}

namespace {

bool wants(const ExperimentConfig& cfg, const std::string& metric) {
    for (const std::string& m : cfg.metrics)
        if (m == metric) return true;
    return false;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport rep;
    rep.config_json = cfg.to_json();
    StageClock clock{rep.timings_ms};

    // Stage seeds fan out from the master seed; explicit sub-seeds in the
    // config are combined in rather than replaced.
    SynthConfig synth_cfg = cfg.synth;
    synth_cfg.seed = derive_seed(cfg.seed, "synth") ^ cfg.synth.seed;
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(cfg.seed, "train") ^ cfg.train.seed;

    std::optional<RctDataset> ds_holder;
    GroundTruth gt;
    bool have_truth = false;
    stage("dataset", [&] {
        if (cfg.use_synth) {
            const bool btap = cfg.synth_generator == "btap" ||
                              (cfg.synth_generator == "auto" && synth_cfg.L == 2);
            auto [d, g] =
                btap ? gen_btap_dataset(synth_cfg) : gen_mtbap_dataset(synth_cfg);
            ds_holder.emplace(std::move(d));
            gt = std::move(g);
            have_truth = true;
        } else {
            ds_holder.emplace(ingest_csv(cfg.csv_path, cfg.schema).dataset);
        }
        return 0;
    });
    const RctDataset& ds = *ds_holder;
    clock.lap("dataset");

    {
        // The hash covers the inputs; where results land is not one of them.
        ExperimentConfig canonical = cfg;
        canonical.out_dir.clear();
        const std::string canon_json = canonical.to_json();
        std::uint64_t h = fnv1a64(canon_json.data(), canon_json.size());
        h = fnv1a64(ds.feature_data().data(), ds.feature_data().size() * sizeof(double), h);
        h = fnv1a64(ds.treatments().data(), ds.treatments().size() * sizeof(int), h);
        h = fnv1a64(ds.rewards().data(), ds.rewards().size() * sizeof(double), h);
        h = fnv1a64(ds.costs().data(), ds.costs().size() * sizeof(double), h);
        rep.input_hash = h;
    }

    const int L = ds.n_levels();
    const int heads = heads_for(cfg.loss, L);
    const Scorer init = cfg.scorer == ScorerKind::linear
                            ? Scorer::make_linear(ds.feature_dim(), heads)
                            : Scorer::make_tabular(ds, heads);
    const TrainResult trained =
        stage("train", [&] { return train(init, ds, cfg.loss, train_cfg); });
    rep.gamma = trained.gamma;
    rep.loss_trace = trained.loss_trace;
    rep.skipped_batches = trained.skipped_batches;
    rep.model_json = trained.scorer.to_json(cfg.loss, L, trained.gamma);
    clock.lap("train");

    const DecisionTable table = stage("predict", [&] {
        return predict_decision_factor(trained.scorer, ds, cfg.loss, trained.gamma);
    });
    clock.lap("predict");

    stage("evaluate", [&] {
    if (wants(cfg, "auuc") || wants(cfg, "aucc")) {
        if (L != 2) throw ConfigError("auuc/aucc need a binary dataset");
        if (wants(cfg, "auuc")) {
            const CostCurve c = cost_curve(binary_quintuples(ds, table.score),
                                           CurveAxis::fraction);
            rep.metric_values["auuc"] = mt_aucc(c);
            rep.curves["auuc"] = c.points;
            if (have_truth) rep.metric_values["auuc_oracle"] = auuc(ds, gt.cate_r);
        }
        if (wants(cfg, "aucc")) {
            const CostCurve c =
                cost_curve(binary_quintuples(ds, table.score), CurveAxis::cost);
            rep.metric_values["aucc"] = mt_aucc(c);
            rep.curves["aucc"] = c.points;
            if (have_truth) {
                std::vector<double> roi(ds.total());
                for (std::size_t i = 0; i < ds.total(); ++i)
                    roi[i] = gt.cate_r[i] / gt.cate_c[i];
                rep.metric_values["aucc_oracle"] = aucc(ds, roi);
            }
        }
    }
    if (wants(cfg, "mt_aucc")) {
        const CostCurve c = mt_cost_curve(build_quintuples(ds, table.score));
        rep.metric_values["mt_aucc"] = mt_aucc(c);
        rep.curves["mt_aucc"] = c.points;
        if (have_truth)
            rep.metric_values["mt_aucc_oracle"] =
                mt_aucc(mt_cost_curve(build_quintuples(ds, gt.marginal)));
    }
    return 0;
    });
    clock.lap("metrics");

    // Allocation sweep. Decisions come from model predictions; budget
    // accounting uses the ground-truth responses on synthetic data and the
    // baseline response model on ingested data (predictions are all there is).
    const bool sweeping = !cfg.budgets.empty() || !cfg.budget_fractions.empty();
    stage("allocate", [&] {
    if (sweeping) {
        std::optional<ResponseModel> base_model;
        if (cfg.baseline || !have_truth) {
            base_model = fit_slearner(
                ds, cfg.baseline.value_or(BaselineKind::slearner_tabular));
        }
        const std::vector<double>& acct_r = have_truth ? gt.response_r : base_model->r;
        const std::vector<double>& acct_c = have_truth ? gt.response_c : base_model->c;

        // Fractions map to the incremental spend above the mandatory
        // level-0 floor; absolute budgets are taken as given.
        double floor_cost = 0.0, max_spend = 0.0;
        for (std::size_t i = 0; i < ds.total(); ++i) {
            floor_cost += acct_c[i * static_cast<std::size_t>(L)];
            max_spend += acct_c[i * static_cast<std::size_t>(L) +
                                static_cast<std::size_t>(L - 1)] -
                         acct_c[i * static_cast<std::size_t>(L)];
        }
        std::vector<double> budgets = cfg.budgets;
        for (const double f : cfg.budget_fractions)
            budgets.push_back(floor_cost + f * max_spend);
        std::sort(budgets.begin(), budgets.end());

        MarginalTable pred_table;
        if (cfg.solver == SolverChoice::threshold) {
            pred_table = make_marginal_table(table.value, ds.total(), L);
            const auto [repaired, count] = isotonic_repair(pred_table);
            pred_table = repaired;
            rep.repaired_rows = count;
        }

        for (const double b : budgets) {
            AllocationSummary sum;
            sum.budget = b;
            try {
                if (cfg.solver == SolverChoice::threshold) {
                    const DualSearchResult r =
                        threshold_mtbap(pred_table, acct_c, b, cfg.epsilon, &acct_r);
                    sum.alpha_star = r.alpha_star;
                    sum.consumed = r.allocation.consumed_cost;
                    sum.objective = r.allocation.objective;
                    sum.iterations = r.iterations;
                    const auto [er, ec] = eom(ds, PolicyTable{r.allocation.chosen});
                    sum.eom_reward = er;
                    sum.eom_cost = ec;
                    rep.final_allocation = r.allocation.chosen;
                } else {  // greedy, binary only (validated)
                    std::vector<double> tau_c(ds.total()), tau_r(ds.total());
                    for (std::size_t i = 0; i < ds.total(); ++i) {
                        tau_c[i] = acct_c[i * 2 + 1] - acct_c[i * 2];
                        tau_r[i] = acct_r[i * 2 + 1] - acct_r[i * 2];
                    }
                    Allocation a =
                        greedy_by_score(table.value, tau_c, tau_r, b - floor_cost);
                    for (int& z : a.chosen) z = z ? 1 : 0;
                    sum.consumed = a.consumed_cost;
                    sum.objective = a.objective;
                    const auto [er, ec] = eom(ds, PolicyTable{a.chosen});
                    sum.eom_reward = er;
                    sum.eom_cost = ec;
                    rep.final_allocation = a.chosen;
                }
            } catch (const InfeasibleError&) {
                sum.feasible = false;
            }
            rep.allocations.push_back(sum);
        }

        // Two-phase baseline: S-learner responses drive a plain dual search;
        // accounting stays on the same matrices as above.
        if (cfg.baseline) {
            for (const double b : budgets) {
                AllocationSummary sum;
                sum.budget = b;
                try {
                    const DualSearchResult r =
                        lagrangian_allocate(base_model->r, base_model->c, ds.total(), L,
                                            b, cfg.epsilon, &acct_c, &acct_r);
                    sum.alpha_star = r.alpha_star;
                    sum.consumed = r.allocation.consumed_cost;
                    sum.objective = r.allocation.objective;
                    sum.iterations = r.iterations;
                    const auto [er, ec] = eom(ds, PolicyTable{r.allocation.chosen});
                    sum.eom_reward = er;
                    sum.eom_cost = ec;
                } catch (const InfeasibleError&) {
                    sum.feasible = false;
                }
                rep.baseline_allocations.push_back(sum);
            }
        }
    }
    return 0;
    });
    clock.lap("allocate");
    return rep;
}

std::string RunReport::to_json() const {
    json j;
    j["config"] = json::parse(config_json);
    j["input_hash"] = input_hash;
    j["gamma"] = gamma;
    j["loss_trace"] = loss_trace;
    j["metrics"] = metric_values;
    json curves_j = json::object();
    for (const auto& [name, pts] : curves) {
        json arr = json::array();
        for (const CurvePoint& p : pts) arr.push_back({p.x, p.y});
        curves_j[name] = std::move(arr);
    }
    j["curves"] = std::move(curves_j);
    auto dump_allocs = [](const std::vector<AllocationSummary>& v) {
        json arr = json::array();
        for (const AllocationSummary& a : v)
            arr.push_back({{"budget", a.budget},
                           {"alpha_star", a.alpha_star},
                           {"consumed", a.consumed},
                           {"objective", a.objective},
                           {"iterations", a.iterations},
                           {"feasible", a.feasible},
                           {"eom_reward", a.eom_reward},
                           {"eom_cost", a.eom_cost}});
        return arr;
    };
    j["allocations"] = dump_allocs(allocations);
    j["baseline_allocations"] = dump_allocs(baseline_allocations);
    j["repaired_rows"] = repaired_rows;
    j["skipped_batches"] = skipped_batches;
    j["model"] = model_json.empty() ? json() : json::parse(model_json);
    j["final_allocation"] = final_allocation;
    j["timings_ms"] = timings_ms;
    return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    RunReport r;
    r.config_json = j.at("config").dump(2);
    r.input_hash = j.at("input_hash").get<std::uint64_t>();
    r.gamma = j.at("gamma").get<double>();
    r.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    r.metric_values = j.at("metrics").get<std::map<std::string, double>>();
    for (const auto& [name, arr] : j.at("curves").items()) {
        std::vector<CurvePoint> pts;
        for (const auto& p : arr) pts.push_back({p[0].get<double>(), p[1].get<double>()});
        r.curves[name] = std::move(pts);
    }
    auto load_allocs = [](const json& arr) {
        std::vector<AllocationSummary> v;
        for (const auto& a : arr) {
            AllocationSummary s;
            s.budget = a.at("budget").get<double>();
            s.alpha_star = a.at("alpha_star").get<double>();
            s.consumed = a.at("consumed").get<double>();
            s.objective = a.at("objective").get<double>();
            s.iterations = a.at("iterations").get<int>();
            s.feasible = a.at("feasible").get<bool>();
            s.eom_reward = a.at("eom_reward").get<double>();
            s.eom_cost = a.at("eom_cost").get<double>();
            v.push_back(s);
        }
        return v;
    };
    r.allocations = load_allocs(j.at("allocations"));
    r.baseline_allocations = load_allocs(j.at("baseline_allocations"));
    r.repaired_rows = j.at("repaired_rows").get<int>();
    r.skipped_batches = j.at("skipped_batches").get<long long>();
    if (!j.at("model").is_null()) r.model_json = j.at("model").dump(2);
    r.final_allocation = j.at("final_allocation").get<std::vector<int>>();
    r.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
    return r;
}

void emit_report(const RunReport& report, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    auto write_file = [&](const std::string& name, const std::string& body) {
        const std::string path = dir + "/" + name;
        std::ofstream out(path);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << body;
        if (!out) throw IoError("write failed for '" + path + "'");
    };
    write_file("report.json", report.to_json());
    if (!report.metric_values.empty()) {
        std::string csv = "metric,value\n";
        char buf[64];
        for (const auto& [name, value] : report.metric_values) {
            std::snprintf(buf, sizeof(buf), "%.17g", value);
            csv += name + "," + buf + "\n";
        }
        write_file("metrics.csv", csv);
    }
    for (const auto& [name, pts] : report.curves) {
        std::string csv = "x,y\n";
        char buf[128];
        for (const CurvePoint& p : pts) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.x, p.y);
            csv += buf;
        }
        write_file("curve_" + name + ".csv", csv);
    }
    if (!report.model_json.empty()) write_file("model.json", report.model_json);
    if (!report.final_allocation.empty()) {
        std::string csv = "individual,level\n";
        for (std::size_t i = 0; i < report.final_allocation.size(); ++i)
            csv += std::to_string(i) + "," +
                   std::to_string(report.final_allocation[i]) + "\n";
        write_file("allocation.csv", csv);
    }
}

}  // namespace uplift
