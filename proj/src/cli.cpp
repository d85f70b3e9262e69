#include "isa/cli.hpp"

#include "isa/covariance.hpp"
#include "isa/inference.hpp"
#include "isa/io.hpp"
#include "isa/normal.hpp"
#include "isa/simulation.hpp"
#include "isa/strings_solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace isa::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string fixed4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string table_cell(const MetricSummary& m) { return fixed4(m.mean) + "(" + fixed4(m.sd) + ")"; }

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

// "1,16;1,17" -> 0-based pairs.
std::vector<std::pair<Index, Index>> parse_pairs(const std::string& text) {
    std::vector<std::pair<Index, Index>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto v = parse_double_list(item);
        if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
            throw UsageError("tracked entries are 1-based pairs 'j,k' separated by ';'");
        }
        out.emplace_back(static_cast<Index>(v[0]) - 1, static_cast<Index>(v[1]) - 1);
    }
    return out;
}

json admm_json(const AdmmConfig& c) { return {{"rho", c.rho}, {"max_iters", c.max_iters}, {"tol", c.tol}}; }

AdmmConfig admm_from(const json& j) {
    AdmmConfig c;
    c.rho = j.at("rho").get<double>();
    c.max_iters = j.at("max_iters").get<int>();
    c.tol = j.at("tol").get<double>();
    c.validate();
    return c;
}

GeneratorSpec spec_from(const json& j) {
    GeneratorSpec s;
    s.d = j.at("d").get<Index>();
    s.s = j.at("s").get<Index>();
    s.num_groups = j.at("L").get<Index>();
    s.value = j.at("value").get<double>();
    s.condition_number_target = j.at("cond").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

json spec_json(const GeneratorSpec& s) {
    return {{"d", s.d}, {"s", s.s}, {"L", s.num_groups}, {"value", s.value},
            {"cond", s.resolved_condition_target()}, {"seed", s.seed}};
}

json pairs_json(const std::vector<std::pair<Index, Index>>& pairs) {
    json out = json::array();
    for (const auto& [j, k] : pairs) out.push_back({j + 1, k + 1});
    return out;
}

json matrix_json(const MatrixXd& t) {
    json rows = json::array();
    for (Index r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json fit_json(const StringsFit& fit) {
    return {{"lambda", fit.lambda},
            {"iters", fit.iters_used},
            {"residuals", {{"primal", fit.final_residuals.first}, {"dual", fit.final_residuals.second}}},
            {"objective", fit.objective},
            {"theta", matrix_json(fit.theta_hat.dense())},
            {"converged", fit.converged},
            {"kkt_residual", fit.kkt_residual},
            {"support_threshold", kSupportThreshold},
            {"nonzeros_above_threshold", count_nonzero(fit.theta_hat.dense(), kSupportThreshold)}};
}

std::string path_string(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

// Lambda handling shared by estimate and infer: a fixed value, or a grid
// (explicit or default) with validation data.
void resolve_lambda(json& cfg, const std::optional<double>& lambda, const std::string& grid, const std::string& val_data,
                    Index d, Index n) {
    if (lambda && !grid.empty()) throw UsageError("give either --lambda or --lambda-grid, not both");
    if (lambda) {
        if (!(*lambda >= 0.0)) throw UsageError("--lambda must be nonnegative");
        cfg["lambda"] = *lambda;
        cfg["lambda_grid"] = nullptr;
        cfg["val_data"] = nullptr;
        return;
    }
    if (val_data.empty()) throw UsageError("a lambda grid needs --val-data (or give --lambda)");
    cfg["lambda"] = nullptr;
    cfg["lambda_grid"] = (grid.empty() || grid == "default") ? default_lambda_grid(d, n) : parse_double_list(grid);
    cfg["val_data"] = path_string(val_data);
}

SymmetricMatrix covariance_of(const MatrixXd& x, bool kendall, bool center) {
    return kendall ? kendall_covariance(x, KendallMethod::MergeSort) : sample_covariance(x, center);
}

// ---- executors: config -> files in out_dir, returns (outputs, summary) ----

struct Outcome {
    std::vector<std::string> outputs;
    json summary = json::object();
};

Outcome exec_simulate(const json& cfg, const fs::path& dir) {
    const GeneratorSpec spec = spec_from(cfg);
    const IsaModel model = generate_model(spec);
    std::mt19937_64 rng = make_stream(spec.seed, kTrainStream, 0);
    const MatrixXd data = sample_gaussian(model, cfg.at("n").get<Index>(), rng);

    io::write_matrix_csv(dir / "sigma.csv", model.sigma.dense());
    io::write_matrix_csv(dir / "omega.csv", model.omega.dense());
    io::write_matrix_csv(dir / "theta_star.csv", model.theta.dense());
    io::write_matrix_csv(dir / "data.csv", data);
    io::write_partition_json(dir / "partition.json", model.partition);
    const json support = {{"s", model.s},
                          {"pairs", pairs_json(model.support)},
                          {"condition_raw", model.condition_raw},
                          {"condition_standardized", model.condition_standardized}};
    io::write_text(dir / "support.json", support.dump(2) + "\n");

    Outcome o;
    o.outputs = {"sigma.csv", "omega.csv", "theta_star.csv", "support.json", "data.csv", "partition.json"};
    o.summary = {{"condition_raw", model.condition_raw},
                 {"condition_standardized", model.condition_standardized},
                 {"nnz_theta_star", count_nonzero(model.theta.dense(), kGroundTruthZero)}};
    return o;
}

Outcome exec_estimate(const json& cfg, const fs::path& dir) {
    const MatrixXd data = io::read_matrix_csv(cfg.at("data").get<std::string>());
    const GroupPartition p = io::read_partition_json(cfg.at("partition").get<std::string>());
    if (data.cols() != p.dim()) throw UsageError("data has " + std::to_string(data.cols()) + " columns, partition covers " +
                                                 std::to_string(p.dim()));
    const bool kendall = cfg.at("kendall").get<bool>();
    const bool center = cfg.at("center").get<bool>();
    const AdmmConfig admm = admm_from(cfg.at("admm"));
    const CovariancePair cov = blocked_covariance(covariance_of(data, kendall, center), p, data.rows());

    Outcome o;
    StringsFit fit;
    if (!cfg.at("lambda").is_null()) {
        fit = fit_strings(cov, cfg.at("lambda").get<double>(), admm);
    } else {
        const MatrixXd val = io::read_matrix_csv(cfg.at("val_data").get<std::string>());
        if (val.cols() != p.dim()) throw UsageError("validation data width does not match the partition");
        const CovariancePair cov_val = blocked_covariance(covariance_of(val, kendall, center), p, val.rows());
        const LambdaSelection sel = select_lambda(cov, cov_val, cfg.at("lambda_grid").get<std::vector<double>>(), admm);
        fit = sel.chosen();
        const json s = {{"grid", sel.grid},
                        {"val_losses", sel.val_losses},
                        {"chosen_index", sel.chosen_index + 1},
                        {"chosen_lambda", sel.chosen_lambda()}};
        io::write_text(dir / "selection.json", s.dump(2) + "\n");
        o.outputs.push_back("selection.json");
    }
    if (!std::isfinite(fit.objective)) throw NumericalError("estimate: ADMM diverged");
    io::write_matrix_csv(dir / "theta_hat.csv", fit.theta_hat.dense());
    json f = fit_json(fit);
    f["perturbation_applied"] = cov.perturbation_applied;
    f["epsilon"] = cov.epsilon;
    io::write_text(dir / "fit.json", f.dump(2) + "\n");
    o.outputs.insert(o.outputs.begin(), {"theta_hat.csv", "fit.json"});
    o.summary = {{"lambda", fit.lambda}, {"converged", fit.converged}, {"iters", fit.iters_used}};
    return o;
}

Outcome exec_infer(const json& cfg, const fs::path& dir) {
    const MatrixXd data = io::read_matrix_csv(cfg.at("data").get<std::string>());
    const GroupPartition p = io::read_partition_json(cfg.at("partition").get<std::string>());
    if (data.cols() != p.dim()) throw UsageError("data width does not match the partition");
    if (data.rows() % 2 != 0) throw UsageError("infer needs an even number of rows");

    PipelineConfig pc;
    pc.admm = admm_from(cfg.at("admm"));
    pc.alpha = cfg.at("alpha").get<double>();
    pc.lambda_prime = cfg.at("lambda_prime").get<double>();
    pc.shuffle = cfg.at("shuffle").get<bool>();
    pc.seed = cfg.at("seed").get<std::uint64_t>();
    pc.center = cfg.at("center").get<bool>();
    pc.use_kendall = cfg.at("kendall").get<bool>();
    if (!cfg.at("lambda").is_null()) {
        pc.lambda = cfg.at("lambda").get<double>();
    } else {
        pc.lambda_grid = cfg.at("lambda_grid").get<std::vector<double>>();
        pc.validation_data = io::read_matrix_csv(cfg.at("val_data").get<std::string>());
    }
    const PipelineOutput po = run_untangle_and_chord(data, p, pc);
    if (!std::isfinite(po.fit.objective)) throw NumericalError("infer: ADMM diverged");
    const InferenceResult& r = po.result;

    io::write_matrix_csv(dir / "theta_u.csv", r.theta_u);
    std::string edges = "j,k,estimate,std_err,ci_low,ci_high,z,reject\n";
    for (const EdgeInference& e : all_edges(r, pc.alpha)) {
        edges += std::to_string(e.index.j + 1) + "," + std::to_string(e.index.k + 1) + "," + io::format_double(e.estimate) +
                 "," + io::format_double(e.std_err) + "," + io::format_double(e.ci_low) + "," +
                 io::format_double(e.ci_high) + "," + io::format_double(e.z_stat) + "," + (e.reject ? "1" : "0") + "\n";
    }
    io::write_text(dir / "edges.csv", edges);

    json xi = json::array();
    for (const auto& [idx, v] : r.xi_hat_sq) xi.push_back({idx.j + 1, idx.k + 1, v});
    json info = {{"theta_u", matrix_json(r.theta_u)},
                 {"xi_hat_sq", std::move(xi)},
                 {"n", r.n_split},
                 {"alpha", pc.alpha},
                 {"lambda", r.lambda},
                 {"lambda_prime", r.lambda_prime},
                 {"clamp_warnings", r.clamp_warnings},
                 {"ci_quantile", normal_quantile(1.0 - pc.alpha / 2.0)},
                 {"fit", fit_json(po.fit)},
                 {"m_max_row_l1", po.m.max_row_l1},
                 {"p_max_row_l1", po.p.max_row_l1},
                 {"m_feasibility_gap", po.m.feasibility_gap},
                 {"p_feasibility_gap", po.p.feasibility_gap}};
    if (po.selection) {
        info["selection"] = {{"grid", po.selection->grid},
                             {"val_losses", po.selection->val_losses},
                             {"chosen_index", po.selection->chosen_index + 1},
                             {"chosen_lambda", po.selection->chosen_lambda()}};
    }

    Outcome o;
    o.outputs = {"theta_u.csv", "edges.csv", "inference.json"};
    if (cfg.at("bonferroni").get<bool>()) {
        const double d = static_cast<double>(p.dim());
        const double q = normal_quantile(1.0 - 4.0 * pc.alpha / (d * d));
        std::string sel = "j,k,estimate,threshold\n";
        for (const InterBlockIndex& idx : bonferroni_select(r, pc.alpha)) {
            const double thr = q * std::sqrt(r.xi_hat_sq.at(idx) / static_cast<double>(r.n_split));
            sel += std::to_string(idx.j + 1) + "," + std::to_string(idx.k + 1) + "," +
                   io::format_double(r.theta_u(idx.j, idx.k)) + "," + io::format_double(thr) + "\n";
        }
        io::write_text(dir / "selected_edges.csv", sel);
        info["bonferroni_quantile"] = q;
        o.outputs.push_back("selected_edges.csv");
    }
    io::write_text(dir / "inference.json", info.dump(2) + "\n");
    o.summary = {{"lambda", r.lambda}, {"lambda_prime", r.lambda_prime}, {"clamp_warnings", r.clamp_warnings}};
    return o;
}

Outcome exec_benchmark(const json& cfg, const fs::path& dir) {
    BenchmarkConfig bc;
    bc.spec = spec_from(cfg.at("spec"));
    bc.n_train = cfg.at("n_train").get<Index>();
    bc.n_val = cfg.at("n_val").get<Index>();
    bc.grid = cfg.at("lambda_grid").get<std::vector<double>>();
    bc.admm = admm_from(cfg.at("admm"));
    bc.replications = cfg.at("replications").get<int>();
    bc.seed = cfg.at("seed").get<std::uint64_t>();
    bc.jobs = cfg.at("jobs").get<int>();
    bc.use_kendall = cfg.at("kendall").get<bool>();
    const std::string transform = cfg.at("transform").get<std::string>();
    if (transform == "cube") {
        bc.marginal_transform = [](double x) { return x * x * x; };
    } else if (transform != "none") {
        throw UsageError("unknown --transform '" + transform + "'");
    }
    const BenchmarkTable t = run_benchmark(bc);

    std::string table = "d,s,precision,recall,f_score,replications,failed\n";
    table += std::to_string(t.d) + "," + std::to_string(t.s) + "," + table_cell(t.precision) + "," +
             table_cell(t.recall) + "," + table_cell(t.f_score) + "," + std::to_string(t.replications) + "," +
             std::to_string(t.failed) + "\n";
    io::write_text(dir / "table.csv", table);

    std::string reps = "replication,ok,tp,fp,fn,precision,recall,f_score,theta_error_fro\n";
    for (std::size_t r = 0; r < t.per_replication.size(); ++r) {
        const auto& rep = t.per_replication[r];
        reps += std::to_string(r + 1) + "," + (rep.ok ? "1" : "0") + "," + std::to_string(rep.metrics.tp) + "," +
                std::to_string(rep.metrics.fp) + "," + std::to_string(rep.metrics.fn) + "," +
                io::format_double(rep.metrics.precision) + "," + io::format_double(rep.metrics.recall) + "," +
                io::format_double(rep.metrics.f_score) + "," + io::format_double(rep.theta_error_fro) + "\n";
    }
    io::write_text(dir / "replications.csv", reps);

    Outcome o;
    o.outputs = {"table.csv", "replications.csv"};
    o.summary = {{"precision", {t.precision.mean, t.precision.sd}},
                 {"recall", {t.recall.mean, t.recall.sd}},
                 {"f_score", {t.f_score.mean, t.f_score.sd}},
                 {"failed", t.failed}};
    return o;
}

Outcome exec_coverage(const json& cfg, const fs::path& dir) {
    CoverageConfig cc;
    cc.spec = spec_from(cfg.at("spec"));
    cc.n_per_half = cfg.at("n").get<Index>();
    cc.alpha = cfg.at("alpha").get<double>();
    cc.replications = cfg.at("replications").get<int>();
    cc.seed = cfg.at("seed").get<std::uint64_t>();
    cc.admm = admm_from(cfg.at("admm"));
    cc.n_val = cfg.at("n_val").get<Index>();
    cc.lambda = cfg.at("lambda").is_null() ? 0.0 : cfg.at("lambda").get<double>();
    if (cc.lambda <= 0.0) cc.grid = cfg.at("lambda_grid").get<std::vector<double>>();
    cc.lambda_prime = cfg.at("lambda_prime").get<double>();
    cc.jobs = cfg.at("jobs").get<int>();
    for (const auto& pr : cfg.at("tracked")) cc.tracked.emplace_back(pr.at(0).get<Index>() - 1, pr.at(1).get<Index>() - 1);
    const CoverageReport rep = run_coverage_study(cc);

    std::string table = "d,Avgcov_S,Avgcov_Sc,Avglen_S,Avglen_Sc,replications,failed,clamp_warnings\n";
    table += std::to_string(cc.spec.d) + "," + fixed4(rep.avgcov_s) + "," + fixed4(rep.avgcov_sc) + "," +
             fixed4(rep.avglen_s) + "," + fixed4(rep.avglen_sc) + "," + std::to_string(rep.replications) + "," +
             std::to_string(rep.failed) + "," + std::to_string(rep.clamp_warnings) + "\n";
    io::write_text(dir / "table.csv", table);

    const IsaModel model = generate_model(cc.spec);
    std::string per = "j,k,in_support,theta_star,coverage\n";
    for (const auto& [pair, c] : rep.per_entry_cov) {
        const bool in_s = std::binary_search(model.support.begin(), model.support.end(), pair);
        per += std::to_string(pair.first + 1) + "," + std::to_string(pair.second + 1) + "," + (in_s ? "1" : "0") + "," +
               io::format_double(model.theta(pair.first, pair.second)) + "," + io::format_double(c) + "\n";
    }
    io::write_text(dir / "per_entry.csv", per);

    Outcome o;
    o.outputs = {"table.csv", "per_entry.csv"};
    for (const auto& [pair, series] : rep.z_scores) {
        std::string qq = "replication,z\n";
        for (const auto& [r, z] : series) qq += std::to_string(r + 1) + "," + io::format_double(z) + "\n";
        const std::string name = "qq_" + std::to_string(pair.first + 1) + "_" + std::to_string(pair.second + 1) + ".csv";
        io::write_text(dir / name, qq);
        o.outputs.push_back(name);
    }
    o.summary = {{"avgcov_s", rep.avgcov_s},   {"avgcov_sc", rep.avgcov_sc}, {"avglen_s", rep.avglen_s},
                 {"avglen_sc", rep.avglen_sc}, {"failed", rep.failed},      {"clamp_warnings", rep.clamp_warnings}};
    return o;
}

Outcome execute(const std::string& command, const json& cfg, const fs::path& dir) {
    if (command == "simulate") return exec_simulate(cfg, dir);
    if (command == "estimate") return exec_estimate(cfg, dir);
    if (command == "infer") return exec_infer(cfg, dir);
    if (command == "benchmark") return exec_benchmark(cfg, dir);
    if (command == "coverage") return exec_coverage(cfg, dir);
    throw UsageError("unknown command '" + command + "' in manifest");
}

std::uint64_t seed_of(const json& cfg) {
    if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
    return 0;
}

json inputs_of(const json& cfg) {
    json in = json::array();
    for (const char* key : {"data", "partition", "val_data"}) {
        if (cfg.contains(key) && cfg.at(key).is_string()) in.push_back(cfg.at(key));
    }
    return in;
}

int run_and_record(const std::string& command, const json& cfg, const fs::path& out_dir, std::ostream& err) {
    try {
        fs::create_directories(out_dir);
        const std::string started = utc_now();
        const Outcome o = execute(command, cfg, out_dir);
        json manifest = {{"command", command},
                         {"config", cfg},
                         {"seed", seed_of(cfg)},
                         {"started_utc", started},
                         {"finished_utc", utc_now()},
                         {"inputs", inputs_of(cfg)},
                         {"out_dir", path_string(out_dir)},
                         {"outputs", o.outputs},
                         {"results", o.summary},
                         {"version", kVersion}};
        io::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
        return kExitOk;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "error: malformed configuration: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

struct AdmmFlags {
    double rho = 1.0;
    int max_iters = 2000;
    double tol = 1e-4;
    void add(CLI::App* app) {
        app->add_option("--rho", rho, "ADMM penalty parameter")->capture_default_str();
        app->add_option("--max-iters", max_iters, "ADMM iteration cap")->capture_default_str();
        app->add_option("--tol", tol, "ADMM stopping tolerance")->capture_default_str();
    }
    json resolve() const {
        AdmmConfig c;
        c.rho = rho;
        c.max_iters = max_iters;
        c.tol = tol;
        try {
            c.validate();
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        return admm_json(c);
    }
};

struct SpecFlags {
    Index d = 30;
    Index s = 10;
    Index L = 2;
    double value = 0.5;
    double cond = 0.0;
    void add(CLI::App* app) {
        app->add_option("--d", d, "Dimension")->capture_default_str();
        app->add_option("--s", s, "Nonzeros per pair of groups")->capture_default_str();
        app->add_option("--L", L, "Number of groups")->capture_default_str();
        app->add_option("--value", value, "Inter-group signal value")->capture_default_str();
        app->add_option("--cond", cond, "Condition number target (default: d)");
    }
    json resolve(std::uint64_t seed) const {
        GeneratorSpec g;
        g.d = d;
        g.s = s;
        g.num_groups = L;
        g.value = value;
        g.condition_number_target = cond;
        g.seed = seed;
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return spec_json(g);
    }
};

}  // namespace

int replay(const fs::path& manifest, const fs::path& out_dir, std::ostream& err) {
    json m;
    try {
        m = json::parse(io::read_text(manifest));
    } catch (const std::exception& e) {
        err << "error: cannot read manifest: " << e.what() << "\n";
        return kExitUsage;
    }
    if (!m.contains("command") || !m.contains("config")) {
        err << "error: manifest lacks command/config\n";
        return kExitUsage;
    }
    return run_and_record(m.at("command").get<std::string>(), m.at("config"), out_dir, err);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inter-subject analysis: STRINGS estimation and de-biased inference", "isa"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string out_dir;
    std::uint64_t seed = 0;
    AdmmFlags admm;
    SpecFlags spec;

    // simulate
    Index sim_n = 100;
    auto* sim = app.add_subcommand("simulate", "Generate a model and a Gaussian sample");
    spec.add(sim);
    sim->add_option("--n", sim_n, "Number of rows")->capture_default_str();
    sim->add_option("--seed", seed, "Random seed")->capture_default_str();
    sim->add_option("--out", out_dir, "Output directory")->required();

    // estimate / infer shared inputs
    std::string data, partition, val_data, grid;
    std::optional<double> lambda;
    bool kendall = false, no_center = false;

    auto* est = app.add_subcommand("estimate", "Fit the sparse inter-group parameter");
    est->add_option("--data", data, "Data CSV (n x d)")->required()->check(CLI::ExistingFile);
    est->add_option("--partition", partition, "Partition JSON")->required()->check(CLI::ExistingFile);
    est->add_option("--lambda", lambda, "Fixed penalty");
    est->add_option("--lambda-grid", grid, "Comma-separated penalties, or 'default'");
    est->add_option("--val-data", val_data, "Validation CSV for grid selection")->check(CLI::ExistingFile);
    est->add_flag("--kendall", kendall, "Use the rank-based covariance");
    est->add_flag("--no-center", no_center, "Do not center columns");
    admm.add(est);
    est->add_option("--out", out_dir, "Output directory")->required();

    double lambda_prime = 0.0, alpha = 0.05;
    bool shuffle = false, bonferroni = false;
    auto* inf = app.add_subcommand("infer", "De-biased estimates, confidence intervals and tests");
    inf->add_option("--data", data, "Data CSV with 2n rows")->required()->check(CLI::ExistingFile);
    inf->add_option("--partition", partition, "Partition JSON")->required()->check(CLI::ExistingFile);
    inf->add_option("--lambda", lambda, "Fixed penalty");
    inf->add_option("--lambda-grid", grid, "Comma-separated penalties, or 'default'");
    inf->add_option("--val-data", val_data, "Validation CSV for grid selection")->check(CLI::ExistingFile);
    inf->add_option("--lambda-prime", lambda_prime, "CLIME tolerance (default 0.5 sqrt(log d / n))");
    inf->add_option("--alpha", alpha, "Significance level")->capture_default_str();
    inf->add_flag("--shuffle", shuffle, "Shuffle rows before splitting");
    inf->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
    inf->add_flag("--bonferroni", bonferroni, "Also write Bonferroni-selected edges");
    inf->add_flag("--kendall", kendall, "Use the rank-based covariance");
    inf->add_flag("--no-center", no_center, "Do not center columns");
    admm.add(inf);
    inf->add_option("--out", out_dir, "Output directory")->required();

    // benchmark
    Index n_train = 100, n_val = 100;
    int reps = 100, jobs = 1;
    std::string transform = "none";
    auto* bench = app.add_subcommand("benchmark", "Support recovery over replications");
    spec.add(bench);
    bench->add_option("--n-train", n_train, "Training rows")->capture_default_str();
    bench->add_option("--n-val", n_val, "Validation rows")->capture_default_str();
    bench->add_option("--lambda-grid", grid, "Comma-separated penalties (default grid otherwise)");
    bench->add_option("--reps", reps, "Replications")->capture_default_str();
    bench->add_option("--seed", seed, "Random seed")->capture_default_str();
    bench->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    bench->add_option("--transform", transform, "Marginal transform: none or cube")->capture_default_str();
    bench->add_flag("--kendall", kendall, "Use the rank-based covariance");
    admm.add(bench);
    bench->add_option("--out", out_dir, "Output directory")->required();

    // coverage
    Index cov_n = 100;
    std::string tracked;
    auto* cover = app.add_subcommand("coverage", "Confidence interval coverage over replications");
    spec.add(cover);
    cover->add_option("--n", cov_n, "Rows per half")->capture_default_str();
    cover->add_option("--n-val", n_val, "Validation rows for lambda selection")->capture_default_str();
    cover->add_option("--lambda", lambda, "Fixed penalty (skips selection)");
    cover->add_option("--lambda-grid", grid, "Comma-separated penalties (default grid otherwise)");
    cover->add_option("--lambda-prime", lambda_prime, "CLIME tolerance (default 0.5 sqrt(log d / n))");
    cover->add_option("--alpha", alpha, "Significance level")->capture_default_str();
    cover->add_option("--reps", reps, "Replications")->capture_default_str();
    cover->add_option("--seed", seed, "Random seed")->capture_default_str();
    cover->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    cover->add_option("--track", tracked, "1-based entries for QQ export, e.g. '1,16;1,17'");
    admm.add(cover);
    cover->add_option("--out", out_dir, "Output directory")->required();

    std::string manifest_path;
    auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest");
    rep->add_option("--manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", out_dir, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (rep->parsed()) return replay(manifest_path, out_dir, err);

    json cfg;
    std::string command;
    try {
        if (sim->parsed()) {
            command = "simulate";
            if (sim_n < 1) throw UsageError("--n must be positive");
            cfg = spec.resolve(seed);
            cfg["n"] = sim_n;
        } else if (est->parsed() || inf->parsed()) {
            command = est->parsed() ? "estimate" : "infer";
            const MatrixXd x = io::read_matrix_csv(data);
            const Index n = inf->parsed() ? x.rows() / 2 : x.rows();
            cfg["data"] = path_string(data);
            cfg["partition"] = path_string(partition);
            resolve_lambda(cfg, lambda, grid, val_data, x.cols(), n);
            cfg["admm"] = admm.resolve();
            cfg["kendall"] = kendall;
            cfg["center"] = !no_center && !kendall;
            cfg["support_threshold"] = kSupportThreshold;
            if (inf->parsed()) {
                if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
                if (lambda_prime < 0.0) throw UsageError("--lambda-prime must be positive");
                cfg["lambda_prime"] = lambda_prime > 0.0 ? lambda_prime : default_lambda_prime(x.cols(), n);
                cfg["alpha"] = alpha;
                cfg["shuffle"] = shuffle;
                cfg["seed"] = seed;
                cfg["bonferroni"] = bonferroni;
            }
        } else if (bench->parsed()) {
            command = "benchmark";
            if (reps < 1 || jobs < 1 || n_train < 2 || n_val < 2) throw UsageError("--reps, --jobs must be >= 1 and sample sizes >= 2");
            cfg["spec"] = spec.resolve(seed);
            cfg["n_train"] = n_train;
            cfg["n_val"] = n_val;
            cfg["lambda_grid"] = grid.empty() ? default_lambda_grid(spec.d, n_train) : parse_double_list(grid);
            cfg["admm"] = admm.resolve();
            cfg["replications"] = reps;
            cfg["seed"] = seed;
            cfg["jobs"] = jobs;
            cfg["transform"] = transform;
            cfg["kendall"] = kendall;
            cfg["support_threshold"] = kSupportThreshold;
            if (transform != "none" && transform != "cube") throw UsageError("--transform must be none or cube");
        } else if (cover->parsed()) {
            command = "coverage";
            if (reps < 2 || jobs < 1 || cov_n < 2) throw UsageError("--reps must be >= 2, --jobs >= 1, --n >= 2");
            if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
            cfg["spec"] = spec.resolve(seed);
            cfg["n"] = cov_n;
            cfg["n_val"] = n_val;
            cfg["alpha"] = alpha;
            cfg["replications"] = reps;
            cfg["seed"] = seed;
            cfg["jobs"] = jobs;
            cfg["admm"] = admm.resolve();
            if (lambda) {
                if (!(*lambda > 0.0)) throw UsageError("--lambda must be positive");
                cfg["lambda"] = *lambda;
                cfg["lambda_grid"] = nullptr;
            } else {
                cfg["lambda"] = nullptr;
                cfg["lambda_grid"] = grid.empty() ? default_lambda_grid(spec.d, cov_n) : parse_double_list(grid);
            }
            cfg["lambda_prime"] = lambda_prime > 0.0 ? lambda_prime : default_lambda_prime(spec.d, cov_n);
            cfg["tracked"] = pairs_json(tracked.empty() ? std::vector<std::pair<Index, Index>>{} : parse_pairs(tracked));
        }
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return run_and_record(command, cfg, out_dir, err);
}

}  // namespace isa::cli
