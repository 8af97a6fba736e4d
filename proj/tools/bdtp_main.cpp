// bdtp — breadth–depth tree planner.
//
// Computes exact values of sampled decision trees, constructs and optimizes
// capacity-constrained allocation policies, and cross-checks them against a
// seeded Monte-Carlo oracle.  Emits CSV (or JSON records) with a stable
// 12-significant-digit format so identical invocations reproduce identical
// bytes.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdtp/errors.hpp"
#include "bdtp/optimize.hpp"
#include "bdtp/oracle_mc.hpp"
#include "bdtp/policy.hpp"
#include "bdtp/reward_model.hpp"
#include "bdtp/sweep.hpp"
#include "bdtp/value_pmf.hpp"

namespace {

using bdtp::ResultTable;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInvalidArgs = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNoConvergence = 4;

struct OutputOptions {
    std::string out;
    bool json = false;
};

void add_output_options(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--out", opts.out, "Write output to this path instead of stdout");
    cmd->add_flag("--json", opts.json, "Emit a JSON records array instead of CSV");
}

void emit(const ResultTable& table, const OutputOptions& opts) {
    const std::string text = opts.json ? bdtp::to_json_records(table) : bdtp::to_csv(table);
    if (opts.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(opts.out, std::ios::binary);  // binary: keep LF endings everywhere
    if (!file) throw std::runtime_error("cannot open output path '" + opts.out + "'");
    file << text;
}

std::vector<double> parse_q_list(const std::string& text) {
    std::vector<double> q;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t pos = 0;
        double v;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("--q: cannot parse '" + item + "' as a number");
        }
        if (pos != item.size()) throw std::invalid_argument("--q: trailing characters in '" + item + "'");
        q.push_back(v);
    }
    if (q.empty()) throw std::invalid_argument("--q: empty list");
    return q;
}

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("BDTP_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw std::invalid_argument("BDTP_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return 1;
}

ordered_json blank_row(const std::vector<std::string>& columns) {
    ordered_json row = ordered_json::object();
    for (const auto& c : columns) row[c] = nullptr;
    return row;
}

ordered_json q_json(const std::vector<double>& q) {
    ordered_json a = ordered_json::array();
    for (double v : q) a.push_back(bdtp::roundtrip_number(v));
    return a;
}

nlohmann::json load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::invalid_argument("cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(file);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config parse error: " + std::string(e.what()));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bdtp: exact values and optimized allocation policies for sampled decision trees"};
    app.require_subcommand(1);

    // value-exhaustive ------------------------------------------------------
    struct {
        std::string family = "plus";
        long long n = 1, b = 2, d = 1;
        OutputOptions out;
    } vx;
    auto* cmd_vx = app.add_subcommand("value-exhaustive", "Exact tree value with every node sampled");
    cmd_vx->add_option("--family", vx.family, "Reward family: plus (p=n/(n+1)) or minus (p=1/(n+1))");
    cmd_vx->add_option("--n", vx.n, "Family parameter n >= 1");
    cmd_vx->add_option("--b", vx.b, "Branching factor")->required();
    cmd_vx->add_option("--d", vx.d, "Tree depth")->required();
    add_output_options(cmd_vx, vx.out);

    // value-selective -------------------------------------------------------
    struct {
        std::string family = "plus";
        long long n = 1, b = 2, d = 1;
        std::string q;
        OutputOptions out;
    } vs;
    auto* cmd_vs = app.add_subcommand("value-selective", "Exact tree value under per-level sampling probabilities");
    cmd_vs->add_option("--family", vs.family, "Reward family: plus or minus");
    cmd_vs->add_option("--n", vs.n, "Family parameter n >= 1");
    cmd_vs->add_option("--b", vs.b, "Branching factor")->required();
    cmd_vs->add_option("--d", vs.d, "Tree depth")->required();
    cmd_vs->add_option("--q", vs.q, "Comma list of per-level probabilities, deepest level first")->required();
    add_output_options(cmd_vs, vs.out);

    // optimize-homogeneous --------------------------------------------------
    struct {
        std::string family = "plus";
        long long n = 1;
        double capacity = 10;
        long long b_max = 20;
        OutputOptions out;
    } oh;
    auto* cmd_oh = app.add_subcommand("optimize-homogeneous", "Best depth-first policy over b in {1..b_max}");
    cmd_oh->add_option("--family", oh.family, "Reward family: plus or minus");
    cmd_oh->add_option("--n", oh.n, "Family parameter n >= 1");
    cmd_oh->add_option("--capacity", oh.capacity, "Average sample budget C")->required();
    cmd_oh->add_option("--b-max", oh.b_max, "Largest branching factor to try");
    add_output_options(cmd_oh, oh.out);

    // optimize-heterogeneous ------------------------------------------------
    struct {
        std::string family = "plus";
        long long n = 1;
        double capacity = 10;
        long long b_max = 10;
        bdtp::GradientConfig gradient;
        OutputOptions out;
    } oq;
    auto* cmd_oq = app.add_subcommand("optimize-heterogeneous",
                                      "Projected gradient ascent over free per-level probabilities");
    cmd_oq->add_option("--family", oq.family, "Reward family: plus or minus");
    cmd_oq->add_option("--n", oq.n, "Family parameter n >= 1");
    cmd_oq->add_option("--capacity", oq.capacity, "Average sample budget C")->required();
    cmd_oq->add_option("--b-max", oq.b_max, "Largest branching factor to try");
    cmd_oq->add_option("--fd-step", oq.gradient.fd_step, "Finite-difference step");
    cmd_oq->add_option("--lr", oq.gradient.learning_rate, "Learning rate");
    cmd_oq->add_option("--max-iters", oq.gradient.max_iterations, "Iteration cap per b");
    cmd_oq->add_option("--tol", oq.gradient.value_tolerance, "Stop when the improvement drops below this");
    add_output_options(cmd_oq, oq.out);

    // mc --------------------------------------------------------------------
    struct {
        double p = 0.5;
        long long b = 2, d = 1, runs = 10000;
        uint64_t seed = 0;
        std::string q;
        bool hard = false;
        int threads = 0;
        OutputOptions out;
    } mc;
    auto* cmd_mc = app.add_subcommand("mc", "Seeded Monte-Carlo value estimate via backwards induction");
    cmd_mc->add_option("--p", mc.p, "Probability of the +1 reward")->required();
    cmd_mc->add_option("--b", mc.b, "Branching factor")->required();
    cmd_mc->add_option("--d", mc.d, "Tree depth")->required();
    cmd_mc->add_option("--q", mc.q, "Comma list of per-level probabilities, deepest first (default: all 1)");
    cmd_mc->add_option("--runs", mc.runs, "Number of simulated trees")->required();
    cmd_mc->add_option("--seed", mc.seed, "RNG seed")->required();
    cmd_mc->add_flag("--hard", mc.hard, "Exactly-C allocation instead of independent Bernoulli sampling");
    cmd_mc->add_option("--threads", mc.threads, "Worker threads (default: BDTP_THREADS or 1)");
    add_output_options(cmd_mc, mc.out);

    // fixed-point -----------------------------------------------------------
    struct {
        double p = 0.5;
        long long b = 2;
        OutputOptions out;
    } fp;
    auto* cmd_fp = app.add_subcommand("fixed-point", "Large-depth limit of the full-reward probability");
    cmd_fp->add_option("--p", fp.p, "Probability of the +1 reward")->required();
    cmd_fp->add_option("--b", fp.b, "Branching factor")->required();
    add_output_options(cmd_fp, fp.out);

    // sweep / loss-map ------------------------------------------------------
    struct {
        std::string config;
        int threads = 0;
        OutputOptions out;
    } sw, lm;
    auto* cmd_sw = app.add_subcommand("sweep", "Parameter sweep from a JSON config");
    cmd_sw->add_option("--config", sw.config, "JSON config path")->required();
    cmd_sw->add_option("--threads", sw.threads, "Worker threads (default: config, BDTP_THREADS or 1)");
    add_output_options(cmd_sw, sw.out);
    auto* cmd_lm = app.add_subcommand("loss-map", "Heuristic loss vs the homogeneous optimum from a JSON config");
    cmd_lm->add_option("--config", lm.config, "JSON config path");
    cmd_lm->add_option("--threads", lm.threads, "Worker threads (default: config, BDTP_THREADS or 1)");
    add_output_options(cmd_lm, lm.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalidArgs;
    }

    try {
        if (cmd_vx->parsed()) {
            const bdtp::RewardModel model = bdtp::make_reward_model(bdtp::parse_family(vx.family), vx.n);
            ResultTable table;
            table.columns = {"family", "n", "b", "d", "value"};
            ordered_json row = blank_row(table.columns);
            row["family"] = bdtp::family_name(model.family);
            row["n"] = model.n;
            row["b"] = vx.b;
            row["d"] = vx.d;
            row["value"] = bdtp::roundtrip_number(bdtp::tree_value_exhaustive(model, vx.b, vx.d));
            table.rows.push_back(std::move(row));
            emit(table, vx.out);
        } else if (cmd_vs->parsed()) {
            const bdtp::RewardModel model = bdtp::make_reward_model(bdtp::parse_family(vs.family), vs.n);
            const std::vector<double> q = parse_q_list(vs.q);
            ResultTable table;
            table.columns = {"family", "n", "b", "d", "q", "value"};
            ordered_json row = blank_row(table.columns);
            row["family"] = bdtp::family_name(model.family);
            row["n"] = model.n;
            row["b"] = vs.b;
            row["d"] = vs.d;
            row["q"] = q_json(q);
            row["value"] = bdtp::roundtrip_number(bdtp::tree_value_selective(model, vs.b, vs.d, q));
            table.rows.push_back(std::move(row));
            emit(table, vs.out);
        } else if (cmd_oh->parsed()) {
            const bdtp::RewardModel model = bdtp::make_reward_model(bdtp::parse_family(oh.family), oh.n);
            const bdtp::OptimizationResult r = bdtp::optimize_homogeneous(model, oh.capacity, oh.b_max);
            ResultTable table;
            table.columns = {"family", "n", "capacity", "b_max", "b_star", "d_prime", "value", "q_star"};
            ordered_json row = blank_row(table.columns);
            row["family"] = bdtp::family_name(model.family);
            row["n"] = model.n;
            row["capacity"] = bdtp::roundtrip_number(oh.capacity);
            row["b_max"] = oh.b_max;
            row["b_star"] = r.b_star;
            row["d_prime"] = static_cast<long long>(r.q_star.size());
            row["value"] = bdtp::roundtrip_number(r.value);
            row["q_star"] = q_json(r.q_star);
            table.rows.push_back(std::move(row));
            emit(table, oh.out);
        } else if (cmd_oq->parsed()) {
            const bdtp::RewardModel model = bdtp::make_reward_model(bdtp::parse_family(oq.family), oq.n);
            const bdtp::OptimizationResult r =
                bdtp::optimize_heterogeneous(model, oq.capacity, oq.b_max, oq.gradient);
            ResultTable table;
            table.columns = {"family", "n",     "capacity",        "b_max",     "b_star",
                             "d",      "value", "iterations_used", "converged", "q_star"};
            ordered_json row = blank_row(table.columns);
            row["family"] = bdtp::family_name(model.family);
            row["n"] = model.n;
            row["capacity"] = bdtp::roundtrip_number(oq.capacity);
            row["b_max"] = oq.b_max;
            row["b_star"] = r.b_star;
            row["d"] = static_cast<long long>(r.q_star.size());
            row["value"] = bdtp::roundtrip_number(r.value);
            row["iterations_used"] = r.iterations_used;
            row["converged"] = r.converged;
            row["q_star"] = q_json(r.q_star);
            table.rows.push_back(std::move(row));
            emit(table, oq.out);
        } else if (cmd_mc->parsed()) {
            const std::vector<double> q =
                mc.q.empty() ? std::vector<double>(static_cast<size_t>(mc.d), 1.0) : parse_q_list(mc.q);
            bdtp::McConfig config;
            config.runs = mc.runs;
            config.seed = mc.seed;
            config.allocation_mode =
                mc.hard ? bdtp::AllocationMode::HardExact : bdtp::AllocationMode::AverageBernoulli;
            const bdtp::McEstimate est = bdtp::mc_value(mc.p, mc.b, mc.d, q, config, resolve_threads(mc.threads));
            ResultTable table;
            table.columns = {"p", "b", "d", "q", "mode", "runs", "seed", "mean", "stderr"};
            ordered_json row = blank_row(table.columns);
            row["p"] = bdtp::roundtrip_number(mc.p);
            row["b"] = mc.b;
            row["d"] = mc.d;
            row["q"] = q_json(q);
            row["mode"] = mc.hard ? "hard" : "average";
            row["runs"] = est.runs;
            row["seed"] = mc.seed;
            row["mean"] = bdtp::roundtrip_number(est.mean);
            row["stderr"] = bdtp::roundtrip_number(est.stderr_);
            table.rows.push_back(std::move(row));
            emit(table, mc.out);
        } else if (cmd_fp->parsed()) {
            ResultTable table;
            table.columns = {"p", "b", "prob"};
            ordered_json row = blank_row(table.columns);
            row["p"] = bdtp::roundtrip_number(fp.p);
            row["b"] = fp.b;
            row["prob"] = bdtp::roundtrip_number(bdtp::asymptotic_full_reward_prob(fp.p, fp.b));
            table.rows.push_back(std::move(row));
            emit(table, fp.out);
        } else if (cmd_sw->parsed()) {
            bdtp::SweepSpec spec = bdtp::parse_sweep_spec(load_config(sw.config));
            if (sw.threads > 0 || std::getenv("BDTP_THREADS"))
                spec.threads = resolve_threads(sw.threads);
            if (!sw.out.out.empty()) spec.out = sw.out.out;
            OutputOptions target = sw.out;
            target.out = spec.out;
            emit(bdtp::run_sweep(spec), target);
        } else if (cmd_lm->parsed()) {
            if (lm.config.empty()) throw std::invalid_argument("loss-map requires --config");
            bdtp::LossMapSpec spec = bdtp::parse_loss_map_spec(load_config(lm.config));
            if (lm.threads > 0 || std::getenv("BDTP_THREADS"))
                spec.threads = resolve_threads(lm.threads);
            if (!lm.out.out.empty()) spec.out = lm.out.out;
            OutputOptions target = lm.out;
            target.out = spec.out;
            emit(bdtp::run_loss_map(spec), target);
        }
    } catch (const bdtp::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const bdtp::ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return kExitInvalidArgs;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
