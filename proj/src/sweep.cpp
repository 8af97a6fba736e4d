#include "bdtp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "bdtp/errors.hpp"
#include "bdtp/policy.hpp"
#include "bdtp/value_pmf.hpp"

namespace bdtp {

using nlohmann::json;
using nlohmann::ordered_json;

double loss_vs_optimal(double v_opt, double v) {
    if (!(v_opt > 0.0))
        throw std::invalid_argument("loss_vs_optimal: reference optimum must be positive, got " +
                                    format_number(v_opt));
    return 100.0 * (v_opt - v) / v_opt;
}

std::string format_number(double x) {
    if (x == 0.0) x = 0.0;  // collapse -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

double roundtrip_number(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

namespace {

ordered_json num(double x) { return roundtrip_number(x); }

ordered_json q_array(const std::vector<double>& q) {
    ordered_json a = ordered_json::array();
    for (double v : q) a.push_back(roundtrip_number(v));
    return a;
}

ordered_json blank_row(const std::vector<std::string>& columns) {
    ordered_json row = ordered_json::object();
    for (const auto& c : columns) row[c] = nullptr;
    return row;
}

void run_cells(size_t count, int threads, const std::function<void(size_t)>& cell) {
    if (threads <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) cell(i);
        return;
    }
    std::atomic<size_t> next{0};
    const size_t nthreads = std::min<size_t>(static_cast<size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (size_t t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (size_t i; (i = next.fetch_add(1)) < count;) cell(i);
        });
    for (auto& th : pool) th.join();
}

// ---- config parsing -------------------------------------------------------

[[noreturn]] void bad_config(const std::string& message) {
    throw std::invalid_argument("config: " + message);
}

FamilyPoint parse_family_point(const json& j) {
    if (!j.is_object()) bad_config("each families entry must be an object {\"family\",\"n\"}");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "family" && key != "n") bad_config("unknown key '" + key + "' in families entry");
    }
    if (!j.contains("family") || !j.contains("n")) bad_config("families entries need 'family' and 'n'");
    FamilyPoint fp;
    fp.family = parse_family(j.at("family").get<std::string>());
    fp.n = j.at("n").get<long long>();
    if (fp.n < 1) bad_config("families entry has n < 1");
    if (fp.n == 1) fp.family = Family::PlusHeavy;  // canonical n=1 model
    return fp;
}

std::vector<FamilyPoint> parse_families(const json& j) {
    if (!j.is_array() || j.empty()) bad_config("'families' must be a nonempty array");
    std::vector<FamilyPoint> out;
    for (const auto& e : j) out.push_back(parse_family_point(e));
    std::sort(out.begin(), out.end(), [](const FamilyPoint& a, const FamilyPoint& b) {
        if (a.family != b.family) return a.family < b.family;
        return a.n < b.n;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const FamilyPoint& a, const FamilyPoint& b) {
                              return a.family == b.family && a.n == b.n;
                          }),
              out.end());
    return out;
}

template <typename T>
std::vector<T> parse_axis(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) bad_config("'" + name + "' must be a nonempty array");
    std::vector<T> out = j.get<std::vector<T>>();
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GradientConfig parse_gradient(const json& j) {
    if (!j.is_object()) bad_config("'gradient' must be an object");
    GradientConfig g;
    for (const auto& [key, value] : j.items()) {
        if (key == "fd_step")
            g.fd_step = value.get<double>();
        else if (key == "learning_rate")
            g.learning_rate = value.get<double>();
        else if (key == "max_iterations")
            g.max_iterations = value.get<long long>();
        else if (key == "value_tolerance")
            g.value_tolerance = value.get<double>();
        else if (key == "renormalize_depth_threshold")
            g.renormalize_depth_threshold = value.get<long long>();
        else
            bad_config("unknown key 'gradient." + key + "'");
    }
    if (!(g.fd_step > 0) || !(g.learning_rate > 0) || g.max_iterations < 1 || !(g.value_tolerance > 0) ||
        g.renormalize_depth_threshold < 1)
        bad_config("gradient settings must all be positive");
    return g;
}

const std::map<std::string, SweepMode>& mode_names() {
    static const std::map<std::string, SweepMode> names{{"exhaustive", SweepMode::Exhaustive},
                                                        {"homogeneous", SweepMode::Homogeneous},
                                                        {"heterogeneous", SweepMode::Heterogeneous},
                                                        {"random", SweepMode::Random},
                                                        {"mc", SweepMode::Mc}};
    return names;
}

}  // namespace

SweepSpec parse_sweep_spec(const json& config) {
    if (!config.is_object()) bad_config("top level must be a JSON object");
    if (!config.contains("mode")) bad_config("missing 'mode'");
    const std::string mode_name = config.at("mode").get<std::string>();
    const auto mode_it = mode_names().find(mode_name);
    if (mode_it == mode_names().end()) bad_config("unknown mode '" + mode_name + "'");

    SweepSpec spec;
    spec.mode = mode_it->second;

    std::set<std::string> allowed{"mode", "families", "out", "threads"};
    switch (spec.mode) {
        case SweepMode::Exhaustive:
            allowed.insert({"b", "d"});
            break;
        case SweepMode::Homogeneous:
            allowed.insert({"C", "b"});
            break;
        case SweepMode::Heterogeneous:
            allowed.insert({"C", "b", "gradient"});
            break;
        case SweepMode::Random:
            allowed.insert({"C", "b", "d"});
            break;
        case SweepMode::Mc:
            allowed.insert({"mc_p", "b", "d", "q", "runs", "seed", "hard"});
            break;
    }
    for (const auto& [key, value] : config.items()) {
        (void)value;
        if (!allowed.count(key)) bad_config("unknown or inapplicable key '" + key + "' for mode '" + mode_name + "'");
    }

    if (config.contains("families")) spec.families = parse_families(config.at("families"));
    if (config.contains("mc_p")) {
        spec.mc_p = parse_axis<double>(config.at("mc_p"), "mc_p");
        for (double p : spec.mc_p)
            if (!(p > 0.0 && p < 1.0)) bad_config("mc_p entries must lie in (0,1)");
    }
    if (config.contains("C")) {
        spec.capacities = parse_axis<double>(config.at("C"), "C");
        for (double c : spec.capacities)
            if (!(c > 0.0)) bad_config("C entries must be positive");
    }
    if (config.contains("b")) {
        spec.b = parse_axis<long long>(config.at("b"), "b");
        for (long long v : spec.b)
            if (v < 1) bad_config("b entries must be >= 1");
    }
    if (config.contains("d")) {
        spec.d = parse_axis<long long>(config.at("d"), "d");
        for (long long v : spec.d)
            if (v < 1) bad_config("d entries must be >= 1");
    }
    if (config.contains("q")) {
        if (!config.at("q").is_array() || config.at("q").empty()) bad_config("'q' must be a nonempty array");
        spec.q = config.at("q").get<std::vector<double>>();
    }
    if (config.contains("runs")) {
        spec.runs = config.at("runs").get<long long>();
        if (spec.runs < 1) bad_config("runs must be >= 1");
    }
    if (config.contains("seed")) spec.seed = config.at("seed").get<uint64_t>();
    if (config.contains("hard")) spec.hard = config.at("hard").get<bool>();
    if (config.contains("gradient")) spec.gradient = parse_gradient(config.at("gradient"));
    if (config.contains("out")) spec.out = config.at("out").get<std::string>();
    if (config.contains("threads")) {
        spec.threads = config.at("threads").get<int>();
        if (spec.threads < 1) bad_config("threads must be >= 1");
    }

    // Mode-appropriate axes must be present and nonempty.
    const bool has_families = !spec.families.empty();
    switch (spec.mode) {
        case SweepMode::Exhaustive:
            if (!has_families || spec.b.empty() || spec.d.empty())
                bad_config("exhaustive mode needs 'families', 'b' and 'd'");
            break;
        case SweepMode::Homogeneous:
            if (!has_families || spec.capacities.empty() || spec.b.empty())
                bad_config("homogeneous mode needs 'families', 'C' and 'b'");
            break;
        case SweepMode::Heterogeneous:
            if (!has_families || spec.capacities.empty() || spec.b.empty())
                bad_config("heterogeneous mode needs 'families', 'C' and 'b'");
            break;
        case SweepMode::Random:
            if (!has_families || spec.capacities.empty() || spec.b.empty() || spec.d.empty())
                bad_config("random mode needs 'families', 'C', 'b' and 'd'");
            break;
        case SweepMode::Mc:
            if ((!has_families && spec.mc_p.empty()) || spec.b.empty() || spec.d.empty())
                bad_config("mc mode needs 'families' and/or 'mc_p', plus 'b' and 'd'");
            if (!config.contains("runs") || !config.contains("seed"))
                bad_config("mc mode needs explicit 'runs' and 'seed'");
            if (!spec.q.empty()) {
                if (spec.d.size() != 1 || static_cast<long long>(spec.q.size()) != spec.d.front())
                    bad_config("'q' requires a single 'd' entry equal to its length");
                for (double v : spec.q)
                    if (!(v >= 0.0 && v <= 1.0)) bad_config("'q' entries must lie in [0,1]");
            }
            break;
    }
    return spec;
}

LossMapSpec parse_loss_map_spec(const json& config) {
    if (!config.is_object()) bad_config("top level must be a JSON object");
    LossMapSpec spec;
    static const std::set<std::string> allowed{"families", "C", "heuristics", "b_max", "out", "threads"};
    for (const auto& [key, value] : config.items()) {
        (void)value;
        if (!allowed.count(key)) bad_config("unknown key '" + key + "' for a loss map");
    }
    if (!config.contains("families") || !config.contains("C")) bad_config("loss map needs 'families' and 'C'");
    spec.families = parse_families(config.at("families"));
    spec.capacities = parse_axis<double>(config.at("C"), "C");
    for (double c : spec.capacities)
        if (!(c > 0.0)) bad_config("C entries must be positive");
    if (config.contains("heuristics")) {
        spec.heuristics = parse_axis<long long>(config.at("heuristics"), "heuristics");
        for (long long b : spec.heuristics)
            if (b < 1) bad_config("heuristics entries must be >= 1");
    }
    if (config.contains("b_max")) {
        spec.b_max = config.at("b_max").get<long long>();
        if (spec.b_max < 2) bad_config("b_max must be >= 2");
    }
    if (config.contains("out")) spec.out = config.at("out").get<std::string>();
    if (config.contains("threads")) {
        spec.threads = config.at("threads").get<int>();
        if (spec.threads < 1) bad_config("threads must be >= 1");
    }
    return spec;
}

// ---- sweep execution ------------------------------------------------------

namespace {

void fill_family(ordered_json& row, const RewardModel& model) {
    row["family"] = family_name(model.family);
    row["n"] = model.n;
}

// Fills the shared b_star column: per (family, C) group, the b of the
// best-valued non-error row; earlier rows (smaller b) win exact ties.
void fill_group_argmax(ResultTable& table) {
    std::map<std::string, std::pair<double, long long>> best;
    auto group_key = [](const ordered_json& row) {
        return row.at("family").dump() + "|" + row.at("n").dump() + "|" + row.at("C").dump();
    };
    for (const auto& row : table.rows) {
        if (row.at("value").is_null()) continue;
        const double v = row.at("value").get<double>();
        const long long b = row.at("b").get<long long>();
        auto [it, inserted] = best.try_emplace(group_key(row), v, b);
        if (!inserted && v > it->second.first) it->second = {v, b};
    }
    for (auto& row : table.rows) {
        const auto it = best.find(group_key(row));
        if (it != best.end()) row["b_star"] = it->second.second;
    }
}

ResultTable sweep_exhaustive(const SweepSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n", "b", "d", "value", "error"};
    for (const auto& fp : spec.families)
        for (long long b : spec.b)
            for (long long d : spec.d) {
                ordered_json row = blank_row(table.columns);
                const RewardModel model = make_reward_model(fp.family, fp.n);
                fill_family(row, model);
                row["b"] = b;
                row["d"] = d;
                row["error"] = "";
                table.rows.push_back(std::move(row));
            }
    run_cells(table.rows.size(), spec.threads, [&](size_t i) {
        ordered_json& row = table.rows[i];
        try {
            const RewardModel model =
                make_reward_model(parse_family(row.at("family").get<std::string>()), row.at("n").get<long long>());
            row["value"] = num(tree_value_exhaustive(model, row.at("b").get<long long>(), row.at("d").get<long long>()));
        } catch (const std::exception& e) {
            row["error"] = e.what();
        }
    });
    return table;
}

ResultTable sweep_homogeneous(const SweepSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n", "C", "b", "d_prime", "q", "value", "b_star", "error"};
    for (const auto& fp : spec.families)
        for (double C : spec.capacities)
            for (long long b : spec.b) {
                ordered_json row = blank_row(table.columns);
                fill_family(row, make_reward_model(fp.family, fp.n));
                row["C"] = num(C);
                row["b"] = b;
                row["error"] = "";
                table.rows.push_back(std::move(row));
            }
    run_cells(table.rows.size(), spec.threads, [&](size_t i) {
        ordered_json& row = table.rows[i];
        try {
            const RewardModel model =
                make_reward_model(parse_family(row.at("family").get<std::string>()), row.at("n").get<long long>());
            const long long b = row.at("b").get<long long>();
            const double C = row.at("C").get<double>();
            const auto [policy, budget] = homogeneous_policy(b, C);
            row["d_prime"] = budget.d_prime;
            row["q"] = q_array(policy.q);
            row["value"] = num(homogeneous_value(model, b, C));
        } catch (const std::exception& e) {
            row["error"] = e.what();
        }
    });
    fill_group_argmax(table);
    return table;
}

ResultTable sweep_heterogeneous(const SweepSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n",     "C",         "b",      "d",    "q_star",
                     "value",  "iterations_used", "converged", "b_star", "error"};
    for (const auto& fp : spec.families)
        for (double C : spec.capacities)
            for (long long b : spec.b) {
                ordered_json row = blank_row(table.columns);
                fill_family(row, make_reward_model(fp.family, fp.n));
                row["C"] = num(C);
                row["b"] = b;
                row["error"] = "";
                table.rows.push_back(std::move(row));
            }
    run_cells(table.rows.size(), spec.threads, [&](size_t i) {
        ordered_json& row = table.rows[i];
        try {
            const RewardModel model =
                make_reward_model(parse_family(row.at("family").get<std::string>()), row.at("n").get<long long>());
            const long long b = row.at("b").get<long long>();
            const double C = row.at("C").get<double>();
            if (b == 1) {
                const auto [policy, budget] = homogeneous_policy(1, C);
                row["d"] = policy.d;
                row["q_star"] = q_array(policy.q);
                row["value"] = num(0.0);
                row["iterations_used"] = 0;
                row["converged"] = true;
                return;
            }
            const long long d = heterogeneous_depth(b, C);
            const auto [hom, budget] = homogeneous_policy(b, C);
            std::vector<double> q0(static_cast<size_t>(d), 0.0);
            std::copy(hom.q.begin(), hom.q.end(), q0.begin() + (d - hom.d));
            const OptimizationResult r = optimize_q(model, b, d, C, spec.gradient, q0);
            row["d"] = d;
            row["q_star"] = q_array(r.q_star);
            row["value"] = num(r.value);
            row["iterations_used"] = r.iterations_used;
            row["converged"] = r.converged;
        } catch (const std::exception& e) {
            row["error"] = e.what();
        }
    });
    fill_group_argmax(table);
    return table;
}

ResultTable sweep_random(const SweepSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n", "C", "b", "d", "q", "value", "error"};
    for (const auto& fp : spec.families)
        for (double C : spec.capacities)
            for (long long b : spec.b)
                for (long long d : spec.d) {
                    ordered_json row = blank_row(table.columns);
                    fill_family(row, make_reward_model(fp.family, fp.n));
                    row["C"] = num(C);
                    row["b"] = b;
                    row["d"] = d;
                    row["error"] = "";
                    table.rows.push_back(std::move(row));
                }
    run_cells(table.rows.size(), spec.threads, [&](size_t i) {
        ordered_json& row = table.rows[i];
        try {
            const RewardModel model =
                make_reward_model(parse_family(row.at("family").get<std::string>()), row.at("n").get<long long>());
            const long long b = row.at("b").get<long long>();
            const long long d = row.at("d").get<long long>();
            const Policy policy = random_policy(b, d, row.at("C").get<double>());
            row["q"] = q_array(policy.q);
            row["value"] = num(tree_value_selective(model, b, d, policy.q));
        } catch (const std::exception& e) {
            row["error"] = e.what();
        }
    });
    return table;
}

ResultTable sweep_mc(const SweepSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n", "p", "b", "d", "q", "runs", "seed", "mode", "mean", "stderr", "error"};
    const std::string mode_name = spec.hard ? "hard" : "average";
    auto add_rows = [&](const FamilyPoint* fp, double p) {
        for (long long b : spec.b)
            for (long long d : spec.d) {
                ordered_json row = blank_row(table.columns);
                if (fp) {
                    const RewardModel model = make_reward_model(fp->family, fp->n);
                    fill_family(row, model);
                    row["p"] = num(model.p_plus.convert_to<double>());
                } else {
                    row["p"] = num(p);
                }
                row["b"] = b;
                row["d"] = d;
                row["runs"] = spec.runs;
                row["seed"] = spec.seed;
                row["mode"] = mode_name;
                row["error"] = "";
                table.rows.push_back(std::move(row));
            }
    };
    for (const auto& fp : spec.families) add_rows(&fp, 0.0);
    for (double p : spec.mc_p) add_rows(nullptr, p);

    run_cells(table.rows.size(), spec.threads, [&](size_t i) {
        ordered_json& row = table.rows[i];
        try {
            const double p = row.at("p").get<double>();
            const long long b = row.at("b").get<long long>();
            const long long d = row.at("d").get<long long>();
            const std::vector<double> q =
                spec.q.empty() ? std::vector<double>(static_cast<size_t>(d), 1.0) : spec.q;
            McConfig config;
            config.runs = spec.runs;
            config.seed = spec.seed;
            config.allocation_mode = spec.hard ? AllocationMode::HardExact : AllocationMode::AverageBernoulli;
            row["q"] = q_array(q);
            const McEstimate est = mc_value(p, b, d, q, config);
            row["mean"] = num(est.mean);
            row["stderr"] = num(est.stderr_);
        } catch (const std::exception& e) {
            row["error"] = e.what();
        }
    });
    return table;
}

}  // namespace

ResultTable run_sweep(const SweepSpec& spec) {
    switch (spec.mode) {
        case SweepMode::Exhaustive:
            return sweep_exhaustive(spec);
        case SweepMode::Homogeneous:
            return sweep_homogeneous(spec);
        case SweepMode::Heterogeneous:
            return sweep_heterogeneous(spec);
        case SweepMode::Random:
            return sweep_random(spec);
        case SweepMode::Mc:
            return sweep_mc(spec);
    }
    throw std::logic_error("run_sweep: unreachable mode");
}

ResultTable run_loss_map(const LossMapSpec& spec) {
    ResultTable table;
    table.columns = {"family", "n", "C", "heuristic_b", "value", "v_opt", "b_star", "loss_percent", "error"};
    struct Group {
        FamilyPoint fp;
        double C;
        size_t first_row;
    };
    std::vector<Group> groups;
    for (const auto& fp : spec.families)
        for (double C : spec.capacities) {
            groups.push_back({fp, C, table.rows.size()});
            for (long long hb : spec.heuristics) {
                ordered_json row = blank_row(table.columns);
                fill_family(row, make_reward_model(fp.family, fp.n));
                row["C"] = num(C);
                row["heuristic_b"] = hb;
                row["error"] = "";
                table.rows.push_back(std::move(row));
            }
        }
    run_cells(groups.size(), spec.threads, [&](size_t gi) {
        const Group& g = groups[gi];
        const RewardModel model = make_reward_model(g.fp.family, g.fp.n);
        OptimizationResult opt;
        bool opt_ok = false;
        std::string opt_error;
        try {
            opt = optimize_homogeneous(model, g.C, spec.b_max);
            opt_ok = true;
        } catch (const std::exception& e) {
            opt_error = e.what();
        }
        for (size_t k = 0; k < spec.heuristics.size(); ++k) {
            ordered_json& row = table.rows[g.first_row + k];
            try {
                if (!opt_ok) throw std::runtime_error(opt_error);
                const long long hb = row.at("heuristic_b").get<long long>();
                const double v = homogeneous_value(model, hb, g.C);
                row["value"] = num(v);
                row["v_opt"] = num(opt.value);
                row["b_star"] = opt.b_star;
                if (opt.value > 0.0)
                    row["loss_percent"] = num(loss_vs_optimal(opt.value, v));
                else
                    row["loss_percent"] = "NA";
            } catch (const std::exception& e) {
                row["error"] = e.what();
            }
        }
    });
    return table;
}

// ---- emission -------------------------------------------------------------

namespace {

std::string csv_field(const ordered_json& v) {
    std::string s;
    if (v.is_null())
        s = "";
    else if (v.is_string())
        s = v.get<std::string>();
    else if (v.is_boolean())
        s = v.get<bool>() ? "true" : "false";
    else if (v.is_number_float())
        s = format_number(v.get<double>());
    else if (v.is_number())
        s = v.dump();
    else
        s = v.dump();  // arrays: q vectors embedded as JSON
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

std::string to_csv(const ResultTable& table) {
    std::string out;
    for (size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out += ',';
            out += csv_field(row.at(table.columns[c]));
        }
        out += '\n';
    }
    return out;
}

std::string to_json_records(const ResultTable& table) {
    ordered_json records = ordered_json::array();
    for (const auto& row : table.rows) records.push_back(row);
    return records.dump(2) + "\n";
}

}  // namespace bdtp
