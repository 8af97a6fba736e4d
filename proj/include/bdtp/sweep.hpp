#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdtp/optimize.hpp"
#include "bdtp/oracle_mc.hpp"
#include "bdtp/reward_model.hpp"

namespace bdtp {

// Percentage of value forfeited relative to an optimum:
// 100 * (v_opt - v) / v_opt.  Undefined for v_opt <= 0 (callers emit the
// "NA" sentinel instead).
double loss_vs_optimal(double v_opt, double v);

enum class SweepMode { Exhaustive, Homogeneous, Heterogeneous, Random, Mc };

struct FamilyPoint {
    Family family = Family::PlusHeavy;
    long long n = 1;
};

// Axes and mode of one parameter sweep; mirrors the JSON config schema.
struct SweepSpec {
    SweepMode mode = SweepMode::Exhaustive;
    std::vector<FamilyPoint> families;   // exact p-axis points
    std::vector<double> mc_p;            // float p-axis, routed through the oracle (mc mode)
    std::vector<double> capacities;      // "C" in configs
    std::vector<long long> b;
    std::vector<long long> d;
    std::vector<double> q;               // optional fixed q for mc mode (deepest-first)
    long long runs = 10000;              // mc mode
    uint64_t seed = 0;                   // mc mode
    bool hard = false;                   // mc mode: HardExact allocation
    GradientConfig gradient;             // heterogeneous mode
    std::string out;                     // optional output path
    int threads = 1;
};

// Grid for the heuristic-loss table: fixed-b policies measured against the
// homogeneous optimum over b in {1..b_max}.
struct LossMapSpec {
    std::vector<FamilyPoint> families;
    std::vector<double> capacities;
    std::vector<long long> heuristics{2, 20};
    long long b_max = 20;
    std::string out;
    int threads = 1;
};

// Column-ordered result rows; each row maps every column name to a value
// (numbers round-tripped through the 12-significant-digit format, strings,
// bools, or null for not-applicable).
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<nlohmann::ordered_json> rows;
};

// Strict parsers: unknown or mode-inappropriate keys are rejected.
SweepSpec parse_sweep_spec(const nlohmann::json& config);
LossMapSpec parse_loss_map_spec(const nlohmann::json& config);

ResultTable run_sweep(const SweepSpec& spec);
ResultTable run_loss_map(const LossMapSpec& spec);

// 12 significant digits, trailing zeros trimmed, "-0" collapsed to "0".
std::string format_number(double x);
// The double whose shortest representation format_number printed (keeps the
// JSON emission consistent with the CSV digits).
double roundtrip_number(double x);

// UTF-8, LF line endings, header always present; fields containing
// separators are double-quoted.
std::string to_csv(const ResultTable& table);
// Records array with the same field names and ordering as the CSV columns.
std::string to_json_records(const ResultTable& table);

}  // namespace bdtp
