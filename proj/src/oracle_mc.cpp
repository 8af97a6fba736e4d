#include "bdtp/oracle_mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "bdtp/errors.hpp"
#include "bdtp/reward_model.hpp"

namespace bdtp {

namespace {

constexpr double kNodeGuard = 1e8;  // refuse trees with more than this many nodes
constexpr uint64_t kMaskStreamTag = 0x6861726431u;  // separates mask draws from node draws

long long checked_node_count(long long b, long long d) {
    double level_nodes = 1.0;
    double total = 0.0;
    for (long long l = 1; l <= d; ++l) {
        level_nodes *= static_cast<double>(b);
        total += level_nodes;
        if (level_nodes > kNodeGuard)
            throw InfeasibleError("mc_value: b^d = " + std::to_string(level_nodes) + " nodes at level " +
                                  std::to_string(l) + " exceeds the 1e8 guard");
    }
    return static_cast<long long>(total);
}

}  // namespace

namespace mc_detail {

uint64_t run_seed(uint64_t seed, long long run_index) {
    return substream_seed(seed, static_cast<uint64_t>(run_index));
}

NodeDraw draw_node(uint64_t run_seed, uint64_t node_key, double q_level, double p, double r_minus) {
    SplitMix64 g(substream_seed(run_seed, node_key));
    const bool sampled = g.uniform01() < q_level;
    const double u = g.uniform01();
    if (!sampled) return {false, 0.0};
    return {true, u < p ? 1.0 : r_minus};
}

double draw_reward(uint64_t run_seed, uint64_t node_key, double p, double r_minus) {
    SplitMix64 g(substream_seed(run_seed, node_key));
    g.next();  // keep the draw position aligned with draw_node's protocol
    return g.uniform01() < p ? 1.0 : r_minus;
}

std::vector<std::vector<char>> hard_masks(uint64_t run_seed, long long b, long long d,
                                          const std::vector<double>& q) {
    // Per-level real targets q_l * b^l, floored, with the leftover units
    // assigned by largest remainder (ties to the shallower level).
    std::vector<long long> level_nodes(static_cast<size_t>(d));
    std::vector<long long> target(static_cast<size_t>(d));
    std::vector<double> remainder(static_cast<size_t>(d));
    double implied_capacity = 0.0;
    double power = 1.0;
    for (long long l = 1; l <= d; ++l) {
        power *= static_cast<double>(b);
        const double x = q[static_cast<size_t>(d - l)] * power;
        implied_capacity += x;
        level_nodes[static_cast<size_t>(l - 1)] = static_cast<long long>(power);
        target[static_cast<size_t>(l - 1)] = static_cast<long long>(std::floor(x));
        remainder[static_cast<size_t>(l - 1)] = x - std::floor(x);
    }
    const double rounded = std::round(implied_capacity);
    if (std::abs(implied_capacity - rounded) > 1e-9)
        throw InfeasibleError("HardExact allocation needs an integer capacity; q implies C = " +
                              std::to_string(implied_capacity));
    long long leftover = static_cast<long long>(rounded);
    for (long long t : target) leftover -= t;
    // Stable order: largest remainder first, shallower level on ties.
    std::vector<size_t> order(target.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t c) { return remainder[a] > remainder[c]; });
    for (size_t i = 0; i < order.size() && leftover > 0; ++i) {
        if (target[order[i]] < level_nodes[order[i]]) {
            ++target[order[i]];
            --leftover;
        }
    }

    // Selection sampling: walk the level once, taking each node with
    // probability (still needed) / (still unseen).
    std::vector<std::vector<char>> masks(static_cast<size_t>(d));
    for (long long l = 1; l <= d; ++l) {
        const size_t li = static_cast<size_t>(l - 1);
        const long long n = level_nodes[li];
        masks[li].assign(static_cast<size_t>(n), 0);
        long long need = target[li];
        SplitMix64 g(substream_seed(run_seed ^ kMaskStreamTag, static_cast<uint64_t>(l)));
        for (long long i = 0; i < n && need > 0; ++i) {
            if (g.uniform01() * static_cast<double>(n - i) < static_cast<double>(need)) {
                masks[li][static_cast<size_t>(i)] = 1;
                --need;
            }
        }
    }
    return masks;
}

}  // namespace mc_detail

double backward_induction_value(const std::vector<std::vector<double>>& rewards, long long b) {
    if (b < 1) throw std::invalid_argument("backward_induction_value: b must be >= 1");
    if (rewards.empty()) throw std::invalid_argument("backward_induction_value: empty reward table");
    double expected = static_cast<double>(b);
    for (const auto& level : rewards) {
        if (static_cast<double>(level.size()) != expected)
            throw std::invalid_argument("backward_induction_value: level size " +
                                        std::to_string(level.size()) + " does not match b^l = " +
                                        std::to_string(expected));
        expected *= static_cast<double>(b);
    }

    const size_t d = rewards.size();
    std::vector<double> values = rewards[d - 1];  // leaves: V = R
    for (size_t level = d - 1; level-- > 0;) {
        std::vector<double> next(rewards[level].size());
        for (size_t i = 0; i < next.size(); ++i) {
            double best = values[i * static_cast<size_t>(b)];
            for (long long j = 1; j < b; ++j)
                best = std::max(best, values[i * static_cast<size_t>(b) + static_cast<size_t>(j)]);
            next[i] = rewards[level][i] + best;
        }
        values = std::move(next);
    }
    double root = values[0];
    for (size_t j = 1; j < values.size(); ++j) root = std::max(root, values[j]);
    return root;
}

namespace {

// Value of one realized tree, streaming: rewards are regenerated from
// (run_seed, node_key) on the fly, so nothing is stored per node.
double run_value(uint64_t run_seed, double p, double r_minus, long long b, long long d,
                 const std::vector<double>& q, const std::vector<std::vector<char>>* masks) {
    // level_base[l-1] = first node_key of level l.
    std::vector<uint64_t> level_base(static_cast<size_t>(d));
    uint64_t base = 0, level_nodes = 1;
    for (long long l = 1; l <= d; ++l) {
        level_base[static_cast<size_t>(l - 1)] = base;
        level_nodes *= static_cast<uint64_t>(b);
        base += level_nodes;
    }

    auto subtree = [&](auto&& self, long long level, uint64_t index) -> double {
        const size_t li = static_cast<size_t>(level - 1);
        const uint64_t key = level_base[li] + index;
        double reward;
        if (masks) {
            reward = (*masks)[li][static_cast<size_t>(index)]
                         ? mc_detail::draw_reward(run_seed, key, p, r_minus)
                         : 0.0;
        } else {
            reward = mc_detail::draw_node(run_seed, key, q[static_cast<size_t>(d - level)], p, r_minus).reward;
        }
        if (level == d) return reward;
        double best = self(self, level + 1, index * static_cast<uint64_t>(b));
        for (long long j = 1; j < b; ++j)
            best = std::max(best, self(self, level + 1, index * static_cast<uint64_t>(b) + static_cast<uint64_t>(j)));
        return reward + best;
    };

    double best = subtree(subtree, 1, 0);
    for (long long j = 1; j < b; ++j) best = std::max(best, subtree(subtree, 1, static_cast<uint64_t>(j)));
    return best;
}

}  // namespace

McEstimate mc_value(double p, long long b, long long d, const std::vector<double>& q,
                    const McConfig& config, int threads) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("mc_value: p must lie in (0,1)");
    if (b < 1) throw std::invalid_argument("mc_value: b must be >= 1");
    if (d < 1) throw std::invalid_argument("mc_value: d must be >= 1");
    if (static_cast<long long>(q.size()) != d)
        throw std::invalid_argument("mc_value: q must have length d = " + std::to_string(d));
    for (double v : q)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("mc_value: q outside [0,1]");
    if (config.runs < 1) throw std::invalid_argument("mc_value: runs must be >= 1");
    checked_node_count(b, d);

    const double r_minus = zero_average_negative_reward(p);
    const bool hard = config.allocation_mode == AllocationMode::HardExact;
    if (hard) mc_detail::hard_masks(substream_seed(config.seed, 0), b, d, q);  // validate integer C up front

    std::vector<double> values(static_cast<size_t>(config.runs));
    auto worker = [&](long long first, long long last) {
        for (long long run = first; run < last; ++run) {
            const uint64_t rs = mc_detail::run_seed(config.seed, run);
            if (hard) {
                const auto masks = mc_detail::hard_masks(rs, b, d, q);
                values[static_cast<size_t>(run)] = run_value(rs, p, r_minus, b, d, q, &masks);
            } else {
                values[static_cast<size_t>(run)] = run_value(rs, p, r_minus, b, d, q, nullptr);
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(config.runs)));
    if (nthreads == 1) {
        worker(0, config.runs);
    } else {
        std::vector<std::thread> pool;
        const long long chunk = (config.runs + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const long long first = t * chunk;
            const long long last = std::min<long long>(config.runs, first + chunk);
            if (first < last) pool.emplace_back(worker, first, last);
        }
        for (auto& th : pool) th.join();
    }

    // Sequential-by-index reduction: the estimate is independent of the
    // thread count at the bit level.
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(config.runs);
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double stderr_ =
        config.runs > 1 ? std::sqrt(sq / static_cast<double>(config.runs - 1)) / std::sqrt(static_cast<double>(config.runs))
                        : 0.0;
    return {mean, stderr_, config.runs};
}

McEstimate mc_value(double p, long long b, long long d, const McConfig& config, int threads) {
    return mc_value(p, b, d, std::vector<double>(static_cast<size_t>(d), 1.0), config, threads);
}

}  // namespace bdtp
