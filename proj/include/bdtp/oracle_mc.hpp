#pragma once

#include <cstdint>
#include <vector>

namespace bdtp {

// Counter-based generator: the SplitMix64 finalizer over a Weyl sequence.
// Streams for runs and nodes are derived by re-mixing (seed, index) pairs,
// so any draw can be regenerated from coordinates alone — no shared state,
// identical results for any parallel schedule.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        return mix(state);
    }

    // Uniform on [0,1) from the top 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Independent stream seed for (seed, index); both arguments are avalanched
// before combining so neighboring indices land far apart.
inline uint64_t substream_seed(uint64_t seed, uint64_t index) {
    return SplitMix64::mix(seed ^ SplitMix64::mix(index * 0xD1342543DE82EF95ull + 0x9E3779B97F4A7C15ull));
}

enum class AllocationMode { AverageBernoulli, HardExact };

struct McConfig {
    long long runs = 1;
    uint64_t seed = 0;
    AllocationMode allocation_mode = AllocationMode::AverageBernoulli;
};

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample standard deviation / sqrt(runs)
    long long runs = 0;
};

// Root value of one realized tree: V(node) = R(node) + max over children,
// maximized over the root's b children.  rewards[l] lists level l+1 in
// breadth-first order and must have b^(l+1) entries.
double backward_induction_value(const std::vector<std::vector<double>>& rewards, long long b);

// Ground-truth estimate of the tree value under sampling probabilities q
// (reverse-indexed; q[0] = deepest level): per run, draw each node's
// sampled state and reward, solve the realized tree by backwards induction,
// then average.  Reproducible from the seed alone; runs may be evaluated on
// `threads` threads with bit-identical results.
McEstimate mc_value(double p, long long b, long long d, const std::vector<double>& q,
                    const McConfig& config, int threads = 1);

// Exhaustive-sampling shorthand (q = all ones).
McEstimate mc_value(double p, long long b, long long d, const McConfig& config, int threads = 1);

namespace mc_detail {

// Per-node draw protocol, exposed so tests can regenerate the exact trees a
// run saw.  node_key is the global breadth-first index (level 1 starts at 0).
struct NodeDraw {
    bool sampled;
    double reward;
};
NodeDraw draw_node(uint64_t run_seed, uint64_t node_key, double q_level, double p, double r_minus);

// Reward for a node whose sampled state is already decided (HardExact mode).
double draw_reward(uint64_t run_seed, uint64_t node_key, double p, double r_minus);

// HardExact per-level masks for one run: exactly round(q_l * b^l) nodes per
// level (largest-remainder corrected so the total hits C).
std::vector<std::vector<char>> hard_masks(uint64_t run_seed, long long b, long long d,
                                          const std::vector<double>& q);

uint64_t run_seed(uint64_t seed, long long run_index);

}  // namespace mc_detail

}  // namespace bdtp
