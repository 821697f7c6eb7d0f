#pragma once

#include <cstdint>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/csqst.hpp"
#include "hitlab/spectral.hpp"

namespace hitlab {

// Counter-based uniform stream: draw k of trajectory i depends only on
// (seed, i, k), so worker partitioning cannot change any sample.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
        const std::uint64_t base = mix(seed + kGolden * (stream + 1));
        const std::uint64_t z = mix(base + kGolden * (counter + 1));
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
};

struct SimulationConfig {
    std::uint64_t seed = 1;
    std::size_t trajectories = 100000;
    std::size_t horizon = 10000;
    std::size_t block = 4096;  // parallel granularity only; never affects samples
};

// Inverse-CDF draw over the stored order; rounding shortfall lands on the
// last reachable index.
std::size_t sample_categorical(const double* weights, std::size_t n, double u);

// Per-trajectory records; -1 marks "not observed" (censored / never jumped).
struct SampleSet {
    SimulationConfig config;
    std::vector<std::int32_t> tau_g;       // first entrance time, -1 if censored
    std::vector<std::int32_t> exit_state;  // full index of the entrance state
    std::vector<std::int32_t> tau_1;       // jump time on A (tracking runs only)
    std::vector<std::int32_t> x_tau1;      // full index of the state at the jump
    double censored_fraction = 0.0;

    std::size_t size() const { return tau_g.size(); }
    // Empirical P(tau_G > t); censored trajectories are alive through the horizon.
    double empirical_survival(std::size_t t) const;
    // Empirical entrance frequencies over the target states.
    std::vector<double> exit_frequencies(const MarkovChain& chain) const;
};

// i.i.d. base-chain trajectories from alpha. Throws when more than 1% of
// trajectories are censored at the horizon.
SampleSet sample_base(const MarkovChain& chain, const Distribution& alpha,
                      const SimulationConfig& config);

// Two-layer tracking trajectories; the jump probability is evaluated on the
// arrival state at each step. Records tau_1 and the state at the jump.
SampleSet sample_tracking(const MarkovChain& chain, const SubChain& sub,
                          const SeparationTable& sep, const ControlFunction& control,
                          const SimulationConfig& config);

struct ConditionalLawResult {
    std::size_t n_conditioned = 0;
    double tv_distance = 0.0;
    double tv_threshold = 0.0;
    std::vector<double> z_scores;  // per A-state
    double max_abs_z = 0.0;
    bool pass = false;
};

// Compares the law of the jump state (over trajectories that jumped in A)
// against mu*: per-state |z| <= 4 and TV <= 5 sqrt(|A| / N).
ConditionalLawResult conditional_law_test(const SampleSet& samples,
                                          const std::vector<double>& mu_star,
                                          const SubChain& sub);

}  // namespace hitlab
