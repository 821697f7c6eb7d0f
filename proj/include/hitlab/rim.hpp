#pragma once

#include <cstdint>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/montecarlo.hpp"
#include "hitlab/spectral.hpp"

namespace hitlab {

// Ring of length 4^n with one absorbing state and rotation-invariant
// transitions tuned so the principal eigenvalue is exactly lam.
struct RimParams {
    int n = 1;            // torus length 4^n; capped at 6 (dense desk scale)
    double lam = 0.5;     // target eigenvalue, in (0,1)
};

// State labels "0".."4^n-1" plus "G".
MarkovChain build_rim(const RimParams& params);

// Closed-form eigenvalue and eigenvectors by congruence class; residual
// fields are evaluated against the generated matrix.
SpectralTriple rim_spectral_oracle(const RimParams& params);

// The three congruence classes lump into a 4-state chain on {0,1,2,G}.
MarkovChain rim_projected(double lam);

// Nested halting sets grown from a resolved starting point s0 (multiple of 4).
// Sets for other starting points are rotations of the s0 = 0 family.
struct HaltingSets {
    std::size_t torus = 0;
    std::size_t s0 = 0;
    std::size_t opposite = 0;                    // s0 + 2^{2n-1}
    std::vector<std::vector<std::size_t>> sets;  // sets[k], k = 0..2n-1, sorted
    std::vector<std::vector<std::size_t>> parent;  // parent[k][i] of sets[k][i], k >= 1
};

HaltingSets halting_sets(const RimParams& params, std::size_t s0);

// Simulation of the nested hitting sequence; the recorded stopping time is
// one step past the last stage. Stage states are accumulated in canonical
// (rotated to s0 = 0) coordinates.
struct RimHaltingRun {
    SampleSet samples;  // tau_1 = the stop, x_tau1 = state at the stop
    std::vector<std::vector<std::uint64_t>> stage_hits;  // [k][canonical index]
    std::vector<std::uint64_t> stage_completed;          // per k
    double absorbed_fraction = 0.0;
    double censored_fraction = 0.0;
};

RimHaltingRun rim_halting_csqst(const RimParams& params, std::size_t x,
                                const SimulationConfig& config);

}  // namespace hitlab
