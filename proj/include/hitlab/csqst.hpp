#pragma once

#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/common.hpp"
#include "hitlab/spectral.hpp"

namespace hitlab {

// This module builds randomized stopping times whose state, conditioned on
// survival, is distributed exactly as mu*. The classical strong stationary
// time for an ergodic (non-absorbing) chain is the same two-layer
// construction with the stationary law in place of mu* and no conditioning;
// it is intentionally not exposed as an operation here — only the absorbing,
// conditioned variant is.

// Nonincreasing dominator of the separation with m(-1) = 1.
class ControlFunction {
public:
    ControlFunction(std::vector<double> values, bool minimal);

    // t = -1 returns 1 by construction.
    double at(long t) const {
        return t < 0 ? 1.0 : values_[static_cast<std::size_t>(t)];
    }
    std::size_t horizon() const { return values_.size() - 1; }
    bool minimal() const { return minimal_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;  // m(0)..m(horizon)
    bool minimal_;
};

// m(t) = s(t) (with a running-min guard against 1e-16 level noise in the
// converged tail of the separation recursion).
ControlFunction control_minimal(const SeparationTable& sep);

// m(t) = max(s(t), c rho^t), the non-minimal family exercised by tests.
ControlFunction control_geometric(const SeparationTable& sep, double c, double rho);

// J(t, z) over the full state space; 1 on the target set.
std::vector<double> jump_probabilities(const MarkovChain& chain, const SubChain& sub,
                                       const ControlFunction& control,
                                       const SeparationTable& sep, std::size_t t);

// Exact layer-0 evolution of the two-layer tracking construction.
struct TrackingTable {
    std::size_t horizon = 0;
    std::vector<double> alpha;                 // over A
    std::vector<std::vector<double>> phi;      // layer-0 mass over A, t = 0..horizon
    std::vector<double> tau1_pmf;              // P(tau_1 = t < tau_G)
    std::vector<double> tau1_survival;         // P(tau_1 and tau_G both > t) = sum phi_t
    std::vector<std::vector<double>> absorbed; // per-t mass entering each target state
    std::vector<double> jump_flux_relative_dev; // per-t deviation of the entry flux from mu*
    double closed_form_max_diff = 0.0;  // recursion pmf vs lambda^{t+delta}(m(t-1)-m(t))
    double mass_conservation_max = 0.0;
};

TrackingTable tracking_recursion(const MarkovChain& chain, const SubChain& sub,
                                 const SpectralTriple& triple, const SeparationTable& sep,
                                 const ControlFunction& control, std::size_t horizon);

// Law of the stopping time realized by the tracking construction, in closed
// form from the control function.
struct CsqstDistribution {
    std::vector<double> pmf;         // P(tau_* = t < tau_G)
    std::vector<double> cumulative;  // P(tau_* <= t < tau_G) = lambda^{t+delta}(1-m(t))
    double defect = 0.0;             // 1 - sum pmf (upper estimate of P(tau_G < tau_*))
    double tail_bound = 0.0;         // bound on the pmf mass beyond the horizon
    double convolution_max_diff = 0.0;  // cumulative vs sum_{u<=t} lambda^{t-u} pmf(u)
};

CsqstDistribution csqst_from_control(const SeparationTable& sep, const SpectralTriple& triple,
                                     const ControlFunction& control);
CsqstDistribution minimal_csqst(const SeparationTable& sep, const SpectralTriple& triple);

// Layer-0 law conditioned on not having jumped: phi_t / sum(phi_t).
std::vector<double> ephemeral(const TrackingTable& tracking, std::size_t t);

// Residuals of the three semigroup identities at the split (t, u), using the
// minimal control (the identities are only claimed for it).
struct SemigroupReport {
    double ephemeral_residual = 0.0;  // Phi_{t+u} vs Phi_u restarted from Phi_t
    double tau1_residual = 0.0;       // P(tau_1 > t+u) vs product form
    double jump_residual = 0.0;       // J(t+u, .) vs restarted J(u, .)
    bool degenerate = false;          // no surviving mass at t
};

SemigroupReport verify_semigroup(const MarkovChain& chain, const SubChain& sub,
                                 const SpectralTriple& triple,
                                 const std::vector<double>& alpha_a,
                                 std::size_t t, std::size_t u);

}  // namespace hitlab
