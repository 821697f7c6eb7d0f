#pragma once

#include <cstddef>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/common.hpp"
#include "hitlab/csqst.hpp"
#include "hitlab/spectral.hpp"

namespace hitlab {

// Survival and strong-metastability series from a start on A, computed through
// the rescaled w recursion so no lambda^{-t} ever appears.
struct MetaSeries {
    double alpha_gamma = 1.0;
    std::vector<double> survival;     // P(tau_G > t)
    std::vector<double> meta;         // P(tau_{*,G} > t)
    std::vector<double> meta_scaled;  // P(tau_{*,G} > t) / lambda^{t+delta}
};

MetaSeries meta_series(const SubChain& sub, const SpectralTriple& triple,
                       const std::vector<double>& alpha_a, std::size_t horizon);

// P(tau_{*,G} > t) = (1 - mu_t(G)) - lambda^t min_y w_t(y)/mu*(y); the formula
// route, independent of any tracking realization.
std::vector<double> metastability_survival(const MarkovChain& chain, const SubChain& sub,
                                           const SpectralTriple& triple,
                                           const SeparationTable& sep, std::size_t horizon);

struct ExitDecomposition {
    std::vector<double> layer0_absorbed;  // per target state, absorbed before the stop
    double p_after = 0.0;                 // P(tau_G > tau_*)
    double unresolved = 0.0;              // mass still undecided at the horizon
    std::vector<double> predicted;        // layer0 + omega * p_after
    std::vector<double> exact;            // absorption_profile
    double max_residual = 0.0;
};

ExitDecomposition exit_decomposition(const MarkovChain& chain, const SubChain& sub,
                                     const SpectralTriple& triple,
                                     const TrackingTable& tracking);

// Per-t assembly of the representation identity
//   survival = lambda^{t+delta}(1 - s(t)) + P(tau_{*,G} > t)
// with the three terms from three independent code paths (full-chain
// propagation, w recursion, tracking recursion).
struct RepresentationReport {
    std::size_t horizon = 0;
    std::vector<double> survival;
    std::vector<double> leading;
    std::vector<double> remainder;
    std::vector<double> residual;
    double max_residual = 0.0;
    ExitDecomposition exit;
    std::vector<double> absorbed_total;  // per-t layer-0 mass entering G
    // Diagnostics of the tracking recursion behind the remainder column.
    double tracking_closed_form_max = 0.0;
    double tracking_flux_dev_max = 0.0;
    double tracking_mass_defect_max = 0.0;
};

RepresentationReport representation(const MarkovChain& chain, const SubChain& sub,
                                    const SpectralTriple& triple,
                                    const std::vector<double>& alpha_a, std::size_t horizon);

// Geometric tail certificates built from submultiplicativity of
// f(t) = sup_x P(tau_{*,G}^x > t).
struct TailCertificate {
    bool ok = false;
    double bound = 0.0;
    std::size_t t0 = 0;
    double q = 0.0;
};

// Bound on sum_{u > horizon} f(u), valid when some f(t0) < 1.
TailCertificate certify_plain_tail(const std::vector<double>& f, std::size_t horizon);

// Bound on sum_{u > horizon} lambda^{-u} f(u), valid when some f(t0) < lambda^{t0}.
TailCertificate certify_scaled_tail(const std::vector<double>& f, double lambda,
                                    std::size_t horizon);

// f(t) = max over Dirac starts of P(tau_{*,G}^x > t); by convexity this equals
// the sup over all starts on A.
std::vector<double> sup_meta_over_diracs(const SubChain& sub, const SpectralTriple& triple,
                                         std::size_t horizon);

struct MeanMetastabilityTime {
    double R = 0.0;            // max over Dirac starts of E[tau_{*,G}]
    double tail_bound = 0.0;   // certified truncation error
    std::size_t argmax = 0;    // A index attaining the max
};

MeanMetastabilityTime mean_metastability_time(const SubChain& sub, const SpectralTriple& triple,
                                              std::size_t horizon);

struct MetastabilityProfile {
    double R = 0.0;
    double T = 0.0;        // 1 / (1 - lambda)
    double ratio = 0.0;    // R / (T lambda^T)
    double rate_a = 0.0;   // -ln(ratio); +inf when R = 0
    bool hypothesis = false;  // ratio < 1
};

MetastabilityProfile metastability_rate(double R, double T, double lambda);

struct BoundCheckRow {
    int n = 0;
    std::size_t t_floor = 0;
    std::size_t t_ceil = 0;
    double lhs_floor = 0.0;  // |P(tau_G > t)/lambda^{t+delta} - 1| at t = floor(nT)
    double lhs_ceil = 0.0;
    double rhs = 0.0;          // e^{-an} lambda^{-delta} e^{1/lambda} / (1 - e^{-a})
    double rhs_in_proof = 0.0; // e^{-an} / (alpha . gamma)
    double sharper_lower = 0.0;  // -s(t_floor)
    double sharper_upper = 0.0;  // lambda^{-t-delta} P(tau_{*,G} > t) at t_floor
    bool ok_floor = false;
    bool ok_ceil = false;
};

struct BoundCheckTable {
    bool hypothesis = false;
    double rate_a = 0.0;
    bool t_sanity = false;  // e^{-1/lambda} <= lambda^T <= e^{-1}
    std::vector<BoundCheckRow> rows;
    bool all_ok = false;
};

BoundCheckTable exponential_bound_check(const MarkovChain& chain, const SubChain& sub,
                                        const SpectralTriple& triple,
                                        const std::vector<double>& alpha_a,
                                        const MetastabilityProfile& profile, int n_max);

struct Basin {
    std::size_t steps = 0;              // 2 ceil(R)
    std::vector<std::size_t> states;    // full indices
    double min_gamma = 0.0;             // over members; 0 when empty
    bool gamma_bound_ok = true;         // gamma >= 1/4 for every member
};

Basin basin(const MarkovChain& chain, const SubChain& sub, const SpectralTriple& triple,
            double R);

// Max violation of the proof-side chain
//   s(t) <= lambda^{-t-delta} P(tau_{*,G}>t)
//           + (1-lambda)/lambda sum_{u>t} lambda^{-u-delta} P(tau_{*,G}>u)
// over t <= t_max, with the infinite sum truncated under a certified tail.
struct LowerBoundChainCheck {
    double max_violation = 0.0;
    double tail_bound = 0.0;
    bool certified = false;
};

LowerBoundChainCheck lower_bound_chain_check(const SubChain& sub, const SpectralTriple& triple,
                                             const std::vector<double>& alpha_a,
                                             std::size_t horizon, std::size_t t_max);

}  // namespace hitlab
