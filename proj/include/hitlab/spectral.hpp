#pragma once

#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/common.hpp"

namespace hitlab {

// Perron data of [P]_A: principal eigenvalue, quasi-stationary measure
// (left eigenvector, sum 1) and positive right eigenvector scaled so that
// mu_star . gamma = 1.
struct SpectralTriple {
    double lambda = 0.0;
    std::vector<double> mu_star;
    std::vector<double> gamma;
    double left_residual = 0.0;   // ||mu [P]_A - lambda mu||_1
    double right_residual = 0.0;  // ||[P]_A g - lambda g||_inf / ||g||_inf
    std::size_t iterations = 0;
};

// Doob transform of [P]_A by gamma, with its invariant measure
// nu(x) = mu_star(x) gamma(x).
struct LocalChain {
    Dense P_tilde;
    std::vector<double> nu;
};

struct TimeShift {
    double factor = 1.0;  // alpha . gamma = lambda^delta
    double delta = 0.0;   // log_lambda(alpha . gamma)
};

// Per-time separation data for a start distribution alpha on A.
//
// w[t] is the rescaled evolution w_t = (alpha [P]_A^t) / lambda^t, which stays
// bounded (it converges to (alpha.gamma) mu_star), so long horizons never
// underflow. Pointwise separation values are stored unclamped; only the sup
// is clamped into [0,1].
struct SeparationTable {
    std::vector<double> alpha;                  // over A
    double alpha_gamma = 1.0;
    double delta = 0.0;
    std::size_t horizon = 0;
    std::vector<std::vector<double>> w;         // t = 0..horizon
    std::vector<std::vector<double>> pointwise; // s(t,y), unclamped
    std::vector<double> sup;                    // s(t), clamped to [0,1]
    std::vector<double> min_ratio;              // min_y w_t(y)/mu*(y)

    // s(-1) := 1 by convention.
    double sep_at(long t) const { return t < 0 ? 1.0 : sup[static_cast<std::size_t>(t)]; }
};

struct RoughBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// Deterministic power iteration (left and right), tolerance 1e-13 on the
// successive-iterate L1 difference, at most 1e6 iterations.
SpectralTriple principal_triple(const SubChain& sub);

LocalChain local_chain(const SubChain& sub, const SpectralTriple& triple);

// omega(y) = sum_z mu*(z) P(z,y) / (1 - lambda) over the target states.
Distribution hitting_measure(const MarkovChain& chain, const SubChain& sub,
                             const SpectralTriple& triple);

TimeShift time_shift(const std::vector<double>& alpha_a, const SpectralTriple& triple);

// Tilted start measure alpha~(x) = alpha(x) gamma(x) / (alpha . gamma).
std::vector<double> tilt(const std::vector<double>& alpha_a, const SpectralTriple& triple);

SeparationTable separation_table(const SubChain& sub, const SpectralTriple& triple,
                                 const std::vector<double>& alpha_a, std::size_t horizon);

// lambda^{t+delta} (1 - s(t)) <= P(tau_G > t) <= lambda^{t+delta} [1 + s(t)(1/min gamma - 1)].
RoughBounds rough_bounds(const SeparationTable& sep, const SpectralTriple& triple,
                         std::size_t t);

}  // namespace hitlab
