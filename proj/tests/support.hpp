#pragma once

// Test-side fixtures and independent oracles. Everything here checks the
// library from the outside: the eigen oracle has its own solver, the
// propagation oracle accumulates in extended precision, and the trajectory
// oracle uses std::mt19937_64 rather than the library's counter streams.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/rim.hpp"
#include "hitlab/spectral.hpp"

namespace testsupport {

inline hitlab::MarkovChain two_state() {
    hitlab::Dense p(2, 2);
    p(0, 0) = 0.5;
    p(0, 1) = 0.5;
    p(1, 1) = 1.0;
    return hitlab::make_chain({"s0", "s1"}, {"s1"}, std::move(p));
}

inline std::string fixture_path(const std::string& name) {
#ifdef HITLAB_FIXTURE_DIR
    return std::string(HITLAB_FIXTURE_DIR) + "/" + name;
#else
    return name;
#endif
}

// Deterministic "random" chains: strictly positive transient rows plus a
// leak to every goal state, so the restriction is primitive at power 1.
inline hitlab::MarkovChain random_chain(std::uint64_t seed, std::size_t n_transient,
                                        std::size_t n_goal) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = n_transient + n_goal;
    hitlab::Dense p(n, n, 0.0);
    std::vector<std::string> states, goals;
    for (std::size_t i = 0; i < n_transient; ++i) states.push_back("t" + std::to_string(i));
    for (std::size_t g = 0; g < n_goal; ++g) {
        states.push_back("g" + std::to_string(g));
        goals.push_back("g" + std::to_string(g));
    }
    for (std::size_t i = 0; i < n_transient; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n_transient; ++j) {
            const double u = unif(gen);
            p(i, j) = u * u + 0.01;
            row_sum += p(i, j);
        }
        for (std::size_t g = 0; g < n_goal; ++g) {
            const double u = unif(gen);
            p(i, n_transient + g) = 0.02 * (u * u + 0.05);
            row_sum += p(i, n_transient + g);
        }
        for (std::size_t j = 0; j < n; ++j) p(i, j) /= row_sum;
    }
    for (std::size_t g = 0; g < n_goal; ++g) p(n_transient + g, n_transient + g) = 1.0;
    return hitlab::make_chain(std::move(states), std::move(goals), std::move(p));
}

#if defined(__SIZEOF_FLOAT128__)
using wide_t = __float128;
#else
using wide_t = long double;
#endif

// Extended-precision law propagation (the redundant-precision oracle).
inline std::vector<double> propagate_wide(const hitlab::MarkovChain& chain,
                                          const std::vector<double>& alpha, std::size_t t) {
    const std::size_t n = chain.n_states();
    std::vector<wide_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = alpha[i];
    for (std::size_t step = 0; step < t; ++step) {
        std::vector<wide_t> next(n, wide_t(0));
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] == wide_t(0)) continue;
            for (std::size_t j = 0; j < n; ++j)
                next[j] += v[i] * wide_t(chain.P(i, j));
        }
        v = std::move(next);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(v[i]);
    return out;
}

inline double survival_wide(const hitlab::MarkovChain& chain,
                            const std::vector<double>& alpha, std::size_t t) {
    const std::vector<double> v = propagate_wide(chain, alpha, t);
    double alive = 0.0;
    for (std::size_t y : chain.transient) alive += v[y];
    return alive;
}

// Independent eigen oracle: shifted inverse iteration with its own
// elimination routine (no calls into the library's solver or iteration).
struct OracleTriple {
    double lambda;
    std::vector<double> mu_star;
    std::vector<double> gamma;
};

inline std::vector<double> oracle_solve(std::vector<std::vector<double>> m,
                                        std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        std::swap(m[piv], m[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t j = c; j < n; ++j) m[r][j] -= f * m[c][j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t c = n; c-- > 0;) {
        double acc = b[c];
        for (std::size_t j = c + 1; j < n; ++j) acc -= m[c][j] * x[j];
        x[c] = acc / m[c][c];
    }
    return x;
}

inline OracleTriple inverse_iteration_triple(const hitlab::SubChain& sub) {
    const std::size_t n = sub.PA.rows;
    auto matrix_shifted = [&](double shift, bool transpose) {
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                m[i][j] = (i == j ? shift : 0.0) -
                          (transpose ? sub.PA(j, i) : sub.PA(i, j));
        return m;
    };

    // Crude upper estimate of the spectral radius, then iterate the shift down.
    double shift = 1.0 + 1e-9;
    std::vector<double> mu(n, 1.0 / static_cast<double>(n)), g(n, 1.0);
    double lambda = 0.0;
    for (int round = 0; round < 60; ++round) {
        mu = oracle_solve(matrix_shifted(shift, true), mu);
        g = oracle_solve(matrix_shifted(shift, false), g);
        double mu_mass = 0.0, g_max = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu_mass += std::abs(mu[i]);
            g_max = std::max(g_max, std::abs(g[i]));
        }
        for (auto& v : mu) v = std::abs(v) / mu_mass;
        for (auto& v : g) v = std::abs(v) / g_max;
        // Rayleigh update of the shift keeps the iteration pinned on the
        // dominant (Perron) eigenvalue.
        std::vector<double> pm(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) pm[j] += mu[i] * sub.PA(i, j);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += pm[i] * g[i];
            den += mu[i] * g[i];
        }
        const double next = num / den;
        if (std::abs(next - lambda) < 1e-15) {
            lambda = next;
            break;
        }
        lambda = next;
        shift = lambda + std::max(1e-10, 1e-10 * lambda);
    }
    double mg = 0.0;
    for (std::size_t i = 0; i < n; ++i) mg += mu[i] * g[i];
    for (auto& v : g) v /= mg;
    return OracleTriple{lambda, mu, g};
}

// Plain trajectory oracle on the base chain (library-independent RNG).
struct WalkStats {
    std::vector<std::size_t> exit_counts;  // per goal state, original order
    std::vector<std::size_t> survival_counts;  // per grid time
    std::size_t absorbed = 0;
    std::size_t trajectories = 0;
};

inline WalkStats walk_oracle(const hitlab::MarkovChain& chain,
                             const std::vector<double>& alpha, std::size_t trajectories,
                             std::size_t horizon, const std::vector<std::size_t>& grid,
                             std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = chain.n_states();
    WalkStats stats;
    stats.exit_counts.assign(chain.goal.size(), 0);
    stats.survival_counts.assign(grid.size(), 0);
    stats.trajectories = trajectories;

    auto draw = [&](const double* w) {
        const double u = unif(gen);
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (w[j] > 0.0) last = j;
            acc += w[j];
            if (u < acc) return j;
        }
        return last;
    };

    for (std::size_t i = 0; i < trajectories; ++i) {
        std::size_t x = draw(alpha.data());
        std::size_t t = 0;
        while (!chain.is_goal[x] && t < horizon) {
            x = draw(chain.P.row(x));
            ++t;
        }
        const bool absorbed = chain.is_goal[x];
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (!absorbed || t > grid[k]) ++stats.survival_counts[k];
        if (absorbed) {
            ++stats.absorbed;
            for (std::size_t g = 0; g < chain.goal.size(); ++g)
                if (chain.goal[g] == x) ++stats.exit_counts[g];
        }
    }
    return stats;
}

}  // namespace testsupport
