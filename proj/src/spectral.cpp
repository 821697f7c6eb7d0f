#include "hitlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hitlab {

namespace {

constexpr double kIterTol = 1e-13;
constexpr std::size_t kMaxIter = 1000000;

}  // namespace

SpectralTriple principal_triple(const SubChain& sub) {
    const std::size_t n = sub.PA.rows;
    SpectralTriple out;

    // Left vector: mu_{k+1} = mu_k [P]_A / ||mu_k [P]_A||_1. The normalizer
    // converges to lambda because the iterates stay nonnegative with sum 1.
    std::vector<double> mu(n, 1.0 / static_cast<double>(n));
    double lambda = 0.0;
    std::size_t it = 0;
    for (; it < kMaxIter; ++it) {
        std::vector<double> next = row_times(mu, sub.PA);
        const double mass = sum(next);
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw ConvergenceError("left power iteration collapsed");
        for (double& v : next) v /= mass;
        const double diff = l1_diff(next, mu);
        mu = std::move(next);
        lambda = mass;
        if (diff < kIterTol) break;
    }
    if (it == kMaxIter) {
        std::vector<double> r = row_times(mu, sub.PA);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res += std::abs(r[i] - lambda * mu[i]);
        throw ConvergenceError("left power iteration did not converge within " +
                               std::to_string(kMaxIter) + " iterations (residual " +
                               std::to_string(res) + ")");
    }

    std::vector<double> g(n, 1.0);
    for (it = 0; it < kMaxIter; ++it) {
        std::vector<double> next = times_col(sub.PA, g);
        const double mass = sum(next);
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw ConvergenceError("right power iteration collapsed");
        const double scale = static_cast<double>(n) / mass;
        for (double& v : next) v *= scale;
        const double diff = l1_diff(next, g);
        g = std::move(next);
        if (diff < kIterTol) break;
    }
    if (it == kMaxIter)
        throw ConvergenceError("right power iteration did not converge within " +
                               std::to_string(kMaxIter) + " iterations");

    // Two-sided Rayleigh refinement: with both eigenvectors converged to eps,
    // this estimate is accurate to O(eps^2), which the long w recursions need.
    {
        const std::vector<double> mp = row_times(mu, sub.PA);
        lambda = dot(mp, g) / dot(mu, g);
    }

    // One shifted inverse-iteration polish per side. Power iteration alone
    // leaves O(1e-13) eigenvector error, which the jump-probability
    // denominators amplify past the flux-proportionality tolerance; a single
    // solve with a near-exact shift reaches the rounding floor.
    {
        const double shift = lambda + std::max(1e-8 * lambda, 1e-12);
        Dense left(n, n), right(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                right(i, j) = (i == j ? shift : 0.0) - sub.PA(i, j);
                left(i, j) = (i == j ? shift : 0.0) - sub.PA(j, i);
            }
        Dense rhs_mu(n, 1), rhs_g(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            rhs_mu(i, 0) = mu[i];
            rhs_g(i, 0) = g[i];
        }
        const Dense mu_ref = solve_linear(left, rhs_mu);
        const Dense g_ref = solve_linear(right, rhs_g);
        double mu_mass = 0.0, g_mass = 0.0;
        bool positive = true;
        for (std::size_t i = 0; i < n; ++i) {
            positive = positive && mu_ref(i, 0) > 0.0 && g_ref(i, 0) > 0.0;
            mu_mass += mu_ref(i, 0);
            g_mass += g_ref(i, 0);
        }
        if (positive && mu_mass > 0.0 && g_mass > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                mu[i] = mu_ref(i, 0) / mu_mass;
                g[i] = g_ref(i, 0) * (static_cast<double>(n) / g_mass);
            }
            const std::vector<double> mp = row_times(mu, sub.PA);
            lambda = dot(mp, g) / dot(mu, g);
        }
    }

    if (!(lambda > 0.0) || lambda >= 1.0)
        throw ConvergenceError("principal eigenvalue " + std::to_string(lambda) +
                               " is outside (0,1)");

    // Normalization order: sum mu* = 1 first, then scale gamma to mu*.gamma = 1.
    const double mu_mass = sum(mu);
    for (double& v : mu) v /= mu_mass;
    const double mg = dot(mu, g);
    if (!(mg > 0.0)) throw ConvergenceError("right eigenvector is not positive");
    for (double& v : g) v /= mg;

    for (double v : mu)
        if (!(v > 0.0)) throw ConvergenceError("quasi-stationary measure is not positive");
    for (double v : g)
        if (!(v > 0.0)) throw ConvergenceError("right eigenvector is not positive");

    out.lambda = lambda;
    out.mu_star = std::move(mu);
    out.gamma = std::move(g);

    {
        std::vector<double> r = row_times(out.mu_star, sub.PA);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            res += std::abs(r[i] - out.lambda * out.mu_star[i]);
        out.left_residual = res;

        std::vector<double> rg = times_col(sub.PA, out.gamma);
        double gres = 0.0, gmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gres = std::max(gres, std::abs(rg[i] - out.lambda * out.gamma[i]));
            gmax = std::max(gmax, std::abs(out.gamma[i]));
        }
        out.right_residual = gres / gmax;
    }
    out.iterations = it + 1;
    return out;
}

LocalChain local_chain(const SubChain& sub, const SpectralTriple& triple) {
    const std::size_t n = sub.PA.rows;
    LocalChain out;
    out.P_tilde = Dense(n, n);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
            out.P_tilde(x, y) =
                triple.gamma[y] * sub.PA(x, y) / (triple.gamma[x] * triple.lambda);
    out.nu.resize(n);
    for (std::size_t x = 0; x < n; ++x) out.nu[x] = triple.mu_star[x] * triple.gamma[x];
    return out;
}

Distribution hitting_measure(const MarkovChain& chain, const SubChain& sub,
                             const SpectralTriple& triple) {
    const std::size_t ng = chain.goal.size();
    std::vector<double> omega(ng, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
        double acc = 0.0;
        for (std::size_t i = 0; i < sub.to_full.size(); ++i)
            acc += triple.mu_star[i] * chain.P(sub.to_full[i], chain.goal[g]);
        omega[g] = acc / (1.0 - triple.lambda);
    }
    return Distribution::from_weights(std::move(omega));
}

TimeShift time_shift(const std::vector<double>& alpha_a, const SpectralTriple& triple) {
    TimeShift out;
    out.factor = dot(alpha_a, triple.gamma);
    if (!(out.factor > 0.0))
        throw ResidualError("alpha . gamma is not positive");
    out.delta = std::log(out.factor) / std::log(triple.lambda);
    return out;
}

std::vector<double> tilt(const std::vector<double>& alpha_a, const SpectralTriple& triple) {
    const double ag = dot(alpha_a, triple.gamma);
    if (!(ag > 0.0)) throw ResidualError("alpha . gamma is not positive");
    std::vector<double> out(alpha_a.size());
    for (std::size_t i = 0; i < alpha_a.size(); ++i)
        out[i] = alpha_a[i] * triple.gamma[i] / ag;
    return out;
}

SeparationTable separation_table(const SubChain& sub, const SpectralTriple& triple,
                                 const std::vector<double>& alpha_a, std::size_t horizon) {
    const std::size_t n = sub.PA.rows;
    if (alpha_a.size() != n) throw SchemaError("alpha has wrong dimension for A");

    SeparationTable table;
    table.alpha = alpha_a;
    const TimeShift shift = time_shift(alpha_a, triple);
    table.alpha_gamma = shift.factor;
    table.delta = shift.delta;
    table.horizon = horizon;
    table.w.reserve(horizon + 1);
    table.pointwise.reserve(horizon + 1);
    table.sup.resize(horizon + 1);
    table.min_ratio.resize(horizon + 1);

    std::vector<double> w = alpha_a;
    for (std::size_t t = 0; t <= horizon; ++t) {
        std::vector<double> pt(n);
        double min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < n; ++y) {
            const double ratio = w[y] / (table.alpha_gamma * triple.mu_star[y]);
            if (!std::isfinite(ratio))
                throw ConvergenceError("separation recursion produced a non-finite value");
            pt[y] = 1.0 - ratio;
            min_ratio = std::min(min_ratio, w[y] / triple.mu_star[y]);
        }
        const double raw_sup = 1.0 - min_ratio / table.alpha_gamma;
        table.pointwise.push_back(std::move(pt));
        table.sup[t] = std::clamp(raw_sup, 0.0, 1.0);
        table.min_ratio[t] = min_ratio;
        table.w.push_back(w);
        if (t < horizon) {
            std::vector<double> next = row_times(w, sub.PA);
            for (double& v : next) v /= triple.lambda;
            w = std::move(next);
        }
    }
    return table;
}

RoughBounds rough_bounds(const SeparationTable& sep, const SpectralTriple& triple,
                         std::size_t t) {
    if (t > sep.horizon) throw std::invalid_argument("rough_bounds: t beyond horizon");
    const double s = sep.sup[t];
    const double lead = std::pow(triple.lambda, static_cast<double>(t)) * sep.alpha_gamma;
    const double gamma_min = *std::min_element(triple.gamma.begin(), triple.gamma.end());
    RoughBounds out;
    out.lower = lead * (1.0 - s);
    out.upper = lead * (1.0 + s * (1.0 / gamma_min - 1.0));
    return out;
}

}  // namespace hitlab
