#include "hitlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hitlab {

namespace {

Dense matrix_power(const Dense& m, std::size_t t) {
    Dense out(m.rows, m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) out(i, i) = 1.0;
    for (std::size_t k = 0; k < t; ++k) {
        Dense next(m.rows, m.cols, 0.0);
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t inner = 0; inner < m.cols; ++inner) {
                const double v = out(i, inner);
                if (v == 0.0) continue;
                for (std::size_t j = 0; j < m.cols; ++j) next(i, j) += v * m(inner, j);
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace

std::size_t default_horizon(const SubChain& sub, const SpectralTriple& triple,
                            const std::vector<std::vector<double>>& alphas_a,
                            std::size_t cap) {
    constexpr double kDecayTarget = 1e-12;
    std::size_t trial = 64;
    while (true) {
        const std::size_t h = std::min(trial, cap);
        bool settled = true;
        std::size_t needed = 0;

        const std::vector<double> f = sup_meta_over_diracs(sub, triple, h);
        std::size_t t_meta = h + 1;
        for (std::size_t t = 0; t <= h; ++t)
            if (f[t] < kDecayTarget) { t_meta = t; break; }
        settled = t_meta <= h;
        needed = std::max(needed, t_meta);

        for (const auto& alpha : alphas_a) {
            const SeparationTable sep = separation_table(sub, triple, alpha, h);
            std::size_t t_sep = h + 1;
            for (std::size_t t = 0; t <= h; ++t)
                if (sep.sup[t] < kDecayTarget) { t_sep = t; break; }
            settled = settled && t_sep <= h;
            needed = std::max(needed, t_sep);
        }

        if (settled) return std::max<std::size_t>(needed, 16);
        if (h == cap) return cap;
        trial *= 4;
    }
}

AnalysisResult analyze_chain(const MarkovChain& chain,
                             const std::vector<std::pair<std::string, Distribution>>& alphas,
                             const AnalysisOptions& options) {
    AnalysisResult result;
    result.chain = chain;
    result.tolerance = options.tolerance;
    result.sub = restrict_chain(chain);
    result.triple = principal_triple(result.sub);
    result.local = local_chain(result.sub, result.triple);
    result.omega = hitting_measure(chain, result.sub, result.triple);

    std::vector<std::vector<double>> alphas_a;
    for (const auto& [text, alpha] : alphas)
        alphas_a.push_back(alpha_on_transient(chain, alpha));

    result.horizon = options.horizon
                         ? *options.horizon
                         : default_horizon(result.sub, result.triple, alphas_a,
                                           options.horizon_cap);

    auto fail = [&](const std::string& what, double value, double threshold) {
        if (!(value <= threshold))
            result.failures.push_back(what + " = " + std::to_string(value) +
                                      " exceeds " + std::to_string(threshold));
    };

    fail("eigen residual (left)", result.triple.left_residual, 1e-10);
    fail("eigen residual (right)", result.triple.right_residual, 1e-10);
    fail("mu*.gamma normalization",
         std::abs(dot(result.triple.mu_star, result.triple.gamma) - 1.0), 1e-12);
    fail("local chain row sums", local_rows_residual(result.local), 1e-12);
    fail("local chain invariance", local_invariance_residual(result.local), 1e-10);

    result.mmt = mean_metastability_time(result.sub, result.triple, result.horizon);
    result.profile = metastability_rate(result.mmt.R, 1.0 / (1.0 - result.triple.lambda),
                                        result.triple.lambda);
    result.basin_report = basin(chain, result.sub, result.triple, result.mmt.R);
    if (!result.basin_report.gamma_bound_ok)
        result.failures.push_back("basin gamma bound violated (min gamma " +
                                  std::to_string(result.basin_report.min_gamma) + ")");

    for (std::size_t k = 0; k < alphas.size(); ++k) {
        AlphaAnalysis a;
        a.spec_text = alphas[k].first;
        a.alpha_a = alphas_a[k];
        a.shift = time_shift(a.alpha_a, result.triple);
        a.sep = separation_table(result.sub, result.triple, a.alpha_a, result.horizon);
        a.csqst = minimal_csqst(a.sep, result.triple);
        a.repr = representation(chain, result.sub, result.triple, a.alpha_a, result.horizon);
        a.bounds = exponential_bound_check(chain, result.sub, result.triple, a.alpha_a,
                                           result.profile, options.bound_n_max);
        a.semigroup = verify_semigroup(chain, result.sub, result.triple, a.alpha_a, 2, 3);

        for (std::size_t t = 0; t <= result.horizon; ++t) {
            const RoughBounds rb = rough_bounds(a.sep, result.triple, t);
            a.notada_excess = std::max(a.notada_excess, rb.lower - 1.0);
            a.sandwich_violation = std::max(a.sandwich_violation,
                                            rb.lower - a.repr.survival[t]);
            a.sandwich_violation = std::max(a.sandwich_violation,
                                            a.repr.survival[t] - rb.upper);
        }

        const std::string tag = "alpha[" + a.spec_text + "] ";
        fail(tag + "representation residual", a.repr.max_residual, options.tolerance);
        fail(tag + "csqst closed form vs recursion", a.repr.tracking_closed_form_max,
             options.tolerance);
        fail(tag + "csqst entry flux deviation", a.repr.tracking_flux_dev_max,
             options.tolerance);
        fail(tag + "exit decomposition residual", a.repr.exit.max_residual,
             options.tolerance);
        fail(tag + "csqst convolution identity", a.csqst.convolution_max_diff,
             options.tolerance);
        fail(tag + "time-shift bound excess", a.notada_excess, 1e-12);
        fail(tag + "rough-bound sandwich violation", a.sandwich_violation, 1e-12);
        if (!a.semigroup.degenerate) {
            fail(tag + "semigroup ephemeral residual", a.semigroup.ephemeral_residual,
                 options.tolerance);
            fail(tag + "semigroup tau1 residual", a.semigroup.tau1_residual,
                 options.tolerance);
            fail(tag + "semigroup jump residual", a.semigroup.jump_residual,
                 options.tolerance);
        }
        if (a.bounds.hypothesis && !a.bounds.all_ok)
            result.failures.push_back(tag + "exponential bound violated");

        result.alphas.push_back(std::move(a));
    }

    result.passed = result.failures.empty();
    return result;
}

double local_rows_residual(const LocalChain& local) {
    double worst = 0.0;
    for (std::size_t x = 0; x < local.P_tilde.rows; ++x) {
        double total = 0.0;
        for (std::size_t y = 0; y < local.P_tilde.cols; ++y) total += local.P_tilde(x, y);
        worst = std::max(worst, std::abs(total - 1.0));
    }
    return worst;
}

double local_invariance_residual(const LocalChain& local) {
    const std::vector<double> next = row_times(local.nu, local.P_tilde);
    double worst = 0.0;
    for (std::size_t y = 0; y < next.size(); ++y)
        worst = std::max(worst, std::abs(next[y] - local.nu[y]));
    return worst;
}

double doob_power_identity_residual(const SubChain& sub, const SpectralTriple& triple,
                                    const LocalChain& local, std::size_t t) {
    const Dense lhs = matrix_power(local.P_tilde, t);
    const Dense base = matrix_power(sub.PA, t);
    const double lt = std::pow(triple.lambda, static_cast<double>(t));
    double worst = 0.0;
    for (std::size_t x = 0; x < lhs.rows; ++x)
        for (std::size_t y = 0; y < lhs.cols; ++y) {
            const double rhs =
                triple.gamma[y] * base(x, y) / (triple.gamma[x] * lt);
            worst = std::max(worst, std::abs(lhs(x, y) - rhs));
        }
    return worst;
}

VerifyResult verify_chain(const MarkovChain& chain, const AnalysisOptions& options) {
    VerifyResult out;
    auto push = [&](const std::string& name, double value, double threshold) {
        out.checks.push_back({name, value, threshold, value <= threshold});
    };

    const SubChain sub = restrict_chain(chain);
    const SpectralTriple triple = principal_triple(sub);
    const LocalChain local = local_chain(sub, triple);

    push("eigen residual (left)", triple.left_residual, 1e-10);
    push("eigen residual (right)", triple.right_residual, 1e-10);
    push("mu* normalization", std::abs(sum(triple.mu_star) - 1.0), 1e-12);
    push("mu*.gamma normalization", std::abs(dot(triple.mu_star, triple.gamma) - 1.0), 1e-12);
    push("local chain row sums", local_rows_residual(local), 1e-12);
    push("local chain invariance", local_invariance_residual(local), 1e-10);
    for (std::size_t t : {std::size_t{1}, std::size_t{2}, std::size_t{5}})
        push("Doob power identity t=" + std::to_string(t),
             doob_power_identity_residual(sub, triple, local, t), 1e-12);

    {
        // Hitting measure mass, before any normalization.
        double total = 0.0;
        for (std::size_t g : chain.goal) {
            double acc = 0.0;
            for (std::size_t i = 0; i < sub.to_full.size(); ++i)
                acc += triple.mu_star[i] * chain.P(sub.to_full[i], g);
            total += acc / (1.0 - triple.lambda);
        }
        push("hitting measure mass", std::abs(total - 1.0), 1e-12);
    }

    const Distribution alpha = Distribution::uniform_on(chain.n_states(), chain.transient);
    const std::vector<double> alpha_a = alpha_on_transient(chain, alpha);
    const std::size_t horizon =
        options.horizon ? *options.horizon
                        : default_horizon(sub, triple, {alpha_a}, options.horizon_cap);

    const RepresentationReport repr = representation(chain, sub, triple, alpha_a, horizon);
    push("representation residual", repr.max_residual, options.tolerance);
    push("csqst closed form vs recursion", repr.tracking_closed_form_max, options.tolerance);
    push("csqst entry flux deviation", repr.tracking_flux_dev_max, options.tolerance);
    push("tracking mass conservation", repr.tracking_mass_defect_max, options.tolerance);
    push("exit decomposition residual", repr.exit.max_residual, options.tolerance);

    const SeparationTable sep = separation_table(sub, triple, alpha_a, horizon);
    double notada = 0.0, sandwich = 0.0, monotone = 0.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
        const RoughBounds rb = rough_bounds(sep, triple, t);
        notada = std::max(notada, rb.lower - 1.0);
        sandwich = std::max(sandwich, rb.lower - repr.survival[t]);
        sandwich = std::max(sandwich, repr.survival[t] - rb.upper);
        if (t > 0) monotone = std::max(monotone, sep.sup[t] - sep.sup[t - 1]);
    }
    push("time-shift bound excess", notada, 1e-12);
    push("rough-bound sandwich violation", sandwich, 1e-12);
    push("separation monotonicity violation", monotone, 1e-12);

    {
        const std::vector<double> f = sup_meta_over_diracs(sub, triple, horizon);
        double violation = -1.0;
        const std::size_t grid = std::min<std::size_t>(20, horizon / 2);
        for (std::size_t u = 1; u <= grid; ++u)
            for (std::size_t v = 1; v <= grid; ++v)
                violation = std::max(violation, f[u + v] - f[u] * f[v]);
        push("submultiplicativity violation", violation, 1e-12);
    }

    for (auto [t, u] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 3}}) {
        const SemigroupReport sg = verify_semigroup(chain, sub, triple, alpha_a, t, u);
        if (sg.degenerate) {
            push("semigroup (" + std::to_string(t) + "," + std::to_string(u) + ")", 0.0,
                 options.tolerance);
        } else {
            const double worst = std::max({sg.ephemeral_residual, sg.tau1_residual,
                                           sg.jump_residual});
            push("semigroup (" + std::to_string(t) + "," + std::to_string(u) + ")", worst,
                 options.tolerance);
        }
    }

    out.passed = true;
    for (const auto& c : out.checks) out.passed = out.passed && c.ok;
    return out;
}

}  // namespace hitlab
