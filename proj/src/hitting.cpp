#include "hitlab/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hitlab {

MetaSeries meta_series(const SubChain& sub, const SpectralTriple& triple,
                       const std::vector<double>& alpha_a, std::size_t horizon) {
    const std::size_t n = sub.PA.rows;
    MetaSeries out;
    out.alpha_gamma = dot(alpha_a, triple.gamma);
    out.survival.resize(horizon + 1);
    out.meta.resize(horizon + 1);
    out.meta_scaled.resize(horizon + 1);

    std::vector<double> w = alpha_a;
    for (std::size_t t = 0; t <= horizon; ++t) {
        double total = 0.0;
        double min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < n; ++y) {
            total += w[y];
            min_ratio = std::min(min_ratio, w[y] / triple.mu_star[y]);
        }
        const double lt = std::pow(triple.lambda, static_cast<double>(t));
        out.survival[t] = lt * total;
        out.meta[t] = std::max(lt * (total - min_ratio), 0.0);
        out.meta_scaled[t] = std::max((total - min_ratio) / out.alpha_gamma, 0.0);
        if (t < horizon) {
            std::vector<double> next = row_times(w, sub.PA);
            for (double& v : next) v /= triple.lambda;
            w = std::move(next);
        }
    }
    return out;
}

std::vector<double> metastability_survival(const MarkovChain& chain, const SubChain& sub,
                                           const SpectralTriple& triple,
                                           const SeparationTable& sep, std::size_t horizon) {
    if (sep.horizon < horizon)
        throw std::invalid_argument("metastability_survival: table shorter than horizon");
    const Distribution alpha_full = alpha_to_full(chain, sep.alpha);
    const std::vector<double> alive = survival(chain, alpha_full, horizon);
    std::vector<double> out(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t) {
        const double lead =
            std::pow(triple.lambda, static_cast<double>(t)) * sep.min_ratio[t];
        const double v = alive[t] - lead;
        if (v < -1e-12)
            throw ResidualError("negative strong-metastability survival at t=" +
                                std::to_string(t) + " (" + std::to_string(v) + ")");
        out[t] = std::max(v, 0.0);
    }
    return out;
}

ExitDecomposition exit_decomposition(const MarkovChain& chain, const SubChain& sub,
                                     const SpectralTriple& triple,
                                     const TrackingTable& tracking) {
    const std::size_t ng = chain.goal.size();
    ExitDecomposition out;
    out.layer0_absorbed.assign(ng, 0.0);
    for (std::size_t t = 0; t <= tracking.horizon; ++t) {
        for (std::size_t g = 0; g < ng; ++g) out.layer0_absorbed[g] += tracking.absorbed[t][g];
        out.p_after += tracking.tau1_pmf[t];
    }
    out.unresolved = tracking.tau1_survival[tracking.horizon];

    const Distribution omega = hitting_measure(chain, sub, triple);
    out.predicted.resize(ng);
    for (std::size_t g = 0; g < ng; ++g)
        out.predicted[g] = out.layer0_absorbed[g] + omega[g] * out.p_after;

    const Distribution exact = absorption_profile(chain, alpha_to_full(chain, tracking.alpha));
    out.exact = exact.weights();
    for (std::size_t g = 0; g < ng; ++g)
        out.max_residual = std::max(out.max_residual, std::abs(out.predicted[g] - out.exact[g]));
    return out;
}

RepresentationReport representation(const MarkovChain& chain, const SubChain& sub,
                                    const SpectralTriple& triple,
                                    const std::vector<double>& alpha_a, std::size_t horizon) {
    RepresentationReport report;
    report.horizon = horizon;

    const Distribution alpha_full = alpha_to_full(chain, alpha_a);
    report.survival = survival(chain, alpha_full, horizon);

    const SeparationTable sep = separation_table(sub, triple, alpha_a, horizon);
    report.leading.resize(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t)
        report.leading[t] =
            std::pow(triple.lambda, static_cast<double>(t)) * sep.min_ratio[t];

    const ControlFunction control = control_minimal(sep);
    const TrackingTable tracking = tracking_recursion(chain, sub, triple, sep, control, horizon);
    report.remainder = tracking.tau1_survival;

    report.residual.resize(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t) {
        report.residual[t] = report.survival[t] - report.leading[t] - report.remainder[t];
        report.max_residual = std::max(report.max_residual, std::abs(report.residual[t]));
    }
    report.exit = exit_decomposition(chain, sub, triple, tracking);
    report.absorbed_total.resize(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t)
        report.absorbed_total[t] = sum(tracking.absorbed[t]);
    report.tracking_closed_form_max = tracking.closed_form_max_diff;
    report.tracking_mass_defect_max = tracking.mass_conservation_max;
    for (double dev : tracking.jump_flux_relative_dev)
        report.tracking_flux_dev_max = std::max(report.tracking_flux_dev_max, dev);
    return report;
}

TailCertificate certify_plain_tail(const std::vector<double>& f, std::size_t horizon) {
    TailCertificate cert;
    for (std::size_t t0 = 1; t0 < f.size() && t0 <= horizon; ++t0) {
        const double q = f[t0];
        if (!(q < 1.0)) continue;
        const std::size_t k0 = (horizon + 1) / t0;
        const double qk = std::pow(q, static_cast<double>(k0));
        const double bound = static_cast<double>(t0) * qk / (1.0 - q);
        if (!cert.ok || bound < cert.bound) {
            cert.ok = true;
            cert.bound = bound;
            cert.t0 = t0;
            cert.q = q;
        }
    }
    return cert;
}

TailCertificate certify_scaled_tail(const std::vector<double>& f, double lambda,
                                    std::size_t horizon) {
    TailCertificate cert;
    for (std::size_t t0 = 1; t0 < f.size() && t0 <= horizon; ++t0) {
        const double lt0 = std::pow(lambda, static_cast<double>(t0));
        const double r = f[t0] / lt0;
        if (!(r < 1.0)) continue;
        const std::size_t k0 = (horizon + 1) / t0;
        // term(u) <= q^k lambda^{-u} for u in block k; each block sums below
        // t0 lambda^{-(k+1) t0} q^k.
        const double bound =
            static_cast<double>(t0) / lt0 * std::pow(r, static_cast<double>(k0)) / (1.0 - r);
        if (!cert.ok || bound < cert.bound) {
            cert.ok = true;
            cert.bound = bound;
            cert.t0 = t0;
            cert.q = f[t0];
        }
    }
    return cert;
}

std::vector<double> sup_meta_over_diracs(const SubChain& sub, const SpectralTriple& triple,
                                         std::size_t horizon) {
    const std::size_t n = sub.PA.rows;
    std::vector<std::vector<double>> per_state(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            std::vector<double> alpha(n, 0.0);
            alpha[x] = 1.0;
            per_state[x] = meta_series(sub, triple, alpha, horizon).meta;
        }
    });
    std::vector<double> f(horizon + 1, 0.0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t t = 0; t <= horizon; ++t) f[t] = std::max(f[t], per_state[x][t]);
    return f;
}

MeanMetastabilityTime mean_metastability_time(const SubChain& sub, const SpectralTriple& triple,
                                              std::size_t horizon) {
    const std::size_t n = sub.PA.rows;
    std::vector<double> sums(n, 0.0);
    std::vector<std::vector<double>> per_state(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            std::vector<double> alpha(n, 0.0);
            alpha[x] = 1.0;
            per_state[x] = meta_series(sub, triple, alpha, horizon).meta;
            sums[x] = sum(per_state[x]);
        }
    });
    std::vector<double> f(horizon + 1, 0.0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t t = 0; t <= horizon; ++t) f[t] = std::max(f[t], per_state[x][t]);

    const TailCertificate tail = certify_plain_tail(f, horizon);
    if (!tail.ok)
        throw ConvergenceError("cannot certify the metastability-time tail: no t0 with "
                               "sup_x P(tau_{*,G} > t0) < 1 within the horizon");

    MeanMetastabilityTime out;
    out.argmax = static_cast<std::size_t>(
        std::max_element(sums.begin(), sums.end()) - sums.begin());
    out.R = sums[out.argmax];
    out.tail_bound = tail.bound;
    return out;
}

MetastabilityProfile metastability_rate(double R, double T, double lambda) {
    MetastabilityProfile p;
    p.R = R;
    p.T = T;
    p.ratio = R / (T * std::pow(lambda, T));
    p.rate_a = -std::log(p.ratio);  // +inf when R == 0
    p.hypothesis = p.ratio < 1.0;
    return p;
}

BoundCheckTable exponential_bound_check(const MarkovChain& chain, const SubChain& sub,
                                        const SpectralTriple& triple,
                                        const std::vector<double>& alpha_a,
                                        const MetastabilityProfile& profile, int n_max) {
    BoundCheckTable table;
    table.rate_a = profile.rate_a;
    table.hypothesis = profile.hypothesis && profile.rate_a > 0.0;
    {
        const double lt = std::pow(triple.lambda, profile.T);
        table.t_sanity = std::exp(-1.0 / triple.lambda) <= lt + 1e-12 &&
                         lt <= std::exp(-1.0) + 1e-12;
    }
    if (!table.hypothesis) return table;  // check not applicable, reported as such

    const std::size_t horizon =
        static_cast<std::size_t>(std::ceil(static_cast<double>(n_max) * profile.T)) + 1;
    const SeparationTable sep = separation_table(sub, triple, alpha_a, horizon);
    const MetaSeries series = meta_series(sub, triple, alpha_a, horizon);
    const Distribution alpha_full = alpha_to_full(chain, alpha_a);
    const std::vector<double> exact = survival(chain, alpha_full, horizon);
    const double ag = sep.alpha_gamma;

    const double ea = std::exp(-profile.rate_a);
    table.all_ok = true;
    for (int n = 1; n <= n_max; ++n) {
        BoundCheckRow row;
        row.n = n;
        const double nt = static_cast<double>(n) * profile.T;
        row.t_floor = static_cast<std::size_t>(std::floor(nt));
        row.t_ceil = static_cast<std::size_t>(std::ceil(nt));

        auto lhs_at = [&](std::size_t t) {
            const double denom = std::pow(triple.lambda, static_cast<double>(t)) * ag;
            return std::abs(exact[t] / denom - 1.0);
        };
        row.lhs_floor = lhs_at(row.t_floor);
        row.lhs_ceil = lhs_at(row.t_ceil);
        row.rhs = std::pow(ea, n) / ag * std::exp(1.0 / triple.lambda) / (1.0 - ea);
        row.rhs_in_proof = std::pow(ea, n) / ag;
        row.sharper_lower = -sep.sup[row.t_floor];
        row.sharper_upper = series.meta_scaled[row.t_floor];

        // Strict inequality where the bound is resolvable; 1e-12 of slack on
        // the |ratio - 1| scale once the right side sinks under the noise
        // floor of the exact survival ratio.
        auto holds = [](double lhs, double rhs) {
            return lhs < rhs + 1e-12 || (lhs == 0.0 && rhs == 0.0);
        };
        row.ok_floor = holds(row.lhs_floor, row.rhs);
        row.ok_ceil = holds(row.lhs_ceil, row.rhs);
        table.all_ok = table.all_ok && row.ok_floor && row.ok_ceil;
        table.rows.push_back(row);
    }
    return table;
}

Basin basin(const MarkovChain& chain, const SubChain& sub, const SpectralTriple& triple,
            double R) {
    Basin out;
    out.steps = 2 * static_cast<std::size_t>(std::ceil(R));
    const std::size_t n = sub.PA.rows;
    std::vector<double> alive(n, 1.0);
    for (std::size_t k = 0; k < out.steps; ++k) alive = times_col(sub.PA, alive);
    out.min_gamma = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < n; ++x) {
        if (alive[x] > 0.75) {
            out.states.push_back(sub.to_full[x]);
            out.min_gamma = std::min(out.min_gamma, triple.gamma[x]);
        }
    }
    if (out.states.empty()) {
        out.min_gamma = 0.0;
        out.gamma_bound_ok = true;
    } else {
        out.gamma_bound_ok = out.min_gamma >= 0.25;
    }
    return out;
}

LowerBoundChainCheck lower_bound_chain_check(const SubChain& sub, const SpectralTriple& triple,
                                             const std::vector<double>& alpha_a,
                                             std::size_t horizon, std::size_t t_max) {
    if (t_max >= horizon)
        throw std::invalid_argument("lower_bound_chain_check: need t_max < horizon");
    const SeparationTable sep = separation_table(sub, triple, alpha_a, horizon);
    const MetaSeries series = meta_series(sub, triple, alpha_a, horizon);
    const std::vector<double> f = sup_meta_over_diracs(sub, triple, horizon);
    const TailCertificate tail = certify_scaled_tail(f, triple.lambda, horizon);

    LowerBoundChainCheck out;
    out.certified = tail.ok;
    out.tail_bound = tail.ok ? tail.bound / sep.alpha_gamma : 0.0;

    // suffix[t] = sum_{u > t, u <= horizon} meta_scaled(u)
    std::vector<double> suffix(horizon + 2, 0.0);
    for (std::size_t u = horizon + 1; u-- > 1;)
        suffix[u - 1] = suffix[u] + series.meta_scaled[u];

    const double factor = (1.0 - triple.lambda) / triple.lambda;
    for (std::size_t t = 0; t <= t_max; ++t) {
        const double rhs = series.meta_scaled[t] + factor * (suffix[t] + out.tail_bound);
        out.max_violation = std::max(out.max_violation, sep.sup[t] - rhs);
    }
    return out;
}

}  // namespace hitlab
