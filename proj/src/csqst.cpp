#include "hitlab/csqst.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hitlab {

namespace {

constexpr double kFlatJumpTol = 1e-15;  // 0/0 convention threshold for J

std::vector<double> jump_row_a(const ControlFunction& control, const SeparationTable& sep,
                               std::size_t t) {
    const std::size_t n = sep.alpha.size();
    std::vector<double> j(n, 0.0);
    const double num = control.at(static_cast<long>(t) - 1) - control.at(static_cast<long>(t));
    if (num <= kFlatJumpTol) return j;
    const auto& pt = sep.pointwise[t];
    const double prev = control.at(static_cast<long>(t) - 1);
    for (std::size_t y = 0; y < n; ++y) {
        const double den = prev - pt[y];
        if (den < 0.0)
            throw ResidualError("jump probability has a negative denominator at t=" +
                                std::to_string(t) + " (control does not dominate)");
        j[y] = den <= num ? 1.0 : num / den;
    }
    return j;
}

double lambda_power_shifted(const SpectralTriple& triple, const SeparationTable& sep,
                            std::size_t t) {
    // lambda^{t+delta} = lambda^t (alpha . gamma), never through lambda^{-t}.
    return std::pow(triple.lambda, static_cast<double>(t)) * sep.alpha_gamma;
}

}  // namespace

ControlFunction::ControlFunction(std::vector<double> values, bool minimal)
    : values_(std::move(values)), minimal_(minimal) {
    if (values_.empty()) throw std::invalid_argument("empty control function");
    double prev = 1.0;
    for (double& v : values_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + 1e-12)
            throw std::invalid_argument("control value out of [0,1]");
        if (v > prev + 1e-12) throw std::invalid_argument("control function increases");
        v = std::min(v, prev);
        prev = v;
    }
}

ControlFunction control_minimal(const SeparationTable& sep) {
    return ControlFunction(sep.sup, true);
}

ControlFunction control_geometric(const SeparationTable& sep, double c, double rho) {
    if (!(rho > 0.0) || rho >= 1.0 || !(c > 0.0))
        throw std::invalid_argument("control_geometric needs c > 0 and rho in (0,1)");
    std::vector<double> m(sep.sup.size());
    for (std::size_t t = 0; t < m.size(); ++t)
        m[t] = std::min(1.0, std::max(sep.sup[t], c * std::pow(rho, static_cast<double>(t))));
    return ControlFunction(std::move(m), false);
}

std::vector<double> jump_probabilities(const MarkovChain& chain, const SubChain& sub,
                                       const ControlFunction& control,
                                       const SeparationTable& sep, std::size_t t) {
    if (t > sep.horizon || t > control.horizon())
        throw std::invalid_argument("jump_probabilities: t beyond horizon");
    const std::vector<double> ja = jump_row_a(control, sep, t);
    std::vector<double> out(chain.n_states(), 1.0);
    for (std::size_t i = 0; i < sub.to_full.size(); ++i) out[sub.to_full[i]] = ja[i];
    return out;
}

TrackingTable tracking_recursion(const MarkovChain& chain, const SubChain& sub,
                                 const SpectralTriple& triple, const SeparationTable& sep,
                                 const ControlFunction& control, std::size_t horizon) {
    if (sep.horizon < horizon || control.horizon() < horizon)
        throw std::invalid_argument("tracking_recursion: tables shorter than horizon");
    const std::size_t na = sub.PA.rows;
    const std::size_t ng = chain.goal.size();

    TrackingTable table;
    table.horizon = horizon;
    table.alpha = sep.alpha;
    table.phi.assign(horizon + 1, std::vector<double>(na, 0.0));
    table.tau1_pmf.assign(horizon + 1, 0.0);
    table.tau1_survival.assign(horizon + 1, 0.0);
    table.absorbed.assign(horizon + 1, std::vector<double>(ng, 0.0));
    table.jump_flux_relative_dev.assign(horizon + 1, 0.0);

    auto flux_deviation = [&](const std::vector<double>& flux1, double pmf, double drop) {
        // Entry flux onto layer 1 must be proportional to mu*. Once the
        // control drop sinks to the w-recursion noise floor the jump
        // denominators cancel catastrophically and relative deviations stop
        // being resolvable, so the check is gated on a resolvable drop.
        if (pmf <= 0.0 || drop <= 1e-5) return 0.0;
        double dev = 0.0;
        for (std::size_t y = 0; y < na; ++y)
            dev = std::max(dev, std::abs(flux1[y] / (pmf * triple.mu_star[y]) - 1.0));
        return dev;
    };

    {
        const std::vector<double> j0 = jump_row_a(control, sep, 0);
        std::vector<double> flux1(na);
        double pmf0 = 0.0;
        for (std::size_t x = 0; x < na; ++x) {
            flux1[x] = sep.alpha[x] * j0[x];
            table.phi[0][x] = sep.alpha[x] - flux1[x];
            pmf0 += flux1[x];
        }
        table.tau1_pmf[0] = pmf0;
        table.tau1_survival[0] = sum(table.phi[0]);
        table.jump_flux_relative_dev[0] =
            flux_deviation(flux1, pmf0, 1.0 - control.at(0));
        table.closed_form_max_diff =
            std::abs(pmf0 - lambda_power_shifted(triple, sep, 0) * (1.0 - control.at(0)));
    }

    for (std::size_t t = 1; t <= horizon; ++t) {
        const std::vector<double>& prev = table.phi[t - 1];
        std::vector<double> flux = row_times(prev, sub.PA);
        for (std::size_t g = 0; g < ng; ++g) {
            double acc = 0.0;
            for (std::size_t x = 0; x < na; ++x)
                acc += prev[x] * chain.P(sub.to_full[x], chain.goal[g]);
            table.absorbed[t][g] = acc;
        }

        const std::vector<double> j = jump_row_a(control, sep, t);
        std::vector<double> flux1(na);
        double pmf = 0.0;
        for (std::size_t y = 0; y < na; ++y) {
            flux1[y] = flux[y] * j[y];
            table.phi[t][y] = flux[y] - flux1[y];
            pmf += flux1[y];
        }
        table.tau1_pmf[t] = pmf;
        table.tau1_survival[t] = sum(table.phi[t]);
        table.jump_flux_relative_dev[t] = flux_deviation(
            flux1, pmf,
            control.at(static_cast<long>(t) - 1) - control.at(static_cast<long>(t)));

        const double balance = table.tau1_survival[t] + pmf + sum(table.absorbed[t]) -
                               table.tau1_survival[t - 1];
        table.mass_conservation_max = std::max(table.mass_conservation_max, std::abs(balance));
        if (std::abs(balance) > 1e-10)
            throw ResidualError("tracking recursion lost mass at t=" + std::to_string(t) +
                                " (defect " + std::to_string(balance) + ")");

        const double closed = lambda_power_shifted(triple, sep, t) *
                              (control.at(static_cast<long>(t) - 1) - control.at(static_cast<long>(t)));
        table.closed_form_max_diff = std::max(table.closed_form_max_diff, std::abs(pmf - closed));
    }
    return table;
}

CsqstDistribution csqst_from_control(const SeparationTable& sep, const SpectralTriple& triple,
                                     const ControlFunction& control) {
    const std::size_t h = std::min(sep.horizon, control.horizon());
    CsqstDistribution out;
    out.pmf.resize(h + 1);
    out.cumulative.resize(h + 1);
    double total = 0.0;
    double conv = 0.0;  // sum_{u<=t} lambda^{t-u} pmf(u), built independently
    for (std::size_t t = 0; t <= h; ++t) {
        const double scale = lambda_power_shifted(triple, sep, t);
        const double drop = control.at(static_cast<long>(t) - 1) - control.at(static_cast<long>(t));
        out.pmf[t] = scale * drop;
        out.cumulative[t] = scale * (1.0 - control.at(static_cast<long>(t)));
        total += out.pmf[t];
        conv = triple.lambda * conv + out.pmf[t];
        out.convolution_max_diff =
            std::max(out.convolution_max_diff, std::abs(conv - out.cumulative[t]));
    }
    out.defect = 1.0 - total;
    out.tail_bound = lambda_power_shifted(triple, sep, h) * control.at(static_cast<long>(h));
    return out;
}

CsqstDistribution minimal_csqst(const SeparationTable& sep, const SpectralTriple& triple) {
    return csqst_from_control(sep, triple, control_minimal(sep));
}

std::vector<double> ephemeral(const TrackingTable& tracking, std::size_t t) {
    if (t > tracking.horizon) throw std::invalid_argument("ephemeral: t beyond horizon");
    const double mass = tracking.tau1_survival[t];
    if (!(mass > 0.0))
        throw std::invalid_argument("ephemeral measure undefined: no surviving layer-0 mass");
    std::vector<double> out = tracking.phi[t];
    for (double& v : out) v /= mass;
    return out;
}

SemigroupReport verify_semigroup(const MarkovChain& chain, const SubChain& sub,
                                 const SpectralTriple& triple,
                                 const std::vector<double>& alpha_a,
                                 std::size_t t, std::size_t u) {
    SemigroupReport report;
    const std::size_t horizon = t + u;

    const SeparationTable sep_a = separation_table(sub, triple, alpha_a, horizon);
    const ControlFunction ctrl_a = control_minimal(sep_a);
    const TrackingTable track_a = tracking_recursion(chain, sub, triple, sep_a, ctrl_a, horizon);

    // Conditioning is only resolvable while the layer-0 mass keeps a
    // nontrivial share of the lambda^t scale: the error of the direction
    // phi_t / |phi_t| grows like eps lambda^t / |phi_t|, so below this floor
    // the identities cannot be measured at the 1e-10 level.
    auto resolvable = [&](std::size_t time, double mass) {
        return mass > std::max(1e-4 * std::pow(triple.lambda, double(time)), 1e-9);
    };
    if (!resolvable(t, track_a.tau1_survival[t])) {
        report.degenerate = true;
        return report;
    }

    const std::vector<double> beta = ephemeral(track_a, t);
    const SeparationTable sep_b = separation_table(sub, triple, beta, u);
    const ControlFunction ctrl_b = control_minimal(sep_b);
    const TrackingTable track_b = tracking_recursion(chain, sub, triple, sep_b, ctrl_b, u);

    report.tau1_residual = std::abs(track_a.tau1_survival[horizon] -
                                    track_a.tau1_survival[t] * track_b.tau1_survival[u]);

    if (resolvable(horizon, track_a.tau1_survival[horizon]) &&
        resolvable(u, track_b.tau1_survival[u])) {
        const std::vector<double> lhs = ephemeral(track_a, horizon);
        const std::vector<double> rhs = ephemeral(track_b, u);
        for (std::size_t y = 0; y < lhs.size(); ++y)
            report.ephemeral_residual =
                std::max(report.ephemeral_residual, std::abs(lhs[y] - rhs[y]));
    }

    // The jump identity is a ratio of control drops; compare it only where
    // the drop is numerically resolvable (same gate as the flux check).
    const double drop_a = ctrl_a.at(static_cast<long>(horizon) - 1) -
                          ctrl_a.at(static_cast<long>(horizon));
    if (drop_a > 1e-4) {
        const std::vector<double> j_a = jump_row_a(ctrl_a, sep_a, horizon);
        const std::vector<double> j_b = jump_row_a(ctrl_b, sep_b, u);
        for (std::size_t z = 0; z < j_a.size(); ++z)
            report.jump_residual =
                std::max(report.jump_residual, std::abs(j_a[z] - j_b[z]));
    }
    return report;
}

}  // namespace hitlab
