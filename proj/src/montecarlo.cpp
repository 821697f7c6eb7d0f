#include "hitlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hitlab {

std::size_t sample_categorical(const double* weights, std::size_t n, double u) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    bool seen = false;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = weights[j];
        if (w > 0.0) {
            last_positive = j;
            seen = true;
        }
        acc += w;
        if (u < acc) return j;
    }
    return seen ? last_positive : n - 1;
}

namespace {

void check_censoring(SampleSet& set) {
    std::size_t censored = 0;
    for (std::int32_t v : set.tau_g)
        if (v < 0) ++censored;
    set.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(set.size());
    if (set.censored_fraction > 0.01)
        throw ResidualError("simulation horizon too short: " +
                            std::to_string(100.0 * set.censored_fraction) +
                            "% of trajectories censored");
}

}  // namespace

double SampleSet::empirical_survival(std::size_t t) const {
    std::size_t alive = 0;
    for (std::int32_t v : tau_g)
        if (v < 0 || static_cast<std::size_t>(v) > t) ++alive;
    return static_cast<double>(alive) / static_cast<double>(size());
}

std::vector<double> SampleSet::exit_frequencies(const MarkovChain& chain) const {
    std::vector<double> freq(chain.goal.size(), 0.0);
    std::size_t absorbed = 0;
    for (std::int32_t v : exit_state) {
        if (v < 0) continue;
        ++absorbed;
        for (std::size_t g = 0; g < chain.goal.size(); ++g)
            if (chain.goal[g] == static_cast<std::size_t>(v)) freq[g] += 1.0;
    }
    if (absorbed > 0)
        for (double& f : freq) f /= static_cast<double>(absorbed);
    return freq;
}

SampleSet sample_base(const MarkovChain& chain, const Distribution& alpha,
                      const SimulationConfig& config) {
    if (config.trajectories == 0) throw std::invalid_argument("need at least 1 trajectory");
    const std::size_t n = chain.n_states();
    if (alpha.size() != n) throw SchemaError("alpha has wrong dimension");

    SampleSet set;
    set.config = config;
    set.tau_g.assign(config.trajectories, -1);
    set.exit_state.assign(config.trajectories, -1);

    const CounterRng rng{config.seed};
    parallel_for(config.trajectories, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t x = sample_categorical(alpha.weights().data(), n, rng.uniform(i, 0));
            if (chain.is_goal[x]) {
                set.tau_g[i] = 0;
                set.exit_state[i] = static_cast<std::int32_t>(x);
                continue;
            }
            for (std::size_t t = 1; t <= config.horizon; ++t) {
                x = sample_categorical(chain.P.row(x), n, rng.uniform(i, t));
                if (chain.is_goal[x]) {
                    set.tau_g[i] = static_cast<std::int32_t>(t);
                    set.exit_state[i] = static_cast<std::int32_t>(x);
                    break;
                }
            }
        }
    });
    check_censoring(set);
    return set;
}

SampleSet sample_tracking(const MarkovChain& chain, const SubChain& sub,
                          const SeparationTable& sep, const ControlFunction& control,
                          const SimulationConfig& config) {
    if (config.horizon > sep.horizon || config.horizon > control.horizon())
        throw std::invalid_argument("tracking tables do not cover the simulation horizon");
    const std::size_t n = chain.n_states();
    const Distribution alpha = alpha_to_full(chain, sep.alpha);

    // J(t, .) over full states, precomputed per t.
    std::vector<std::vector<double>> jumps(config.horizon + 1);
    for (std::size_t t = 0; t <= config.horizon; ++t)
        jumps[t] = jump_probabilities(chain, sub, control, sep, t);

    SampleSet set;
    set.config = config;
    set.tau_g.assign(config.trajectories, -1);
    set.exit_state.assign(config.trajectories, -1);
    set.tau_1.assign(config.trajectories, -1);
    set.x_tau1.assign(config.trajectories, -1);

    const CounterRng rng{config.seed};
    parallel_for(config.trajectories, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t x = sample_categorical(alpha.weights().data(), n, rng.uniform(i, 0));
            bool layer0 = true;
            if (rng.uniform(i, 1) < jumps[0][x]) {
                layer0 = false;
                set.tau_1[i] = 0;
                set.x_tau1[i] = static_cast<std::int32_t>(x);
            }
            for (std::size_t t = 1; t <= config.horizon; ++t) {
                x = sample_categorical(chain.P.row(x), n, rng.uniform(i, 2 * t));
                if (chain.is_goal[x]) {
                    set.tau_g[i] = static_cast<std::int32_t>(t);
                    set.exit_state[i] = static_cast<std::int32_t>(x);
                    break;
                }
                if (layer0 && rng.uniform(i, 2 * t + 1) < jumps[t][x]) {
                    layer0 = false;
                    set.tau_1[i] = static_cast<std::int32_t>(t);
                    set.x_tau1[i] = static_cast<std::int32_t>(x);
                }
            }
        }
    });
    check_censoring(set);
    return set;
}

ConditionalLawResult conditional_law_test(const SampleSet& samples,
                                          const std::vector<double>& mu_star,
                                          const SubChain& sub) {
    const std::size_t na = mu_star.size();
    ConditionalLawResult res;
    std::vector<std::size_t> counts(na, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::int32_t xs = samples.x_tau1[i];
        if (samples.tau_1[i] < 0 || xs < 0) continue;
        const std::size_t a = sub.from_full[static_cast<std::size_t>(xs)];
        if (a == static_cast<std::size_t>(-1)) continue;  // jump on G: tie, excluded
        ++counts[a];
        ++res.n_conditioned;
    }
    if (res.n_conditioned == 0) return res;

    const double nc = static_cast<double>(res.n_conditioned);
    res.z_scores.resize(na);
    for (std::size_t y = 0; y < na; ++y) {
        const double expect = nc * mu_star[y];
        const double sd = std::sqrt(nc * mu_star[y] * (1.0 - mu_star[y]));
        res.z_scores[y] = sd > 0.0 ? (static_cast<double>(counts[y]) - expect) / sd : 0.0;
        res.max_abs_z = std::max(res.max_abs_z, std::abs(res.z_scores[y]));
        res.tv_distance += std::abs(static_cast<double>(counts[y]) / nc - mu_star[y]);
    }
    res.tv_distance *= 0.5;
    res.tv_threshold = 5.0 * std::sqrt(static_cast<double>(na) / nc);
    res.pass = res.max_abs_z <= 4.0 && res.tv_distance <= res.tv_threshold;
    return res;
}

}  // namespace hitlab
