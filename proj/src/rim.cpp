#include "hitlab/rim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace hitlab {

namespace {

constexpr int kMaxRimN = 6;

std::size_t torus_length(int n) {
    std::size_t len = 1;
    for (int i = 0; i < 2 * n; ++i) len *= 2;  // 4^n
    return len;
}

int state_class(std::size_t x) {
    if (x % 4 == 0) return 0;
    if (x % 2 == 1) return 1;
    return 2;
}

void check_params(const RimParams& p) {
    if (p.n < 1 || p.n > kMaxRimN)
        throw SchemaError("rim parameter n must be in [1," + std::to_string(kMaxRimN) + "]");
    if (!(p.lam > 0.0) || !(p.lam < 1.0))
        throw SchemaError("rim parameter lambda must be in (0,1)");
}

}  // namespace

MarkovChain build_rim(const RimParams& params) {
    check_params(params);
    const std::size_t len = torus_length(params.n);
    const double lam = params.lam;
    const double d = 8.0 - 8.0 * lam + lam * lam;

    std::vector<std::string> states;
    states.reserve(len + 1);
    for (std::size_t x = 0; x < len; ++x) states.push_back(std::to_string(x));
    states.push_back("G");
    const std::size_t g = len;

    Dense p(len + 1, len + 1, 0.0);
    for (std::size_t x = 0; x < len; ++x) {
        const std::size_t left = (x + len - 1) % len;
        const std::size_t right = (x + 1) % len;
        p(x, x) = lam / 2.0;
        switch (state_class(x)) {
            case 0:
                p(x, left) = lam * lam * (2.0 - lam) / (4.0 * d);
                p(x, right) = lam * lam * (2.0 - lam) / (4.0 * d);
                p(x, g) = (8.0 - 12.0 * lam + 4.0 * lam * lam) / d;
                break;
            case 1:
                for (std::size_t nb : {left, right}) {
                    if (state_class(nb) == 0)
                        p(x, nb) = d / (4.0 * (2.0 - lam));
                    else
                        p(x, nb) = lam * lam / (4.0 * (2.0 - lam));
                }
                break;
            default:
                p(x, left) = (2.0 - lam) / 4.0;
                p(x, right) = (2.0 - lam) / 4.0;
                break;
        }
    }
    p(g, g) = 1.0;
    return make_chain(std::move(states), {"G"}, std::move(p));
}

SpectralTriple rim_spectral_oracle(const RimParams& params) {
    check_params(params);
    const std::size_t len = torus_length(params.n);
    const double lam = params.lam;
    const double d = 8.0 - 8.0 * lam + lam * lam;
    const double cells = static_cast<double>(len);

    SpectralTriple triple;
    triple.lambda = lam;
    triple.mu_star.resize(len);
    triple.gamma.resize(len);
    for (std::size_t x = 0; x < len; ++x) {
        switch (state_class(x)) {
            case 0:
                triple.mu_star[x] = d / ((2.0 - lam) * cells);
                triple.gamma[x] = (2.0 - lam) / d;
                break;
            case 1:
                triple.mu_star[x] = lam / cells;
                triple.gamma[x] = 1.0 / lam;
                break;
            default:
                triple.mu_star[x] = lam * lam / ((2.0 - lam) * cells);
                triple.gamma[x] = (2.0 - lam) / (lam * lam);
                break;
        }
    }

    const SubChain sub = restrict_chain(build_rim(params));
    {
        const std::vector<double> left = row_times(triple.mu_star, sub.PA);
        double res = 0.0;
        for (std::size_t i = 0; i < len; ++i)
            res += std::abs(left[i] - lam * triple.mu_star[i]);
        triple.left_residual = res;

        const std::vector<double> right = times_col(sub.PA, triple.gamma);
        double rres = 0.0, gmax = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            rres = std::max(rres, std::abs(right[i] - lam * triple.gamma[i]));
            gmax = std::max(gmax, triple.gamma[i]);
        }
        triple.right_residual = rres / gmax;
    }
    return triple;
}

MarkovChain rim_projected(double lam) {
    if (!(lam > 0.0) || !(lam < 1.0))
        throw SchemaError("rim parameter lambda must be in (0,1)");
    const double d = 8.0 - 8.0 * lam + lam * lam;
    Dense p(4, 4, 0.0);
    p(0, 0) = lam / 2.0;
    p(0, 1) = 2.0 * lam * lam * (2.0 - lam) / (4.0 * d);
    p(0, 3) = (8.0 - 12.0 * lam + 4.0 * lam * lam) / d;
    p(1, 0) = d / (4.0 * (2.0 - lam));
    p(1, 1) = lam / 2.0;
    p(1, 2) = lam * lam / (4.0 * (2.0 - lam));
    p(2, 1) = (2.0 - lam) / 2.0;
    p(2, 2) = lam / 2.0;
    p(3, 3) = 1.0;
    return make_chain({"0", "1", "2", "G"}, {"G"}, std::move(p));
}

HaltingSets halting_sets(const RimParams& params, std::size_t s0) {
    check_params(params);
    const std::size_t len = torus_length(params.n);
    if (s0 >= len || s0 % 4 != 0)
        throw std::invalid_argument("halting sets start from a resolved multiple of 4");

    HaltingSets hs;
    hs.torus = len;
    hs.s0 = s0;
    hs.opposite = (s0 + len / 2) % len;  // s0 + 2^{2n-1}
    hs.sets.push_back({s0});
    hs.parent.push_back({});

    const std::size_t stages = 2 * static_cast<std::size_t>(params.n) - 1;
    for (std::size_t k = 1; k <= stages; ++k) {
        std::size_t step = 1;
        for (std::size_t i = 0; i < 2 * static_cast<std::size_t>(params.n) - k - 1; ++i)
            step *= 2;  // 2^{2n-k-1}
        std::set<std::size_t> members;
        for (std::size_t parent : hs.sets[k - 1]) {
            members.insert((parent + step) % len);
            members.insert((parent + len - step) % len);
        }
        std::vector<std::size_t> sorted(members.begin(), members.end());
        if (sorted.size() != (std::size_t{1} << k))
            throw ResidualError("halting set S_" + std::to_string(k) + " has size " +
                                std::to_string(sorted.size()));
        std::vector<std::size_t> parents(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const std::size_t up = (sorted[i] + step) % len;
            const std::size_t down = (sorted[i] + len - step) % len;
            const auto& prev = hs.sets[k - 1];
            const bool up_in = std::binary_search(prev.begin(), prev.end(), up);
            const bool down_in = std::binary_search(prev.begin(), prev.end(), down);
            if (up_in == down_in)
                throw ResidualError("halting set parent is not unique at stage " +
                                    std::to_string(k));
            parents[i] = up_in ? up : down;
        }
        hs.sets.push_back(std::move(sorted));
        hs.parent.push_back(std::move(parents));
    }
    return hs;
}

RimHaltingRun rim_halting_csqst(const RimParams& params, std::size_t x,
                                const SimulationConfig& config) {
    check_params(params);
    const MarkovChain chain = build_rim(params);
    const std::size_t len = torus_length(params.n);
    if (x >= len) throw std::invalid_argument("start state outside the torus");
    const std::size_t stages = 2 * static_cast<std::size_t>(params.n) - 1;

    // Membership bitmaps for the canonical s0 = 0 family; other families are
    // rotations of it.
    const HaltingSets canon = halting_sets(params, 0);
    std::vector<std::vector<std::uint8_t>> member(stages + 1,
                                                  std::vector<std::uint8_t>(len, 0));
    for (std::size_t k = 0; k <= stages; ++k)
        for (std::size_t s : canon.sets[k]) member[k][s] = 1;

    RimHaltingRun run;
    run.samples.config = config;
    run.samples.tau_g.assign(config.trajectories, -1);
    run.samples.exit_state.assign(config.trajectories, -1);
    run.samples.tau_1.assign(config.trajectories, -1);
    run.samples.x_tau1.assign(config.trajectories, -1);

    // Per-trajectory canonical stage states, aggregated after the parallel part.
    std::vector<std::int32_t> stage_state(config.trajectories * stages, -1);

    const CounterRng rng{config.seed};
    const std::size_t n_full = chain.n_states();
    parallel_for(config.trajectories, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t pos = x;
            std::size_t t = 0;
            std::uint64_t counter = 0;
            bool dead = false;

            auto step = [&]() {
                pos = sample_categorical(chain.P.row(pos), n_full,
                                         rng.uniform(i, ++counter));
                ++t;
                if (pos == len) {  // absorbed
                    run.samples.tau_g[i] = static_cast<std::int32_t>(t);
                    run.samples.exit_state[i] = static_cast<std::int32_t>(len);
                    dead = true;
                }
            };

            while (!dead && t <= config.horizon && state_class(pos) != 0) step();
            if (dead || t > config.horizon) continue;
            const std::size_t s0 = pos;

            bool censored = false;
            for (std::size_t k = 1; k <= stages && !dead; ++k) {
                do {
                    if (t >= config.horizon) { censored = true; break; }
                    step();
                } while (!dead && !member[k][(pos + len - s0) % len]);
                if (censored || dead) break;
                stage_state[i * stages + (k - 1)] =
                    static_cast<std::int32_t>((pos + len - s0) % len);
            }
            if (dead || censored) continue;
            if (t >= config.horizon) continue;
            step();  // the stop is one step past the last stage
            if (dead) continue;  // unreachable: odd states cannot absorb
            run.samples.tau_1[i] = static_cast<std::int32_t>(t);
            run.samples.x_tau1[i] = static_cast<std::int32_t>(pos);
        }
    });

    run.stage_hits.assign(stages, std::vector<std::uint64_t>(len, 0));
    run.stage_completed.assign(stages, 0);
    std::size_t absorbed = 0, censored = 0;
    for (std::size_t i = 0; i < config.trajectories; ++i) {
        for (std::size_t k = 0; k < stages; ++k) {
            const std::int32_t s = stage_state[i * stages + k];
            if (s >= 0) {
                ++run.stage_completed[k];
                ++run.stage_hits[k][static_cast<std::size_t>(s)];
            }
        }
        if (run.samples.tau_g[i] >= 0)
            ++absorbed;
        else if (run.samples.tau_1[i] < 0)
            ++censored;
    }
    run.absorbed_fraction =
        static_cast<double>(absorbed) / static_cast<double>(config.trajectories);
    run.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(config.trajectories);
    if (run.censored_fraction > 0.01)
        throw ResidualError("halting-sequence simulation horizon too short: " +
                            std::to_string(100.0 * run.censored_fraction) + "% censored");
    return run;
}

}  // namespace hitlab
