#include <doctest.h>

#include <cmath>
#include <random>

#include "hitlab/chain.hpp"
#include "hitlab/csqst.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/rim.hpp"
#include "hitlab/spectral.hpp"
#include "support.hpp"

using namespace hitlab;

namespace {

struct Fixture {
    MarkovChain chain;
    SubChain sub;
    SpectralTriple triple;
};

Fixture make_fixture(MarkovChain chain) {
    Fixture f{std::move(chain), {}, {}};
    f.sub = restrict_chain(f.chain);
    f.triple = principal_triple(f.sub);
    return f;
}

Fixture random4() {
    return make_fixture(load_chain_file(testsupport::fixture_path("random4.json")).chain);
}

std::vector<double> uniform_a(const Fixture& f) {
    return std::vector<double>(f.sub.PA.rows, 1.0 / double(f.sub.PA.rows));
}

}  // namespace

TEST_CASE("strong-metastability survival, formula route") {
    SUBCASE("eigenvector start vanishes identically") {
        const Fixture f = random4();
        const SeparationTable sep = separation_table(f.sub, f.triple, f.triple.mu_star, 40);
        const std::vector<double> m =
            metastability_survival(f.chain, f.sub, f.triple, sep, 40);
        for (double v : m) CHECK(v <= 1e-12);
    }
    SUBCASE("rim uniform-on-odds: 1 at t=0, then 0") {
        const Fixture f = make_fixture(build_rim({1, 0.5}));
        const SeparationTable sep =
            separation_table(f.sub, f.triple, {0.0, 0.5, 0.0, 0.5}, 20);
        const std::vector<double> m =
            metastability_survival(f.chain, f.sub, f.triple, sep, 20);
        CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t t = 1; t <= 20; ++t) CHECK(m[t] <= 1e-12);
    }
    SUBCASE("random4 formula agrees with the tracking realization") {
        const Fixture f = random4();
        const std::vector<double> alpha = uniform_a(f);
        const SeparationTable sep = separation_table(f.sub, f.triple, alpha, 100);
        const std::vector<double> formula =
            metastability_survival(f.chain, f.sub, f.triple, sep, 100);
        const TrackingTable track = tracking_recursion(f.chain, f.sub, f.triple, sep,
                                                       control_minimal(sep), 100);
        for (std::size_t t = 0; t <= 100; ++t)
            CHECK(formula[t] == doctest::Approx(track.tau1_survival[t]).epsilon(1e-10));
    }
}

TEST_CASE("representation identity") {
    SUBCASE("two-state: survival is the leading term exactly") {
        const Fixture f = make_fixture(testsupport::two_state());
        const RepresentationReport r = representation(f.chain, f.sub, f.triple, {1.0}, 30);
        CHECK(r.max_residual <= 1e-12);
        for (std::size_t t = 0; t <= 30; ++t) {
            CHECK(r.survival[t] == doctest::Approx(std::pow(0.5, double(t))).epsilon(1e-12));
            CHECK(r.remainder[t] <= 1e-12);
        }
    }
    SUBCASE("rim uniform-on-odds at t=3: 0.25 with shift -1 and zero remainder") {
        const Fixture f = make_fixture(build_rim({1, 0.5}));
        const RepresentationReport r =
            representation(f.chain, f.sub, f.triple, {0.0, 0.5, 0.0, 0.5}, 20);
        CHECK(r.survival[3] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(r.leading[3] == doctest::Approx(0.25).epsilon(1e-10));
        CHECK(r.remainder[3] <= 1e-12);
        CHECK(r.max_residual <= 1e-10);
    }
    SUBCASE("random4 out to t=200 for several starts") {
        const Fixture f = random4();
        const std::size_t na = f.sub.PA.rows;
        std::vector<std::vector<double>> starts{uniform_a(f), f.triple.mu_star};
        for (std::size_t x = 0; x < na; ++x) {
            std::vector<double> d(na, 0.0);
            d[x] = 1.0;
            starts.push_back(d);
        }
        for (const auto& alpha : starts) {
            const RepresentationReport r =
                representation(f.chain, f.sub, f.triple, alpha, 200);
            CHECK(r.max_residual <= 1e-10);
        }
    }
}

TEST_CASE("exit decomposition") {
    SUBCASE("eigenvector start exits with the hitting distribution exactly") {
        const Fixture f = random4();
        const SeparationTable sep = separation_table(f.sub, f.triple, f.triple.mu_star, 60);
        const TrackingTable track = tracking_recursion(f.chain, f.sub, f.triple, sep,
                                                       control_minimal(sep), 60);
        const ExitDecomposition exit = exit_decomposition(f.chain, f.sub, f.triple, track);
        const Distribution omega = hitting_measure(f.chain, f.sub, f.triple);
        CHECK(exit.p_after == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t g = 0; g < omega.size(); ++g) {
            CHECK(exit.layer0_absorbed[g] <= 1e-12);
            CHECK(exit.exact[g] == doctest::Approx(omega[g]).epsilon(1e-10));
        }
        CHECK(exit.max_residual <= 1e-10);
    }
    SUBCASE("singleton goal set: the two contributions sum to one") {
        const Fixture f = make_fixture(build_rim({1, 0.5}));
        const SeparationTable sep =
            separation_table(f.sub, f.triple, {1.0, 0.0, 0.0, 0.0}, 200);
        const TrackingTable track = tracking_recursion(f.chain, f.sub, f.triple, sep,
                                                       control_minimal(sep), 200);
        const ExitDecomposition exit = exit_decomposition(f.chain, f.sub, f.triple, track);
        CHECK(exit.layer0_absorbed[0] + exit.p_after ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(exit.max_residual <= 1e-10);
    }
    SUBCASE("random4 with a 2-state goal set") {
        const Fixture f = random4();
        const std::vector<double> alpha = uniform_a(f);
        const SeparationTable sep = separation_table(f.sub, f.triple, alpha, 150);
        const TrackingTable track = tracking_recursion(f.chain, f.sub, f.triple, sep,
                                                       control_minimal(sep), 150);
        const ExitDecomposition exit = exit_decomposition(f.chain, f.sub, f.triple, track);
        CHECK(exit.max_residual <= 1e-10);
        CHECK(exit.unresolved <= 1e-12);
    }
}

TEST_CASE("mean metastability time") {
    SUBCASE("two-state relaxes instantly") {
        const Fixture f = make_fixture(testsupport::two_state());
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 50);
        CHECK(mmt.R <= 1e-12);
    }
    SUBCASE("rim n=1 is finite with a certified tail") {
        const Fixture f = make_fixture(build_rim({1, 0.5}));
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 400);
        CHECK(mmt.R > 0.5);
        CHECK(mmt.R < 50.0);
        CHECK(mmt.tail_bound <= 1e-10);
    }
    SUBCASE("no mixture start beats the best Dirac start") {
        const Fixture f = random4();
        const std::size_t na = f.sub.PA.rows;
        const std::size_t horizon = 200;
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, horizon);

        std::mt19937_64 gen(777);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> alpha(na);
            double mass = 0.0;
            for (double& v : alpha) {
                v = unif(gen);
                mass += v;
            }
            for (double& v : alpha) v /= mass;
            const MetaSeries series = meta_series(f.sub, f.triple, alpha, horizon);
            CHECK(sum(series.meta) <= mmt.R + 1e-12);
        }
    }
}

TEST_CASE("metastability rate") {
    CHECK(metastability_rate(2.0 * std::pow(0.5, 2.0), 2.0, 0.5).rate_a ==
          doctest::Approx(0.0).epsilon(1e-14));
    const double t_scale = 1.0 / (1.0 - 0.5);
    const double r = t_scale * std::pow(0.5, t_scale) * std::exp(-2.0);
    CHECK(metastability_rate(r, t_scale, 0.5).rate_a == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(metastability_rate(r, t_scale, 0.5).hypothesis);
    CHECK_FALSE(metastability_rate(10.0, 2.0, 0.5).hypothesis);

    SUBCASE("rim n=1 lambda=0.9 has a positive rate") {
        const Fixture f = make_fixture(build_rim({1, 0.9}));
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 600);
        const MetastabilityProfile profile =
            metastability_rate(mmt.R, 1.0 / (1.0 - f.triple.lambda), f.triple.lambda);
        CHECK(profile.hypothesis);
        CHECK(profile.rate_a > 0.0);
        CHECK(std::isfinite(profile.rate_a));
    }
}

TEST_CASE("exponential bound check") {
    SUBCASE("eigenvector start has zero error at every multiple of T") {
        const Fixture f = random4();
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 300);
        const MetastabilityProfile profile =
            metastability_rate(mmt.R, 1.0 / (1.0 - f.triple.lambda), f.triple.lambda);
        REQUIRE(profile.hypothesis);
        const BoundCheckTable table = exponential_bound_check(
            f.chain, f.sub, f.triple, f.triple.mu_star, profile, 10);
        CHECK(table.all_ok);
        for (const auto& row : table.rows) {
            CHECK(row.lhs_floor <= 1e-10);
            CHECK(row.lhs_ceil <= 1e-10);
        }
    }
    SUBCASE("rim n=1 lambda=0.9 from the deep state") {
        const Fixture f = make_fixture(build_rim({1, 0.9}));
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 600);
        const MetastabilityProfile profile =
            metastability_rate(mmt.R, 1.0 / (1.0 - f.triple.lambda), f.triple.lambda);
        REQUIRE(profile.hypothesis);
        const BoundCheckTable table = exponential_bound_check(
            f.chain, f.sub, f.triple, {1.0, 0.0, 0.0, 0.0}, profile, 5);
        CHECK(table.t_sanity);
        CHECK(table.all_ok);
    }
    SUBCASE("random4 with every Dirac start, n up to 10") {
        const Fixture f = random4();
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 300);
        const MetastabilityProfile profile =
            metastability_rate(mmt.R, 1.0 / (1.0 - f.triple.lambda), f.triple.lambda);
        REQUIRE(profile.hypothesis);
        for (std::size_t x = 0; x < f.sub.PA.rows; ++x) {
            std::vector<double> alpha(f.sub.PA.rows, 0.0);
            alpha[x] = 1.0;
            const BoundCheckTable table =
                exponential_bound_check(f.chain, f.sub, f.triple, alpha, profile, 10);
            CHECK(table.all_ok);
            // The sharper two-sided ingredients bracket the signed error.
            const SeparationTable sep = separation_table(
                f.sub, f.triple, alpha,
                std::size_t(std::ceil(10 * profile.T)) + 1);
            const std::vector<double> exact =
                survival(f.chain, alpha_to_full(f.chain, alpha), sep.horizon);
            for (const auto& row : table.rows) {
                const double denom =
                    std::pow(f.triple.lambda, double(row.t_floor)) * sep.alpha_gamma;
                const double signed_err = exact[row.t_floor] / denom - 1.0;
                CHECK(signed_err >= row.sharper_lower - 1e-10);
                CHECK(signed_err <= row.sharper_upper + 1e-10);
            }
        }
    }
}

TEST_CASE("basin of attraction") {
    SUBCASE("two-state: the transient state is its own basin") {
        const Fixture f = make_fixture(testsupport::two_state());
        const Basin b = basin(f.chain, f.sub, f.triple, 0.0);
        REQUIRE(b.states.size() == 1);
        CHECK(b.states[0] == 0);
        CHECK(b.min_gamma == doctest::Approx(1.0));
        CHECK(b.gamma_bound_ok);
    }
    SUBCASE("rim n=1 lambda=0.9: membership matches brute force, gamma bound holds") {
        const Fixture f = make_fixture(build_rim({1, 0.9}));
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 600);
        const Basin b = basin(f.chain, f.sub, f.triple, mmt.R);
        const std::size_t steps = 2 * std::size_t(std::ceil(mmt.R));
        std::vector<std::size_t> expected;
        for (std::size_t x = 0; x < f.sub.PA.rows; ++x) {
            const std::vector<double> s = survival(
                f.chain, Distribution::dirac(f.chain.n_states(), f.sub.to_full[x]), steps);
            if (s[steps] > 0.75) expected.push_back(f.sub.to_full[x]);
        }
        CHECK(b.states == expected);
        CHECK(b.gamma_bound_ok);
    }
    SUBCASE("a fast-exit state is excluded") {
        Dense p(3, 3, 0.0);
        p(0, 0) = 0.85; p(0, 1) = 0.05; p(0, 2) = 0.10;
        p(1, 0) = 0.05; p(1, 1) = 0.05; p(1, 2) = 0.90;  // exits almost surely
        p(2, 2) = 1.0;
        const Fixture f =
            make_fixture(make_chain({"deep", "edge", "g"}, {"g"}, std::move(p)));
        const MeanMetastabilityTime mmt = mean_metastability_time(f.sub, f.triple, 400);
        const Basin b = basin(f.chain, f.sub, f.triple, mmt.R);
        for (std::size_t s : b.states) CHECK(f.chain.states[s] != "edge");
        CHECK(b.gamma_bound_ok);
    }
}

TEST_CASE("submultiplicativity of the strong-metastability tail") {
    for (Fixture f : {random4(), make_fixture(build_rim({1, 0.5})),
                      make_fixture(build_rim({2, 0.9}))}) {
        const std::size_t horizon = 100;
        const std::vector<double> fmax = sup_meta_over_diracs(f.sub, f.triple, horizon);
        for (std::size_t u = 1; u <= 50; ++u)
            for (std::size_t v = u; v <= 50; ++v)
                CHECK(fmax[u + v] <= fmax[u] * fmax[v] + 1e-12);
    }
}

TEST_CASE("proof-side lower bound chain for the separation") {
    const Fixture f = random4();
    for (const auto& alpha : {uniform_a(f), std::vector<double>{1, 0, 0, 0}}) {
        const LowerBoundChainCheck check =
            lower_bound_chain_check(f.sub, f.triple, alpha, 200, 30);
        CHECK(check.certified);
        CHECK(check.max_violation <= 1e-10);
    }
}

TEST_CASE("tail certificates are usable and safe") {
    const Fixture f = random4();
    const std::size_t horizon = 120;
    const std::vector<double> fmax = sup_meta_over_diracs(f.sub, f.triple, horizon);
    const TailCertificate plain = certify_plain_tail(fmax, horizon);
    REQUIRE(plain.ok);
    CHECK(plain.bound >= 0.0);
    CHECK(plain.bound <= 1e-10);
    const TailCertificate scaled = certify_scaled_tail(fmax, f.triple.lambda, horizon);
    REQUIRE(scaled.ok);
    CHECK(scaled.bound >= 0.0);
}
