#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hitlab/chain.hpp"
#include "hitlab/engine.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/montecarlo.hpp"
#include "hitlab/report.hpp"
#include "hitlab/rim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw hitlab::SchemaError("cannot open '" + out_path + "' for writing");
    out << text;
}

std::vector<std::size_t> check_grid(std::size_t horizon) {
    std::vector<std::size_t> grid{0, 1, 2, 3};
    std::size_t a = 3, b = 5;
    while (b <= horizon) {
        grid.push_back(b);
        const std::size_t next = a + b;
        a = b;
        b = next;
    }
    return grid;
}

struct GlobalFlags {
    std::string out;
    std::string csv_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> horizon;
    double tolerance = 1e-10;
};

int run_analyze(const std::string& path, const std::vector<std::string>& alpha_specs,
                const GlobalFlags& flags) {
    const hitlab::ChainDocument doc = hitlab::load_chain_file(path);

    std::vector<std::pair<std::string, hitlab::Distribution>> alphas;
    if (!alpha_specs.empty()) {
        for (const auto& spec : alpha_specs)
            alphas.emplace_back(spec, hitlab::alpha_from_spec(doc.chain, spec));
    } else if (doc.alpha) {
        alphas.emplace_back("document", *doc.alpha);
    } else {
        alphas.emplace_back("uniform", hitlab::alpha_from_spec(doc.chain, "uniform"));
    }

    hitlab::AnalysisOptions options;
    options.horizon = flags.horizon;
    options.tolerance = flags.tolerance;
    const hitlab::AnalysisResult result = hitlab::analyze_chain(doc.chain, alphas, options);

    hitlab::ReportMeta meta;
    meta.version = kVersion;
    meta.command = "analyze";
    meta.input = path;
    emit(hitlab::render_analysis_report(result, meta), flags.out);
    if (!flags.csv_dir.empty()) hitlab::write_analysis_csv(result, flags.csv_dir);
    return result.passed ? 0 : 5;
}

int run_simulate(const std::string& path, const std::string& alpha_spec,
                 std::size_t trajectories, const std::string& dump_path,
                 const GlobalFlags& flags) {
    const hitlab::ChainDocument doc = hitlab::load_chain_file(path);
    const hitlab::MarkovChain& chain = doc.chain;

    std::string spec_text = alpha_spec;
    hitlab::Distribution alpha = [&]() {
        if (!alpha_spec.empty()) return hitlab::alpha_from_spec(chain, alpha_spec);
        if (doc.alpha) {
            spec_text = "document";
            return *doc.alpha;
        }
        spec_text = "uniform";
        return hitlab::alpha_from_spec(chain, "uniform");
    }();

    const hitlab::SubChain sub = hitlab::restrict_chain(chain);
    const hitlab::SpectralTriple triple = hitlab::principal_triple(sub);
    const std::vector<double> alpha_a = hitlab::alpha_on_transient(chain, alpha);

    std::size_t horizon;
    if (flags.horizon) {
        horizon = *flags.horizon;
    } else {
        // Long enough that censoring stays far below the 1% gate.
        horizon = 16;
        std::vector<double> alive = alpha.weights();
        for (std::size_t t = 0; t < 100000; ++t) {
            double mass = 0.0;
            for (std::size_t y : chain.transient) mass += alive[y];
            if (mass < 1e-4) { horizon = std::max<std::size_t>(horizon, t); break; }
            alive = hitlab::row_times(alive, chain.P);
            horizon = t + 1;
        }
    }

    hitlab::SimulationConfig config;
    config.seed = flags.seed.value_or(1);
    config.trajectories = trajectories;
    config.horizon = horizon;

    hitlab::SimulateSummary summary;
    summary.config = config;
    summary.alpha_spec = spec_text;

    const hitlab::SampleSet base = hitlab::sample_base(chain, alpha, config);
    summary.censored_fraction = base.censored_fraction;
    const double n = static_cast<double>(config.trajectories);

    const std::vector<double> exact_survival = hitlab::survival(chain, alpha, horizon);
    bool all_ok = true;
    for (std::size_t t : check_grid(horizon)) {
        hitlab::GridPoint p;
        p.t = t;
        p.empirical = base.empirical_survival(t);
        p.exact = exact_survival[t];
        const double sd = std::sqrt(p.exact * (1.0 - p.exact) / n);
        p.z = sd > 0.0 ? (p.empirical - p.exact) / sd : 0.0;
        p.ok = sd > 0.0 ? std::abs(p.z) <= 3.0 : p.empirical == p.exact;
        all_ok = all_ok && p.ok;
        summary.base_survival.push_back(p);
    }

    {
        const hitlab::Distribution profile = hitlab::absorption_profile(chain, alpha);
        const std::vector<double> freq = base.exit_frequencies(chain);
        std::size_t absorbed = 0;
        for (std::int32_t v : base.tau_g)
            if (v >= 0) ++absorbed;
        for (std::size_t g = 0; g < chain.goal.size(); ++g) {
            hitlab::GridPoint p;
            p.empirical = freq[g];
            p.exact = profile[g];
            const double sd =
                std::sqrt(p.exact * (1.0 - p.exact) / static_cast<double>(absorbed));
            p.z = sd > 0.0 ? (p.empirical - p.exact) / sd : 0.0;
            p.ok = sd > 0.0 ? std::abs(p.z) <= 3.0 : true;
            all_ok = all_ok && p.ok;
            summary.exit_labels.push_back(chain.states[chain.goal[g]]);
            summary.exit_profile.push_back(p);
        }
    }

    const hitlab::SeparationTable sep =
        hitlab::separation_table(sub, triple, alpha_a, horizon);
    const hitlab::ControlFunction control = hitlab::control_minimal(sep);
    const hitlab::SampleSet tracking =
        hitlab::sample_tracking(chain, sub, sep, control, config);
    const hitlab::CsqstDistribution closed = hitlab::minimal_csqst(sep, triple);

    std::vector<std::size_t> tau1_counts(horizon + 1, 0);
    for (std::int32_t t : tracking.tau_1)
        if (t >= 0) ++tau1_counts[static_cast<std::size_t>(t)];
    for (std::size_t t : check_grid(horizon)) {
        hitlab::GridPoint p;
        p.t = t;
        p.empirical = static_cast<double>(tau1_counts[t]) / n;
        p.exact = closed.pmf[t];
        const double sd = std::sqrt(p.exact * (1.0 - p.exact) / n);
        p.z = sd > 0.0 ? (p.empirical - p.exact) / sd : 0.0;
        p.ok = sd > 0.0 ? std::abs(p.z) <= 3.0 : p.empirical == p.exact;
        all_ok = all_ok && p.ok;
        summary.tau1_pmf.push_back(p);
    }

    summary.conditional = hitlab::conditional_law_test(tracking, triple.mu_star, sub);
    all_ok = all_ok && summary.conditional.pass;
    summary.passed = all_ok;

    hitlab::ReportMeta meta;
    meta.version = kVersion;
    meta.command = "simulate";
    meta.input = path;
    emit(hitlab::render_simulate_summary(summary, meta), flags.out);
    if (!dump_path.empty()) hitlab::write_samples_csv(tracking, chain, dump_path);
    return summary.passed ? 0 : 5;
}

int run_rim(int n, double lambda, const std::string& emit_path) {
    hitlab::RimParams params;
    params.n = n;
    params.lam = lambda;
    const hitlab::MarkovChain chain = hitlab::build_rim(params);

    hitlab::JsonWriter w;
    w.begin_object();
    w.key("states").begin_array();
    for (const auto& s : chain.states) w.value(s);
    w.end_array();
    w.key("absorbing").begin_array();
    for (std::size_t g : chain.goal) w.value(chain.states[g]);
    w.end_array();
    w.key("P").begin_array();
    for (std::size_t i = 0; i < chain.n_states(); ++i) {
        w.begin_array();
        for (std::size_t j = 0; j < chain.n_states(); ++j) w.value(chain.P(i, j));
        w.end_array();
    }
    w.end_array();
    w.end_object();
    emit(w.str() + "\n", emit_path);
    return 0;
}

int run_verify(const std::string& path, const GlobalFlags& flags) {
    const hitlab::ChainDocument doc = hitlab::load_chain_file(path);
    hitlab::AnalysisOptions options;
    options.horizon = flags.horizon;
    options.tolerance = flags.tolerance;
    const hitlab::VerifyResult result = hitlab::verify_chain(doc.chain, options);
    for (const auto& check : result.checks)
        std::cout << (check.ok ? "[PASS] " : "[FAIL] ") << check.name << " (" << check.value
                  << " <= " << check.threshold << ")\n";
    std::cout << (result.passed ? "PASS" : "FAIL") << "\n";
    return result.passed ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact and Monte Carlo first-hitting analysis of absorbing chains"};
    app.require_subcommand(1);

    GlobalFlags flags;

    auto add_global = [&](CLI::App* cmd) {
        cmd->add_option("--out", flags.out, "write the JSON report here (default stdout)");
        cmd->add_option("--csv-dir", flags.csv_dir, "also write CSV series into this directory");
        cmd->add_option("--seed", flags.seed, "simulation seed");
        cmd->add_option("--horizon", flags.horizon, "time horizon override");
        cmd->add_option("--tolerance", flags.tolerance, "residual tolerance (default 1e-10)");
    };

    auto* analyze = app.add_subcommand("analyze", "full exact analysis of a chain document");
    std::string analyze_path;
    std::vector<std::string> alpha_specs;
    analyze->add_option("chain", analyze_path, "chain-spec JSON file")->required();
    analyze->add_option("--alpha", alpha_specs,
                        "start distribution: dirac:<label> | uniform | "
                        "uniform-set:<l1,...> | weights:<file> (repeatable)");
    add_global(analyze);

    auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo validation");
    std::string simulate_path, simulate_alpha, dump_path;
    std::size_t trajectories = 100000;
    simulate->add_option("chain", simulate_path, "chain-spec JSON file")->required();
    simulate->add_option("--alpha", simulate_alpha, "start distribution spec");
    simulate->add_option("--trajectories", trajectories, "number of trajectories");
    simulate->add_option("--dump-samples", dump_path, "write per-trajectory CSV here");
    add_global(simulate);

    auto* rim = app.add_subcommand("rim", "emit a rim-model chain document");
    int rim_n = 1;
    double rim_lambda = 0.5;
    std::string emit_path;
    rim->add_option("--n", rim_n, "torus size exponent (length 4^n)")
        ->required()
        ->check(CLI::Range(1, 6));
    rim->add_option("--lambda", rim_lambda, "principal eigenvalue in (0,1)")
        ->required()
        ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
    rim->add_option("--emit", emit_path, "output file (default stdout)");

    auto* verify = app.add_subcommand("verify", "run the invariant suite on a chain document");
    std::string verify_path;
    verify->add_option("chain", verify_path, "chain-spec JSON file")->required();
    add_global(verify);

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return run_analyze(analyze_path, alpha_specs, flags);
        if (simulate->parsed())
            return run_simulate(simulate_path, simulate_alpha, trajectories, dump_path, flags);
        if (rim->parsed()) return run_rim(rim_n, rim_lambda, emit_path);
        if (verify->parsed()) return run_verify(verify_path, flags);
    } catch (const hitlab::HitlabError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
