#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/csqst.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/spectral.hpp"

namespace hitlab {

struct AnalysisOptions {
    std::optional<std::size_t> horizon;
    std::size_t horizon_cap = 100000;
    double tolerance = 1e-10;
    int bound_n_max = 10;
};

struct AlphaAnalysis {
    std::string spec_text;
    std::vector<double> alpha_a;
    TimeShift shift;
    SeparationTable sep;
    CsqstDistribution csqst;
    RepresentationReport repr;
    BoundCheckTable bounds;
    SemigroupReport semigroup;     // spot check at (t,u) = (2,3)
    double notada_excess = 0.0;    // max_t lambda^{t+delta}(1-s(t)) - 1
    double sandwich_violation = 0.0;
};

struct AnalysisResult {
    MarkovChain chain;
    SubChain sub;
    SpectralTriple triple;
    LocalChain local;
    Distribution omega;
    std::size_t horizon = 0;
    MeanMetastabilityTime mmt;
    MetastabilityProfile profile;
    Basin basin_report;
    std::vector<AlphaAnalysis> alphas;
    bool passed = false;
    std::vector<std::string> failures;
    double tolerance = 1e-10;
};

// Smallest t at which both the separation of every requested start and the
// sup over Dirac starts of the strong-metastability survival drop below
// 1e-12; capped.
std::size_t default_horizon(const SubChain& sub, const SpectralTriple& triple,
                            const std::vector<std::vector<double>>& alphas_a,
                            std::size_t cap);

AnalysisResult analyze_chain(const MarkovChain& chain,
                             const std::vector<std::pair<std::string, Distribution>>& alphas,
                             const AnalysisOptions& options);

struct VerifyCheck {
    std::string name;
    double value = 0.0;      // measured residual / violation
    double threshold = 0.0;
    bool ok = false;
};

struct VerifyResult {
    std::vector<VerifyCheck> checks;
    bool passed = false;
};

// Full invariant suite over one chain document (uniform start on A).
VerifyResult verify_chain(const MarkovChain& chain, const AnalysisOptions& options);

// Local-chain identity helpers, shared by verify and the test suites.
double local_rows_residual(const LocalChain& local);
double local_invariance_residual(const LocalChain& local);
double doob_power_identity_residual(const SubChain& sub, const SpectralTriple& triple,
                                    const LocalChain& local, std::size_t t);

}  // namespace hitlab
