#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hitlab/common.hpp"

#include <json.hpp>

namespace hitlab {

// Probability vector over a caller-declared index set.
// Nonnegative, sums to 1 within 1e-12 (small defects are renormalized).
class Distribution {
public:
    Distribution() = default;  // empty placeholder; factories build valid values

    static Distribution dirac(std::size_t n, std::size_t at);
    static Distribution uniform(std::size_t n);
    static Distribution uniform_on(std::size_t n, const std::vector<std::size_t>& support);
    static Distribution from_weights(std::vector<double> w);

    // For exactly-computed vectors (matrix products of a validated chain):
    // checks nonnegativity and a loose mass budget but does not renormalize,
    // so oracle values are returned bit-for-bit as computed.
    static Distribution exact(std::vector<double> w);

    const std::vector<double>& weights() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    std::size_t size() const { return w_.size(); }

private:
    explicit Distribution(std::vector<double> w) : w_(std::move(w)) {}
    std::vector<double> w_;
};

// Finite chain with an absorbing target set. Rows indexed by the target set
// are forced to self-loops on construction; remaining rows are row-stochastic
// within 1e-12 (renormalized) or rejected.
struct MarkovChain {
    std::vector<std::string> states;
    std::vector<std::size_t> goal;       // absorbing indices, ascending
    std::vector<std::size_t> transient;  // complement, ascending
    std::vector<bool> is_goal;
    Dense P;

    std::size_t n_states() const { return states.size(); }
    std::size_t index_of(const std::string& label) const;
};

// Restriction of P to the transient set, with a primitivity certificate.
struct SubChain {
    Dense PA;
    std::vector<std::size_t> to_full;      // A index -> full index
    std::vector<std::size_t> from_full;    // full index -> A index (undefined on G)
    std::size_t primitivity_power = 0;     // some m with ([P]_A)^m > 0 entrywise
};

struct ChainDocument {
    MarkovChain chain;
    std::optional<Distribution> alpha;  // over the full state list
};

MarkovChain make_chain(std::vector<std::string> states,
                       std::vector<std::string> absorbing,
                       Dense p);

ChainDocument load_chain(const nlohmann::json& doc);
ChainDocument load_chain_file(const std::string& path);
nlohmann::json chain_to_json(const MarkovChain& chain);

// [P]_A with primitivity certified by boolean matrix powers up to the
// Wielandt bound (|A|-1)^2 + 1. Also rejects chains whose target set is
// unreachable from the transient set.
SubChain restrict_chain(const MarkovChain& chain);

// Exact law at time t by repeated vector-matrix multiplication.
Distribution propagate(const MarkovChain& chain, const Distribution& alpha, std::size_t t);

// P(tau_G > t) for t = 0..horizon; the module's brute-force oracle.
std::vector<double> survival(const MarkovChain& chain, const Distribution& alpha,
                             std::size_t horizon);

// Exact law of the entrance state, by the columnwise linear absorption solve.
Distribution absorption_profile(const MarkovChain& chain, const Distribution& alpha);

// Restriction of a full-state distribution to A; rejects mass on G.
std::vector<double> alpha_on_transient(const MarkovChain& chain, const Distribution& alpha);

// Embeds an A-indexed vector back into a full-state distribution.
Distribution alpha_to_full(const MarkovChain& chain, const std::vector<double>& alpha_a);

}  // namespace hitlab
