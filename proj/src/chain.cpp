#include "hitlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hitlab {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_weights(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw SchemaError("distribution weight out of range");
        total += v;
    }
    if (std::abs(total - 1.0) > kStochasticTol)
        throw SchemaError("distribution does not sum to 1 (defect " +
                          std::to_string(total - 1.0) + ")");
}

// Square boolean matrix packed into 64-bit words, for reachability powers.
struct BoolMatrix {
    std::size_t n = 0;
    std::size_t words = 0;
    std::vector<std::uint64_t> bits;

    explicit BoolMatrix(std::size_t n_)
        : n(n_), words((n_ + 63) / 64), bits(n_ * words, 0) {}

    void set(std::size_t i, std::size_t j) {
        bits[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
    }
    bool get(std::size_t i, std::size_t j) const {
        return (bits[i * words + j / 64] >> (j % 64)) & 1u;
    }
    bool all_positive() const {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t wq = 0; wq < words; ++wq) {
                std::uint64_t expect = ~std::uint64_t{0};
                if (wq == words - 1 && n % 64 != 0)
                    expect = (std::uint64_t{1} << (n % 64)) - 1;
                if ((bits[i * words + wq] & expect) != expect) return false;
            }
        }
        return true;
    }
};

BoolMatrix bool_mul(const BoolMatrix& x, const BoolMatrix& y) {
    BoolMatrix out(x.n);
    for (std::size_t i = 0; i < x.n; ++i) {
        for (std::size_t k = 0; k < x.n; ++k) {
            if (!x.get(i, k)) continue;
            const std::uint64_t* src = y.bits.data() + k * y.words;
            std::uint64_t* dst = out.bits.data() + i * out.words;
            for (std::size_t wq = 0; wq < out.words; ++wq) dst[wq] |= src[wq];
        }
    }
    return out;
}

}  // namespace

Distribution Distribution::dirac(std::size_t n, std::size_t at) {
    std::vector<double> w(n, 0.0);
    w.at(at) = 1.0;
    return Distribution(std::move(w));
}

Distribution Distribution::uniform(std::size_t n) {
    if (n == 0) throw SchemaError("uniform distribution over empty set");
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::uniform_on(std::size_t n, const std::vector<std::size_t>& support) {
    if (support.empty()) throw SchemaError("uniform distribution over empty support");
    std::vector<double> w(n, 0.0);
    for (std::size_t i : support) w.at(i) = 1.0 / static_cast<double>(support.size());
    return Distribution(std::move(w));
}

Distribution Distribution::from_weights(std::vector<double> w) {
    check_weights(w);
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return Distribution(std::move(w));
}

Distribution Distribution::exact(std::vector<double> w) {
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ResidualError("computed distribution has an invalid weight");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ResidualError("computed distribution lost mass (defect " +
                            std::to_string(total - 1.0) + ")");
    return Distribution(std::move(w));
}

std::size_t MarkovChain::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == label) return i;
    throw SchemaError("unknown state label '" + label + "'");
}

MarkovChain make_chain(std::vector<std::string> states,
                       std::vector<std::string> absorbing,
                       Dense p) {
    const std::size_t n = states.size();
    if (n == 0) throw SchemaError("empty state list");
    {
        std::set<std::string> seen(states.begin(), states.end());
        if (seen.size() != n) throw SchemaError("duplicate state labels");
    }
    if (p.rows != n || p.cols != n)
        throw SchemaError("transition matrix must be " + std::to_string(n) + "x" +
                          std::to_string(n));

    MarkovChain chain;
    chain.states = std::move(states);
    chain.is_goal.assign(n, false);

    if (absorbing.empty()) throw SchemaError("absorbing set is empty");
    for (const auto& label : absorbing) {
        const std::size_t i = chain.index_of(label);
        if (chain.is_goal[i]) throw SchemaError("duplicate absorbing label '" + label + "'");
        chain.is_goal[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i)
        (chain.is_goal[i] ? chain.goal : chain.transient).push_back(i);
    if (chain.transient.empty()) throw SchemaError("transient set is empty");

    for (std::size_t i = 0; i < n; ++i) {
        if (chain.is_goal[i]) {
            // Absorbing rows become self-loops regardless of stored values.
            for (std::size_t j = 0; j < n; ++j) p(i, j) = (i == j) ? 1.0 : 0.0;
            continue;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = p(i, j);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kStochasticTol)
                throw SchemaError("entry P[" + std::to_string(i) + "][" + std::to_string(j) +
                                  "] out of [0,1]");
            total += v;
        }
        if (std::abs(total - 1.0) > kStochasticTol)
            throw SchemaError("non-stochastic row " + std::to_string(i) + " (sum " +
                              std::to_string(total) + ")");
        for (std::size_t j = 0; j < n; ++j) p(i, j) /= total;
    }
    chain.P = std::move(p);
    return chain;
}

ChainDocument load_chain(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("chain spec must be a JSON object");
    for (const char* key : {"states", "absorbing", "P"})
        if (!doc.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");

    std::vector<std::string> states;
    if (!doc["states"].is_array()) throw SchemaError("'states' must be an array of strings");
    for (const auto& s : doc["states"]) {
        if (!s.is_string()) throw SchemaError("'states' must be an array of strings");
        states.push_back(s.get<std::string>());
    }
    std::vector<std::string> absorbing;
    if (!doc["absorbing"].is_array()) throw SchemaError("'absorbing' must be an array");
    for (const auto& s : doc["absorbing"]) {
        if (!s.is_string()) throw SchemaError("'absorbing' must be an array of strings");
        absorbing.push_back(s.get<std::string>());
    }

    const std::size_t n = states.size();
    if (!doc["P"].is_array() || doc["P"].size() != n)
        throw SchemaError("'P' must be a " + std::to_string(n) + "-row matrix");
    Dense p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = doc["P"][i];
        if (!row.is_array() || row.size() != n)
            throw SchemaError("row " + std::to_string(i) + " of 'P' has wrong length");
        for (std::size_t j = 0; j < n; ++j) {
            if (!row[j].is_number()) throw SchemaError("'P' entries must be numbers");
            p(i, j) = row[j].get<double>();
        }
    }

    ChainDocument out;
    out.chain = make_chain(std::move(states), std::move(absorbing), std::move(p));

    if (doc.contains("alpha") && !doc["alpha"].is_null()) {
        const auto& a = doc["alpha"];
        if (!a.is_object() || !a.contains("kind"))
            throw SchemaError("'alpha' must be an object with a 'kind'");
        const std::string kind = a["kind"].get<std::string>();
        if (kind == "dirac") {
            const std::size_t i = out.chain.index_of(a.at("value").get<std::string>());
            out.alpha = Distribution::dirac(n, i);
        } else if (kind == "uniform") {
            out.alpha = Distribution::uniform_on(n, out.chain.transient);
        } else if (kind == "weights") {
            if (!a.contains("value") || !a["value"].is_array() || a["value"].size() != n)
                throw SchemaError("'alpha.value' must be an array of length " +
                                  std::to_string(n));
            std::vector<double> w(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = a["value"][i].get<double>();
            out.alpha = Distribution::from_weights(std::move(w));
        } else {
            throw SchemaError("unknown alpha kind '" + kind + "'");
        }
    }
    return out;
}

ChainDocument load_chain_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid JSON in '" + path + "': " + e.what());
    }
    return load_chain(doc);
}

nlohmann::json chain_to_json(const MarkovChain& chain) {
    nlohmann::json doc;
    doc["states"] = chain.states;
    nlohmann::json abs = nlohmann::json::array();
    for (std::size_t g : chain.goal) abs.push_back(chain.states[g]);
    doc["absorbing"] = abs;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < chain.n_states(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < chain.n_states(); ++j) row.push_back(chain.P(i, j));
        rows.push_back(row);
    }
    doc["P"] = rows;
    return doc;
}

SubChain restrict_chain(const MarkovChain& chain) {
    SubChain sub;
    const std::size_t na = chain.transient.size();
    sub.to_full = chain.transient;
    sub.from_full.assign(chain.n_states(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < na; ++i) sub.from_full[chain.transient[i]] = i;

    sub.PA = Dense(na, na);
    double leak = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < na; ++j) {
            const double v = chain.P(chain.transient[i], chain.transient[j]);
            sub.PA(i, j) = v;
            row_sum += v;
        }
        leak = std::max(leak, 1.0 - row_sum);
    }
    if (!(leak > 0.0))
        throw NonPrimitiveError("target set is unreachable from the transient set");

    BoolMatrix base(na);
    bool zero_row = false;
    std::vector<bool> has_in(na, false);
    for (std::size_t i = 0; i < na; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < na; ++j) {
            if (sub.PA(i, j) > 0.0) {
                base.set(i, j);
                has_in[j] = true;
                any = true;
            }
        }
        zero_row = zero_row || !any;
    }
    if (zero_row || std::find(has_in.begin(), has_in.end(), false) != has_in.end())
        throw NonPrimitiveError("restriction to the transient set is not primitive");

    // Positivity of powers is monotone once rows and columns are all nonzero,
    // so squaring up to the Wielandt bound W = (|A|-1)^2 + 1 decides primitivity.
    const std::size_t wielandt = (na - 1) * (na - 1) + 1;
    if (base.all_positive()) {
        sub.primitivity_power = 1;
        return sub;
    }
    BoolMatrix pow = base;
    std::size_t exponent = 1;
    while (exponent < wielandt) {
        pow = bool_mul(pow, pow);
        exponent *= 2;
        if (pow.all_positive()) {
            sub.primitivity_power = std::min(exponent, wielandt);
            return sub;
        }
    }
    throw NonPrimitiveError("restriction to the transient set is not primitive "
                            "(no positive power up to the Wielandt bound)");
}

Distribution propagate(const MarkovChain& chain, const Distribution& alpha, std::size_t t) {
    if (alpha.size() != chain.n_states())
        throw SchemaError("alpha has wrong dimension");
    std::vector<double> v = alpha.weights();
    for (std::size_t step = 0; step < t; ++step) v = row_times(v, chain.P);
    return Distribution::exact(std::move(v));
}

std::vector<double> survival(const MarkovChain& chain, const Distribution& alpha,
                             std::size_t horizon) {
    if (alpha.size() != chain.n_states())
        throw SchemaError("alpha has wrong dimension");
    std::vector<double> out(horizon + 1, 0.0);
    std::vector<double> v = alpha.weights();
    for (std::size_t t = 0; t <= horizon; ++t) {
        double alive = 0.0;
        for (std::size_t y : chain.transient) alive += v[y];
        out[t] = alive;
        if (t < horizon) v = row_times(v, chain.P);
    }
    return out;
}

Distribution absorption_profile(const MarkovChain& chain, const Distribution& alpha) {
    const SubChain sub = restrict_chain(chain);
    const std::size_t na = sub.to_full.size();
    const std::size_t ng = chain.goal.size();

    Dense system(na, na);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j)
            system(i, j) = (i == j ? 1.0 : 0.0) - sub.PA(i, j);
    Dense rhs(na, ng);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t g = 0; g < ng; ++g)
            rhs(i, g) = chain.P(sub.to_full[i], chain.goal[g]);

    const Dense hit = solve_linear(system, rhs);

    std::vector<double> profile(ng, 0.0);
    for (std::size_t g = 0; g < ng; ++g) profile[g] = alpha[chain.goal[g]];
    for (std::size_t i = 0; i < na; ++i) {
        const double mass = alpha[sub.to_full[i]];
        if (mass == 0.0) continue;
        for (std::size_t g = 0; g < ng; ++g) profile[g] += mass * hit(i, g);
    }
    // The solve can leave harmless -1e-17 style noise on unreachable targets.
    for (double& v : profile)
        if (v < 0.0 && v > -1e-12) v = 0.0;
    return Distribution::from_weights(std::move(profile));
}

std::vector<double> alpha_on_transient(const MarkovChain& chain, const Distribution& alpha) {
    if (alpha.size() != chain.n_states())
        throw SchemaError("alpha has wrong dimension");
    for (std::size_t g : chain.goal)
        if (alpha[g] != 0.0)
            throw SchemaError("initial distribution has mass on the absorbing set");
    std::vector<double> out(chain.transient.size());
    for (std::size_t i = 0; i < chain.transient.size(); ++i)
        out[i] = alpha[chain.transient[i]];
    return out;
}

Distribution alpha_to_full(const MarkovChain& chain, const std::vector<double>& alpha_a) {
    std::vector<double> w(chain.n_states(), 0.0);
    for (std::size_t i = 0; i < chain.transient.size(); ++i)
        w[chain.transient[i]] = alpha_a[i];
    return Distribution::from_weights(std::move(w));
}

}  // namespace hitlab
