#include "hitlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace hitlab {

JsonWriter& JsonWriter::begin_object() {
    separator();
    out_ << "{";
    needs_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    out_ << "}";
    needs_comma_.pop_back();
    if (!needs_comma_.empty()) needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    separator();
    out_ << "[";
    needs_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    out_ << "]";
    needs_comma_.pop_back();
    if (!needs_comma_.empty()) needs_comma_.back() = true;
    return *this;
}

void JsonWriter::separator() {
    if (pending_key_) {
        pending_key_ = false;
        return;
    }
    if (!needs_comma_.empty() && needs_comma_.back()) out_ << ",";
}

namespace {

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

JsonWriter& JsonWriter::key(const std::string& k) {
    separator();
    out_ << '"' << escape_json(k) << "\":";
    needs_comma_.back() = false;
    pending_key_ = true;
    return *this;
}

std::string JsonWriter::format_double(double v) const {
    if (v == 0.0) return "0";  // canonicalizes -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits_, v);
    return buf;
}

JsonWriter& JsonWriter::value(double v) {
    separator();
    if (std::isfinite(v))
        out_ << format_double(v);
    else
        out_ << "null";
    needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
    separator();
    out_ << '"' << escape_json(v) << '"';
    needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
    separator();
    out_ << v;
    needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
    separator();
    out_ << v;
    needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::value(bool v) {
    separator();
    out_ << (v ? "true" : "false");
    needs_comma_.back() = true;
    return *this;
}

JsonWriter& JsonWriter::null() {
    separator();
    out_ << "null";
    needs_comma_.back() = true;
    return *this;
}

Distribution alpha_from_spec(const MarkovChain& chain, const std::string& spec) {
    const std::size_t n = chain.n_states();
    if (spec == "uniform") return Distribution::uniform_on(n, chain.transient);
    if (spec.rfind("dirac:", 0) == 0)
        return Distribution::dirac(n, chain.index_of(spec.substr(6)));
    if (spec.rfind("uniform-set:", 0) == 0) {
        std::vector<std::size_t> support;
        std::stringstream ss(spec.substr(12));
        std::string label;
        while (std::getline(ss, label, ','))
            if (!label.empty()) support.push_back(chain.index_of(label));
        if (support.empty()) throw SchemaError("uniform-set needs at least one label");
        return Distribution::uniform_on(n, support);
    }
    if (spec.rfind("weights:", 0) == 0) {
        const std::string path = spec.substr(8);
        std::ifstream in(path);
        if (!in) throw SchemaError("cannot open weights file '" + path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("invalid JSON in '" + path + "': " + e.what());
        }
        std::vector<double> w(n, 0.0);
        if (doc.is_array()) {
            if (doc.size() != n)
                throw SchemaError("weights array must have length " + std::to_string(n));
            for (std::size_t i = 0; i < n; ++i) w[i] = doc[i].get<double>();
        } else if (doc.is_object()) {
            for (auto it = doc.begin(); it != doc.end(); ++it)
                w[chain.index_of(it.key())] = it.value().get<double>();
        } else {
            throw SchemaError("weights file must hold an array or an object");
        }
        return Distribution::from_weights(std::move(w));
    }
    throw SchemaError("unknown alpha spec '" + spec +
                      "' (expected dirac:<label> | uniform | uniform-set:<l1,...> | "
                      "weights:<file>)");
}

namespace {

void write_vector(JsonWriter& w, const std::string& key, const std::vector<double>& v) {
    w.key(key).begin_array();
    for (double x : v) w.value(x);
    w.end_array();
}

void write_tool_header(JsonWriter& w, const ReportMeta& meta) {
    w.key("tool").begin_object();
    w.kv("name", std::string("hitlab"));
    w.kv("version", meta.version);
    w.end_object();
    w.kv("command", meta.command);
    w.kv("input", meta.input);
}

}  // namespace

std::string render_analysis_report(const AnalysisResult& r, const ReportMeta& meta) {
    JsonWriter w;
    w.begin_object();
    write_tool_header(w, meta);
    w.kv("status", std::string(r.passed ? "PASSED" : "FAILED"));
    w.key("failures").begin_array();
    for (const auto& f : r.failures) w.value(f);
    w.end_array();
    w.key("tolerances").begin_object();
    w.kv("residual", r.tolerance);
    w.kv("slack", 1e-12);
    w.end_object();
    w.key("horizon").value(r.horizon);

    w.key("chain").begin_object();
    w.key("states").value(r.chain.n_states());
    w.key("transient").value(r.chain.transient.size());
    w.key("absorbing").value(r.chain.goal.size());
    w.key("labels").begin_array();
    for (const auto& s : r.chain.states) w.value(s);
    w.end_array();
    w.key("absorbing_labels").begin_array();
    for (std::size_t g : r.chain.goal) w.value(r.chain.states[g]);
    w.end_array();
    w.key("primitivity_power").value(r.sub.primitivity_power);
    w.end_object();

    w.key("spectral").begin_object();
    w.kv("lambda", r.triple.lambda);
    w.key("iterations").value(r.triple.iterations);
    w.kv("left_residual", r.triple.left_residual);
    w.kv("right_residual", r.triple.right_residual);
    write_vector(w, "mu_star", r.triple.mu_star);
    write_vector(w, "gamma", r.triple.gamma);
    write_vector(w, "nu", r.local.nu);
    write_vector(w, "omega", r.omega.weights());
    w.end_object();

    w.key("metastability").begin_object();
    w.kv("R", r.mmt.R);
    w.kv("R_tail_bound", r.mmt.tail_bound);
    w.kv("argmax_state", r.chain.states[r.sub.to_full[r.mmt.argmax]]);
    w.kv("T", r.profile.T);
    w.kv("ratio", r.profile.ratio);
    w.kv("rate_a", r.profile.rate_a);  // null when infinite
    w.kv("hypothesis", r.profile.hypothesis);
    w.end_object();

    w.key("basin").begin_object();
    w.key("steps").value(r.basin_report.steps);
    w.key("states").begin_array();
    for (std::size_t s : r.basin_report.states) w.value(r.chain.states[s]);
    w.end_array();
    w.kv("min_gamma", r.basin_report.min_gamma);
    w.kv("gamma_bound_ok", r.basin_report.gamma_bound_ok);
    w.end_object();

    w.key("alphas").begin_array();
    for (const auto& a : r.alphas) {
        w.begin_object();
        w.kv("spec", a.spec_text);
        w.kv("shift_factor", a.shift.factor);
        w.kv("delta", a.shift.delta);

        w.key("separation").begin_object();
        w.kv("initial", a.sep.sup.front());
        w.kv("final", a.sep.sup.back());
        {
            std::int64_t settle = -1;
            for (std::size_t t = 0; t < a.sep.sup.size(); ++t)
                if (a.sep.sup[t] < 1e-12) { settle = static_cast<std::int64_t>(t); break; }
            if (settle >= 0)
                w.key("time_to_1e-12").value(settle);
            else
                w.key("time_to_1e-12").null();
        }
        w.end_object();

        w.key("csqst").begin_object();
        {
            double mass = 0.0, mean = 0.0;
            std::size_t mode = 0;
            for (std::size_t t = 0; t < a.csqst.pmf.size(); ++t) {
                mass += a.csqst.pmf[t];
                mean += static_cast<double>(t) * a.csqst.pmf[t];
                if (a.csqst.pmf[t] > a.csqst.pmf[mode]) mode = t;
            }
            w.kv("mass", mass);
            w.kv("mean_given_stopped", mass > 0.0 ? mean / mass : 0.0);
            w.key("mode").value(mode);
            w.kv("defect", a.csqst.defect);
            w.kv("tail_bound", a.csqst.tail_bound);
            w.kv("convolution_residual", a.csqst.convolution_max_diff);
        }
        w.end_object();

        w.key("representation").begin_object();
        w.kv("max_residual", a.repr.max_residual);
        w.kv("closed_form_residual", a.repr.tracking_closed_form_max);
        w.kv("flux_residual", a.repr.tracking_flux_dev_max);
        w.kv("mass_defect", a.repr.tracking_mass_defect_max);
        w.end_object();

        w.key("exit").begin_object();
        w.kv("p_after", a.repr.exit.p_after);
        w.kv("unresolved", a.repr.exit.unresolved);
        w.kv("max_residual", a.repr.exit.max_residual);
        write_vector(w, "layer0", a.repr.exit.layer0_absorbed);
        write_vector(w, "predicted", a.repr.exit.predicted);
        write_vector(w, "exact", a.repr.exit.exact);
        w.end_object();

        w.key("bounds").begin_object();
        w.kv("applicable", a.bounds.hypothesis);
        w.kv("rate_a", a.bounds.rate_a);
        w.kv("t_sanity", a.bounds.t_sanity);
        w.kv("all_ok", a.bounds.all_ok);
        w.key("rows").begin_array();
        for (const auto& row : a.bounds.rows) {
            w.begin_object();
            w.key("n").value(row.n);
            w.key("t_floor").value(row.t_floor);
            w.key("t_ceil").value(row.t_ceil);
            w.kv("lhs_floor", row.lhs_floor);
            w.kv("lhs_ceil", row.lhs_ceil);
            w.kv("rhs", row.rhs);
            w.kv("rhs_in_proof", row.rhs_in_proof);
            w.kv("sharper_lower", row.sharper_lower);
            w.kv("sharper_upper", row.sharper_upper);
            w.kv("ok", row.ok_floor && row.ok_ceil);
            w.end_object();
        }
        w.end_array();
        w.end_object();

        w.key("semigroup").begin_object();
        w.kv("degenerate", a.semigroup.degenerate);
        w.kv("ephemeral", a.semigroup.ephemeral_residual);
        w.kv("tau1", a.semigroup.tau1_residual);
        w.kv("jump", a.semigroup.jump_residual);
        w.end_object();

        w.kv("notada_excess", a.notada_excess);
        w.kv("sandwich_violation", a.sandwich_violation);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
    return out;
}

void write_csv_line(std::ofstream& out, const std::vector<double>& row) {
    char buf[64];
    for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", row[i]);
        out << (i ? "," : "") << buf;
    }
    out << "\n";
}

}  // namespace

void write_analysis_csv(const AnalysisResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < r.alphas.size(); ++k) {
        const auto& a = r.alphas[k];
        const std::string stem =
            dir + "/alpha" + std::to_string(k) + "_" + sanitize(a.spec_text);
        {
            std::ofstream out(stem + "_representation.csv");
            out << "t,survival,leading,remainder,residual\n";
            for (std::size_t t = 0; t <= a.repr.horizon; ++t)
                write_csv_line(out, {static_cast<double>(t), a.repr.survival[t],
                                     a.repr.leading[t], a.repr.remainder[t],
                                     a.repr.residual[t]});
        }
        {
            std::ofstream out(stem + "_csqst.csv");
            out << "t,pmf,survival,absorbed\n";
            // survival = P(tau_1 and tau_G both > t); absorbed = per-step
            // layer-0 mass entering G.
            for (std::size_t t = 0; t < a.csqst.pmf.size(); ++t)
                write_csv_line(out, {static_cast<double>(t), a.csqst.pmf[t],
                                     a.repr.remainder[t], a.repr.absorbed_total[t]});
        }
    }
}

std::string render_simulate_summary(const SimulateSummary& s, const ReportMeta& meta) {
    JsonWriter w;
    w.begin_object();
    write_tool_header(w, meta);
    w.kv("status", std::string(s.passed ? "PASSED" : "FAILED"));
    w.key("config").begin_object();
    w.key("seed").value(static_cast<std::uint64_t>(s.config.seed));
    w.key("trajectories").value(s.config.trajectories);
    w.key("horizon").value(s.config.horizon);
    w.key("block").value(s.config.block);
    w.end_object();
    w.kv("alpha", s.alpha_spec);
    w.kv("censored_fraction", s.censored_fraction);

    auto grid = [&](const std::string& name, const std::vector<GridPoint>& pts,
                    bool with_t) {
        w.key(name).begin_array();
        for (const auto& p : pts) {
            w.begin_object();
            if (with_t) w.key("t").value(p.t);
            w.kv("empirical", p.empirical);
            w.kv("exact", p.exact);
            w.kv("z", p.z);
            w.kv("ok", p.ok);
            w.end_object();
        }
        w.end_array();
    };

    w.key("base").begin_object();
    grid("survival", s.base_survival, true);
    w.key("exit_labels").begin_array();
    for (const auto& l : s.exit_labels) w.value(l);
    w.end_array();
    grid("exit", s.exit_profile, false);
    w.end_object();

    w.key("tracking").begin_object();
    grid("tau1_pmf", s.tau1_pmf, true);
    w.key("conditional_law").begin_object();
    w.key("n").value(s.conditional.n_conditioned);
    w.kv("tv", s.conditional.tv_distance);
    w.kv("tv_threshold", s.conditional.tv_threshold);
    w.kv("max_abs_z", s.conditional.max_abs_z);
    w.kv("pass", s.conditional.pass);
    w.end_object();
    w.end_object();

    w.end_object();
    return w.str() + "\n";
}

void write_samples_csv(const SampleSet& samples, const MarkovChain& chain,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open '" + path + "' for writing");
    const bool tracked = !samples.tau_1.empty();
    out << (tracked ? "trajectory,tau_g,exit_state,tau_1,x_tau1\n"
                    : "trajectory,tau_g,exit_state\n");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << i << "," << samples.tau_g[i] << ",";
        out << (samples.exit_state[i] >= 0
                    ? chain.states[static_cast<std::size_t>(samples.exit_state[i])]
                    : std::string(""));
        if (tracked) {
            out << "," << samples.tau_1[i] << ",";
            out << (samples.x_tau1[i] >= 0
                        ? chain.states[static_cast<std::size_t>(samples.x_tau1[i])]
                        : std::string(""));
        }
        out << "\n";
    }
}

}  // namespace hitlab
