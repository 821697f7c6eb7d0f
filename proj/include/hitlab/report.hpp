#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hitlab/chain.hpp"
#include "hitlab/engine.hpp"
#include "hitlab/montecarlo.hpp"

namespace hitlab {

// Streaming JSON writer with a fixed key order and fixed float formatting
// (%.17g by default), so identical inputs reproduce identical bytes.
// Non-finite numbers are emitted as null; reports carry no non-finite fields.
class JsonWriter {
public:
    explicit JsonWriter(int significant_digits = 17)
        : digits_(significant_digits) {}

    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& value(double v);
    JsonWriter& value(std::int64_t v);
    JsonWriter& value(std::uint64_t v);
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(bool v);
    JsonWriter& null();

    JsonWriter& kv(const std::string& k, double v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, const std::string& v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, bool v) { return key(k).value(v); }

    std::string str() const { return out_.str(); }

private:
    void separator();
    std::string format_double(double v) const;

    std::ostringstream out_;
    std::vector<bool> needs_comma_;
    bool pending_key_ = false;
    int digits_;
};

// Start-distribution grammar: dirac:<label> | uniform | uniform-set:<l1,l2,...>
// | weights:<json file with an array or a {label: weight} object>.
Distribution alpha_from_spec(const MarkovChain& chain, const std::string& spec);

struct ReportMeta {
    std::string version = "0.1.0";
    std::string command;
    std::string input;
};

std::string render_analysis_report(const AnalysisResult& result, const ReportMeta& meta);

// Per-alpha CSV series (12 significant digits): representation columns
// t, survival, leading, remainder, residual; stop-law columns
// t, pmf, survival, absorbed.
void write_analysis_csv(const AnalysisResult& result, const std::string& dir);

struct GridPoint {
    std::size_t t = 0;
    double empirical = 0.0;
    double exact = 0.0;
    double z = 0.0;
    bool ok = true;
};

struct SimulateSummary {
    SimulationConfig config;
    std::string alpha_spec;
    double censored_fraction = 0.0;
    std::vector<GridPoint> base_survival;
    std::vector<std::string> exit_labels;
    std::vector<GridPoint> exit_profile;  // t unused
    std::vector<GridPoint> tau1_pmf;
    ConditionalLawResult conditional;
    bool passed = false;
};

std::string render_simulate_summary(const SimulateSummary& summary, const ReportMeta& meta);

void write_samples_csv(const SampleSet& samples, const MarkovChain& chain,
                       const std::string& path);

}  // namespace hitlab
