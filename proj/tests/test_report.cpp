#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "hitlab/engine.hpp"
#include "hitlab/report.hpp"
#include "hitlab/rim.hpp"
#include "support.hpp"

using namespace hitlab;

TEST_CASE("json writer emits stable, parseable output") {
    SUBCASE("nesting and separators") {
        JsonWriter w;
        w.begin_object();
        w.key("a").value(1);
        w.key("b").begin_array().value(1.5).value("x").value(true).null().end_array();
        w.key("c").begin_object().kv("d", 2.0).end_object();
        w.end_object();
        CHECK(w.str() == R"({"a":1,"b":[1.5,"x",true,null],"c":{"d":2}})");
    }
    SUBCASE("doubles round-trip through 17 significant digits") {
        for (double v : {1.0 / 3.0, 0.1, 1e-300, 123456.789012345678, 5e-324}) {
            JsonWriter w;
            w.begin_array().value(v).end_array();
            const nlohmann::json parsed = nlohmann::json::parse(w.str());
            CHECK(parsed[0].get<double>() == v);
        }
    }
    SUBCASE("negative zero canonicalizes and non-finite becomes null") {
        JsonWriter w;
        w.begin_array()
            .value(-0.0)
            .value(std::numeric_limits<double>::infinity())
            .value(std::numeric_limits<double>::quiet_NaN())
            .end_array();
        CHECK(w.str() == "[0,null,null]");
    }
    SUBCASE("strings are escaped") {
        JsonWriter w;
        w.begin_object().kv("k", std::string("a\"b\\c\nd")).end_object();
        CHECK(nlohmann::json::parse(w.str())["k"] == "a\"b\\c\nd");
    }
}

TEST_CASE("alpha spec grammar") {
    const MarkovChain rim = build_rim({1, 0.5});
    SUBCASE("dirac") {
        const Distribution d = alpha_from_spec(rim, "dirac:2");
        CHECK(d[2] == 1.0);
    }
    SUBCASE("uniform covers the transient set only") {
        const Distribution d = alpha_from_spec(rim, "uniform");
        for (std::size_t x = 0; x < 4; ++x) CHECK(d[x] == doctest::Approx(0.25));
        CHECK(d[4] == 0.0);
    }
    SUBCASE("uniform-set") {
        const Distribution d = alpha_from_spec(rim, "uniform-set:1,3");
        CHECK(d[1] == doctest::Approx(0.5));
        CHECK(d[3] == doctest::Approx(0.5));
        CHECK(d[0] == 0.0);
    }
    SUBCASE("weights file, array and object forms") {
        const std::string path =
            (std::filesystem::temp_directory_path() / "hitlab_weights_test.json").string();
        {
            std::ofstream out(path);
            out << "[0.25, 0.25, 0.25, 0.25, 0]";
        }
        const Distribution arr = alpha_from_spec(rim, "weights:" + path);
        CHECK(arr[0] == doctest::Approx(0.25));
        {
            std::ofstream out(path);
            out << R"({"1": 0.75, "3": 0.25})";
        }
        const Distribution obj = alpha_from_spec(rim, "weights:" + path);
        CHECK(obj[1] == doctest::Approx(0.75));
        CHECK(obj[3] == doctest::Approx(0.25));
        std::remove(path.c_str());
    }
    SUBCASE("unknown forms and labels are schema errors") {
        CHECK_THROWS_AS(alpha_from_spec(rim, "nonsense"), SchemaError);
        CHECK_THROWS_AS(alpha_from_spec(rim, "dirac:zz"), SchemaError);
        CHECK_THROWS_AS(alpha_from_spec(rim, "uniform-set:"), SchemaError);
    }
}

TEST_CASE("analysis report renders deterministically and parses") {
    const MarkovChain chain = testsupport::two_state();
    const std::vector<std::pair<std::string, Distribution>> alphas{
        {"dirac:s0", Distribution::dirac(2, 0)}};
    AnalysisOptions options;
    const AnalysisResult result = analyze_chain(chain, alphas, options);
    CHECK(result.passed);

    ReportMeta meta;
    meta.command = "analyze";
    meta.input = "two_state.json";
    const std::string once = render_analysis_report(result, meta);
    const std::string twice = render_analysis_report(result, meta);
    CHECK(once == twice);

    const nlohmann::json parsed = nlohmann::json::parse(once);
    CHECK(parsed["status"] == "PASSED");
    CHECK(parsed["spectral"]["lambda"].get<double>() == doctest::Approx(0.5));
    CHECK(parsed["alphas"][0]["csqst"]["mode"].get<int>() == 0);
    CHECK(parsed["basin"]["states"][0] == "s0");
}

TEST_CASE("csv series have the declared columns") {
    const MarkovChain chain = testsupport::two_state();
    AnalysisOptions options;
    options.horizon = 12;
    const AnalysisResult result = analyze_chain(
        chain, {{"uniform", Distribution::dirac(2, 0)}}, options);
    const std::string dir =
        (std::filesystem::temp_directory_path() / "hitlab_csv_test").string();
    write_analysis_csv(result, dir);

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(entry.path());
        std::string header;
        std::getline(in, header);
        if (entry.path().string().find("representation") != std::string::npos)
            CHECK(header == "t,survival,leading,remainder,residual");
        else
            CHECK(header == "t,pmf,survival,absorbed");
        std::size_t lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == 13);
        ++files;
    }
    CHECK(files == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify suite passes on healthy fixtures") {
    for (MarkovChain chain :
         {testsupport::two_state(), build_rim({1, 0.5}),
          load_chain_file(testsupport::fixture_path("random4.json")).chain}) {
        const VerifyResult result = verify_chain(chain, {});
        for (const auto& check : result.checks) {
            INFO(check.name, " = ", check.value, " threshold ", check.threshold);
            CHECK(check.ok);
        }
        CHECK(result.passed);
    }
}
