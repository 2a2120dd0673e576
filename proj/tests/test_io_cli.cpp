#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "covkit/chains.hpp"
#include "covkit/cli.hpp"
#include "covkit/estimators.hpp"
#include "covkit/io.hpp"
#include "oracles.hpp"
#include "schema_check.hpp"

using namespace covkit;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("covkit_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

void expect_schema(const json& doc, const std::string& schema_name) {
    std::string error;
    const bool ok = schema_check::validate(schema_check::load_schema(schema_name), doc, error);
    INFO(error);
    CHECK(ok);
}

}  // namespace

TEST_CASE("csv parsing handles plain, headered, and malformed input") {
    std::stringstream plain("1,2\n3,4\n5,6\n");
    const Eigen::MatrixXd m = load_chain_csv(plain);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(m(2, 1) == 6.0);

    std::stringstream headered("a,b\n1,2\n3,4\n5,6\n");
    CHECK(load_chain_csv(headered) == m);

    std::stringstream crlf("1,2\r\n3,4\r\n5,6\r\n");
    CHECK(load_chain_csv(crlf) == m);

    std::stringstream ragged("1,2\n3\n5,6\n");
    CHECK_THROWS_WITH_AS(load_chain_csv(ragged, "x.csv"),
                         doctest::Contains("ragged row 2"), IoError);

    std::stringstream bad_cell("1,2\n3,oops\n");
    CHECK_THROWS_WITH_AS(load_chain_csv(bad_cell, "x.csv"),
                         doctest::Contains("row 2, column 2"), IoError);

    std::stringstream nan_cell("1,2\nnan,4\n");
    CHECK_THROWS_WITH_AS(load_chain_csv(nan_cell, "x.csv"),
                         doctest::Contains("row 2, column 1"), IoError);

    std::stringstream too_short("1,2\n");
    CHECK_THROWS_AS(load_chain_csv(too_short), IoError);

    std::stringstream sci("1e-3,2E4\n-1.5,+0.25\n");
    const Eigen::MatrixXd s = load_chain_csv(sci);
    CHECK(s(0, 1) == 2e4);
}

TEST_CASE("binary chains round-trip bit for bit") {
    TempDir dir;
    const Eigen::MatrixXd chain = ar1_generate({0.6, 2024}, 500);
    const std::string path = dir.file("chain.bin");
    save_chain(path, chain);
    CHECK(load_chain(path) == chain);
    CHECK(load_chain(path, ChainFormat::Bin) == chain);

    // csv loses nothing either at %.17g
    const std::string csv_path = dir.file("chain.csv");
    save_chain(csv_path, chain, ChainFormat::Csv, true);
    CHECK(load_chain(csv_path) == chain);

    std::ofstream bad(dir.file("bad.bin"), std::ios::binary);
    bad << "XXXXGARBAGE";
    bad.close();
    CHECK_THROWS_WITH_AS(load_chain(dir.file("bad.bin")), doctest::Contains("magic"), IoError);

    // truncate a valid file
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(dir.file("trunc.bin"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_WITH_AS(load_chain(dir.file("trunc.bin")), doctest::Contains("truncated"),
                         IoError);

    CHECK_THROWS_AS(load_chain(dir.file("missing.csv")), IoError);
    CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}

TEST_CASE("cli simulate then estimate matches the library") {
    TempDir dir;
    const std::string chain_path = dir.file("sim.bin");
    auto sim = run_cli({"simulate", "--model", "ar1:0.5", "--n", "2000", "--seed", "9",
                        "--out", chain_path, "--format", "bin"});
    CHECK(sim.exit_code == 0);

    const Eigen::MatrixXd expected_chain = ar1_generate({0.5, 9}, 2000);
    CHECK(load_chain(chain_path) == expected_chain);

    auto est = run_cli({"estimate", "--input", chain_path, "--method", "wbm", "--window",
                        "flat-top", "--schedule", "pow:0.3333"});
    CHECK(est.exit_code == 0);
    const json doc = json::parse(est.out);
    expect_schema(doc, "estimate.schema.json");

    const Index b = batch_size(2000, BatchSchedule::power(0.3333));
    const CovEstimate direct = wbm_flat_top_fast(expected_chain, std::max<Index>(b, 4));
    CHECK(doc["b_used"] == direct.b_used);
    CHECK(doc["n_used"] == direct.n_used);
    CHECK(doc["matrix"][0].get<double>() == doctest::Approx(direct.matrix(0, 0)).epsilon(1e-12));

    // wbm with a bartlett window emits the same matrix as bm
    auto wbm_out = run_cli({"estimate", "--input", chain_path, "--method", "wbm", "--window",
                            "bartlett"});
    auto bm_out = run_cli({"estimate", "--input", chain_path, "--method", "bm"});
    CHECK(wbm_out.exit_code == 0);
    const double wbm_value = json::parse(wbm_out.out)["matrix"][0].get<double>();
    const double bm_value = json::parse(bm_out.out)["matrix"][0].get<double>();
    CHECK(wbm_value == doctest::Approx(bm_value).epsilon(1e-12));

    // determinism of the whole pipeline
    auto est2 = run_cli({"estimate", "--input", chain_path, "--method", "wbm", "--window",
                         "flat-top", "--schedule", "pow:0.3333"});
    const json doc2 = json::parse(est2.out);
    CHECK(doc["matrix"] == doc2["matrix"]);
}

TEST_CASE("cli rejects bad usage with exit code 2") {
    TempDir dir;
    const std::string chain_path = dir.file("c.csv");
    save_chain(chain_path, ar1_generate({0.0, 3}, 100));

    auto bad_window = run_cli({"estimate", "--input", chain_path, "--method", "sv", "--window",
                               "hamming"});
    CHECK(bad_window.exit_code == 2);
    CHECK(bad_window.err.find("tukey-hanning") != std::string::npos);  // lists valid names

    auto missing_window = run_cli({"estimate", "--input", chain_path, "--method", "sv"});
    CHECK(missing_window.exit_code == 2);

    auto no_sub = run_cli({});
    CHECK(no_sub.exit_code == 2);

    auto bad_flag = run_cli({"estimate", "--nope"});
    CHECK(bad_flag.exit_code == 2);

    auto missing_file = run_cli({"estimate", "--input", dir.file("nope.csv"), "--method", "bm"});
    CHECK(missing_file.exit_code == 4);
    CHECK(json::parse(missing_file.err)["error"]["type"] == "io");

    auto help = run_cli({"--help"});
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("estimate") != std::string::npos);
}

TEST_CASE("cli check-window reports and exits by consistency") {
    auto th = run_cli({"check-window", "--window", "tukey-hanning", "--b", "512"});
    CHECK(th.exit_code == 0);
    const json th_doc = json::parse(th.out);
    expect_schema(th_doc, "check_window.schema.json");
    CHECK(th_doc["cond1_holds"].get<bool>());
    CHECK(th_doc["consistency_ok"].get<bool>());

    auto ft = run_cli({"check-window", "--window", "flat-top", "--b", "512"});
    CHECK(ft.exit_code == 0);
    const json ft_doc = json::parse(ft.out);
    CHECK(ft_doc["abs_sum_delta2"].get<double>() == doctest::Approx(4.0 / 512).epsilon(1e-10));

    auto trunc = run_cli({"check-window", "--window", "truncation"});
    CHECK(trunc.exit_code == 3);
    const json trunc_doc = json::parse(trunc.out);
    CHECK_FALSE(trunc_doc["consistency_ok"].get<bool>());
    CHECK_FALSE(trunc_doc["abs_sum_decays"].get<bool>());

    auto scaled = run_cli({"check-window", "--window", "scaled-bartlett:2"});
    CHECK(scaled.exit_code == 3);

    auto unknown = run_cli({"check-window", "--window", "box"});
    CHECK(unknown.exit_code == 2);
}

TEST_CASE("cli ess, stop and coverage emit schema-conforming json") {
    TempDir dir;
    const std::string chain_path = dir.file("c.csv");
    save_chain(chain_path, ar1_generate({0.3, 12}, 5000));

    auto ess = run_cli({"ess", "--input", chain_path});
    CHECK(ess.exit_code == 0);
    const json ess_doc = json::parse(ess.out);
    expect_schema(ess_doc, "ess.schema.json");
    CHECK(ess_doc["ess"].get<double>() > 0.0);
    CHECK(ess_doc["n"] == 5000);

    auto stop = run_cli({"stop", "--model", "ar1:0.0", "--seed", "5", "--ess-threshold", "2000",
                         "--min-n", "1000", "--check-interval", "100"});
    CHECK(stop.exit_code == 0);
    const json stop_doc = json::parse(stop.out);
    expect_schema(stop_doc, "stop.schema.json");
    CHECK(stop_doc["reached_threshold"].get<bool>());
    CHECK(stop_doc["stopped_at"].get<long>() >= 1000);

    // consuming a stored chain that runs out before the threshold fails numerically
    auto exhausted = run_cli({"stop", "--input", chain_path, "--ess-threshold", "1e9",
                              "--min-n", "1000", "--check-interval", "100"});
    CHECK(exhausted.exit_code == 0);  // capped by the file length
    CHECK_FALSE(json::parse(exhausted.out)["reached_threshold"].get<bool>());

    auto both = run_cli({"stop", "--model", "ar1:0.0", "--input", chain_path,
                         "--ess-threshold", "10"});
    CHECK(both.exit_code == 2);

    auto coverage = run_cli({"coverage", "--model", "ar1:0.5", "--n", "2000", "--reps", "50",
                             "--method", "bm", "--seed", "3"});
    CHECK(coverage.exit_code == 0);
    const json cov_doc = json::parse(coverage.out);
    expect_schema(cov_doc, "coverage.schema.json");
    CHECK(cov_doc["coverage"].get<double>() > 0.5);
    CHECK(cov_doc["reps"] == 50);
}

TEST_CASE("cli bench runs a small grid in each mode") {
    TempDir dir;
    auto time_run = run_cli({"bench", "--mode", "time", "--p", "2", "--n", "2000", "--reps", "3",
                             "--methods", "bm", "wbm:flat-top", "--json", dir.file("t.json")});
    CHECK(time_run.exit_code == 0);
    CHECK(time_run.out.find("mode,p,n,b,method,window") != std::string::npos);
    CHECK(time_run.out.find("\ntime,2,2000,") != std::string::npos);
    std::ifstream tj(dir.file("t.json"));
    const json time_doc = json::parse(tj);
    expect_schema(time_doc, "bench.schema.json");
    CHECK(time_doc["cells"].size() == 2);

    auto vr = run_cli({"bench", "--mode", "var-ratio", "--n", "4000", "--reps", "20", "--model",
                       "ar1:0.5", "--methods", "wbm:flat-top", "sv:flat-top"});
    CHECK(vr.exit_code == 0);
    CHECK(vr.out.find("variance") != std::string::npos);

    auto mse_run = run_cli({"bench", "--mode", "mse", "--p", "3", "--n", "3000", "--reps", "5",
                            "--scales", "0.2", "--windows", "bartlett", "flat-top"});
    CHECK(mse_run.exit_code == 0);
    CHECK(mse_run.out.find("mean_mse_wbm") != std::string::npos);

    auto bad_mode = run_cli({"bench", "--mode", "warp"});
    CHECK(bad_mode.exit_code == 2);
}
