#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "subpois/analytic.hpp"
#include "subpois/io.hpp"

using namespace subpois;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err, [&](const char* name) -> const char* {
        const auto it = env.find(name);
        return it == env.end() ? nullptr : it->second.c_str();
    });
    return {code, out.str(), err.str()};
}

Table parse_csv(const std::string& s) {
    std::istringstream is(s);
    return read_csv(is);
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST(CliPmf, GammaFirstRow) {
    const auto r = run_cli({"pmf", "--family", "gamma", "--lambda", "1", "--t", "1", "--kmax", "10"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto t = parse_csv(r.out);
    ASSERT_EQ(t.rows.size(), 11u);
    EXPECT_EQ(t.number(0, "k"), 0.0);
    EXPECT_NEAR(t.number(0, "p_k"), 0.5, 1e-15);
    EXPECT_EQ(std::get<std::string>(t.rows[0][t.column("reference_method")]), "closed-form");
    for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_LT(t.number(i, "abs_diff_ode"), 1e-6);
}

TEST(CliPmf, LinearIsPoisson) {
    const auto r = run_cli({"pmf", "--family", "linear", "--lambda", "2", "--t", "1"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto t = parse_csv(r.out);
    ASSERT_EQ(t.rows.size(), 31u);
    for (std::size_t k = 0; k <= 30; ++k) EXPECT_NEAR(t.number(k, "p_k"), pmf_poisson(2.0, static_cast<int>(k)), 1e-15);
}

TEST(CliPmf, StableSecondRow) {
    const auto r = run_cli({"pmf", "--family", "stable", "--alpha", "0.5", "--lambda", "1", "--t", "1", "--kmax", "4"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto t = parse_csv(r.out);
    EXPECT_NEAR(t.number(2, "p_k"), 0.25 * std::exp(-1.0), 1e-15);
    EXPECT_LT(t.number(2, "abs_diff_reference"), 1e-12);
}

TEST(CliPmf, JsonOutputRoundTrips) {
    const auto csv = run_cli({"pmf", "--family", "tempered", "--alpha", "0.4", "--theta", "2", "--kmax", "12"});
    const auto json = run_cli({"pmf", "--family", "tempered", "--alpha", "0.4", "--theta", "2", "--kmax", "12", "--format", "json"});
    ASSERT_EQ(csv.code, 0);
    ASSERT_EQ(json.code, 0);
    std::istringstream is(json.out);
    const auto a = parse_csv(csv.out);
    const auto b = read_json(is);
    for (std::size_t k = 0; k <= 12; ++k) EXPECT_EQ(a.number(k, "p_k"), b.number(k, "p_k"));
}

TEST(CliHitting, Columns) {
    const auto r = run_cli({"hitting", "--family", "linear", "--lambda", "1.5", "--k", "2", "--points", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_csv(r.out);
    ASSERT_EQ(t.rows.size(), 10u);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_NEAR(t.number(i, "density"), t.number(i, "erlang"), 1e-14);
        EXPECT_NEAR(t.number(i, "density"), t.number(i, "t2_closed"), 1e-14);
    }
    const auto one = run_cli({"hitting", "--family", "gamma", "--k", "1", "--points", "5"});
    const auto t1 = parse_csv(one.out);
    for (std::size_t i = 0; i < t1.rows.size(); ++i) EXPECT_NEAR(t1.number(i, "density"), t1.number(i, "t1_closed"), 1e-15);
    EXPECT_EQ(run_cli({"hitting", "--family", "gamma", "--k", "0"}).code, cli::kExitUsage);
}

TEST(CliSimulate, SeedDeterminismAndSchema) {
    const std::vector<std::string> args{"simulate", "--family", "stable", "--alpha", "0.5", "--samples", "300", "--seed", "9",
                                        "--format", "json"};
    auto a = args, b = args;
    a.insert(a.end(), {"--workers", "1"});
    b.insert(b.end(), {"--workers", "4"});
    const auto ra = run_cli(a), rb = run_cli(b);
    ASSERT_EQ(ra.code, 0) << ra.err;
    EXPECT_EQ(ra.out, rb.out);
    std::istringstream is(ra.out);
    const auto paths = read_jsonl(is);
    EXPECT_EQ(paths.size(), 300u);
    const auto first = nlohmann::json::parse(ra.out.substr(0, ra.out.find('\n')));
    for (const char* key : {"t", "events", "seed", "method"}) EXPECT_TRUE(first.contains(key));

    const auto c1 = run_cli({"simulate", "--family", "gamma", "--method", "ctrw", "--n", "2", "--seed", "4"});
    const auto c2 = run_cli({"simulate", "--family", "gamma", "--method", "ctrw", "--n", "2", "--seed", "4"});
    const auto c3 = run_cli({"simulate", "--family", "gamma", "--method", "ctrw", "--n", "2", "--seed", "5"});
    EXPECT_EQ(c1.out, c2.out);
    EXPECT_NE(c1.out, c3.out);
    EXPECT_EQ(parse_csv(c1.out).rows.size(), 1000u);
    EXPECT_EQ(run_cli({"simulate", "--method", "bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"simulate", "--method", "ctrw", "--n", "0"}).code, cli::kExitUsage);
}

TEST(CliValidate, ExitCodes) {
    const auto pmf = run_cli({"validate", "--suite", "pmf", "--family", "gamma", "--samples", "1000000"});
    EXPECT_EQ(pmf.code, cli::kExitOk) << pmf.out;
    const auto reports = nlohmann::json::parse(pmf.out);
    ASSERT_TRUE(reports.is_array());
    for (const auto& r : reports) EXPECT_TRUE(r.at("pass").get<bool>()) << r.dump();

    const auto st = run_cli({"validate", "--suite", "moments", "--family", "stable", "--alpha", "0.5"});
    EXPECT_EQ(st.code, cli::kExitOk) << st.out;
    EXPECT_NE(st.out.find("refusal"), std::string::npos);

    const auto sk = run_cli({"validate", "--suite", "skellam", "--family", "gamma", "--lambda", "1", "--t", "1"});
    EXPECT_EQ(sk.code, cli::kExitOk) << sk.out;

    const auto strict = run_cli({"validate", "--suite", "pmf", "--family", "gamma", "--samples", "20000", "--tv-threshold", "0"});
    EXPECT_EQ(strict.code, cli::kExitValidationFailed);

    EXPECT_EQ(run_cli({"validate", "--suite", "nope"}).code, cli::kExitUsage);
}

TEST(CliMoments, StableIsInfinite) {
    const auto r = run_cli({"moments", "--family", "stable", "--alpha", "0.5"});
    ASSERT_EQ(r.code, 0);
    const auto t = parse_csv(r.out);
    EXPECT_TRUE(std::isinf(t.number(0, "value")));
    const auto g = parse_csv(run_cli({"moments", "--family", "gamma", "--lambda", "1", "--t", "3"}).out);
    bool saw = false;
    for (std::size_t i = 0; i < g.rows.size(); ++i)
        if (std::get<std::string>(g.rows[i][0]) == "variance" && std::get<std::string>(g.rows[i][2]) == "closed-form") {
            EXPECT_NEAR(g.number(i, "value"), 6.0, 1e-14);
            saw = true;
        }
    EXPECT_TRUE(saw);
}

TEST(CliConditional, RowsAndJumpTimes) {
    const auto r = run_cli({"conditional", "--family", "gamma", "--t", "2", "--s", "1", "--k", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_csv(r.out);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_NEAR(t.number(1, "probability"), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(t.number(0, "row_sum"), 1.0, 1e-12);
    EXPECT_EQ(run_cli({"conditional", "--family", "gamma", "--t", "2", "--s", "3", "--k", "2"}).code, cli::kExitUsage);

    const auto j = run_cli({"jumptimes", "--family", "gamma", "--t", "2.5", "--sizes", "1,2,1"});
    ASSERT_EQ(j.code, 0) << j.err;
    const auto jt = parse_csv(j.out);
    EXPECT_NEAR(jt.number(0, "normalization"), 1.0, 1e-10);
    const double expect = std::exp(std::lgamma(5.0) + std::lgamma(2.5) - std::lgamma(6.5)) / 2.0;
    EXPECT_NEAR(jt.number(0, "density"), expect, 1e-14);
    EXPECT_EQ(run_cli({"jumptimes", "--family", "gamma"}).code, cli::kExitUsage);
}

TEST(CliPgf, MatchesSeries) {
    const auto r = run_cli({"pgf", "--family", "dirac", "--rate2", "1.5", "--lambda", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_csv(r.out);
    for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_LT(t.number(i, "abs_diff"), 1e-12);
}

TEST(CliConfig, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--family", "nope"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--family", "stable"}).code, cli::kExitUsage); // alpha missing
    EXPECT_EQ(run_cli({"pmf", "--lambda", "abc"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--kmax", "501"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--format", "xml"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--unknown-flag", "1"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--help"}).code, cli::kExitOk);
}

TEST(CliConfig, ConfigFileEnvAndFlags) {
    EXPECT_THROW(cli::parse_config_text("bogus = 1\n"), std::exception);
    const auto kv = cli::parse_config_text("# sweep\nfamily = linear\nlambda=3 # trailing\n\n");
    EXPECT_EQ(kv.at("family"), "linear");
    EXPECT_EQ(kv.at("lambda"), "3");

    const auto path = temp_path("subpois_cli_test.cfg");
    {
        std::ofstream f(path);
        f << "family=linear\nlambda=3\nkmax=5\n";
    }
    const auto base = parse_csv(run_cli({"pmf", "--config", path}).out);
    EXPECT_NEAR(base.number(1, "p_k"), pmf_poisson(3.0, 1), 1e-15);
    EXPECT_EQ(base.rows.size(), 6u);

    // Environment beats the file, flags beat both.
    const auto env = parse_csv(run_cli({"pmf", "--config", path}, {{"SUBPOIS_LAMBDA", "2"}}).out);
    EXPECT_NEAR(env.number(1, "p_k"), pmf_poisson(2.0, 1), 1e-15);
    const auto flag = parse_csv(run_cli({"pmf", "--config", path, "--lambda", "0.5"}, {{"SUBPOIS_LAMBDA", "2"}}).out);
    EXPECT_NEAR(flag.number(1, "p_k"), pmf_poisson(0.5, 1), 1e-15);
    const auto dashed = run_cli({"validate", "--suite", "pmf", "--samples", "20000"}, {{"SUBPOIS_TV_THRESHOLD", "0"}});
    EXPECT_EQ(dashed.code, cli::kExitValidationFailed);

    {
        std::ofstream f(path);
        f << "familly=linear\n";
    }
    EXPECT_EQ(run_cli({"pmf", "--config", path}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"pmf", "--config", temp_path("does_not_exist.cfg")}).code, cli::kExitUsage);
    std::remove(path.c_str());
}

TEST(CliOutput, WritesToFile) {
    const auto path = temp_path("subpois_cli_out.csv");
    const auto r = run_cli({"pmf", "--family", "gamma", "--kmax", "3", "--out", path});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    const auto t = read_csv(in);
    EXPECT_EQ(t.rows.size(), 4u);
    std::remove(path.c_str());
}
