#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "subpois/io.hpp"
#include "subpois/simulation.hpp"

using namespace subpois;

namespace {

Table sample_table() {
    Table t;
    t.columns = {"k", "p_k", "method", "ratio"};
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (std::int64_t k = 0; k < 50; ++k) {
        const double x = std::ldexp(d(g), static_cast<int>(k % 40) - 20);
        t.add_row({k, x, std::string(k % 3 ? "bell" : "series, \"quoted\""), 1.0 / (k + 1.0)});
    }
    t.add_row({std::int64_t{-7}, std::numeric_limits<double>::infinity(), std::string("edge"), 5e-324});
    return t;
}

bool same_cell(const Cell& a, const Cell& b) {
    if (a.index() != b.index()) return false;
    if (const auto* x = std::get_if<double>(&a)) {
        const double y = std::get<double>(b);
        return std::isnan(*x) ? std::isnan(y) : std::bit_cast<std::uint64_t>(*x) == std::bit_cast<std::uint64_t>(y);
    }
    return a == b;
}

} // namespace

TEST(Csv, RoundTripIsBitExact) {
    const auto t = sample_table();
    std::stringstream ss;
    write_csv(ss, t);
    const auto back = read_csv(ss);
    ASSERT_EQ(back.columns, t.columns);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.columns.size(); ++c) EXPECT_TRUE(same_cell(back.rows[r][c], t.rows[r][c])) << r << "," << c;
}

TEST(Csv, HeaderAndNumberAccess) {
    std::stringstream ss("k,p_k\n0,5.0000000000000000e-01\n1,2.5e-01\n");
    const auto t = read_csv(ss);
    EXPECT_EQ(t.column("p_k"), 1u);
    EXPECT_EQ(t.number(0, "p_k"), 0.5);
    EXPECT_EQ(t.number(1, "k"), 1.0);
    EXPECT_THROW(t.column("missing"), DomainError);
    Table bad;
    bad.columns = {"a"};
    EXPECT_THROW(bad.add_row({std::int64_t{1}, std::int64_t{2}}), ContractError);
}

TEST(Json, RoundTripIsBitExact) {
    const auto t = sample_table();
    std::stringstream ss;
    write_json(ss, t);
    const auto back = read_json(ss);
    ASSERT_EQ(back.columns, t.columns);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.columns.size(); ++c) EXPECT_TRUE(same_cell(back.rows[r][c], t.rows[r][c])) << r << "," << c;
}

TEST(FormatDouble, SeventeenSignificantDigits) {
    EXPECT_EQ(format_double(0.5), "5.0000000000000000e-01");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(format_double(std::nan("")), "nan");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::get<double>(parse_cell(format_double(x))), x);
}

TEST(Jsonl, PathRoundTrip) {
    const ProcessParams p{BernsteinSpec::stable(0.5), 2.0};
    SamplingPlan plan;
    plan.t = 3.0;
    plan.samples = 500;
    plan.seed = 8;
    plan.workers = 2;
    const auto paths = sample_paths(p, plan);
    std::stringstream ss;
    write_jsonl(ss, paths);
    const auto back = read_jsonl(ss);
    EXPECT_EQ(back, paths);
    std::stringstream one;
    write_jsonl(one, {paths.front()});
    const auto j = nlohmann::json::parse(one.str());
    for (const char* key : {"t", "events", "seed", "stream", "method"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.at("method"), "path");
}
