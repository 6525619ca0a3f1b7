#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ape/config.hpp"

using namespace ape;

namespace {

bool contains(const std::vector<ParameterPoint>& v, const ParameterPoint& p) {
    return std::any_of(v.begin(), v.end(), [&](const ParameterPoint& q) {
        if (q.dim() != p.dim()) return false;
        for (std::size_t i = 0; i < p.dim(); ++i)
            if (std::abs(q[i] - p[i]) > 1e-12) return false;
        return true;
    });
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(PaperConfigs, GaussianMean) {
    const auto c = paper_configs("gaussian-mean");
    ASSERT_EQ(c.null_support.size(), 1u);
    EXPECT_EQ(c.null_support[0].as_point(), ParameterPoint({0.0}));
    ASSERT_EQ(c.alt_support.size(), 2u);
    EXPECT_TRUE(contains(c.alt_support.points, {1.0}));
    EXPECT_TRUE(contains(c.alt_support.points, {-1.0}));
    EXPECT_EQ(c.fit_draws, 300000u);
}

TEST(PaperConfigs, BoundaryIici) {
    const auto c = paper_configs("boundary-iici");
    EXPECT_EQ(c.alt_support.size(), 6u * 17u);
    for (double b : {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0})
        for (int i = 0; i <= 16; ++i) EXPECT_TRUE(contains(c.alt_support.points, {b, i * 0.5}));
    // Base-distribution intervals.
    ASSERT_EQ(c.null_support.size(), 28u);
    const auto& first = c.null_support[0].as_segment();
    EXPECT_EQ(first.lower, 0.0);
    EXPECT_EQ(first.upper, 0.00001);
    EXPECT_EQ(c.null_support[1].as_segment().upper, 0.04);
    EXPECT_EQ(c.null_support[2].as_segment().lower, 1.99);
    EXPECT_EQ(c.null_support.back().as_segment().lower, 12.0);
    EXPECT_EQ(c.null_support.back().as_segment().upper, 12.5);
    ASSERT_TRUE(c.switching);
    EXPECT_EQ(c.switching->switch_point, 6.0);
    EXPECT_EQ(c.problem.rho, 0.7);
    // Fine alternative grid: beta in +-{0.5..3.5}, delta in 0..8.
    EXPECT_EQ(c.thresholds.fine_alt_grid.size(), 14u * 17u);
    EXPECT_TRUE(contains(c.thresholds.fine_alt_grid, {2.0, 1.0}));
    EXPECT_FALSE(contains(c.thresholds.fine_alt_grid, {0.0, 1.0}));
}

TEST(PaperConfigs, IvFixedOmega) {
    const auto c = paper_configs("iv-fixed-omega");
    std::vector<double> lambdas = {1};
    for (int l = 5; l <= 30; l += 5) lambdas.push_back(l);
    for (int l = 40; l <= 170; l += 10) lambdas.push_back(l);
    EXPECT_EQ(c.alt_support.size(), 6 * lambdas.size());
    for (double b : {-4.0, -3.0, -2.0, 2.0, 3.0, 4.0})
        for (double l : lambdas) EXPECT_TRUE(contains(c.alt_support.points, {b / std::sqrt(l), l}));
    EXPECT_EQ(c.problem.k, 5);
    EXPECT_EQ(c.problem.correlation, 0.5);
    EXPECT_EQ(c.switching->switch_point, 160.0);
    EXPECT_EQ(c.switching->standard_start, 75.0);
    // Heatmap grid b in {-3.5..3.5}, lambda in {0.1, 10..170}.
    EXPECT_TRUE(contains(c.thresholds.fine_alt_grid, {-3.5 / std::sqrt(0.1), 0.1}));
    EXPECT_TRUE(contains(c.thresholds.fine_alt_grid, {3.5 / std::sqrt(170.0), 170.0}));
}

TEST(PaperConfigs, IvFixedSigma) {
    const auto c = paper_configs("iv-fixed-sigma");
    EXPECT_EQ(c.problem.k, 10);
    EXPECT_EQ(c.switching->switch_point, 320.0);
    EXPECT_EQ(c.switching->standard_start, 160.0);
    EXPECT_FALSE(c.alt_support.points.empty());
}

TEST(PaperConfigs, ScaledVariants) {
    for (const auto& name : {"boundary-iici-ci", "iv-fixed-omega-ci", "iv-fixed-sigma-ci"}) {
        const auto c = paper_configs(name);
        EXPECT_EQ(c.fit_draws, 50000u) << name;
        EXPECT_NO_THROW(validate_config(c));
    }
    const auto full = paper_configs("iv-fixed-omega");
    const auto ci = paper_configs("iv-fixed-omega-ci");
    EXPECT_EQ(ci.null_support.size(), (full.null_support.size() + 1) / 2);
    EXPECT_THROW(paper_configs("nope"), ConfigError);
}

TEST(ParseConfig, PresetAndOverrides) {
    const auto c = parse_config(R"({
  "paper_defaults": "gaussian-mean",
  "alpha": 0.1,
  "seeds": {"fit": 5, "verify": 6},
  "output": "/tmp/x"
})");
    EXPECT_EQ(c.alpha, 0.1);
    EXPECT_EQ(c.fit_seed, 5u);
    EXPECT_EQ(c.alt_support.size(), 2u);
    EXPECT_EQ(c.output_dir->string(), "/tmp/x");

    const auto d = parse_config(R"({"paper-defaults": true, "problem": "boundary-iici"})");
    EXPECT_EQ(d.null_support.size(), 28u);
}

TEST(ParseConfig, EqualSeedsRejectedWithLine) {
    const auto msg = error_of(R"({
  "paper_defaults": "gaussian-mean",

  "seeds": {"fit": 7, "verify": 7}
})");
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("fit seed must differ"), std::string::npos) << msg;
}

TEST(ParseConfig, ErrorsCarryLines) {
    auto msg = error_of("{\n  \"paper_defaults\": \"gaussian-mean\",\n  \"bogus\": 1\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    msg = error_of("{\n  \"alpha\": 0.05,\n  \"draws\": {\"fit\": -3}\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    msg = error_of("{\n  \"alpha\": 0.05\n  \"seeds\": {}\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    msg = error_of(R"({"paper_defaults": "gaussian-mean", "alpha": 1.5})");
    EXPECT_NE(msg.find("alpha"), std::string::npos) << msg;
    msg = error_of(R"({"paper_defaults": "unknown-problem"})");
    EXPECT_FALSE(msg.empty());
}

TEST(ParseConfig, Grids) {
    const auto g = parse_grid(nlohmann::json::parse(R"([{"product": [[-1, 1], {"from": 0, "to": 1, "step": 0.5}]}])"));
    EXPECT_EQ(g.size(), 6u);
    EXPECT_TRUE(contains(g, {1.0, 0.5}));
    const auto l = parse_grid(nlohmann::json::parse(R"([{"product": [[2], [4, 16]], "local_to_axis": 1}])"));
    EXPECT_TRUE(contains(l, {1.0, 4.0}));
    EXPECT_TRUE(contains(l, {0.5, 16.0}));
    const auto e = parse_grid(nlohmann::json::parse("[[0.5], [1.5]]"));
    EXPECT_EQ(e.size(), 2u);
    EXPECT_THROW(parse_grid(nlohmann::json::parse("[0.5, 1.5]")), ConfigError);
}

TEST(ParseConfig, JsonRoundTrip) {
    auto c = paper_configs("boundary-iici-ci");
    c.output_dir = "/tmp/y";
    const auto j = config_to_json(c);
    const auto back = parse_config(j.dump());
    EXPECT_EQ(back.fit_seed, c.fit_seed);
    EXPECT_EQ(back.null_support.size(), c.null_support.size());
    EXPECT_EQ(back.alt_support.size(), c.alt_support.size());
    EXPECT_EQ(back.thresholds.power_epsilon(), c.thresholds.power_epsilon());
    EXPECT_EQ(back.seed_search.candidates, c.seed_search.candidates);
    EXPECT_EQ(back.outer.n_iter, c.outer.n_iter);
}

TEST(SeedSearch, PicksDistinctSeeds) {
    auto c = paper_configs("gaussian-mean");
    c.seed_search.candidates = {3, 4, 5};
    c.seed_search.similar = true;
    c.fit_draws = c.verify_draws = 2000;
    const auto a = assemble(c);
    apply_seed_search(c, a);
    EXPECT_NE(c.fit_seed, c.verify_seed);
    EXPECT_TRUE(c.fit_seed >= 3 && c.fit_seed <= 5);
    EXPECT_TRUE(c.verify_seed >= 3 && c.verify_seed <= 5);
}
