#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ape/ape_builder.hpp"
#include "ape/config.hpp"
#include "ape/monte_carlo.hpp"
#include "ape/problems/boundary.hpp"
#include "ape/problems/gaussian_mean.hpp"
#include "ape/report_io.hpp"

using namespace ape;

namespace {

struct GaussianRun {
    RunConfig cfg = paper_configs("gaussian-mean");
    Assembled a = assemble(cfg);
    DrawBank fit = build_bank(cfg.fit_seed, cfg.fit_draws, 1, true, true);
    DrawBank verify = build_bank(cfg.verify_seed, cfg.verify_draws, 1, true, true);
    ApeReport report;

    GaussianRun() {
        cfg.outer.alpha = cfg.alpha;
        ApeInputs in{a.problem, a.ad_hoc, a.switching, cfg.null_support, cfg.alt_support, cfg.init_weights};
        report = build_ape(in, cfg.thresholds, cfg.outer, fit, verify);
    }
};

const GaussianRun& gaussian() {
    static const GaussianRun r;
    return r;
}

}  // namespace

TEST(Classify, TruthTable) {
    // Differences in probability units.
    const double ok_size[] = {0.05, 0.052};
    const double bad_size[] = {0.05, 0.0551};
    const double flat[] = {0.001, -0.003, 0.004};
    const double above[] = {0.001, 0.009, -0.002};
    const double below[] = {0.001, 0.009, -0.006};
    EXPECT_EQ(classify(flat, ok_size, 0.05, 0.005, 0.005), Verdict::EffectivelyOptimal);
    EXPECT_EQ(classify(above, ok_size, 0.05, 0.005, 0.005), Verdict::EffectivelyDominated);
    EXPECT_EQ(classify(below, ok_size, 0.05, 0.005, 0.005), Verdict::Inconclusive);
    EXPECT_EQ(classify(flat, bad_size, 0.05, 0.005, 0.005), Verdict::Inconclusive);
    // A separate power threshold.
    const double small_gain[] = {0.001, 0.003, -0.001};
    EXPECT_EQ(classify(small_gain, ok_size, 0.05, 0.005, 0.005), Verdict::EffectivelyOptimal);
    EXPECT_EQ(classify(small_gain, ok_size, 0.05, 0.005, 0.002), Verdict::EffectivelyDominated);
    const double edge[] = {0.005, -0.005};
    EXPECT_EQ(classify(edge, ok_size, 0.05, 0.005, 0.005), Verdict::EffectivelyOptimal);
}

TEST(Verdict, StringRoundTrip) {
    for (auto v : {Verdict::EffectivelyOptimal, Verdict::EffectivelyDominated, Verdict::Inconclusive})
        EXPECT_EQ(verdict_from_string(to_string(v)), v);
    EXPECT_THROW(verdict_from_string("Optimal"), std::invalid_argument);
}

TEST(BuildApe, GaussianMeanIsEffectivelyOptimal) {
    const auto& r = gaussian().report;
    EXPECT_EQ(r.verdict, Verdict::EffectivelyOptimal);
    EXPECT_NEAR(r.weights[0], 0.5, 0.05);
    EXPECT_LE(std::max(std::abs(r.max_diff_pp()), std::abs(r.min_diff_pp())), 0.5);
    EXPECT_EQ(r.recheck_verdict(), r.verdict);
    EXPECT_LE(r.max_null_envelope(), r.alpha + r.epsilon_size);
}

TEST(BuildApe, SurfacesAreConsistent) {
    const auto& g = gaussian();
    const auto& r = g.report;
    ASSERT_EQ(r.alt_grid.size(), r.diff_pp.size());
    for (std::size_t i = 0; i < r.diff_pp.size(); ++i) {
        const double d = (r.power_envelope[i] - r.power_adhoc[i]) * 100.0;
        EXPECT_NEAR(r.diff_pp[i], d, 0.0005 + 1e-12);
        EXPECT_EQ(r.diff_pp[i], std::round(r.diff_pp[i] * 1000.0) / 1000.0);
    }
    // Surfaces use the verify bank.
    const auto t = make_t_test(0.05);
    const auto p0 = rejection_probability(*t, r.alt_grid[0], g.verify, *g.a.problem).value;
    EXPECT_EQ(r.power_adhoc[0], p0);
    EXPECT_NE(r.fit_seed, r.verify_seed);
    // Envelope property on the support, verify-bank surfaces.
    for (std::size_t j = 0; j < r.alt.size(); ++j)
        EXPECT_GE(r.support_envelope[j] - r.support_adhoc[j], -r.epsilon_power);
}

TEST(BuildApe, WapComparison) {
    const auto& r = gaussian().report;
    const auto [env, adhoc] = wap_comparison(r, r.weights);
    EXPECT_GE(env, adhoc - 3.0 / std::sqrt(300000.0));
    const double vertex[] = {1.0, 0.0};
    const auto [e1, a1] = wap_comparison(r, vertex);
    EXPECT_EQ(e1, r.support_envelope[0]);
    EXPECT_EQ(a1, r.support_adhoc[0]);
    const double bad[] = {1.0};
    EXPECT_THROW(wap_comparison(r, bad), std::invalid_argument);
}

TEST(BuildApe, HeatmapTable) {
    const auto& r = gaussian().report;
    const auto csv = heatmap_grid(r, TableFormat::Csv);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "theta_1,power_envelope,power_adhoc,diff_pp");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) {
        ++rows;
        const auto last = line.substr(line.rfind(',') + 1);
        EXPECT_EQ(last.size() - last.find('.') - 1, 3u) << line;
    }
    EXPECT_EQ(rows, r.alt_grid.size());
    const auto j = nlohmann::json::parse(heatmap_grid(r, TableFormat::Json));
    ASSERT_EQ(j.size(), r.alt_grid.size());
    EXPECT_TRUE(j[0].contains("diff_pp"));
}

TEST(BuildApe, ReportRoundTripAndSummary) {
    const auto& g = gaussian();
    const auto j = report_to_json(g.report, g.cfg);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()), &g.a);
    EXPECT_EQ(back.verdict, g.report.verdict);
    EXPECT_EQ(back.alt.size(), g.report.alt.size());
    EXPECT_EQ(back.recheck_verdict(), back.verdict);
    ASSERT_TRUE(back.test);
    // The rebuilt envelope reproduces the reported surface up to the
    // six-digit rounding of the stored multipliers.
    const TargetSampler s(*g.a.problem, g.verify);
    const double p = rejection_probability(*back.test, g.report.alt_grid[0], s).value;
    EXPECT_NEAR(p, g.report.power_envelope[0], 0.001);

    const auto summary = summary_text(g.report);
    const auto pos = summary.rfind("verdict: ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_EQ(summary.substr(pos + 9, summary.find('\n', pos) - pos - 9), j["verdict"].get<std::string>());
}

TEST(BuildApe, RejectsSharedSeed) {
    const auto& g = gaussian();
    ApeInputs in{g.a.problem, g.a.ad_hoc, g.a.switching, g.cfg.null_support, g.cfg.alt_support, g.cfg.init_weights};
    EXPECT_THROW(build_ape(in, g.cfg.thresholds, g.cfg.outer, g.fit, g.fit), std::invalid_argument);
}

TEST(BuildApe, AddsNullPointsWhenSizeFails) {
    // Boundary problem with a single null point at delta = 0: the test is
    // oversized at positive delta until null points are added.
    auto problem = std::make_shared<BoundaryProblem>(0.7);
    ApeInputs in;
    in.problem = problem;
    in.ad_hoc = make_iici_test(0.7, 0.05);
    in.null = {NullComponent::point({0.0, 0.0})};
    in.alt.points = {{-2.0, 1.0}, {2.0, 1.0}, {-2.0, 3.0}, {2.0, 3.0}};
    ThresholdConfig th;
    for (int i = 0; i <= 8; ++i) th.fine_null_grid.push_back({0.0, i * 0.5});
    th.fine_alt_grid = {{-2.0, 2.0}, {2.0, 2.0}};
    th.max_refinements = 4;
    th.max_additions = 2;
    OuterOptions o;
    o.n_iter = 20;
    o.inner_iter = 200;
    o.inner_iter_warm = 40;
    const auto fit = build_bank(1, 20000, 2, true, true);
    const auto verify = build_bank(2, 20000, 2, true, true);
    const auto r = build_ape(in, th, o, fit, verify);
    ASSERT_FALSE(r.history.empty());
    EXPECT_EQ(r.history.front().action, "added-null");
    EXPECT_GT(r.null.size(), 1u);
    EXPECT_LE(r.history.front().added.size(), 2u);
    for (const auto& h : r.history)
        if (h.action == "added-null")
            for (const auto& p : h.added) EXPECT_TRUE(problem->in_null(p));
    EXPECT_EQ(r.recheck_verdict(), r.verdict);
    if (r.verdict == Verdict::Inconclusive && r.max_null_envelope() > r.alpha + r.epsilon_size)
        EXPECT_FALSE(r.violators.empty());
}
