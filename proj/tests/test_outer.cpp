#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ape/monte_carlo.hpp"
#include "ape/outer_loop.hpp"
#include "ape/problems/gaussian_mean.hpp"
#include "ape/simplex.hpp"

using namespace ape;

namespace {

// Alternative support ordered (1, -1): weights[0] is the weight on beta = 1.
struct Setup {
    ProblemPtr problem = std::make_shared<GaussianMeanProblem>();
    TestPtr ttest = make_t_test(0.05);
    std::vector<NullComponent> null = {NullComponent::point({0.0})};
    AlternativeSupport alt{{{1.0}, {-1.0}}};
    DrawBank bank = build_bank(101, 300000, 1, true, true);
};

const Setup& setup() {
    static const Setup s;
    return s;
}

std::unique_ptr<Workspace> make_ws() {
    const auto& s = setup();
    auto ws = std::make_unique<Workspace>(s.problem, s.bank, std::nullopt, s.ttest);
    ws->add_null(s.null[0]);
    for (const auto& p : s.alt.points) ws->add_alternative(p);
    return ws;
}

OuterOptions options() {
    OuterOptions o;
    o.n_iter = 300;
    o.inner_iter = 300;
    o.inner_iter_warm = 30;
    return o;
}

std::vector<double> gap_at(double w1) {
    const auto& s = setup();
    const std::vector<double> w = {w1, 1 - w1};
    auto [test, trace] = run_inner(w, s.null, s.alt, s.bank, s.problem, 0.05, StepSchedule{}, 1000);
    return power_gap_vector(*test, *s.ttest, s.alt, s.bank, *s.problem);
}

const OuterResult& outer_from(double w1) {
    static std::map<double, OuterResult> cache;
    auto it = cache.find(w1);
    if (it == cache.end()) {
        auto ws = make_ws();
        const double w[] = {w1, 1 - w1};
        it = cache.emplace(w1, run_outer(*ws, w, options())).first;
    }
    return it->second;
}

}  // namespace

TEST(PowerGap, SameTestGivesZero) {
    const auto& s = setup();
    const auto g = power_gap_vector(*s.ttest, *s.ttest, s.alt, s.bank, *s.problem);
    for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(PowerGap, SignsAtLowWeightOnPositiveAlternative) {
    const auto g = gap_at(0.1);
    EXPECT_LT(g[0], 0.0);
    EXPECT_GT(g[1], 0.0);
}

TEST(PowerGap, NearZeroAtEqualWeights) {
    for (double x : gap_at(0.5)) EXPECT_LT(std::abs(x), 0.01);
}

TEST(PowerGap, WorkspaceMatchesGenericForm) {
    const auto& s = setup();
    auto ws = make_ws();
    const std::vector<double> w = {0.3, 0.7};
    const auto r = run_inner(*ws, w, 0.05, StepSchedule{}, 300);
    const auto fast = power_gap_vector(*ws, w, r.multipliers);
    NpTest test(s.problem, s.alt, w, s.null, r.multipliers, std::nullopt, 0.05);
    const auto slow = power_gap_vector(test, *s.ttest, s.alt, s.bank, *s.problem);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(fast[j], slow[j], 2.0 / 300000);
}

TEST(OuterLoop, ReachesEqualWeights) {
    const auto& r = outer_from(0.1);
    EXPECT_GE(r.weights[0], 0.45);
    EXPECT_LE(r.weights[0], 0.55);
    EXPECT_EQ(r.trace.iterations(), 300u);
}

TEST(OuterLoop, TraceInvariants) {
    const auto& r = outer_from(0.1);
    for (std::size_t k = 0; k < r.trace.iterations(); ++k) {
        ASSERT_TRUE(on_simplex(r.trace.weights[k], 1e-12));
        if (k > 0) ASSERT_LE(r.trace.best_objectives[k], r.trace.best_objectives[k - 1]);
    }
}

TEST(OuterLoop, ObjectiveNonnegativeUpToMcError) {
    const auto& r = outer_from(0.1);
    EXPECT_GE(r.objective, -3.0 / std::sqrt(300000.0));
}

TEST(OuterLoop, GapBound) {
    const auto& r = outer_from(0.1);
    // Objective at the known solution (1/2, 1/2).
    const auto g = gap_at(0.5);
    const double opt = 0.5 * g[0] + 0.5 * g[1];
    const double d2 = 2 * 0.4 * 0.4;
    const auto bound = outer_gap_bound(r.trace.steps, 2, d2);
    double sh = 0.0, sh2 = 0.0;
    for (std::size_t k = 0; k < r.trace.iterations(); ++k) {
        sh += r.trace.steps[k];
        sh2 += r.trace.steps[k] * r.trace.steps[k];
        const double gamma = std::sqrt(2.0) * (d2 + sh2) / (2 * sh);
        ASSERT_NEAR(bound[k], gamma, 1e-12 * gamma);
        ASSERT_LE(r.trace.best_objectives[k] - opt, gamma) << k;
    }
}

TEST(OuterLoop, VertexStartMovesMonotonicallyToHalf) {
    const auto& r = outer_from(1.0);
    bool reached = false;
    for (std::size_t k = 1; k < r.trace.iterations(); ++k) {
        const double w = r.trace.weights[k][0], prev = r.trace.weights[k - 1][0];
        if (!reached) ASSERT_LE(w, prev + 1e-12) << k;
        if (std::abs(w - 0.5) < 0.02) reached = true;
        if (reached) ASSERT_LT(std::abs(w - 0.5), 0.05) << k;
    }
    EXPECT_TRUE(reached);
}

TEST(OuterLoop, ColdInnerRunAgreesAtReturnedWeights) {
    const auto& s = setup();
    const auto& r = outer_from(0.1);
    auto [cold, trace] = run_inner(r.weights, s.null, s.alt, s.bank, s.problem, 0.05, StepSchedule{}, 1000);
    NpTest warm(s.problem, s.alt, r.weights, s.null, r.multipliers, std::nullopt, 0.05);
    const double a = wap(*cold, r.weights, s.alt, s.bank, *s.problem);
    const double b = wap(warm, r.weights, s.alt, s.bank, *s.problem);
    EXPECT_LT(std::abs(a - b), 2 * 0.005);
}

TEST(OuterLoop, RejectsBadInput) {
    auto ws = make_ws();
    const double off[] = {0.7, 0.7};
    EXPECT_THROW(run_outer(*ws, off, options()), std::invalid_argument);
    const double one[] = {1.0};
    EXPECT_THROW(run_outer(*ws, one, options()), std::invalid_argument);
}
