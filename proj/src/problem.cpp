#include "ape/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ape/draw_bank.hpp"

namespace ape {

std::optional<double> TestingProblem::segment_log_density(const UniformSegment&,
                                                          std::span<const double>) const {
    return std::nullopt;
}

void TestingProblem::log_density_batch(const ParameterPoint& theta, std::span<const double> ys,
                                       std::span<double> out) const {
    const std::size_t d = obs_dim();
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = log_density(theta, ys.subspan(m * d, d));
}

bool TestingProblem::segment_log_density_batch(const UniformSegment& seg, std::span<const double> ys,
                                               std::span<double> out) const {
    const std::size_t d = obs_dim();
    for (std::size_t m = 0; m < out.size(); ++m) {
        const auto v = segment_log_density(seg, ys.subspan(m * d, d));
        if (!v) return false;
        out[m] = *v;
    }
    return true;
}

double segment_log_density_midpoint(const UniformSegment& seg, std::span<const double> y,
                                    const TestingProblem& problem, std::size_t nodes) {
    if (nodes == 0) throw std::invalid_argument("segment quadrature needs at least one node");
    const double width = seg.upper - seg.lower;
    std::vector<double> logs(nodes);
    ParameterPoint theta = seg.anchor;
    for (std::size_t q = 0; q < nodes; ++q) {
        theta.coords.at(seg.axis) = seg.lower + width * (static_cast<double>(q) + 0.5) / nodes;
        logs[q] = problem.log_density(theta, y);
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (double l : logs) sum += std::exp(l - top);
    return top + std::log(sum / static_cast<double>(nodes));
}

double mixture_log_density(const NullComponent& component, std::span<const double> y,
                           const TestingProblem& problem) {
    if (component.is_point()) return problem.log_density(component.as_point(), y);
    const auto& seg = component.as_segment();
    double value;
    if (seg.degenerate()) {
        value = problem.log_density(seg.at(seg.lower), y);
    } else if (auto closed = problem.segment_log_density(seg, y)) {
        value = *closed;
    } else {
        value = segment_log_density_midpoint(seg, y, problem, seg.nodes);
    }
    if (std::isnan(value) || value == std::numeric_limits<double>::infinity())
        throw std::runtime_error("mixture density is not finite for " + component.describe());
    return value;
}

void mixture_log_density_batch(const NullComponent& component, std::span<const double> ys,
                               std::span<double> out, const TestingProblem& problem) {
    const std::size_t d = problem.obs_dim();
    if (component.is_point()) {
        problem.log_density_batch(component.as_point(), ys, out);
        return;
    }
    const auto& seg = component.as_segment();
    if (!seg.degenerate() && problem.segment_log_density_batch(seg, ys, out)) {
        for (double v : out)
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw std::runtime_error("mixture density is not finite for " + component.describe());
        return;
    }
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = mixture_log_density(component, ys.subspan(m * d, d), problem);
}

bool ValidationReport::has(ValidationIssue::Kind k) const {
    return std::any_of(issues.begin(), issues.end(), [k](const auto& i) { return i.kind == k; });
}

std::string ValidationReport::summary() const {
    if (issues.empty()) return "valid";
    std::ostringstream os;
    for (const auto& i : issues) os << i.message << '\n';
    return os.str();
}

ValidationReport validate_problem(const TestingProblem& problem,
                                  const std::vector<NullComponent>& null,
                                  const AlternativeSupport& alt, std::size_t probe_draws,
                                  std::uint64_t probe_seed) {
    using Kind = ValidationIssue::Kind;
    ValidationReport report;
    auto add = [&](Kind k, std::string msg) { report.issues.push_back({k, std::move(msg)}); };

    auto check_point = [&](const ParameterPoint& p, const std::string& where) {
        if (p.dim() != problem.param_dim()) {
            add(Kind::DimensionMismatch, where + ": dimension mismatch at " + p.to_string());
            return false;
        }
        if (!p.finite()) {
            add(Kind::NonFiniteCoordinate, where + ": non-finite coordinate at " + p.to_string());
            return false;
        }
        return true;
    };

    if (null.empty()) add(Kind::EmptySupport, "null support is empty");
    if (alt.points.empty()) add(Kind::EmptySupport, "alternative support is empty");

    for (const auto& c : null) {
        if (c.is_point()) {
            if (check_point(c.as_point(), "null") && !problem.in_null(c.as_point()))
                add(Kind::NullOutsideNull, "null component outside null: " + c.describe());
        } else {
            const auto& s = c.as_segment();
            if (!check_point(s.anchor, "null segment")) continue;
            if (s.axis >= problem.param_dim() || s.upper < s.lower) {
                add(Kind::DimensionMismatch, "malformed segment: " + c.describe());
                continue;
            }
            if (!problem.in_null(s.at(s.lower)) || !problem.in_null(s.at(s.upper)))
                add(Kind::NullOutsideNull, "null segment leaves the null: " + c.describe());
        }
    }
    for (std::size_t j = 0; j < alt.size(); ++j) {
        const auto& p = alt[j];
        if (!check_point(p, "alternative")) continue;
        if (problem.in_null(p))
            add(Kind::PointInNull, "point in null: " + p.to_string());
        else if (!problem.in_alt(p))
            add(Kind::PointNotInAlternative, "point outside alternative: " + p.to_string());
        for (std::size_t i = 0; i < j; ++i)
            if (alt[i] == p) {
                add(Kind::DuplicateSupportPoint, "duplicate support point " + p.to_string());
                break;
            }
    }
    for (std::size_t i = 0; i < null.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (null[i] == null[j]) {
                add(Kind::DuplicateSupportPoint, "duplicate null component " + null[i].describe());
                break;
            }
    if (!report.valid()) return report;

    // Densities on a probe set of draws sampled at every support point.
    const std::size_t n = std::max<std::size_t>(probe_draws, 2 * problem.base_dim());
    const DrawBank bank = build_bank(probe_seed, n + (n % 2), problem.base_dim(), false, false);
    std::vector<double> y(problem.obs_dim());
    std::vector<ParameterPoint> points;
    for (const auto& c : null) points.push_back(c.is_point() ? c.as_point() : c.as_segment().anchor);
    for (const auto& p : alt.points) points.push_back(p);
    for (const auto& p : points) {
        bool bad = false;
        for (std::size_t m = 0; m < bank.n && !bad; ++m) {
            problem.sample(bank.row(m), p, y);
            for (const auto& c : null) {
                double l;
                try {
                    l = mixture_log_density(c, y, problem);
                } catch (const std::exception&) {
                    l = std::numeric_limits<double>::quiet_NaN();
                }
                if (!std::isfinite(l)) {
                    bad = true;
                    add(Kind::NonFiniteDensity, "non-finite density of " + c.describe() +
                                                    " on a draw sampled at " + p.to_string());
                    break;
                }
            }
            for (const auto& a : alt.points) {
                if (bad) break;
                if (!std::isfinite(problem.log_density(a, y))) {
                    bad = true;
                    add(Kind::NonFiniteDensity, "non-finite density at " + a.to_string() +
                                                    " on a draw sampled at " + p.to_string());
                }
            }
        }
    }
    return report;
}

}  // namespace ape
