#include "ape/ape_builder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ape/monte_carlo.hpp"
#include "ape/simplex.hpp"
#include "json.hpp"

namespace ape {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::EffectivelyOptimal: return "EffectivelyOptimal";
        case Verdict::EffectivelyDominated: return "EffectivelyDominated";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "EffectivelyOptimal") return Verdict::EffectivelyOptimal;
    if (s == "EffectivelyDominated") return Verdict::EffectivelyDominated;
    if (s == "Inconclusive") return Verdict::Inconclusive;
    throw std::invalid_argument("unknown verdict " + s);
}

namespace {

double round_pp(double diff) { return std::round(diff * 100.0 * 1000.0) / 1000.0; }

}  // namespace

double ApeReport::max_diff_pp() const {
    return diff_pp.empty() ? 0.0 : *std::max_element(diff_pp.begin(), diff_pp.end());
}
double ApeReport::min_diff_pp() const {
    return diff_pp.empty() ? 0.0 : *std::min_element(diff_pp.begin(), diff_pp.end());
}
std::size_t ApeReport::argmax_diff() const {
    return static_cast<std::size_t>(std::max_element(diff_pp.begin(), diff_pp.end()) - diff_pp.begin());
}
double ApeReport::max_null_envelope() const {
    return null_envelope.empty() ? 0.0 : *std::max_element(null_envelope.begin(), null_envelope.end());
}
double ApeReport::max_null_adhoc() const {
    return null_adhoc.empty() ? 0.0 : *std::max_element(null_adhoc.begin(), null_adhoc.end());
}

Verdict classify(std::span<const double> diff, std::span<const double> null_sizes, double alpha,
                 double epsilon_size, double epsilon_power) {
    for (double s : null_sizes)
        if (s > alpha + epsilon_size) return Verdict::Inconclusive;
    bool all_close = true, none_below = true, some_above = false;
    for (double d : diff) {
        if (std::abs(d) > epsilon_power) all_close = false;
        if (d < -epsilon_power) none_below = false;
        if (d > epsilon_power) some_above = true;
    }
    if (all_close) return Verdict::EffectivelyOptimal;
    if (none_below && some_above) return Verdict::EffectivelyDominated;
    return Verdict::Inconclusive;
}

Verdict ApeReport::recheck_verdict() const {
    std::vector<double> diff(diff_pp.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = power_envelope[i] - power_adhoc[i];
    return classify(diff, null_envelope, alpha, epsilon_size, epsilon_power);
}

namespace {

// Worst violator plus any beyond twice the threshold, skipping points already
// in the support, capped at max_add.
std::vector<std::size_t> pick_additions(const std::vector<double>& excess, double threshold,
                                        const std::vector<ParameterPoint>& grid,
                                        const std::vector<ParameterPoint>& existing, std::size_t max_add) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < excess.size(); ++i)
        if (excess[i] > threshold && std::find(existing.begin(), existing.end(), grid[i]) == existing.end())
            idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return excess[a] > excess[b]; });
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < idx.size() && out.size() < max_add; ++r)
        if (r == 0 || excess[idx[r]] > 2.0 * threshold) out.push_back(idx[r]);
    return out;
}

std::vector<ParameterPoint> null_points(const std::vector<NullComponent>& null) {
    std::vector<ParameterPoint> out;
    for (const auto& c : null)
        if (c.is_point()) out.push_back(c.as_point());
    return out;
}

}  // namespace

ApeReport build_ape(const ApeInputs& in, const ThresholdConfig& th, const OuterOptions& outer,
                    const DrawBank& fit_bank, const DrawBank& verify_bank) {
    if (!in.problem || !in.ad_hoc) throw std::invalid_argument("build_ape: problem and ad hoc test required");
    if (fit_bank.seed == verify_bank.seed)
        throw std::invalid_argument("build_ape: verify bank must use a different seed from the fit bank");
    if (th.fine_null_grid.empty() || th.fine_alt_grid.empty())
        throw std::invalid_argument("build_ape: fine grids must be nonempty");
    if (!(th.epsilon > 0.0) || !(th.power_epsilon() > 0.0))
        throw std::invalid_argument("build_ape: thresholds must be positive");
    const auto report_issues = validate_problem(*in.problem, in.null, in.alt);
    if (!report_issues.valid()) throw std::invalid_argument("build_ape: invalid supports\n" + report_issues.summary());
    for (const auto& p : th.fine_null_grid)
        if (!in.problem->in_null(p)) throw std::invalid_argument("fine null grid point outside null: " + p.to_string());
    for (const auto& p : th.fine_alt_grid)
        if (!in.problem->in_alt(p))
            throw std::invalid_argument("fine alternative grid point outside alternative: " + p.to_string());

    const double alpha = outer.alpha;
    const double eps_size = th.epsilon;
    const double eps_power = th.power_epsilon();
    OuterOptions opt = outer;
    opt.epsilon_size = eps_size;
    opt.epsilon_power = eps_power;

    Workspace ws(in.problem, fit_bank, in.switching, in.ad_hoc);
    for (const auto& c : in.null) ws.add_null(c);
    for (const auto& p : in.alt.points) ws.add_alternative(p);

    std::vector<double> weights = in.init_weights;
    if (weights.empty()) weights.assign(in.alt.size(), 1.0 / static_cast<double>(in.alt.size()));
    if (weights.size() != in.alt.size() || !on_simplex(weights, 1e-9))
        throw std::invalid_argument("build_ape: initial weights must lie on the simplex over the support");
    std::vector<double> multipliers, warm;

    const TargetSampler verify(*in.problem, verify_bank);
    std::vector<Target> null_targets(th.fine_null_grid.begin(), th.fine_null_grid.end());
    std::vector<Target> alt_targets(th.fine_alt_grid.begin(), th.fine_alt_grid.end());
    const auto null_adhoc = rejection_surface(*in.ad_hoc, null_targets, verify);
    const auto alt_adhoc = rejection_surface(*in.ad_hoc, alt_targets, verify);

    ApeReport rep;
    rep.problem = in.problem->name();
    rep.alpha = alpha;
    rep.epsilon_size = eps_size;
    rep.epsilon_power = eps_power;
    rep.fit_seed = fit_bank.seed;
    rep.verify_seed = verify_bank.seed;
    rep.fit_draws = fit_bank.n;
    rep.verify_draws = verify_bank.n;
    rep.null_grid = th.fine_null_grid;
    rep.alt_grid = th.fine_alt_grid;
    rep.null_adhoc = null_adhoc;
    rep.power_adhoc = alt_adhoc;

    OuterResult res;
    bool finished = false;
    for (std::size_t round = 0; round <= th.max_refinements && !finished; ++round) {
        RefinementRecord rec;
        rec.round = round;
        // Step 1: loops on the current supports.
        for (std::size_t r = 0; r < std::max<std::size_t>(th.step1_rounds, 1); ++r) {
            res = run_outer(ws, weights, opt, warm);
            weights = res.weights;
            multipliers = res.multipliers;
            warm = res.last_multipliers;
            ++rec.outer_rounds;
            const double max_size = *std::max_element(res.sizes.begin(), res.sizes.end());
            const double min_gap = *std::min_element(res.gamma.begin(), res.gamma.end());
            rec.step1_satisfied = max_size <= alpha + eps_size && min_gap >= -eps_power;
            if (rec.step1_satisfied) break;
        }
        auto test = std::make_shared<NpTest>(in.problem, ws.alternatives(), weights, ws.null_components(),
                                             multipliers, in.switching, alpha);

        // Step 2: size on the fine null grid.
        const auto null_env = rejection_surface(*test, null_targets, verify);
        std::vector<double> size_excess(null_env.size());
        for (std::size_t i = 0; i < null_env.size(); ++i) size_excess[i] = null_env[i] - alpha;
        rec.max_size_verify = *std::max_element(null_env.begin(), null_env.end());

        // Step 3: power gaps on the fine alternative grid.
        const auto alt_env = rejection_surface(*test, alt_targets, verify);
        std::vector<double> shortfall(alt_env.size());
        for (std::size_t i = 0; i < alt_env.size(); ++i) shortfall[i] = alt_adhoc[i] - alt_env[i];
        rec.min_diff = -*std::max_element(shortfall.begin(), shortfall.end());
        rec.max_diff = -*std::min_element(shortfall.begin(), shortfall.end());

        rep.test = test;
        rep.null_envelope = null_env;
        rep.power_envelope = alt_env;

        const bool last = round == th.max_refinements;
        const auto add_null = pick_additions(size_excess, eps_size, th.fine_null_grid, null_points(ws.null_components()),
                                             th.max_additions);
        if (!add_null.empty() && !last) {
            rec.action = "added-null";
            for (std::size_t i : add_null) {
                ws.add_null(NullComponent::point(th.fine_null_grid[i]));
                multipliers.push_back(0.0);
                warm.push_back(0.0);
                rec.added.push_back(th.fine_null_grid[i]);
            }
            rep.history.push_back(rec);
            continue;
        }
        const bool size_ok = rec.max_size_verify <= alpha + eps_size;
        if (size_ok) {
            const auto add_alt = pick_additions(shortfall, eps_power, th.fine_alt_grid, ws.alternatives().points,
                                                th.max_additions);
            if (!add_alt.empty() && !last) {
                rec.action = "added-alternative";
                for (std::size_t i : add_alt) {
                    ws.add_alternative(th.fine_alt_grid[i]);
                    weights.push_back(0.0);
                    rec.added.push_back(th.fine_alt_grid[i]);
                }
                rep.history.push_back(rec);
                continue;
            }
        }
        rec.action = last ? "exhausted" : "final";
        rep.history.push_back(rec);
        finished = true;
    }

    rep.null = ws.null_components();
    rep.alt = ws.alternatives();
    rep.weights = weights;
    rep.multipliers = multipliers;
    const double total = std::accumulate(multipliers.begin(), multipliers.end(), 0.0);
    if (total > 0.0) {
        const auto np = to_neyman_pearson(multipliers);
        rep.cv = np.cv;
        rep.lfd = np.lfd;
    }
    rep.fit_gamma = res.gamma;
    rep.fit_sizes = res.sizes;
    rep.trace = res.trace;

    std::vector<Target> support(rep.alt.points.begin(), rep.alt.points.end());
    rep.support_envelope = rejection_surface(*rep.test, support, verify);
    rep.support_adhoc = rejection_surface(*in.ad_hoc, support, verify);

    rep.diff_pp.resize(rep.power_envelope.size());
    std::vector<double> diff(rep.power_envelope.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = rep.power_envelope[i] - rep.power_adhoc[i];
        rep.diff_pp[i] = round_pp(diff[i]);
    }
    rep.verdict = classify(diff, rep.null_envelope, alpha, eps_size, eps_power);
    if (rep.verdict == Verdict::Inconclusive) {
        for (std::size_t i = 0; i < rep.null_envelope.size(); ++i)
            if (rep.null_envelope[i] > alpha + eps_size) rep.violators.push_back(rep.null_grid[i]);
        for (std::size_t i = 0; i < diff.size(); ++i)
            if (diff[i] < -eps_power) rep.violators.push_back(rep.alt_grid[i]);
    }

    if (in.switching) {
        const auto& sw = *in.switching;
        auto fires = std::make_shared<LambdaTest>("switch", [&sw](std::span<const double> y) {
            return sw.switches(y) ? 1.0 : 0.0;
        });
        std::vector<Target> pts;
        std::vector<ParameterPoint> thetas;
        for (const auto& p : rep.null_grid)
            if (p[sw.nuisance_axis] <= sw.standard_region_start) {
                pts.emplace_back(p);
                thetas.push_back(p);
            }
        const auto probs = rejection_surface(*fires, pts, verify);
        for (std::size_t i = 0; i < probs.size(); ++i) rep.switching.push_back({thetas[i], probs[i], probs[i] < 0.01});
    }
    return rep;
}

std::string heatmap_grid(const ApeReport& report, TableFormat format) {
    const std::size_t d = report.alt_grid.empty() ? 0 : report.alt_grid.front().dim();
    if (format == TableFormat::Json) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < report.alt_grid.size(); ++i) {
            nlohmann::ordered_json r;
            for (std::size_t c = 0; c < d; ++c) r["theta_" + std::to_string(c + 1)] = report.alt_grid[i][c];
            r["power_envelope"] = report.power_envelope[i];
            r["power_adhoc"] = report.power_adhoc[i];
            r["diff_pp"] = report.diff_pp[i];
            rows.push_back(r);
        }
        return rows.dump(2);
    }
    std::ostringstream os;
    for (std::size_t c = 0; c < d; ++c) os << "theta_" << c + 1 << ',';
    os << "power_envelope,power_adhoc,diff_pp\n";
    for (std::size_t i = 0; i < report.alt_grid.size(); ++i) {
        os << std::setprecision(6);
        for (std::size_t c = 0; c < d; ++c) os << report.alt_grid[i][c] << ',';
        os << report.power_envelope[i] << ',' << report.power_adhoc[i] << ',' << std::fixed << std::setprecision(3)
           << report.diff_pp[i] << std::defaultfloat << '\n';
    }
    return os.str();
}

std::pair<double, double> wap_comparison(const ApeReport& report, std::span<const double> weights) {
    if (weights.size() != report.alt.size())
        throw std::invalid_argument("wap_comparison: weights must cover the report's support");
    double env = 0.0, adhoc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        env += weights[j] * report.support_envelope[j];
        adhoc += weights[j] * report.support_adhoc[j];
    }
    return {env, adhoc};
}

}  // namespace ape
