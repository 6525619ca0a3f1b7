#include "ape/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ape {

using ojson = nlohmann::ordered_json;

double sig6(double x) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return std::stod(os.str());
}

namespace {

ojson vec6(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(sig6(x));
    return a;
}

ojson point6(const ParameterPoint& p) { return vec6(p.coords); }

ojson points6(const std::vector<ParameterPoint>& pts) {
    ojson a = ojson::array();
    for (const auto& p : pts) a.push_back(point6(p));
    return a;
}

ojson component6(const NullComponent& c) {
    if (c.is_point()) return point6(c.as_point());
    const auto& s = c.as_segment();
    ojson j;
    j["anchor"] = point6(s.anchor);
    j["axis"] = s.axis;
    j["lower"] = sig6(s.lower);
    j["upper"] = sig6(s.upper);
    return j;
}

std::vector<double> doubles(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

std::vector<ParameterPoint> points(const nlohmann::json& j) {
    std::vector<ParameterPoint> out;
    for (const auto& p : j) out.emplace_back(p.get<std::vector<double>>());
    return out;
}

void open(std::ofstream& f, const std::filesystem::path& p) {
    f.open(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

ojson report_to_json(const ApeReport& r, const RunConfig& cfg) {
    ojson j;
    j["verdict"] = to_string(r.verdict);
    j["problem"] = r.problem;
    j["alpha"] = sig6(r.alpha);
    j["epsilon_size"] = sig6(r.epsilon_size);
    j["epsilon_power"] = sig6(r.epsilon_power);
    j["banks"] = {{"fit_seed", r.fit_seed},
                  {"verify_seed", r.verify_seed},
                  {"fit_draws", r.fit_draws},
                  {"verify_draws", r.verify_draws}};
    j["summary"] = {{"max_diff_pp", r.max_diff_pp()},
                    {"min_diff_pp", r.min_diff_pp()},
                    {"argmax_diff", r.diff_pp.empty() ? ojson() : point6(r.alt_grid[r.argmax_diff()])},
                    {"max_null_envelope", sig6(r.max_null_envelope())},
                    {"max_null_adhoc", sig6(r.max_null_adhoc())}};
    ojson nulls = ojson::array();
    for (const auto& c : r.null) nulls.push_back(component6(c));
    j["null_support"] = nulls;
    j["alt_support"] = points6(r.alt.points);
    j["weights"] = vec6(r.weights);
    j["test"] = {{"multipliers", vec6(r.multipliers)}, {"cv", sig6(r.cv)}, {"lfd", vec6(r.lfd)}};
    j["support_power"] = {{"envelope", vec6(r.support_envelope)}, {"adhoc", vec6(r.support_adhoc)}};
    j["fit"] = {{"gamma", vec6(r.fit_gamma)}, {"sizes", vec6(r.fit_sizes)}};
    j["alt_grid"] = points6(r.alt_grid);
    j["power_envelope"] = vec6(r.power_envelope);
    j["power_adhoc"] = vec6(r.power_adhoc);
    j["diff_pp"] = r.diff_pp;
    j["null_grid"] = points6(r.null_grid);
    j["null_envelope"] = vec6(r.null_envelope);
    j["null_adhoc"] = vec6(r.null_adhoc);
    ojson sw = ojson::array();
    for (const auto& s : r.switching)
        sw.push_back({{"theta", point6(s.theta)}, {"switch_probability", sig6(s.switch_probability)}, {"ok", s.ok}});
    j["switching"] = sw;
    j["violators"] = points6(r.violators);
    ojson hist = ojson::array();
    for (const auto& h : r.history)
        hist.push_back({{"round", h.round},
                        {"action", h.action},
                        {"added", points6(h.added)},
                        {"max_size_verify", sig6(h.max_size_verify)},
                        {"min_diff", sig6(h.min_diff)},
                        {"max_diff", sig6(h.max_diff)},
                        {"step1_satisfied", h.step1_satisfied},
                        {"outer_rounds", h.outer_rounds}});
    j["refinements"] = hist;
    j["outer_iterations"] = r.trace.iterations();
    j["config"] = config_to_json(cfg);
    return j;
}

ApeReport report_from_json(const nlohmann::json& j, const Assembled* assembled) {
    ApeReport r;
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.problem = j.at("problem").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.epsilon_size = j.at("epsilon_size").get<double>();
    r.epsilon_power = j.at("epsilon_power").get<double>();
    r.fit_seed = j.at("banks").at("fit_seed").get<std::uint64_t>();
    r.verify_seed = j.at("banks").at("verify_seed").get<std::uint64_t>();
    r.fit_draws = j.at("banks").at("fit_draws").get<std::size_t>();
    r.verify_draws = j.at("banks").at("verify_draws").get<std::size_t>();
    for (const auto& c : j.at("null_support")) {
        if (c.is_array()) {
            r.null.push_back(NullComponent::point(ParameterPoint(c.get<std::vector<double>>())));
        } else {
            UniformSegment s;
            s.anchor = ParameterPoint(c.at("anchor").get<std::vector<double>>());
            s.axis = c.at("axis").get<std::size_t>();
            s.lower = c.at("lower").get<double>();
            s.upper = c.at("upper").get<double>();
            r.null.push_back(NullComponent::segment(s));
        }
    }
    r.alt.points = points(j.at("alt_support"));
    r.weights = doubles(j.at("weights"));
    r.multipliers = doubles(j.at("test").at("multipliers"));
    r.cv = j.at("test").at("cv").get<double>();
    r.lfd = doubles(j.at("test").at("lfd"));
    r.support_envelope = doubles(j.at("support_power").at("envelope"));
    r.support_adhoc = doubles(j.at("support_power").at("adhoc"));
    r.fit_gamma = doubles(j.at("fit").at("gamma"));
    r.fit_sizes = doubles(j.at("fit").at("sizes"));
    r.alt_grid = points(j.at("alt_grid"));
    r.power_envelope = doubles(j.at("power_envelope"));
    r.power_adhoc = doubles(j.at("power_adhoc"));
    r.diff_pp = doubles(j.at("diff_pp"));
    r.null_grid = points(j.at("null_grid"));
    r.null_envelope = doubles(j.at("null_envelope"));
    r.null_adhoc = doubles(j.at("null_adhoc"));
    for (const auto& s : j.at("switching"))
        r.switching.push_back({ParameterPoint(s.at("theta").get<std::vector<double>>()),
                               s.at("switch_probability").get<double>(), s.at("ok").get<bool>()});
    r.violators = points(j.at("violators"));
    for (const auto& h : j.at("refinements")) {
        RefinementRecord rec;
        rec.round = h.at("round").get<std::size_t>();
        rec.action = h.at("action").get<std::string>();
        rec.added = points(h.at("added"));
        rec.max_size_verify = h.at("max_size_verify").get<double>();
        rec.min_diff = h.at("min_diff").get<double>();
        rec.max_diff = h.at("max_diff").get<double>();
        rec.step1_satisfied = h.at("step1_satisfied").get<bool>();
        rec.outer_rounds = h.at("outer_rounds").get<std::size_t>();
        r.history.push_back(rec);
    }
    if (assembled)
        r.test = std::make_shared<NpTest>(assembled->problem, r.alt, r.weights, r.null, r.multipliers,
                                          assembled->switching, r.alpha);
    return r;
}

ApeReport load_report(const std::filesystem::path& path, const Assembled* assembled) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read report " + path.string());
    return report_from_json(nlohmann::json::parse(in), assembled);
}

void write_weights_csv(const ApeReport& r, std::ostream& out) {
    const std::size_t d = r.alt.points.empty() ? 0 : r.alt.points.front().dim();
    for (std::size_t c = 0; c < d; ++c) out << "theta_" << c + 1 << ',';
    out << "weight,power_envelope,power_adhoc\n" << std::setprecision(6);
    for (std::size_t j = 0; j < r.alt.size(); ++j) {
        for (std::size_t c = 0; c < d; ++c) out << r.alt[j][c] << ',';
        out << r.weights[j] << ',' << r.support_envelope[j] << ',' << r.support_adhoc[j] << '\n';
    }
}

void write_null_csv(const ApeReport& r, std::ostream& out) {
    const std::size_t d = r.null_grid.empty() ? 0 : r.null_grid.front().dim();
    for (std::size_t c = 0; c < d; ++c) out << "theta_" << c + 1 << ',';
    out << "null_envelope,null_adhoc\n" << std::setprecision(6);
    for (std::size_t i = 0; i < r.null_grid.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) out << r.null_grid[i][c] << ',';
        out << r.null_envelope[i] << ',' << r.null_adhoc[i] << '\n';
    }
}

void write_lfd_csv(const ApeReport& r, std::ostream& out) {
    out << "component,multiplier,lfd\n" << std::setprecision(6);
    for (std::size_t i = 0; i < r.null.size(); ++i)
        out << '"' << r.null[i].describe() << "\"," << r.multipliers[i] << ','
            << (r.lfd.empty() ? 0.0 : r.lfd[i]) << '\n';
}

void write_history_csv(const ApeReport& r, std::ostream& out) {
    out << "round,action,added,max_size_verify,min_diff,max_diff,step1_satisfied,outer_rounds\n"
        << std::setprecision(6);
    for (const auto& h : r.history) {
        std::string added;
        for (const auto& p : h.added) added += (added.empty() ? "" : " ") + p.to_string();
        out << h.round << ',' << h.action << ",\"" << added << "\"," << h.max_size_verify << ',' << h.min_diff << ','
            << h.max_diff << ',' << int(h.step1_satisfied) << ',' << h.outer_rounds << '\n';
    }
}

std::string summary_text(const ApeReport& r) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "problem: " << r.problem << '\n';
    os << "alpha: " << r.alpha << "  epsilon (size/power): " << r.epsilon_size << " / " << r.epsilon_power << '\n';
    os << "banks: fit seed " << r.fit_seed << " (" << r.fit_draws << " draws), verify seed " << r.verify_seed << " ("
       << r.verify_draws << " draws)\n";
    os << "support: " << r.null.size() << " null components, " << r.alt.size() << " alternative points\n";
    os << "refinements: " << r.history.size() << '\n';
    if (!r.diff_pp.empty()) {
        os << std::fixed << std::setprecision(3);
        os << "max diff: " << r.max_diff_pp() << "pp at " << r.alt_grid[r.argmax_diff()].to_string() << '\n';
        os << "min diff: " << r.min_diff_pp() << "pp\n";
        os << std::defaultfloat << std::setprecision(6);
    }
    os << "max null rejection: envelope " << r.max_null_envelope() << ", ad hoc " << r.max_null_adhoc() << '\n';
    std::size_t bad_switch = 0;
    for (const auto& s : r.switching) bad_switch += !s.ok;
    if (!r.switching.empty())
        os << "switching diagnostic: " << bad_switch << " of " << r.switching.size()
           << " standard-region null points exceed 0.01\n";
    if (!r.violators.empty()) {
        os << "violators:";
        for (const auto& p : r.violators) os << ' ' << p.to_string();
        os << '\n';
    }
    os << "verdict: " << to_string(r.verdict) << '\n';
    return os.str();
}

void write_report_files(const ApeReport& r, const RunConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream f;
    open(f, dir / "report.json");
    f << report_to_json(r, cfg).dump(2) << '\n';
    f.close();
    open(f, dir / "heatmap.csv");
    f << heatmap_grid(r, TableFormat::Csv);
    f.close();
    open(f, dir / "weights.csv");
    write_weights_csv(r, f);
    f.close();
    open(f, dir / "null_diagnostics.csv");
    write_null_csv(r, f);
    f.close();
    open(f, dir / "lfd.csv");
    write_lfd_csv(r, f);
    f.close();
    open(f, dir / "refinements.csv");
    write_history_csv(r, f);
    f.close();
    open(f, dir / "outer_trace.csv");
    write_outer_trace_csv(r.trace, f);
    f.close();
    open(f, dir / "summary.txt");
    f << summary_text(r);
}

}  // namespace ape
