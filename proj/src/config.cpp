#include "ape/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ape/monte_carlo.hpp"
#include "ape/problems/boundary.hpp"
#include "ape/problems/clr.hpp"
#include "ape/problems/gaussian_mean.hpp"

namespace ape {

using json = nlohmann::json;

namespace {

std::vector<double> range(double from, double to, double step) {
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(from + static_cast<double>(i) * step);
    return out;
}

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<double> every_other(const std::vector<double>& v) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); i += 2) out.push_back(v[i]);
    return out;
}

// (b / sqrt(lambda), lambda) for every pair.
std::vector<ParameterPoint> local_grid(const std::vector<double>& bs, const std::vector<double>& lambdas) {
    std::vector<ParameterPoint> out;
    for (double l : lambdas)
        for (double b : bs) out.push_back(ParameterPoint{b / std::sqrt(l), l});
    return out;
}

std::vector<ParameterPoint> product(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<ParameterPoint> out;
    for (double x : a)
        for (double y : b) out.push_back(ParameterPoint{x, y});
    return out;
}

std::vector<double> symmetric(const std::vector<double>& positive) {
    std::vector<double> out;
    for (auto it = positive.rbegin(); it != positive.rend(); ++it) out.push_back(-*it);
    out.insert(out.end(), positive.begin(), positive.end());
    return out;
}

std::vector<NullComponent> null_points(double beta0, const std::vector<double>& nuisance) {
    std::vector<NullComponent> out;
    for (double l : nuisance) out.push_back(NullComponent::point(ParameterPoint{beta0, l}));
    return out;
}

std::vector<ParameterPoint> fine_null_points(double beta0, const std::vector<double>& nuisance) {
    std::vector<ParameterPoint> out;
    for (double l : nuisance) out.push_back(ParameterPoint{beta0, l});
    return out;
}

// {1,5,10,...,30,40,...,170}
std::vector<double> fixed_omega_lambdas() { return concat({1.0}, concat(range(5, 30, 5), range(40, 170, 10))); }

// {1,5,10,15,20,30,40,50,70,...,150,175,...,300}
std::vector<double> fixed_sigma_lambdas() {
    return concat({1, 5, 10, 15, 20, 30, 40}, concat(range(50, 150, 20), range(175, 300, 25)));
}

struct Slice {
    double lambda;
    std::vector<double> b;
};

std::vector<Slice> fixed_sigma_slices() {
    std::vector<Slice> s = {
        {1, {-40, -30, -20, -10, -2.5, -1, 1, 6, 20, 30}},
        {5, {-40, -30, -20, -10, -5, -1, 1, 5, 10, 20, 30}},
        {10, {-40, -30, -20, -10, -6, -1, 1, 5, 10, 20, 30}},
        {15, {-40, -30, -20, -10, -7.5, -2, 2, 10, 20, 30}},
        {20, {-30, -10, -5, -3, 3, 7, 10, 20, 40}},
        {30, {-3, -1, 2, 4, 6, 8}},
        {40, {-3, 2, 4, 6, 8}},
    };
    for (double l : concat(range(50, 150, 20), range(175, 300, 25))) s.push_back({l, {-3, 2, 4}});
    return s;
}

void iv_fine_grids(RunConfig& c) {
    c.thresholds.fine_null_grid = fine_null_points(c.problem.beta0, range(0, 150, 2));
    c.thresholds.fine_alt_grid = local_grid(symmetric(range(0.5, 3.5, 0.5)), concat({0.1}, range(10, 170, 10)));
}

std::vector<std::uint64_t> seed_range(std::uint64_t from, std::uint64_t to) {
    std::vector<std::uint64_t> out;
    for (auto s = from; s <= to; ++s) out.push_back(s);
    return out;
}

RunConfig base_config() {
    RunConfig c;
    c.outer.alpha = 0.05;
    c.outer.n_iter = 1000;
    c.outer.inner_iter = 1000;
    c.outer.inner_iter_warm = 1000;
    c.thresholds.epsilon = 0.005;
    c.thresholds.max_refinements = 10;
    return c;
}

RunConfig gaussian_mean() {
    RunConfig c = base_config();
    c.problem.name = "gaussian-mean";
    c.symmetrize = true;
    c.null_support = {NullComponent::point(ParameterPoint{0.0})};
    c.alt_support.points = {ParameterPoint{1.0}, ParameterPoint{-1.0}};
    c.init_weights = {0.1, 0.9};
    c.inner_weights = {0.5, 0.5};
    c.outer.n_iter = 300;
    c.outer.inner_iter = 300;
    c.outer.inner_iter_warm = 30;
    c.thresholds.fine_null_grid = {ParameterPoint{0.0}};
    for (double b : symmetric(range(0.5, 3.5, 0.5))) c.thresholds.fine_alt_grid.push_back(ParameterPoint{b});
    c.power.grid.clear();
    for (double b : range(-4, 4, 0.25)) c.power.grid.push_back(ParameterPoint{b});
    return c;
}

RunConfig boundary_iici() {
    RunConfig c = base_config();
    c.problem.name = "boundary-iici";
    c.problem.rho = 0.7;
    c.symmetrize = true;
    c.outer.inner_schedule.kind = StepSchedule::Kind::Constant;
    c.outer.inner_schedule.constant = 0.01;
    c.thresholds.epsilon_power = 0.002;
    c.switching = SwitchingSpec{6.0, 2.0};
    c.seed_search.candidates = seed_range(1, 20);
    std::vector<std::pair<double, double>> intervals = {{0, 0.00001}, {0, 0.04}, {1.99, 2.01}};
    for (double a : range(0, 12, 0.5)) intervals.emplace_back(a, a + 0.5);
    for (const auto& [lo, hi] : intervals) {
        UniformSegment s;
        s.anchor = ParameterPoint{c.problem.beta0, 0.0};
        s.axis = 1;
        s.lower = lo;
        s.upper = hi;
        c.null_support.push_back(NullComponent::segment(s));
    }
    c.alt_support.points = product({-3, -2, -1, 1, 2, 3}, range(0, 8, 0.5));
    c.thresholds.fine_null_grid = fine_null_points(c.problem.beta0, range(0, 7, 0.1));
    c.thresholds.fine_alt_grid = product(symmetric(range(0.5, 3.5, 0.5)), range(0, 8, 0.5));
    c.power.grid = product(range(-4, 4, 0.25), {1.0});
    return c;
}

RunConfig iv_fixed_omega() {
    RunConfig c = base_config();
    c.problem.name = "iv-fixed-omega";
    c.problem.k = 5;
    c.problem.correlation = 0.5;
    c.switching = SwitchingSpec{160.0, 75.0};
    c.seed_search = {seed_range(1, 20), true};
    c.null_support = null_points(c.problem.beta0, fixed_omega_lambdas());
    c.alt_support.points = local_grid({-4, -3, -2, 2, 3, 4}, fixed_omega_lambdas());
    iv_fine_grids(c);
    c.power.grid = product(range(-4, 4, 0.25), {5.0});
    return c;
}

RunConfig iv_fixed_sigma() {
    RunConfig c = base_config();
    c.problem.name = "iv-fixed-sigma";
    c.problem.k = 10;
    c.problem.correlation = 0.5;
    c.switching = SwitchingSpec{320.0, 160.0};
    c.seed_search = {seed_range(1, 20), true};
    c.null_support = null_points(c.problem.beta0, fixed_sigma_lambdas());
    for (const auto& s : fixed_sigma_slices())
        for (const auto& p : local_grid(s.b, {s.lambda})) c.alt_support.points.push_back(p);
    iv_fine_grids(c);
    c.power.grid = product(range(-4, 4, 0.25), {5.0});
    return c;
}

void scale_down(RunConfig& c) {
    c.fit_draws = 50000;
    c.verify_draws = 50000;
    c.outer.n_iter = 150;
    c.outer.inner_iter = 300;
    c.outer.inner_iter_warm = 25;
    c.outer.prefer_feasible = true;
    c.thresholds.max_refinements = 3;
}

}  // namespace

std::vector<std::string> paper_config_names() {
    return {"gaussian-mean",   "boundary-iici",    "iv-fixed-omega",   "iv-fixed-sigma",
            "boundary-iici-ci", "iv-fixed-omega-ci", "iv-fixed-sigma-ci"};
}

RunConfig paper_configs(const std::string& name) {
    RunConfig c;
    if (name == "gaussian-mean") c = gaussian_mean();
    else if (name == "boundary-iici" || name == "boundary-iici-ci") c = boundary_iici();
    else if (name == "iv-fixed-omega" || name == "iv-fixed-omega-ci") c = iv_fixed_omega();
    else if (name == "iv-fixed-sigma" || name == "iv-fixed-sigma-ci") c = iv_fixed_sigma();
    else throw ConfigError("unknown configuration name '" + name + "'");
    c.preset = name;
    if (name.ends_with("-ci")) {
        scale_down(c);
        if (c.problem.name == "boundary-iici") {
            c.outer.n_iter = 1000;
        } else if (c.problem.name == "iv-fixed-omega") {
            const auto l = every_other(fixed_omega_lambdas());
            c.null_support = null_points(c.problem.beta0, l);
            c.alt_support.points = local_grid({-4, -3, -2, 2, 3, 4}, l);
        } else if (c.problem.name == "iv-fixed-sigma") {
            c.null_support = null_points(c.problem.beta0, every_other(fixed_sigma_lambdas()));
            const auto slices = fixed_sigma_slices();
            c.alt_support.points.clear();
            for (std::size_t i = 0; i < slices.size(); i += 2)
                for (const auto& p : local_grid(slices[i].b, {slices[i].lambda})) c.alt_support.points.push_back(p);
        }
    }
    return c;
}

namespace {

std::size_t line_at(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Line of the first occurrence of "key" in the raw text, 0 if absent.
std::size_t line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_at(text, pos);
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const auto line = line_of_key(text_, key);
        std::ostringstream os;
        os << "config";
        if (line) os << " line " << line;
        os << ": '" << key << "': " << what;
        throw ConfigError(os.str());
    }

    void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) const {
        if (!obj.is_object()) fail(where, "expected an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items())
            if (!ok.count(k)) fail(k, "unknown key in '" + where + "'");
    }

    double number(const json& j, const std::string& key) const {
        if (!j.is_number()) fail(key, "expected a number");
        return j.get<double>();
    }

    std::size_t count(const json& j, const std::string& key) const {
        if (!j.is_number_integer() || j.get<long long>() < 0) fail(key, "expected a nonnegative integer");
        return j.get<std::size_t>();
    }

    std::uint64_t seed(const json& j, const std::string& key) const {
        if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
            fail(key, "expected a nonnegative integer seed");
        return j.get<std::uint64_t>();
    }

    bool boolean(const json& j, const std::string& key) const {
        if (!j.is_boolean()) fail(key, "expected true or false");
        return j.get<bool>();
    }

    std::vector<double> numbers(const json& j, const std::string& key) const {
        if (!j.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : j) out.push_back(number(x, key));
        return out;
    }

    std::vector<ParameterPoint> grid(const json& j, const std::string& key) const {
        try {
            return parse_grid(j);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

    StepSchedule schedule(const json& j, const std::string& key) const {
        StepSchedule s;
        std::string kind;
        if (j.is_string()) {
            kind = j.get<std::string>();
        } else {
            check_keys(j, key, {"kind", "value", "epsilon", "sign_update", "return_best"});
            kind = j.value("kind", "adaptive");
            if (j.contains("value")) s.constant = number(j["value"], "value");
            if (j.contains("epsilon")) s.epsilon = number(j["epsilon"], "epsilon");
            if (j.contains("sign_update")) s.sign_update = boolean(j["sign_update"], "sign_update");
            if (j.contains("return_best")) s.return_best = boolean(j["return_best"], "return_best");
        }
        if (kind == "adaptive") s.kind = StepSchedule::Kind::Adaptive;
        else if (kind == "constant") s.kind = StepSchedule::Kind::Constant;
        else if (kind == "epsilon") s.kind = StepSchedule::Kind::Epsilon;
        else fail(key, "schedule kind must be adaptive, constant or epsilon");
        return s;
    }

    NullComponent component(const json& j, const std::string& key) const {
        if (j.is_array()) return NullComponent::point(ParameterPoint(numbers(j, key)));
        check_keys(j, key, {"anchor", "axis", "lower", "upper", "id", "nodes"});
        UniformSegment s;
        if (!j.contains("anchor") || !j.contains("lower") || !j.contains("upper"))
            fail(key, "segment needs anchor, lower and upper");
        s.anchor = ParameterPoint(numbers(j["anchor"], "anchor"));
        s.axis = j.contains("axis") ? count(j["axis"], "axis") : 0;
        s.lower = number(j["lower"], "lower");
        s.upper = number(j["upper"], "upper");
        if (j.contains("id")) s.id = j["id"].get<std::string>();
        if (j.contains("nodes")) s.nodes = count(j["nodes"], "nodes");
        if (s.axis >= s.anchor.dim()) fail(key, "segment axis out of range");
        return NullComponent::segment(s);
    }

private:
    const std::string& text_;
};

json schedule_json(const StepSchedule& s) {
    json j;
    switch (s.kind) {
        case StepSchedule::Kind::Adaptive: j["kind"] = "adaptive"; break;
        case StepSchedule::Kind::Constant: j["kind"] = "constant"; j["value"] = s.constant; break;
        case StepSchedule::Kind::Epsilon: j["kind"] = "epsilon"; j["epsilon"] = s.epsilon; break;
    }
    if (s.sign_update) j["sign_update"] = true;
    if (s.return_best) j["return_best"] = true;
    return j;
}

json points_json(const std::vector<ParameterPoint>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back(p.coords);
    return a;
}

json component_json(const NullComponent& c) {
    if (c.is_point()) return c.as_point().coords;
    const auto& s = c.as_segment();
    json j;
    j["anchor"] = s.anchor.coords;
    j["axis"] = s.axis;
    j["lower"] = s.lower;
    j["upper"] = s.upper;
    if (!s.id.empty()) j["id"] = s.id;
    return j;
}

}  // namespace

std::vector<ParameterPoint> parse_grid(const json& j) {
    std::vector<ParameterPoint> out;
    auto block = [&](const json& b) {
        if (b.is_array() && (b.empty() || b.front().is_number())) {
            std::vector<double> c;
            for (const auto& x : b) {
                if (!x.is_number()) throw ConfigError("grid point coordinates must be numbers");
                c.push_back(x.get<double>());
            }
            out.emplace_back(std::move(c));
            return;
        }
        if (!b.is_object() || !b.contains("product")) throw ConfigError("grid entry must be a point or a product block");
        const auto& axes = b["product"];
        if (!axes.is_array() || axes.empty()) throw ConfigError("product needs a list of axes");
        std::vector<std::vector<double>> vals;
        for (const auto& ax : axes) {
            std::vector<double> v;
            if (ax.is_object()) {
                v = range(ax.at("from").get<double>(), ax.at("to").get<double>(), ax.at("step").get<double>());
            } else {
                for (const auto& x : ax) v.push_back(x.get<double>());
            }
            vals.push_back(std::move(v));
        }
        std::optional<std::size_t> local;
        if (b.contains("local_to_axis")) local = b["local_to_axis"].get<std::size_t>();
        if (local && *local >= vals.size()) throw ConfigError("local_to_axis out of range");
        std::vector<std::size_t> idx(vals.size(), 0);
        for (const auto& v : vals)
            if (v.empty()) return;
        // Last axis varies slowest, matching the built-in grids.
        while (true) {
            std::vector<double> c(vals.size());
            for (std::size_t a = 0; a < vals.size(); ++a) c[a] = vals[a][idx[a]];
            if (local) c[0] /= std::sqrt(c[*local]);
            out.emplace_back(std::move(c));
            std::size_t a = 0;
            while (a < vals.size() && ++idx[a] == vals[a].size()) idx[a++] = 0;
            if (a == vals.size()) break;
        }
    };
    if (!j.is_array()) throw ConfigError("grid must be an array");
    if (!j.empty() && j.front().is_number()) throw ConfigError("grid must be an array of points");
    for (const auto& b : j) block(b);
    return out;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << "config line " << line_at(text, e.byte) << ": parse error: " << e.what();
        throw ConfigError(os.str());
    }
    Reader r(text);
    r.check_keys(j, "config",
                 {"paper_defaults", "paper-defaults", "problem", "alpha", "seeds", "draws", "bank", "outer",
                  "thresholds", "switching", "grids", "init_weights", "inner_weights", "power", "output",
                  "cache_dir", "threads", "preset"});

    RunConfig c;
    const char* preset_key = j.contains("paper_defaults") ? "paper_defaults" : "paper-defaults";
    if (j.contains(preset_key)) {
        const auto& p = j[preset_key];
        std::string name;
        if (p.is_string()) name = p.get<std::string>();
        else if (p.is_boolean() && p.get<bool>()) {
            if (!j.contains("problem")) r.fail(preset_key, "true requires a problem name");
            name = j["problem"].is_string() ? j["problem"].get<std::string>() : j["problem"].value("name", "");
        } else if (!(p.is_boolean())) r.fail(preset_key, "expected a configuration name or true");
        if (!name.empty()) {
            try {
                c = paper_configs(name);
            } catch (const ConfigError& e) {
                r.fail(preset_key, e.what());
            }
        }
    }

    if (j.contains("preset")) {
        if (!j["preset"].is_string()) r.fail("preset", "expected a configuration name");
        c.preset = j["preset"].get<std::string>();
    }

    if (j.contains("problem")) {
        const auto& p = j["problem"];
        if (p.is_string()) {
            c.problem.name = p.get<std::string>();
        } else {
            r.check_keys(p, "problem", {"name", "rho", "beta0", "k", "correlation"});
            if (p.contains("name")) c.problem.name = p["name"].get<std::string>();
            if (p.contains("rho")) c.problem.rho = r.number(p["rho"], "rho");
            if (p.contains("beta0")) c.problem.beta0 = r.number(p["beta0"], "beta0");
            if (p.contains("k")) c.problem.k = static_cast<int>(r.count(p["k"], "k"));
            if (p.contains("correlation")) c.problem.correlation = r.number(p["correlation"], "correlation");
        }
        if (c.problem.name.ends_with("-ci")) c.problem.name.resize(c.problem.name.size() - 3);
    }
    if (j.contains("alpha")) c.alpha = r.number(j["alpha"], "alpha");
    if (j.contains("seeds")) {
        const auto& s = j["seeds"];
        r.check_keys(s, "seeds", {"fit", "verify", "cv", "candidates", "similar"});
        if (s.contains("fit")) c.fit_seed = r.seed(s["fit"], "fit");
        if (s.contains("verify")) c.verify_seed = r.seed(s["verify"], "verify");
        if (s.contains("cv")) c.cv_seed = r.seed(s["cv"], "cv");
        if (s.contains("candidates")) {
            if (!s["candidates"].is_array()) r.fail("candidates", "expected an array of seeds");
            c.seed_search.candidates.clear();
            for (const auto& v : s["candidates"]) c.seed_search.candidates.push_back(r.seed(v, "candidates"));
        }
        if (s.contains("similar")) c.seed_search.similar = r.boolean(s["similar"], "similar");
    }
    if (j.contains("draws")) {
        const auto& d = j["draws"];
        r.check_keys(d, "draws", {"fit", "verify", "cv", "cv_nodes"});
        if (d.contains("fit")) c.fit_draws = r.count(d["fit"], "fit");
        if (d.contains("verify")) c.verify_draws = r.count(d["verify"], "verify");
        if (d.contains("cv")) c.cv_draws = r.count(d["cv"], "cv");
        if (d.contains("cv_nodes")) c.cv_nodes = r.count(d["cv_nodes"], "cv_nodes");
    }
    if (j.contains("bank")) {
        const auto& b = j["bank"];
        r.check_keys(b, "bank", {"standardize", "symmetrize"});
        if (b.contains("standardize")) c.standardize = r.boolean(b["standardize"], "standardize");
        if (b.contains("symmetrize")) c.symmetrize = r.boolean(b["symmetrize"], "symmetrize");
    }
    if (j.contains("outer")) {
        const auto& o = j["outer"];
        r.check_keys(o, "outer",
                     {"n_iter", "inner_iter", "inner_iter_warm", "warm_start", "prefer_feasible", "schedule",
                      "inner_schedule"});
        if (o.contains("n_iter")) c.outer.n_iter = r.count(o["n_iter"], "n_iter");
        if (o.contains("inner_iter")) c.outer.inner_iter = r.count(o["inner_iter"], "inner_iter");
        if (o.contains("inner_iter_warm")) c.outer.inner_iter_warm = r.count(o["inner_iter_warm"], "inner_iter_warm");
        if (o.contains("warm_start")) c.outer.warm_start = r.boolean(o["warm_start"], "warm_start");
        if (o.contains("prefer_feasible")) c.outer.prefer_feasible = r.boolean(o["prefer_feasible"], "prefer_feasible");
        if (o.contains("schedule")) c.outer.schedule = r.schedule(o["schedule"], "schedule");
        if (o.contains("inner_schedule")) c.outer.inner_schedule = r.schedule(o["inner_schedule"], "inner_schedule");
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        r.check_keys(t, "thresholds", {"epsilon", "epsilon_power", "max_refinements", "max_additions", "step1_rounds"});
        if (t.contains("epsilon")) c.thresholds.epsilon = r.number(t["epsilon"], "epsilon");
        if (t.contains("epsilon_power")) {
            if (t["epsilon_power"].is_null()) c.thresholds.epsilon_power.reset();
            else c.thresholds.epsilon_power = r.number(t["epsilon_power"], "epsilon_power");
        }
        if (t.contains("max_refinements")) c.thresholds.max_refinements = r.count(t["max_refinements"], "max_refinements");
        if (t.contains("max_additions")) c.thresholds.max_additions = r.count(t["max_additions"], "max_additions");
        if (t.contains("step1_rounds")) c.thresholds.step1_rounds = r.count(t["step1_rounds"], "step1_rounds");
    }
    if (j.contains("switching")) {
        const auto& s = j["switching"];
        if (s.is_null()) {
            c.switching.reset();
        } else {
            r.check_keys(s, "switching", {"switch_point", "standard_start"});
            if (!s.contains("switch_point") || !s.contains("standard_start"))
                r.fail("switching", "needs switch_point and standard_start");
            c.switching = SwitchingSpec{r.number(s["switch_point"], "switch_point"),
                                        r.number(s["standard_start"], "standard_start")};
        }
    }
    if (j.contains("grids")) {
        const auto& g = j["grids"];
        r.check_keys(g, "grids", {"null_support", "alt_support", "fine_null", "fine_alt"});
        if (g.contains("null_support")) {
            if (!g["null_support"].is_array()) r.fail("null_support", "expected an array");
            c.null_support.clear();
            for (const auto& x : g["null_support"]) c.null_support.push_back(r.component(x, "null_support"));
        }
        if (g.contains("alt_support")) c.alt_support.points = r.grid(g["alt_support"], "alt_support");
        if (g.contains("fine_null")) c.thresholds.fine_null_grid = r.grid(g["fine_null"], "fine_null");
        if (g.contains("fine_alt")) c.thresholds.fine_alt_grid = r.grid(g["fine_alt"], "fine_alt");
        if (g.contains("alt_support") && !j.contains("init_weights")) c.init_weights.clear();
    }
    if (j.contains("init_weights")) c.init_weights = r.numbers(j["init_weights"], "init_weights");
    if (j.contains("inner_weights")) c.inner_weights = r.numbers(j["inner_weights"], "inner_weights");
    if (j.contains("power")) {
        const auto& p = j["power"];
        r.check_keys(p, "power", {"test", "grid", "report"});
        if (p.contains("test")) c.power.test = p["test"].get<std::string>();
        if (p.contains("grid")) c.power.grid = r.grid(p["grid"], "grid");
        if (p.contains("report")) c.power.report = p["report"].get<std::string>();
    }
    if (j.contains("output")) c.output_dir = j["output"].get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = r.count(j["threads"], "threads");

    c.outer.alpha = c.alpha;
    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        // Attach a line when the message names a top-level key.
        const std::string msg = e.what();
        for (const char* key : {"seeds", "draws", "alpha", "thresholds", "grids", "init_weights", "inner_weights",
                                "problem", "power", "outer"})
            if (msg.find(key) != std::string::npos && line_of_key(text, key))
                throw ConfigError("config line " + std::to_string(line_of_key(text, key)) + ": " + msg);
        throw;
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const RunConfig& c) {
    static const std::set<std::string> names = {"gaussian-mean", "boundary-iici", "iv-fixed-omega", "iv-fixed-sigma"};
    if (!names.count(c.problem.name)) throw ConfigError("problem: unknown problem '" + c.problem.name + "'");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha: must lie in (0,1)");
    if (c.seed_search.candidates.size() == 1)
        throw ConfigError("seeds: at least two candidates are needed for separate fit and verify seeds");
    if (c.fit_seed == c.verify_seed) throw ConfigError("seeds: fit seed must differ from verify seed");
    if (c.fit_draws == 0 || c.verify_draws == 0 || c.cv_draws == 0 || c.cv_nodes == 0)
        throw ConfigError("draws: all counts must be positive");
    if (c.outer.n_iter == 0 || c.outer.inner_iter == 0 || c.outer.inner_iter_warm == 0)
        throw ConfigError("outer: iteration counts must be positive");
    if (!(c.thresholds.epsilon > 0.0) || !(c.thresholds.power_epsilon() > 0.0))
        throw ConfigError("thresholds: epsilon must be positive");
    if (c.null_support.empty() || c.alt_support.points.empty())
        throw ConfigError("grids: null and alternative supports must be nonempty");
    if (c.thresholds.fine_null_grid.empty() || c.thresholds.fine_alt_grid.empty())
        throw ConfigError("grids: fine grids must be nonempty");
    if (!c.init_weights.empty() && c.init_weights.size() != c.alt_support.size())
        throw ConfigError("init_weights: length must match the alternative support");
    if (!c.inner_weights.empty() && c.inner_weights.size() != c.alt_support.size())
        throw ConfigError("inner_weights: length must match the alternative support");
    if (c.problem.name.starts_with("iv-") && c.problem.k < 1) throw ConfigError("problem: k must be >= 1");
    if (c.problem.name == "boundary-iici" && !(std::abs(c.problem.rho) < 1.0 && c.problem.rho != 0.0))
        throw ConfigError("problem: rho must lie in (-1,1) and be nonzero");
    if (c.power.test != "adhoc" && c.power.test != "envelope" && c.power.test != "standard")
        throw ConfigError("power: test must be adhoc, envelope or standard");
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["problem"] = {{"name", c.problem.name},       {"rho", c.problem.rho}, {"beta0", c.problem.beta0},
                    {"k", c.problem.k},             {"correlation", c.problem.correlation}};
    if (!c.preset.empty()) j["preset"] = c.preset;
    j["alpha"] = c.alpha;
    j["seeds"] = {{"fit", c.fit_seed}, {"verify", c.verify_seed}, {"cv", c.cv_seed}};
    if (!c.seed_search.candidates.empty()) {
        j["seeds"]["candidates"] = c.seed_search.candidates;
        j["seeds"]["similar"] = c.seed_search.similar;
    }
    j["draws"] = {{"fit", c.fit_draws}, {"verify", c.verify_draws}, {"cv", c.cv_draws}, {"cv_nodes", c.cv_nodes}};
    j["bank"] = {{"standardize", c.standardize}, {"symmetrize", c.symmetrize}};
    j["outer"] = {{"n_iter", c.outer.n_iter},
                  {"inner_iter", c.outer.inner_iter},
                  {"inner_iter_warm", c.outer.inner_iter_warm},
                  {"warm_start", c.outer.warm_start},
                  {"prefer_feasible", c.outer.prefer_feasible},
                  {"schedule", schedule_json(c.outer.schedule)},
                  {"inner_schedule", schedule_json(c.outer.inner_schedule)}};
    j["thresholds"] = {{"epsilon", c.thresholds.epsilon},
                       {"epsilon_power", c.thresholds.power_epsilon()},
                       {"max_refinements", c.thresholds.max_refinements},
                       {"max_additions", c.thresholds.max_additions},
                       {"step1_rounds", c.thresholds.step1_rounds}};
    if (c.switching)
        j["switching"] = {{"switch_point", c.switching->switch_point},
                          {"standard_start", c.switching->standard_start}};
    else
        j["switching"] = nullptr;
    json nulls = json::array();
    for (const auto& n : c.null_support) nulls.push_back(component_json(n));
    j["grids"] = {{"null_support", nulls},
                  {"alt_support", points_json(c.alt_support.points)},
                  {"fine_null", points_json(c.thresholds.fine_null_grid)},
                  {"fine_alt", points_json(c.thresholds.fine_alt_grid)}};
    j["init_weights"] = c.init_weights;
    return j;
}

Assembled assemble(const RunConfig& c) {
    Assembled a;
    const double alpha = c.alpha;
    const auto& p = c.problem;
    if (p.name == "gaussian-mean") {
        a.problem = std::make_shared<GaussianMeanProblem>();
        a.ad_hoc = make_t_test(alpha);
        a.standard = a.ad_hoc;
    } else if (p.name == "boundary-iici") {
        a.problem = std::make_shared<BoundaryProblem>(p.rho, p.beta0);
        a.ad_hoc = make_iici_test(p.rho, alpha, p.beta0);
        a.standard = make_t_test(alpha, 0, p.beta0);
        if (c.switching)
            a.switching = make_boundary_switching(alpha, c.switching->switch_point, c.switching->standard_start, p.beta0);
    } else {
        const auto design = p.name == "iv-fixed-omega" ? IvDesign::FixedOmega : IvDesign::FixedSigma;
        a.problem = std::make_shared<LinearIvProblem>(p.k, design, p.correlation, p.beta0);
        const auto grid = log_spaced_grid(1e-3, 1e4, c.cv_nodes);
        a.ad_hoc = make_clr_test(cached_clr_critical_values(p.k, alpha, c.cv_draws, grid, c.cv_seed, c.cache_dir));
        a.standard = make_lm_test(alpha);
        if (c.switching) a.switching = make_iv_switching(alpha, c.switching->switch_point, c.switching->standard_start);
    }
    return a;
}

void apply_seed_search(RunConfig& c, const Assembled& a) {
    auto cands = c.seed_search.candidates;
    if (cands.empty()) return;
    const std::vector<Target> nulls(c.thresholds.fine_null_grid.begin(), c.thresholds.fine_null_grid.end());
    const BankParams fit{c.fit_draws, c.standardize, c.symmetrize};
    c.fit_seed = tune_seed(cands, *a.ad_hoc, nulls, fit, *a.problem, c.alpha, c.seed_search.similar);
    std::erase(cands, c.fit_seed);
    if (cands.empty()) throw ConfigError("seeds: no candidate left for the verify seed");
    const BankParams verify{c.verify_draws, c.standardize, c.symmetrize};
    c.verify_seed = tune_seed(cands, *a.ad_hoc, nulls, verify, *a.problem, c.alpha, c.seed_search.similar);
}

}  // namespace ape
