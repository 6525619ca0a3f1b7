#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "ape/config.hpp"
#include "ape/inner_loop.hpp"
#include "ape/monte_carlo.hpp"
#include "ape/parallel.hpp"
#include "ape/report_io.hpp"

namespace {

using namespace ape;

struct Common {
    std::string config;
    std::string out;
    std::string preset;
    std::size_t threads = 0;
};

RunConfig resolve(const Common& o) {
    RunConfig cfg;
    if (!o.config.empty()) {
        cfg = load_config(o.config);
        if (!o.preset.empty() && cfg.preset.empty()) {
            // Re-read the file on top of the named defaults.
            std::ifstream in(o.config);
            auto j = nlohmann::json::parse(in);
            j["paper_defaults"] = o.preset;
            cfg = parse_config(j.dump());
        }
    } else if (!o.preset.empty()) {
        cfg = paper_configs(o.preset);
        validate_config(cfg);
    } else {
        throw ConfigError("either --config or --paper-defaults is required");
    }
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!cfg.output_dir) throw ConfigError("no output directory (use --out or \"output\")");
    if (o.threads) cfg.threads = o.threads;
    if (cfg.threads) set_thread_limit(cfg.threads);
    cfg.outer.alpha = cfg.alpha;
    return cfg;
}

DrawBank make_bank(const RunConfig& cfg, const Assembled& a, bool verify) {
    return build_bank(verify ? cfg.verify_seed : cfg.fit_seed, verify ? cfg.verify_draws : cfg.fit_draws,
                      a.problem->base_dim(), cfg.standardize, cfg.symmetrize);
}

int cmd_analyze(RunConfig cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = assemble(cfg);
    apply_seed_search(cfg, a);
    std::cerr << "seeds: fit " << cfg.fit_seed << ", verify " << cfg.verify_seed << '\n';
    const auto fit = make_bank(cfg, a, false);
    const auto verify = make_bank(cfg, a, true);
    ApeInputs in{a.problem, a.ad_hoc, a.switching, cfg.null_support, cfg.alt_support, cfg.init_weights};
    const auto report = build_ape(in, cfg.thresholds, cfg.outer, fit, verify);
    write_report_files(report, cfg, *cfg.output_dir);
    std::cout << summary_text(report);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "elapsed " << std::setprecision(3) << secs << " s\n";
    switch (report.verdict) {
        case Verdict::EffectivelyOptimal: return 0;
        case Verdict::EffectivelyDominated: return 2;
        case Verdict::Inconclusive: return 3;
    }
    return 3;
}

int cmd_inner(RunConfig cfg) {
    const auto a = assemble(cfg);
    apply_seed_search(cfg, a);
    const auto fit = make_bank(cfg, a, false);
    const auto verify = make_bank(cfg, a, true);
    std::vector<double> w = cfg.inner_weights;
    if (w.empty()) w.assign(cfg.alt_support.size(), 1.0 / static_cast<double>(cfg.alt_support.size()));
    auto [test, trace] = run_inner(w, cfg.null_support, cfg.alt_support, fit, a.problem, cfg.alpha,
                                   cfg.outer.inner_schedule, cfg.outer.inner_iter, a.switching);
    const auto& dir = *cfg.output_dir;
    std::filesystem::create_directories(dir);

    const TargetSampler sampler(*a.problem, verify);
    std::vector<Target> null_targets(cfg.null_support.begin(), cfg.null_support.end());
    const auto null_sizes = rejection_surface(*test, null_targets, sampler);
    std::vector<Target> fine(cfg.thresholds.fine_null_grid.begin(), cfg.thresholds.fine_null_grid.end());
    const auto fine_sizes = rejection_surface(*test, fine, sampler);

    nlohmann::ordered_json j;
    j["problem"] = a.problem->name();
    j["alpha"] = sig6(cfg.alpha);
    j["weights"] = nlohmann::json::array();
    for (double x : w) j["weights"].push_back(sig6(x));
    j["multipliers"] = nlohmann::json::array();
    for (double x : test->multipliers()) j["multipliers"].push_back(sig6(x));
    double total = 0.0;
    for (double x : test->multipliers()) total += x;
    if (total > 0.0) {
        const auto np = to_neyman_pearson(*test);
        j["cv"] = sig6(np.cv);
        j["lfd"] = nlohmann::json::array();
        for (double x : np.lfd) j["lfd"].push_back(sig6(x));
    } else {
        j["cv"] = 0.0;
        j["lfd"] = nlohmann::json::array();
    }
    j["dual_value"] = sig6(trace.best_values.back());
    j["iterations"] = trace.iterations();
    j["size_fit"] = nlohmann::json::array();
    const auto& fit_sizes =
        cfg.outer.inner_schedule.return_best ? trace.sizes[trace.best_iteration] : trace.sizes.back();
    for (double s : fit_sizes) j["size_fit"].push_back(sig6(s));
    j["size_verify"] = nlohmann::json::array();
    for (double s : null_sizes) j["size_verify"].push_back(sig6(s));
    double max_fine = 0.0;
    for (double s : fine_sizes) max_fine = std::max(max_fine, s);
    j["max_size_fine_null"] = sig6(max_fine);
    std::ofstream(dir / "inner.json") << j.dump(2) << '\n';
    std::ofstream tr(dir / "dual_trace.csv");
    write_dual_trace_csv(trace, tr);

    if (a.problem->obs_dim() == 1) {
        std::ofstream reg(dir / "region.csv");
        reg << "y,reject\n" << std::setprecision(6);
        for (int i = -500; i <= 500; ++i) {
            const double y = i / 100.0;
            const double yy[1] = {y};
            reg << y << ',' << test->decide(yy) << '\n';
        }
    }
    std::cout << "inner loop: " << trace.iterations() << " iterations, dual value " << std::setprecision(6)
              << trace.best_values.back() << ", max size (verify) ";
    double mx = 0.0;
    for (double s : null_sizes) mx = std::max(mx, s);
    std::cout << mx << '\n';
    return 0;
}

int cmd_power(RunConfig cfg) {
    const auto a = assemble(cfg);
    if (cfg.power.grid.empty()) throw ConfigError("power: grid is empty");
    TestPtr test;
    if (cfg.power.test == "adhoc") {
        test = a.ad_hoc;
    } else if (cfg.power.test == "standard") {
        test = a.standard;
    } else {
        const auto path = cfg.power.report.value_or(*cfg.output_dir / "report.json");
        if (!std::filesystem::exists(path)) throw ConfigError("power: no saved report at " + path.string());
        test = load_report(path, &a).test;
    }
    apply_seed_search(cfg, a);
    const auto verify = make_bank(cfg, a, true);
    const TargetSampler sampler(*a.problem, verify);
    std::vector<Target> targets(cfg.power.grid.begin(), cfg.power.grid.end());
    const auto power = rejection_surface(*test, targets, sampler);
    std::filesystem::create_directories(*cfg.output_dir);
    std::ofstream out(*cfg.output_dir / ("power_" + cfg.power.test + ".csv"));
    const std::size_t d = cfg.power.grid.front().dim();
    for (std::size_t c = 0; c < d; ++c) out << "theta_" << c + 1 << ',';
    out << "power\n" << std::setprecision(6);
    for (std::size_t i = 0; i < power.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) out << cfg.power.grid[i][c] << ',';
        out << power[i] << '\n';
    }
    std::cout << "wrote " << power.size() << " power values\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate power envelopes for nonstandard testing problems"};
    app.require_subcommand(1);
    Common opt;
    std::string test_override;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON configuration file");
        sub->add_option("--out", opt.out, "Output directory");
        sub->add_option("--threads", opt.threads, "Worker thread cap");
        sub->add_option("--paper-defaults", opt.preset, "Named built-in configuration");
    };
    auto* analyze = app.add_subcommand("analyze", "Build the envelope and classify the ad hoc test");
    auto* inner = app.add_subcommand("inner", "Run the inner loop at fixed weights");
    auto* power = app.add_subcommand("power", "Power curve of one test on the power grid");
    add_common(analyze);
    add_common(inner);
    add_common(power);
    power->add_option("--test", test_override, "adhoc | envelope | standard");
    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = resolve(opt);
        if (!test_override.empty()) {
            cfg.power.test = test_override;
            validate_config(cfg);
        }
        if (analyze->parsed()) return cmd_analyze(cfg);
        if (inner->parsed()) return cmd_inner(cfg);
        return cmd_power(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
