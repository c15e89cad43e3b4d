#include "cli_app.hpp"

#include "sigtrade/ac_bridge.hpp"
#include "sigtrade/dp_bench.hpp"
#include "sigtrade/gain_models.hpp"
#include "sigtrade/iab.hpp"
#include "sigtrade/market_sim.hpp"
#include "sigtrade/table_io.hpp"
#include "sigtrade/threshold_policies.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace sigtrade::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string out = "out";
    unsigned threads = 0;
    std::string format = "csv";
};

struct ModelOpts {
    std::string kind = "linear";
    double scale = 1.0;
    double noise_sd = 0.0;
    std::string samples;
    std::string model_json;
};

struct LatticeOpts {
    int steps = 0;
    int target = 0;
};

struct PolicyOpts {
    double tau_u = policy::CalibrationConstants{}.tau_unconstrained;
    double tau_c = policy::CalibrationConstants{}.tau_constrained;
    double border = policy::kDefaultBorderWidth;

    policy::PolicyOptions resolve() const { return {{tau_u, tau_c}, border}; }
};

struct SimOpts {
    std::string variant = "mixed";
    std::size_t paths = 10000;
    double initial_price = 100.0;
    std::vector<int> checkpoints;
    bool no_force = false;
    std::size_t store_paths = 0;
};

struct PerfOpts {
    int steps = 100;
    int target_min = 1;
    int target_max = 0;  // 0: N - 1
};

struct IabOpts {
    std::string field = "constant";
    double rate = 0.5;
    double q_star = 1.0;
    int scale = 100;
    double horizon = 1.0;
    std::size_t paths = 100000;
    std::vector<double> times;
    std::string variance = "linearized";
};

struct AcOpts {
    ac::ACParams params;
    std::size_t paths = 0;
    std::vector<double> times;
};

void add_model_options(CLI::App* sub, ModelOpts& m) {
    sub->add_option("--model", m.kind, "gain model")->check(CLI::IsMember({"linear", "empirical"}));
    sub->add_option("--gain-scale", m.scale, "G in g(p) = G p (1-p)")->check(CLI::NonNegativeNumber);
    sub->add_option("--noise-sd", m.noise_sd, "price noise around the linear response")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--samples", m.samples, "signal,price_change CSV for --model empirical");
    sub->add_option("--model-json", m.model_json, "model saved by a previous run");
}

void add_lattice_options(CLI::App* sub, LatticeOpts& l) {
    sub->add_option("--steps,-N", l.steps, "number of opportunities N")->required()->check(CLI::PositiveNumber);
    sub->add_option("--target,-Q", l.target, "shares to buy Q*")->required()->check(CLI::PositiveNumber);
}

void add_policy_options(CLI::App* sub, PolicyOpts& p) {
    sub->add_option("--tau-u", p.tau_u, "shift of the unconstrained calibrated policy");
    sub->add_option("--tau-c", p.tau_c, "shift of the constrained calibrated policy");
    sub->add_option("--border", p.border, "border width of the mixed policy")->check(CLI::Range(0.0, 0.5));
}

gain::GainModel build_model(const ModelOpts& m) {
    if (!m.model_json.empty()) {
        std::ifstream in(m.model_json);
        if (!in)
            throw DomainError("cannot open model file " + m.model_json);
        return gain::GainModel::from_json(json::parse(in));
    }
    if (m.kind == "linear")
        return gain::GainModel::quadratic(m.scale, m.noise_sd);
    if (m.samples.empty())
        throw DomainError("--model empirical requires --samples");
    const auto rows = gain::read_samples_csv(m.samples);
    return gain::empirical_from_samples(rows);
}

// Option values as they were resolved after flags and config file.
json resolved_options(const CLI::App* app) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty())
            continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config")
            continue;
        if (opt->count() == 0) {
            j[name] = opt->get_default_str();
        } else if (opt->results().size() == 1) {
            j[name] = opt->results().front();
        } else {
            j[name] = opt->results();
        }
    }
    return j;
}

class Output {
public:
    Output(const CommonOpts& c) : dir_(c.out), json_(c.format == "json") {
        fs::create_directories(dir_);
    }

    void table(const std::string& stem, const Table& t) {
        const std::string name = stem + (json_ ? ".json" : ".csv");
        std::ofstream f = open(name);
        if (json_)
            f << table_to_json(t).dump(2) << '\n';
        else
            write_csv(f, t);
    }

    void document(const std::string& name, const json& j) {
        std::ofstream f = open(name);
        f << j.dump(2) << '\n';
    }

    const std::vector<std::string>& files() const { return files_; }

private:
    std::ofstream open(const std::string& name) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw DomainError("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return f;
    }

    fs::path dir_;
    bool json_;
    std::vector<std::string> files_;
};

dp::PolicyGrid simulation_grid(const std::string& variant, int steps, int target,
                               const gain::GainModel& model, const policy::PolicyOptions& popts,
                               bool force) {
    if (variant == "optimal")
        return dp::solve_dp(steps, target, model).policy;
    const auto v = policy::parse_variant(variant);
    return dp::tabulate_policy(policy::lattice_policy(v, steps, target, popts), steps, target, force);
}

json cmd_dp_solve(const LatticeOpts& l, const ModelOpts& m, Output& out, std::ostream& log) {
    const auto model = build_model(m);
    const auto sol = dp::solve_dp(l.steps, l.target, model);
    out.table("grid", dp::grid_table(sol));

    json spots = json::array();
    const auto& lat = sol.values.lattice();
    const std::pair<int, int> cells[] = {{l.steps - 2, l.target - 1}, {l.steps - 3, l.target - 1},
                                         {l.steps - 3, l.target - 2}, {0, 0}};
    for (auto [n, q] : cells)
        if (n >= 0 && n < l.steps && lat.feasible(n, q))
            spots.push_back({{"n", n}, {"Q", q}, {"V", sol.values(n, q)}, {"p", sol.policy(n, q)}});
    const auto sym = dp::check_symmetry(sol, model);

    json summary = {{"steps", l.steps},
                    {"target", l.target},
                    {"V00", sol.optimal_value()},
                    {"spot_checks", spots},
                    {"symmetry", {{"applicable", sym.applicable}, {"passed", sym.passed},
                                  {"max_value_gap", sym.max_value_gap},
                                  {"max_policy_gap", sym.max_policy_gap}}}};
    out.document("summary.json", summary);
    log << "V(0,0) = " << format_number(sol.optimal_value()) << '\n';
    return summary;
}

std::vector<policy::PolicyVariant> all_variants() {
    using policy::PolicyVariant;
    return {PolicyVariant::Deterministic, PolicyVariant::UnconstrainedRaw, PolicyVariant::ConstrainedRaw,
            PolicyVariant::UnconstrainedCalibrated, PolicyVariant::ConstrainedCalibrated, PolicyVariant::Mixed};
}

json cmd_policy_eval(const LatticeOpts& l, const ModelOpts& m, const PolicyOpts& p,
                     const std::vector<std::string>& names, Output& out, std::ostream& log) {
    const auto model = build_model(m);
    const auto popts = p.resolve();
    std::vector<policy::PolicyVariant> variants;
    for (const auto& n : names)
        variants.push_back(policy::parse_variant(n));
    if (variants.empty())
        variants = all_variants();

    const auto baseline = dp::ratio_baseline(l.steps, l.target, model);
    Table values;
    values.columns = {"variant", "value", "optimal", "deterministic", "ratio"};
    Table grid;
    grid.columns = {"variant", "n", "Q", "p"};
    for (auto v : variants) {
        const auto pol = policy::lattice_policy(v, l.steps, l.target, popts);
        const auto tab = dp::tabulate_policy(pol, l.steps, l.target);
        const double value = dp::evaluate_policy(tab, model);
        const double ratio = dp::performance_ratio(value, baseline);
        values.add_row({std::string(policy::to_string(v)), value, baseline.optimal, baseline.deterministic, ratio});
        log << policy::to_string(v) << ": value " << format_number(value) << ", ratio " << format_number(ratio)
            << '\n';
        const auto& lat = tab.lattice();
        for (int n = 0; n < l.steps; ++n)
            for (int q = lat.lowest_feasible(n); q <= l.target; ++q)
                grid.add_row({std::string(policy::to_string(v)), std::int64_t{n}, std::int64_t{q}, tab(n, q)});
    }
    out.table("policy_values", values);
    out.table("policy_grid", grid);
    return {{"optimal", baseline.optimal}, {"deterministic", baseline.deterministic}};
}

json cmd_perf_compare(const PerfOpts& o, const ModelOpts& m, const PolicyOpts& p, Output& out,
                      std::ostream& log) {
    const auto model = build_model(m);
    const auto popts = p.resolve();
    const int hi = o.target_max > 0 ? o.target_max : o.steps - 1;
    if (o.target_min < 1 || hi > o.steps || o.target_min > hi)
        throw DomainError("target range must satisfy 1 <= target-min <= target-max <= steps");

    Table t;
    t.columns = {"Q_star", "variant", "value", "ratio"};
    double worst_mixed = 1.0;
    for (int target = o.target_min; target <= hi; ++target) {
        const auto baseline = dp::ratio_baseline(o.steps, target, model);
        t.add_row({std::int64_t{target}, std::string("optimal"), baseline.optimal,
                   dp::performance_ratio(baseline.optimal, baseline)});
        for (auto v : all_variants()) {
            const double value = dp::evaluate_policy(policy::lattice_policy(v, o.steps, target, popts), o.steps,
                                                     target, model);
            const double ratio = dp::performance_ratio(value, baseline);
            if (v == policy::PolicyVariant::Mixed)
                worst_mixed = std::min(worst_mixed, ratio);
            t.add_row({std::int64_t{target}, std::string(policy::to_string(v)), value, ratio});
        }
    }
    out.table("perf_compare", t);
    log << "worst mixed ratio: " << format_number(worst_mixed) << '\n';
    return {{"worst_mixed_ratio", worst_mixed}};
}

json cmd_simulate(const LatticeOpts& l, const ModelOpts& m, const PolicyOpts& p, const SimOpts& s,
                  const CommonOpts& c, Output& out, std::ostream& log) {
    const auto model = build_model(m);
    auto grid = simulation_grid(s.variant, l.steps, l.target, model, p.resolve(), !s.no_force);
    const double exact = s.no_force ? std::nan("") : dp::evaluate_policy(grid, model);

    sim::SimConfig cfg(model, std::move(grid));
    cfg.paths = s.paths;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    cfg.initial_price = s.initial_price;
    cfg.force_completion = !s.no_force;
    cfg.checkpoints = s.checkpoints;
    if (cfg.checkpoints.empty())
        for (int i = 1; i <= 10; ++i)
            cfg.checkpoints.push_back(l.steps * i / 10);
    const auto ens = sim::run_ensemble(cfg);
    out.table("checkpoints", sim::summary_table(ens));
    out.table("fill_rate", sim::fill_rate_table(ens));

    if (s.store_paths > 0) {
        auto traj_cfg = cfg;
        traj_cfg.store_trajectories = true;
        Table t;
        t.columns = {"path", "n", "price", "Q", "cash", "X"};
        for (std::size_t i = 0; i < std::min(s.store_paths, s.paths); ++i) {
            auto rng = stream_rng(c.seed, i);
            const auto rec = sim::simulate_path(traj_cfg, rng);
            const auto x = sim::x_diagnostic(rec, l.target);
            const auto& tr = *rec.trajectory;
            for (std::size_t n = 0; n < tr.price.size(); ++n)
                t.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(n), tr.price[n],
                           std::int64_t{tr.inventory[n]}, tr.cash[n], x[n]});
        }
        out.table("trajectories", t);
    }

    json summary = {{"variant", s.variant},
                    {"paths", s.paths},
                    {"mean_gain", ens.gain.mean},
                    {"gain_standard_error", ens.gain.standard_error()},
                    {"completion_rate", ens.completion_rate}};
    if (!s.no_force) {
        summary["exact_value"] = exact;
        summary["z_gain"] = (ens.gain.mean - exact) / ens.gain.standard_error();
    }
    out.document("summary.json", summary);
    log << "mean gain " << format_number(ens.gain.mean) << " +- " << format_number(ens.gain.standard_error());
    if (!s.no_force)
        log << " (exact " << format_number(exact) << ")";
    log << '\n';
    return summary;
}

json cmd_iab_verify(const IabOpts& o, const CommonOpts& c, Output& out, std::ostream& log) {
    const auto field = o.field == "constant" ? iab::constant_field(o.rate, o.scale, o.q_star, o.horizon)
                                             : iab::deterministic_pace_field(o.q_star, o.scale, o.horizon);
    iab::VerifyOptions v;
    v.paths = o.paths;
    v.times = o.times;
    v.seed = c.seed;
    v.threads = c.threads;
    v.mode = o.variance == "frozen" ? iab::VarianceMode::FrozenMean : iab::VarianceMode::Linearized;
    const auto report = iab::verify_iab(field, v);
    out.table("iab_report", iab::report_table(report));

    double worst_z = 0.0;
    double ratio_lo = INFINITY;
    double ratio_hi = -INFINITY;
    for (const auto& r : report.rows) {
        worst_z = std::max(worst_z, std::abs(r.z_mean));
        ratio_lo = std::min(ratio_lo, r.var_ratio);
        ratio_hi = std::max(ratio_hi, r.var_ratio);
    }
    log << "max |z| " << format_number(worst_z) << ", variance ratio in [" << format_number(ratio_lo) << ", "
        << format_number(ratio_hi) << "]\n";
    return {{"max_abs_z", worst_z}, {"min_var_ratio", ratio_lo}, {"max_var_ratio", ratio_hi}};
}

json cmd_ac_bands(const AcOpts& o, const CommonOpts& c, Output& out, std::ostream& log) {
    const auto s = ac::schedule(o.params);
    const auto fills = ac::fill_probabilities(s);

    Table sched;
    sched.columns = {"k", "t_start", "t_end", "speed", "fill"};
    CompensatedSum mass;
    for (int k = 0; k < o.params.intervals; ++k) {
        mass.add(s.speeds[k] * o.params.tau());
        sched.add_row({std::int64_t{k}, o.params.horizon * k / o.params.intervals,
                       o.params.horizon * (k + 1) / o.params.intervals, s.speeds[k], fills[k]});
    }
    out.table("schedule", sched);
    out.table("bands", ac::uncertainty_bands(s, o.times));

    json summary = {{"eta_tilde", s.kappas.eta_tilde},
                    {"kappa_tilde", s.kappas.kappa_tilde},
                    {"kappa", s.kappas.kappa},
                    {"scheduled_mass", mass.value()},
                    {"horizon_variance", ac::inventory_variance(s, o.params.horizon)}};
    if (o.paths > 0) {
        const auto v = ac::validate_bands(s, o.paths, c.seed, c.threads);
        out.table("validation", ac::validation_table(v));
        summary["pooled_coverage90"] = v.pooled_coverage;
        summary["horizon_coverage90"] = v.horizon_coverage;
        log << "90% band coverage: pooled " << format_number(v.pooled_coverage) << ", horizon "
            << format_number(v.horizon_coverage) << '\n';
    }
    out.document("summary.json", summary);
    log << "kappa " << format_number(s.kappas.kappa) << ", scheduled mass " << format_number(mass.value()) << '\n';
    return summary;
}

json cmd_calibrate(int iters, Output& out, std::ostream& log) {
    const double tu = policy::calibrate_shift(policy::ShiftVariant::Unconstrained, iters);
    const double tc = policy::calibrate_shift(policy::ShiftVariant::Constrained, iters);
    const double pdet = 1.0 / 3.0;
    Table t;
    t.columns = {"variant", "shift", "p_at_h3"};
    t.add_row({std::string("unconstrained"), tu, policy::unconstrained_closed_form(pdet, 3.0, tu)});
    t.add_row({std::string("constrained"), tc, policy::constrained_closed_form(pdet, 3.0, tc, iters)});
    out.table("calibration", t);
    log << "tau_unconstrained = " << format_number(tu) << '\n'
        << "tau_constrained = " << format_number(tc) << '\n';
    return {{"tau_unconstrained", tu}, {"tau_constrained", tc}};
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Threshold-on-signal execution: DP benchmark, closed-form policies, simulation, bands",
                 "sigtrade-cli"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "TOML/INI configuration file; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    CommonOpts common;
    app.add_option("--seed", common.seed, "random seed");
    app.add_option("--out", common.out, "output directory");
    app.add_option("--threads", common.threads, "worker threads (0: all cores)");
    app.add_option("--format", common.format, "table format")->check(CLI::IsMember({"csv", "json"}));

    ModelOpts model;
    LatticeOpts lattice;
    PolicyOpts popts;

    auto* dp_cmd = app.add_subcommand("dp-solve", "exact dynamic-programming solution");
    add_lattice_options(dp_cmd, lattice);
    add_model_options(dp_cmd, model);

    std::vector<std::string> variants;
    auto* eval_cmd = app.add_subcommand("policy-eval", "exact value of closed-form policies");
    add_lattice_options(eval_cmd, lattice);
    add_model_options(eval_cmd, model);
    add_policy_options(eval_cmd, popts);
    eval_cmd->add_option("--variant", variants, "policy variants (default: all)");

    PerfOpts perf;
    auto* perf_cmd = app.add_subcommand("perf-compare", "performance ratios over a range of targets");
    perf_cmd->add_option("--steps,-N", perf.steps, "number of opportunities N")->check(CLI::PositiveNumber);
    perf_cmd->add_option("--target-min", perf.target_min, "smallest Q*");
    perf_cmd->add_option("--target-max", perf.target_max, "largest Q* (default N - 1)");
    add_model_options(perf_cmd, model);
    add_policy_options(perf_cmd, popts);

    SimOpts sim_opts;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo of the trading dynamics");
    add_lattice_options(sim_cmd, lattice);
    add_model_options(sim_cmd, model);
    add_policy_options(sim_cmd, popts);
    sim_cmd->add_option("--variant", sim_opts.variant, "policy variant or 'optimal'");
    sim_cmd->add_option("--paths", sim_opts.paths, "number of paths")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--initial-price", sim_opts.initial_price, "P_0");
    sim_cmd->add_option("--checkpoints", sim_opts.checkpoints, "steps where Q_n is summarised");
    sim_cmd->add_flag("--no-force", sim_opts.no_force, "do not force completion near the horizon");
    sim_cmd->add_option("--store-paths", sim_opts.store_paths, "write full trajectories of the first K paths");

    IabOpts iab_opts;
    auto* iab_cmd = app.add_subcommand("iab-verify", "discrete chain against its diffusion limit");
    iab_cmd->add_option("--field", iab_opts.field, "fill-rate field")
        ->check(CLI::IsMember({"constant", "deterministic"}));
    iab_cmd->add_option("--rate", iab_opts.rate, "fill rate of the constant field")->check(CLI::Range(0.0, 1.0));
    iab_cmd->add_option("--q-star", iab_opts.q_star, "target as a fraction of N");
    iab_cmd->add_option("--scale,-N", iab_opts.scale, "opportunities N")->check(CLI::PositiveNumber);
    iab_cmd->add_option("--horizon", iab_opts.horizon, "T");
    iab_cmd->add_option("--paths", iab_opts.paths, "number of paths")->check(CLI::PositiveNumber);
    iab_cmd->add_option("--times", iab_opts.times, "checkpoint times (default 0.1 T .. 0.9 T)");
    iab_cmd->add_option("--variance", iab_opts.variance, "variance propagation")
        ->check(CLI::IsMember({"linearized", "frozen"}));

    AcOpts ac_opts;
    auto* ac_cmd = app.add_subcommand("ac-bands", "Almgren-Chriss schedule and uncertainty bands");
    ac_cmd->add_option("--horizon", ac_opts.params.horizon, "T");
    ac_cmd->add_option("--q-star", ac_opts.params.q_star, "shares to buy");
    ac_cmd->add_option("--sigma", ac_opts.params.sigma, "volatility");
    ac_cmd->add_option("--eta", ac_opts.params.eta, "temporary impact");
    ac_cmd->add_option("--gamma", ac_opts.params.gamma_perm, "permanent impact");
    ac_cmd->add_option("--lambda", ac_opts.params.lambda_risk, "risk aversion");
    ac_cmd->add_option("--intervals", ac_opts.params.intervals, "K intervals of length T/K");
    ac_cmd->add_option("--u", ac_opts.params.u, "signal observations per unit time");
    ac_cmd->add_option("--paths", ac_opts.paths, "Monte Carlo paths for band validation (0: skip)");
    ac_cmd->add_option("--times", ac_opts.times, "band times (default: interval ends)");

    int lambda_iters = 4;
    auto* cal_cmd = app.add_subcommand("calibrate", "solve for the two loss-factor shifts");
    cal_cmd->add_option("--lambda-iters", lambda_iters, "fixed-point iterations of the constrained form")
        ->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }

    try {
        Output files(common);
        CLI::App* sub = app.get_subcommands().front();
        json summary;
        if (sub == dp_cmd)
            summary = cmd_dp_solve(lattice, model, files, out);
        else if (sub == eval_cmd)
            summary = cmd_policy_eval(lattice, model, popts, variants, files, out);
        else if (sub == perf_cmd)
            summary = cmd_perf_compare(perf, model, popts, files, out);
        else if (sub == sim_cmd)
            summary = cmd_simulate(lattice, model, popts, sim_opts, common, files, out);
        else if (sub == iab_cmd)
            summary = cmd_iab_verify(iab_opts, common, files, out);
        else if (sub == ac_cmd)
            summary = cmd_ac_bands(ac_opts, common, files, out);
        else
            summary = cmd_calibrate(lambda_iters, files, out);

        json manifest = {{"command", sub->get_name()},
                         {"common", resolved_options(&app)},
                         {"parameters", resolved_options(sub)},
                         {"summary", summary}};
        if (sub == dp_cmd || sub == eval_cmd || sub == perf_cmd || sub == sim_cmd)
            manifest["model"] = build_model(model).to_json();
        auto listed = files.files();
        listed.push_back("manifest.json");
        manifest["files"] = listed;
        files.document("manifest.json", manifest);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

} // namespace sigtrade::cli
