#include "sigtrade/market_sim.hpp"

#include <algorithm>
#include <mutex>

namespace sigtrade::sim {

SimConfig::SimConfig(gain::GainModel model_, dp::PolicyGrid policy_)
    : model(std::move(model_)), policy(std::move(policy_)) {}

namespace {

void validate(const SimConfig& cfg) {
    if (cfg.paths < 1) throw DomainError("simulation: paths must be >= 1");
    if (!cfg.model.has_sampler()) throw DomainError("simulation: gain model has no sampler");
    for (int c : cfg.checkpoints)
        if (c < 0 || c > cfg.steps())
            throw DomainError("simulation: checkpoint " + std::to_string(c) + " outside [0, N]");
}

PathRecord simulate(const SimConfig& cfg, Rng& rng, std::uint64_t* fill_counts) {
    const int steps = cfg.steps();
    const int target = cfg.target();
    const auto& lattice = cfg.policy.lattice();

    PathRecord rec;
    if (cfg.store_trajectories) {
        Trajectory tr;
        tr.price.reserve(steps + 1);
        tr.inventory.reserve(steps + 1);
        tr.cash.reserve(steps + 1);
        tr.signal.reserve(steps);
        tr.price_change.reserve(steps);
        tr.traded.reserve(steps);
        rec.trajectory = std::move(tr);
    }
    rec.checkpoint_inventory.resize(cfg.checkpoints.size());

    double price = cfg.initial_price;
    double cash = cfg.initial_cash;
    int q = 0;
    const double x0 = cash - static_cast<double>(target) * price;

    auto record_checkpoints = [&](int n) {
        for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i)
            if (cfg.checkpoints[i] == n) rec.checkpoint_inventory[i] = q;
    };

    for (int n = 0; n < steps; ++n) {
        record_checkpoints(n);
        double p = 0.0;
        if (q < target) {
            const double forced = cfg.force_completion ? lattice.forced_probability(n, q) : -1.0;
            p = forced >= 0.0 ? forced : cfg.policy(n, q);
        }
        const auto draw = cfg.model.sample(rng);
        const bool trade = p >= 1.0 || (p > 0.0 && draw.signal >= cfg.model.threshold(p));
        if (rec.trajectory) {
            auto& tr = *rec.trajectory;
            tr.price.push_back(price);
            tr.inventory.push_back(q);
            tr.cash.push_back(cash);
            tr.signal.push_back(draw.signal);
            tr.price_change.push_back(draw.price_change);
            tr.traded.push_back(trade ? 1 : 0);
        }
        if (trade) {
            if (fill_counts) ++fill_counts[n];
            cash -= price;
            ++q;
        }
        price += draw.price_change;
    }
    record_checkpoints(steps);
    if (rec.trajectory) {
        rec.trajectory->price.push_back(price);
        rec.trajectory->inventory.push_back(q);
        rec.trajectory->cash.push_back(cash);
    }
    rec.final_price = price;
    rec.final_inventory = q;
    rec.final_cash = cash;
    rec.gain = (cash - static_cast<double>(target - q) * price) - x0;
    return rec;
}

} // namespace

PathRecord simulate_path(const SimConfig& cfg, Rng& rng) {
    return simulate(cfg, rng, nullptr);
}

PathEnsemble run_ensemble(const SimConfig& cfg) {
    validate(cfg);
    PathEnsemble ens;
    ens.paths.resize(cfg.paths);
    std::vector<std::uint64_t> fills(static_cast<std::size_t>(cfg.steps()), 0);
    std::mutex merge;

    parallel_for(cfg.paths, cfg.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint64_t> local(fills.size(), 0);
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = stream_rng(cfg.seed, i);
            ens.paths[i] = simulate(cfg, rng, local.data());
        }
        std::lock_guard lock(merge);
        for (std::size_t n = 0; n < fills.size(); ++n) fills[n] += local[n];
    });

    ens.fill_rate.resize(fills.size());
    for (std::size_t n = 0; n < fills.size(); ++n)
        ens.fill_rate[n] = static_cast<double>(fills[n]) / static_cast<double>(cfg.paths);

    std::vector<double> values(cfg.paths);
    for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
        for (std::size_t i = 0; i < cfg.paths; ++i)
            values[i] = ens.paths[i].checkpoint_inventory[c];
        ens.checkpoints.push_back({cfg.checkpoints[c], sample_moments(values)});
    }
    std::size_t completed = 0;
    for (std::size_t i = 0; i < cfg.paths; ++i) {
        values[i] = ens.paths[i].gain;
        completed += ens.paths[i].final_inventory == cfg.target() ? 1 : 0;
    }
    ens.gain = sample_moments(values);
    ens.completion_rate = static_cast<double>(completed) / static_cast<double>(cfg.paths);
    return ens;
}

std::vector<double> x_diagnostic(const PathRecord& path, int target) {
    if (!path.trajectory) throw DomainError("x_diagnostic: trajectory not stored");
    const auto& tr = *path.trajectory;
    std::vector<double> x(tr.price.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        x[n] = tr.cash[n] - static_cast<double>(target - tr.inventory[n]) * tr.price[n];
    return x;
}

std::vector<double> x_increments(const Trajectory& tr, int target) {
    std::vector<double> dx(tr.price_change.size());
    for (std::size_t n = 0; n < dx.size(); ++n)
        dx[n] = (tr.traded[n] ? tr.price_change[n] : 0.0) -
                static_cast<double>(target - tr.inventory[n]) * tr.price_change[n];
    return dx;
}

Table summary_table(const PathEnsemble& ens) {
    Table t;
    t.columns = {"checkpoint_n", "mean_Q", "var_Q"};
    for (const auto& c : ens.checkpoints)
        t.add_row({std::int64_t{c.step}, c.inventory.mean, c.inventory.variance});
    return t;
}

Table fill_rate_table(const PathEnsemble& ens) {
    Table t;
    t.columns = {"n", "fill_rate"};
    for (std::size_t n = 0; n < ens.fill_rate.size(); ++n)
        t.add_row({static_cast<std::int64_t>(n), ens.fill_rate[n]});
    return t;
}

} // namespace sigtrade::sim
