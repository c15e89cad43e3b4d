/**
 * @file market_sim.hpp
 * @brief Monte Carlo simulation of the discrete threshold-trading dynamics.
 *
 * At each opportunity n the trader observes S_n, buys one share at P_n iff
 * S_n >= threshold(p(n, Q_n)), and the price moves by dP_{n+1}:
 *
 *   P_{n+1} = P_n + dP_{n+1},  Q_{n+1} = Q_n + 1{trade},  M_{n+1} = M_n - 1{trade} P_n.
 *
 * The diagnostic X_n = M_n - (Q* - Q_n) P_n (cash net of the marked cost of
 * the shares still to buy) has increments
 *
 *   X_{n+1} - X_n = 1{trade} dP_{n+1} - (Q* - Q_n) dP_{n+1},
 *
 * whose conditional mean is g(p_n); the ensemble mean of X_N - X_0 is thus the
 * policy's expected gain.
 */

#pragma once

#include "sigtrade/common.hpp"
#include "sigtrade/dp_bench.hpp"
#include "sigtrade/gain_models.hpp"
#include "sigtrade/table_io.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sigtrade::sim {

struct SimConfig {
    SimConfig(gain::GainModel model, dp::PolicyGrid policy);

    gain::GainModel model;
    dp::PolicyGrid policy;
    double initial_price = 100.0;
    double initial_cash = 0.0;
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    /// Buy on every remaining opportunity once N - n = Q* - Q. The target is
    /// never overfilled regardless of this flag.
    bool force_completion = true;
    bool store_trajectories = false;
    /// Steps n (0..N) at which Q_n is recorded for the ensemble summary.
    std::vector<int> checkpoints;
    unsigned threads = 1;

    int steps() const { return policy.lattice().steps; }
    int target() const { return policy.lattice().target; }
};

/// Full state history of one path; signal and price_change have N entries,
/// the state vectors N + 1.
struct Trajectory {
    std::vector<double> price;
    std::vector<int> inventory;
    std::vector<double> cash;
    std::vector<double> signal;
    std::vector<double> price_change;
    std::vector<std::uint8_t> traded;
};

struct PathRecord {
    double final_price = 0.0;
    int final_inventory = 0;
    double final_cash = 0.0;
    double gain = 0.0;  ///< X_N - X_0
    std::vector<int> checkpoint_inventory;
    std::optional<Trajectory> trajectory;
};

struct CheckpointSummary {
    int step = 0;
    SampleMoments inventory;
};

struct PathEnsemble {
    std::vector<PathRecord> paths;
    std::vector<CheckpointSummary> checkpoints;
    std::vector<double> fill_rate;  ///< fraction of paths trading at step n
    SampleMoments gain;             ///< moments of X_N - X_0
    double completion_rate = 0.0;   ///< fraction of paths with Q_N = Q*
};

PathRecord simulate_path(const SimConfig& cfg, Rng& rng);

/// Path i uses stream_rng(seed, i); results do not depend on `threads`.
PathEnsemble run_ensemble(const SimConfig& cfg);

/// X_n = M_n - (Q* - Q_n) P_n along a stored trajectory. Throws DomainError
/// when the path was simulated without store_trajectories.
std::vector<double> x_diagnostic(const PathRecord& path, int target);

/// Increments 1{trade} dP - (Q* - Q_n) dP recomputed from the path's draws.
std::vector<double> x_increments(const Trajectory& trajectory, int target);

/// checkpoint_n, mean_Q, var_Q
Table summary_table(const PathEnsemble& ensemble);
/// n, fill_rate
Table fill_rate_table(const PathEnsemble& ensemble);

} // namespace sigtrade::sim
