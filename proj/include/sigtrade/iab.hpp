/**
 * @file iab.hpp
 * @brief Diffusion limit of the threshold-driven inventory chain.
 *
 * When the chain buys with probability p(n, Q) = F(nT/N, Q/N), the scaled
 * inventory Q_n / N is close to the diffusion
 *
 *   dQ_t = F(t, Q_t) dt/T + sqrt(F (1 - F)(t, Q_t) / N) dW_t / sqrt(T),  Q_0 = 0,
 *
 * so Q_n is asymptotically Gaussian with mean m(t) (m' = N F(t, m/N) / T) and
 * a variance obtained by propagating F (1 - F) along the mean path.
 */

#pragma once

#include "sigtrade/common.hpp"
#include "sigtrade/table_io.hpp"

#include <functional>
#include <vector>

namespace sigtrade::iab {

/// A fill-rate value outside [0, 1].
class FieldContractError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Macroscopic fill rate F(t, q) on [0, T] x [0, q_star], q = Q / N.
struct FillRateField {
    std::function<double(double t, double q)> rate;
    double horizon = 1.0;  ///< T
    int scale = 1;         ///< N, opportunities over [0, T]
    double q_star = 1.0;   ///< upper end of the inventory domain (Q* / N)
    bool depends_on_q = false;
    /// Times in (0, T) where F may jump; moment integration never steps across them.
    std::vector<double> breakpoints;

    /// Evaluates F; throws FieldContractError when the value leaves [0, 1].
    double operator()(double t, double q) const;
};

/// F = p everywhere; piecewise constant on the lattice by construction.
FillRateField constant_field(double p, int scale, double q_star = 1.0, double horizon = 1.0);

/// F(t, q) = clamp((q_star - q) / (1 - t/T), 0, 1): the deterministic pace.
FillRateField deterministic_pace_field(double q_star, int scale, double horizon = 1.0);

enum class EulerBoundary {
    /// F is evaluated at clamp(Q_t, 0, q_star); the state itself is left free.
    ClampArgument,
    /// Q_t is clamped to [0, q_star] after every step. Biases the mean upwards
    /// by O(1/N) near Q = 0 where the noise dominates the drift.
    ClampState,
};

/// Euler-Maruyama path of Q_t on a uniform grid of `steps` intervals (steps + 1
/// values). Throws DomainError when steps < max(N, 1000 T).
std::vector<double> euler_sde(const FillRateField& field, int steps, Rng& rng,
                              EulerBoundary boundary = EulerBoundary::ClampArgument);

/// At least one step per opportunity and 1000 per unit of T.
int default_euler_steps(const FillRateField& field);

enum class VarianceMode {
    /// N/T * integral of F(1-F) along the mean path.
    FrozenMean,
    /// Adds the 2 (dF/dq / T) * var feedback of the linearised fluctuation SDE.
    Linearized,
};

struct Moments {
    double mean = 0.0;      ///< shares
    double variance = 0.0;  ///< shares^2
};

/// Predicted (mean, variance) of Q_n = N Q_t at each requested time (any order).
std::vector<Moments> gaussian_moments(const FillRateField& field, const std::vector<double>& times,
                                      VarianceMode mode = VarianceMode::FrozenMean, int substeps = 4);
Moments gaussian_moments(const FillRateField& field, double t,
                         VarianceMode mode = VarianceMode::FrozenMean);

struct EulerSummary {
    std::vector<double> times;
    std::vector<SampleMoments> inventory;  ///< moments of N Q_t
};

/// Moments of N Q_t over `paths` Euler paths at the given times (snapped to the grid).
EulerSummary euler_ensemble(const FillRateField& field, int steps, std::size_t paths,
                            const std::vector<double>& times, std::uint64_t seed, unsigned threads = 1,
                            EulerBoundary boundary = EulerBoundary::ClampArgument);

struct CheckpointComparison {
    int step = 0;
    double time = 0.0;
    double pred_mean = 0.0;
    double pred_var = 0.0;
    double emp_mean = 0.0;
    double emp_var = 0.0;
    double z_mean = 0.0;     ///< (emp - pred) / (pred_std / sqrt(paths))
    double var_ratio = 0.0;  ///< emp_var / pred_var
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double jarque_bera = 0.0;
};

struct IabReport {
    std::size_t paths = 0;
    std::vector<CheckpointComparison> rows;
};

struct VerifyOptions {
    std::size_t paths = 100000;
    std::vector<double> times;  ///< empty: 0.1 T, 0.2 T, ..., 0.9 T
    std::uint64_t seed = 0;
    unsigned threads = 1;
    VarianceMode mode = VarianceMode::Linearized;
};

/// Simulates the discrete chain with p(n, Q) = F(nT/N, Q/N) (no completion
/// forcing) and compares inventory moments with the Gaussian prediction.
IabReport verify_iab(const FillRateField& field, const VerifyOptions& opts);

/// checkpoint, pred_mean, pred_var, emp_mean, emp_var, z_mean, var_ratio,
/// t, skewness, excess_kurtosis, jarque_bera
Table report_table(const IabReport& report);

} // namespace sigtrade::iab
