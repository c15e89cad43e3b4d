/**
 * @file ac_bridge.hpp
 * @brief Almgren-Chriss schedules executed by a threshold trader, and the
 *        Gaussian uncertainty bands of the realised speed and inventory.
 *
 * With K intervals of length tau = T/K the discrete optimal speed is
 *
 *   nu_k = 2 sinh(kappa tau/2) / sinh(kappa T) * (Q* / tau) * cosh(kappa (T - (k + 1/2) tau))
 *
 * (midpoint form, so that sum_k nu_k tau = Q* telescopes exactly), with
 * eta~ = eta - gamma tau/2, kappa~ = sqrt(lambda sigma^2 / eta~) and
 * kappa = acosh(1 + (kappa~ tau)^2 / 2) / tau.
 *
 * Observing u signals per unit time, the trader realises nu_k by buying on a
 * fraction F_k = nu_k / u of them. Counts per interval are Binomial(u tau, F_k),
 * so the realised speed has variance u F (1 - F) / tau and the cumulative
 * inventory variance u tau sum F (1 - F).
 */

#pragma once

#include "sigtrade/common.hpp"
#include "sigtrade/iab.hpp"
#include "sigtrade/table_io.hpp"

#include <vector>

namespace sigtrade::ac {

struct ACParams {
    double horizon = 1.0;      ///< T
    double q_star = 100.0;     ///< shares to buy
    double sigma = 1.0;        ///< price volatility per sqrt(time)
    double eta = 1.0;          ///< temporary impact
    double gamma_perm = 1.0;   ///< permanent impact
    double lambda_risk = 3.0;  ///< risk aversion
    int intervals = 20;        ///< K; tau = T / K
    double u = 1e4;            ///< signal observations per unit time

    double tau() const { return horizon / intervals; }
    /// Opportunities per interval, u tau.
    double per_interval() const { return u * tau(); }
    /// Throws DomainError on non-positive sizes, u tau < 1 or eta~ <= 0.
    void validate() const;
};

struct Kappas {
    double eta_tilde = 0.0;
    double kappa_tilde = 0.0;
    double kappa = 0.0;
};

Kappas compute_kappas(const ACParams& p);

struct ACSchedule {
    ACParams params;
    Kappas kappas;
    std::vector<double> speeds;  ///< nu_k, shares per unit time

    /// Interval index containing t; t = T belongs to the last interval.
    int interval(double t) const;
    /// Q* sinh(kappa (T - t)) / sinh(kappa T); linear when kappa = 0.
    double det_inventory(double t) const;
    /// Remaining inventory of the discrete schedule, linear inside an interval.
    double scheduled_inventory(double t) const;
};

ACSchedule schedule(const ACParams& p);

/// nu/u exceeds 1 somewhere: the trader cannot buy fast enough.
class SaturationError : public NumericalError {
public:
    SaturationError(const std::string& what, double minimal_u)
        : NumericalError(what), minimal_u(minimal_u) {}
    double minimal_u;
};

/// F_k = nu_k / u per interval. Throws SaturationError when some F_k > 1.
std::vector<double> fill_probabilities(const ACSchedule& s);
/// Same for an arbitrary speed table on K equal intervals of [0, T].
std::vector<double> fill_probabilities(const std::vector<double>& speeds, double u);

/// Piecewise-constant, q-independent field with N = u T (must be an integer)
/// and breakpoints at the interval ends.
iab::FillRateField fill_field(const ACSchedule& s);
iab::FillRateField fill_field(const std::vector<double>& speeds, double horizon, double u);

/// Variance of the realised speed on interval k: u F (1 - F) / tau.
double speed_variance(const ACSchedule& s, int k);
/// Variance of the cumulative buys at t, V(t) u T: u sum_j |I_j cap [0,t]| F_j (1 - F_j).
double inventory_variance(const ACSchedule& s, double t);

/// t, mean_Q, std_Q, q05, q25, q75, q95, mean_speed, std_speed, q005, q995, det_Q.
/// mean_Q is the remaining inventory; empty `times` means the interval ends 0, tau, ..., T.
Table uncertainty_bands(const ACSchedule& s, std::vector<double> times = {});

struct CheckpointCheck {
    int interval_end = 0;  ///< k: the checkpoint sits at t = k tau
    double time = 0.0;
    double pred_mean = 0.0;  ///< remaining inventory
    double pred_var = 0.0;
    double emp_mean = 0.0;
    double emp_var = 0.0;
    double z_mean = 0.0;
    double var_ratio = 0.0;
    double coverage90 = 0.0;  ///< fraction of paths inside the 90% band
};

struct SpeedCheck {
    int interval = 0;
    double pred_mean = 0.0;
    double pred_var = 0.0;
    double emp_mean = 0.0;
    double emp_var = 0.0;
    double z_mean = 0.0;
    double var_ratio = 0.0;
};

struct BandValidation {
    std::size_t paths = 0;
    std::vector<CheckpointCheck> inventory;  ///< k = 1..K
    std::vector<SpeedCheck> speed;           ///< k = 0..K-1
    double pooled_coverage = 0.0;            ///< 90% coverage over all checkpoints
    double horizon_coverage = 0.0;           ///< 90% coverage at t = T
};

/// Monte Carlo of u tau Bernoulli(F_k) opportunities per interval (drawn as one
/// binomial count). Path i uses stream_rng(seed, i). Requires u tau integral.
BandValidation validate_bands(const ACSchedule& s, std::size_t paths, std::uint64_t seed,
                              unsigned threads = 1);

/// k, t, pred_mean, pred_var, emp_mean, emp_var, z_mean, var_ratio, coverage90
Table validation_table(const BandValidation& v);

} // namespace sigtrade::ac
