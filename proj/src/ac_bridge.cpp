#include "sigtrade/ac_bridge.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sigtrade::ac {

namespace {

// Interval of [0, T] split in `count` pieces that contains t, consistent with
// the breakpoints k T / count.
int interval_of(double t, double horizon, int count) {
    int k = static_cast<int>(std::floor(t / horizon * count));
    k = std::clamp(k, 0, count - 1);
    while (k + 1 < count && horizon * (k + 1) / count <= t)
        ++k;
    while (k > 0 && horizon * k / count > t)
        --k;
    return k;
}

int integral_count(double x, const char* what) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, r) || r < 1.0) {
        std::ostringstream msg;
        msg << what << " must be a positive integer, got " << x;
        throw DomainError(msg.str());
    }
    return static_cast<int>(r);
}

} // namespace

void ACParams::validate() const {
    if (!(horizon > 0.0) || !(q_star > 0.0) || !(u > 0.0))
        throw DomainError("T, Q* and u must be positive");
    if (!(sigma >= 0.0) || !(eta > 0.0) || !(gamma_perm >= 0.0) || !(lambda_risk >= 0.0))
        throw DomainError("sigma, gamma and lambda must be >= 0, eta > 0");
    if (intervals < 1)
        throw DomainError("need at least one interval");
    if (per_interval() < 1.0)
        throw DomainError("u * tau must be >= 1");
    if (!(eta - gamma_perm * tau() / 2.0 > 0.0))
        throw DomainError("eta - gamma tau / 2 must be positive");
}

Kappas compute_kappas(const ACParams& p) {
    p.validate();
    Kappas k;
    k.eta_tilde = p.eta - p.gamma_perm * p.tau() / 2.0;
    k.kappa_tilde = std::sqrt(p.lambda_risk * p.sigma * p.sigma / k.eta_tilde);
    // acosh(1 + y) = log1p(y + sqrt(y (2 + y))), accurate for small y.
    const double x = k.kappa_tilde * p.tau();
    const double y = 0.5 * x * x;
    k.kappa = std::log1p(y + std::sqrt(y * (2.0 + y))) / p.tau();
    return k;
}

int ACSchedule::interval(double t) const {
    return interval_of(t, params.horizon, params.intervals);
}

double ACSchedule::det_inventory(double t) const {
    const double T = params.horizon;
    if (t <= 0.0)
        return params.q_star;
    if (kappas.kappa == 0.0)
        return params.q_star * (1.0 - t / T);
    return params.q_star * std::sinh(kappas.kappa * (T - t)) / std::sinh(kappas.kappa * T);
}

double ACSchedule::scheduled_inventory(double t) const {
    const int k = interval(t);
    CompensatedSum bought;
    for (int j = 0; j < k; ++j)
        bought.add(speeds[j] * params.tau());
    bought.add(speeds[k] * (t - params.horizon * k / params.intervals));
    return params.q_star - bought.value();
}

ACSchedule schedule(const ACParams& p) {
    ACSchedule s;
    s.params = p;
    s.kappas = compute_kappas(p);
    const double tau = p.tau();
    const double T = p.horizon;
    const double kappa = s.kappas.kappa;
    s.speeds.resize(static_cast<std::size_t>(p.intervals));
    for (int k = 0; k < p.intervals; ++k) {
        if (kappa == 0.0) {
            s.speeds[k] = p.q_star / T;
        } else {
            const double front = 2.0 * std::sinh(kappa * tau / 2.0) / std::sinh(kappa * T);
            s.speeds[k] = front * (p.q_star / tau) * std::cosh(kappa * (T - (k + 0.5) * tau));
        }
    }
    return s;
}

std::vector<double> fill_probabilities(const std::vector<double>& speeds, double u) {
    if (!(u > 0.0))
        throw DomainError("u must be positive");
    double fastest = 0.0;
    std::vector<double> f;
    f.reserve(speeds.size());
    for (double nu : speeds) {
        if (!(nu >= 0.0))
            throw DomainError("speeds must be non-negative");
        fastest = std::max(fastest, nu);
        f.push_back(nu / u);
    }
    if (fastest > u) {
        std::ostringstream msg;
        msg << "u = " << u << " too small to realize the schedule; need u >= " << fastest;
        throw SaturationError(msg.str(), fastest);
    }
    return f;
}

std::vector<double> fill_probabilities(const ACSchedule& s) {
    return fill_probabilities(s.speeds, s.params.u);
}

iab::FillRateField fill_field(const std::vector<double>& speeds, double horizon, double u) {
    if (speeds.empty())
        throw DomainError("empty speed table");
    if (!(horizon > 0.0))
        throw DomainError("T must be positive");
    auto fills = fill_probabilities(speeds, u);
    const int count = static_cast<int>(fills.size());

    iab::FillRateField f;
    f.horizon = horizon;
    f.scale = integral_count(u * horizon, "u T");
    f.q_star = 1.0;
    f.depends_on_q = false;
    for (int k = 1; k < count; ++k)
        f.breakpoints.push_back(horizon * k / count);
    f.rate = [fills = std::move(fills), horizon, count](double t, double) {
        return fills[static_cast<std::size_t>(interval_of(t, horizon, count))];
    };
    return f;
}

iab::FillRateField fill_field(const ACSchedule& s) {
    return fill_field(s.speeds, s.params.horizon, s.params.u);
}

double speed_variance(const ACSchedule& s, int k) {
    if (k < 0 || k >= s.params.intervals)
        throw DomainError("interval index out of range");
    const double F = s.speeds[static_cast<std::size_t>(k)] / s.params.u;
    return s.params.u * F * (1.0 - F) / s.params.tau();
}

double inventory_variance(const ACSchedule& s, double t) {
    if (!(t >= 0.0 && t <= s.params.horizon))
        throw DomainError("time outside [0, T]");
    const auto fills = fill_probabilities(s);
    const int k = s.interval(t);
    CompensatedSum v;
    for (int j = 0; j < k; ++j)
        v.add(s.params.u * s.params.tau() * fills[j] * (1.0 - fills[j]));
    const double partial = t - s.params.horizon * k / s.params.intervals;
    v.add(s.params.u * partial * fills[k] * (1.0 - fills[k]));
    return v.value();
}

Table uncertainty_bands(const ACSchedule& s, std::vector<double> times) {
    fill_probabilities(s);  // saturation check
    if (times.empty())
        for (int k = 0; k <= s.params.intervals; ++k)
            times.push_back(s.params.horizon * k / s.params.intervals);

    const boost::math::normal unit;
    const double z05 = boost::math::quantile(unit, 0.95);
    const double z25 = boost::math::quantile(unit, 0.75);
    const double z005 = boost::math::quantile(unit, 0.995);

    Table t;
    t.columns = {"t", "mean_Q", "std_Q", "q05", "q25", "q75", "q95",
                 "mean_speed", "std_speed", "q005", "q995", "det_Q"};
    for (double time : times) {
        if (!(time >= 0.0 && time <= s.params.horizon))
            throw DomainError("band time outside [0, T]");
        const double mean = s.scheduled_inventory(time);
        const double sd = std::sqrt(inventory_variance(s, time));
        const int k = s.interval(time);
        // Remaining inventory falls when buys exceed the mean, hence the band is symmetric.
        t.add_row({time, mean, sd, mean - z05 * sd, mean - z25 * sd, mean + z25 * sd, mean + z05 * sd,
                   s.speeds[static_cast<std::size_t>(k)], std::sqrt(speed_variance(s, k)),
                   mean - z005 * sd, mean + z005 * sd, s.det_inventory(time)});
    }
    return t;
}

BandValidation validate_bands(const ACSchedule& s, std::size_t paths, std::uint64_t seed,
                              unsigned threads) {
    if (paths < 2)
        throw DomainError("validate_bands needs at least 2 paths");
    const auto fills = fill_probabilities(s);
    const int per = integral_count(s.params.per_interval(), "u tau");
    const int K = s.params.intervals;
    const double tau = s.params.tau();

    // counts[i * K + k]: buys of path i in interval k.
    std::vector<int> counts(paths * static_cast<std::size_t>(K));
    parallel_for(paths, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = stream_rng(seed, i);
            for (int k = 0; k < K; ++k) {
                std::binomial_distribution<int> draw(per, fills[k]);
                counts[i * K + k] = draw(rng);
            }
        }
    });

    const boost::math::normal unit;
    const double z90 = boost::math::quantile(unit, 0.95);
    const double n_paths = static_cast<double>(paths);

    BandValidation out;
    out.paths = paths;
    std::vector<double> remaining(paths, s.params.q_star);
    std::vector<double> speed(paths);
    std::size_t inside_total = 0;
    for (int k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < paths; ++i) {
            const int c = counts[i * K + k];
            speed[i] = c / tau;
            remaining[i] -= c;
        }
        const auto sm = sample_moments(speed);
        SpeedCheck sc;
        sc.interval = k;
        sc.pred_mean = s.speeds[k];
        sc.pred_var = speed_variance(s, k);
        sc.emp_mean = sm.mean;
        sc.emp_var = sm.variance;
        sc.z_mean = (sm.mean - sc.pred_mean) / std::sqrt(sc.pred_var / n_paths);
        sc.var_ratio = sm.variance / sc.pred_var;
        out.speed.push_back(sc);

        const double t = s.params.horizon * (k + 1) / K;
        CheckpointCheck cc;
        cc.interval_end = k + 1;
        cc.time = t;
        cc.pred_mean = s.scheduled_inventory(t);
        cc.pred_var = inventory_variance(s, t);
        const auto im = sample_moments(remaining);
        cc.emp_mean = im.mean;
        cc.emp_var = im.variance;
        cc.z_mean = (im.mean - cc.pred_mean) / std::sqrt(cc.pred_var / n_paths);
        cc.var_ratio = im.variance / cc.pred_var;
        const double half = z90 * std::sqrt(cc.pred_var);
        std::size_t inside = 0;
        for (double r : remaining)
            if (r >= cc.pred_mean - half && r <= cc.pred_mean + half)
                ++inside;
        cc.coverage90 = inside / n_paths;
        inside_total += inside;
        out.inventory.push_back(cc);
    }
    out.pooled_coverage = inside_total / (n_paths * K);
    out.horizon_coverage = out.inventory.back().coverage90;
    return out;
}

Table validation_table(const BandValidation& v) {
    Table t;
    t.columns = {"k", "t", "pred_mean", "pred_var", "emp_mean", "emp_var", "z_mean", "var_ratio", "coverage90"};
    for (const auto& c : v.inventory)
        t.add_row({static_cast<std::int64_t>(c.interval_end), c.time, c.pred_mean, c.pred_var, c.emp_mean,
                   c.emp_var, c.z_mean, c.var_ratio, c.coverage90});
    return t;
}

} // namespace sigtrade::ac
