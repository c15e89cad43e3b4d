#include "sigtrade/iab.hpp"

#include "sigtrade/dp_bench.hpp"
#include "sigtrade/gain_models.hpp"
#include "sigtrade/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sigtrade::iab {

namespace {

void validate(const FillRateField& f) {
    if (!f.rate)
        throw DomainError("fill-rate field has no callable");
    if (!(f.horizon > 0.0) || !std::isfinite(f.horizon))
        throw DomainError("fill-rate field horizon must be positive");
    if (f.scale < 1)
        throw DomainError("fill-rate field scale N must be >= 1");
    if (!(f.q_star > 0.0) || !std::isfinite(f.q_star))
        throw DomainError("fill-rate field q_star must be positive");
}

struct State {
    double mean;
    double var;
};

// Derivative of (mean, variance) in share units.
State derivative(const FillRateField& f, double t, const State& s, VarianceMode mode) {
    const double n = f.scale;
    const double q = std::clamp(s.mean / n, 0.0, f.q_star);
    const double F = f(t, q);
    State d{n * F / f.horizon, n * F * (1.0 - F) / f.horizon};
    if (mode == VarianceMode::Linearized && f.depends_on_q) {
        const double h = 1e-6 * std::max(1.0, f.q_star);
        const double lo = std::max(0.0, q - h);
        const double hi = std::min(f.q_star, q + h);
        const double slope = (f(t, hi) - f(t, lo)) / (hi - lo);
        d.var += 2.0 * slope / f.horizon * s.var;
    }
    return d;
}

// j T / N, with the last point pinned to T.
double lattice_time(const FillRateField& f, int j) {
    return j >= f.scale ? f.horizon : f.horizon * j / f.scale;
}

} // namespace

double FillRateField::operator()(double t, double q) const {
    const double v = rate(t, q);
    if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "fill rate " << v << " outside [0, 1] at t=" << t << ", q=" << q;
        throw FieldContractError(msg.str());
    }
    return v;
}

FillRateField constant_field(double p, int scale, double q_star, double horizon) {
    if (!(p >= 0.0 && p <= 1.0))
        throw FieldContractError("constant fill rate outside [0, 1]");
    FillRateField f;
    f.rate = [p](double, double) { return p; };
    f.horizon = horizon;
    f.scale = scale;
    f.q_star = q_star;
    validate(f);
    return f;
}

FillRateField deterministic_pace_field(double q_star, int scale, double horizon) {
    FillRateField f;
    f.rate = [q_star, horizon](double t, double q) {
        const double left = 1.0 - t / horizon;
        if (left <= 0.0)
            return q < q_star ? 1.0 : 0.0;
        return clamp_unit((q_star - q) / left);
    };
    f.horizon = horizon;
    f.scale = scale;
    f.q_star = q_star;
    f.depends_on_q = true;
    validate(f);
    return f;
}

int default_euler_steps(const FillRateField& field) {
    const double per_time = std::ceil(1000.0 * field.horizon);
    return std::max(field.scale, static_cast<int>(per_time));
}

std::vector<double> euler_sde(const FillRateField& field, int steps, Rng& rng, EulerBoundary boundary) {
    validate(field);
    if (steps < default_euler_steps(field))
        throw DomainError("euler_sde needs steps >= max(N, 1000 T)");
    const double dt = field.horizon / steps;
    const double drift_dt = dt / field.horizon;
    const double noise_dt = std::sqrt(drift_dt / field.scale);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> path(static_cast<std::size_t>(steps) + 1, 0.0);
    CompensatedSum q;
    for (int k = 0; k < steps; ++k) {
        const double F = field(k * dt, std::clamp(q.value(), 0.0, field.q_star));
        const double z = gauss(rng);
        q.add(F * drift_dt);
        q.add(std::sqrt(F * (1.0 - F)) * noise_dt * z);
        if (boundary == EulerBoundary::ClampState) {
            const double c = std::clamp(q.value(), 0.0, field.q_star);
            q = CompensatedSum{};
            q.add(c);
        }
        path[static_cast<std::size_t>(k) + 1] = q.value();
    }
    return path;
}

std::vector<Moments> gaussian_moments(const FillRateField& field, const std::vector<double>& times,
                                      VarianceMode mode, int substeps) {
    validate(field);
    if (substeps < 1)
        throw DomainError("substeps must be >= 1");
    double t_max = 0.0;
    for (double t : times) {
        if (!(t >= 0.0 && t <= field.horizon))
            throw DomainError("moment time outside [0, T]");
        t_max = std::max(t_max, t);
    }

    // Segment ends: lattice points, field breakpoints and the requested times.
    std::vector<double> knots{0.0};
    for (int j = 1; j <= field.scale; ++j)
        knots.push_back(lattice_time(field, j));
    for (double b : field.breakpoints)
        if (b > 0.0 && b < field.horizon)
            knots.push_back(b);
    knots.insert(knots.end(), times.begin(), times.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    std::vector<State> at_sorted;
    at_sorted.reserve(sorted.size());

    State s{0.0, 0.0};
    std::size_t next = 0;
    while (next < sorted.size() && sorted[next] <= 0.0) {
        at_sorted.push_back(s);
        ++next;
    }
    for (std::size_t i = 0; i + 1 < knots.size() && next < sorted.size() && knots[i] < t_max; ++i) {
        const double a = knots[i];
        const double b = knots[i + 1];
        const double h = (b - a) / substeps;
        for (int k = 0; k < substeps; ++k) {
            const double t0 = a + k * h;
            const double t1 = k + 1 == substeps ? b : t0 + h;
            // Left limit at the segment end so jumps at b are not seen.
            const double t1_eval = k + 1 == substeps ? std::nextafter(b, a) : t1;
            const double th = t0 + 0.5 * (t1 - t0);
            const double dt = t1 - t0;
            const State k1 = derivative(field, t0, s, mode);
            const State k2 = derivative(field, th, {s.mean + 0.5 * dt * k1.mean, s.var + 0.5 * dt * k1.var}, mode);
            const State k3 = derivative(field, th, {s.mean + 0.5 * dt * k2.mean, s.var + 0.5 * dt * k2.var}, mode);
            const State k4 = derivative(field, t1_eval, {s.mean + dt * k3.mean, s.var + dt * k3.var}, mode);
            s.mean += dt / 6.0 * (k1.mean + 2.0 * k2.mean + 2.0 * k3.mean + k4.mean);
            s.var += dt / 6.0 * (k1.var + 2.0 * k2.var + 2.0 * k3.var + k4.var);
            s.var = std::max(s.var, 0.0);
        }
        while (next < sorted.size() && sorted[next] <= b) {
            at_sorted.push_back(s);
            ++next;
        }
    }

    std::vector<Moments> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto idx = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        out.push_back({at_sorted[idx].mean, at_sorted[idx].var});
    }
    return out;
}

Moments gaussian_moments(const FillRateField& field, double t, VarianceMode mode) {
    return gaussian_moments(field, std::vector<double>{t}, mode).front();
}

EulerSummary euler_ensemble(const FillRateField& field, int steps, std::size_t paths,
                            const std::vector<double>& times, std::uint64_t seed, unsigned threads,
                            EulerBoundary boundary) {
    validate(field);
    if (paths < 2)
        throw DomainError("euler_ensemble needs at least 2 paths");
    std::vector<std::size_t> index;
    for (double t : times) {
        if (!(t >= 0.0 && t <= field.horizon))
            throw DomainError("checkpoint time outside [0, T]");
        index.push_back(static_cast<std::size_t>(std::lround(t / field.horizon * steps)));
    }

    std::vector<std::vector<double>> values(times.size(), std::vector<double>(paths));
    parallel_for(paths, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = stream_rng(seed, i);
            const auto path = euler_sde(field, steps, rng, boundary);
            for (std::size_t c = 0; c < index.size(); ++c)
                values[c][i] = field.scale * path[index[c]];
        }
    });

    EulerSummary out;
    for (std::size_t c = 0; c < times.size(); ++c) {
        out.times.push_back(field.horizon * static_cast<double>(index[c]) / steps);
        out.inventory.push_back(sample_moments(values[c]));
    }
    return out;
}

IabReport verify_iab(const FillRateField& field, const VerifyOptions& opts) {
    validate(field);
    const int n_steps = field.scale;
    const double target_real = field.q_star * n_steps;
    const int target = static_cast<int>(std::lround(target_real));
    if (std::abs(target_real - target) > 1e-9 || target < 1 || target > n_steps)
        throw DomainError("q_star * N must be an integer in [1, N]");
    if (opts.paths < 2)
        throw DomainError("verify_iab needs at least 2 paths");

    std::vector<double> times = opts.times;
    if (times.empty())
        for (int i = 1; i <= 9; ++i)
            times.push_back(field.horizon * i / 10.0);

    std::vector<int> steps;
    std::vector<double> lattice_times;
    for (double t : times) {
        if (!(t > 0.0 && t <= field.horizon))
            throw DomainError("checkpoint time outside (0, T]");
        const int n = static_cast<int>(std::lround(t / field.horizon * n_steps));
        steps.push_back(n);
        lattice_times.push_back(lattice_time(field, n));
    }

    const double T = field.horizon;
    auto grid = dp::tabulate_policy(
        [&](int n, int q) { return field(T * n / n_steps, static_cast<double>(q) / n_steps); },
        n_steps, target, false);
    // Only fills matter here; the signal model just realises the thresholds.
    sim::SimConfig cfg(gain::GainModel::linear_uniform(1.0, 0.0), std::move(grid));
    cfg.paths = opts.paths;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    cfg.force_completion = false;
    cfg.checkpoints = steps;
    const auto ens = sim::run_ensemble(cfg);

    const auto pred = gaussian_moments(field, lattice_times, opts.mode);
    IabReport report;
    report.paths = opts.paths;
    for (std::size_t c = 0; c < steps.size(); ++c) {
        const auto& emp = ens.checkpoints[c].inventory;
        CheckpointComparison row;
        row.step = steps[c];
        row.time = lattice_times[c];
        row.pred_mean = pred[c].mean;
        row.pred_var = pred[c].variance;
        row.emp_mean = emp.mean;
        row.emp_var = emp.variance;
        row.z_mean = (emp.mean - pred[c].mean) / std::sqrt(pred[c].variance / static_cast<double>(opts.paths));
        row.var_ratio = emp.variance / pred[c].variance;
        row.skewness = emp.skewness;
        row.excess_kurtosis = emp.excess_kurtosis;
        row.jarque_bera = emp.jarque_bera();
        report.rows.push_back(row);
    }
    return report;
}

Table report_table(const IabReport& report) {
    Table t;
    t.columns = {"checkpoint", "pred_mean", "pred_var", "emp_mean", "emp_var", "z_mean", "var_ratio",
                 "t", "skewness", "excess_kurtosis", "jarque_bera"};
    for (const auto& r : report.rows)
        t.add_row({static_cast<std::int64_t>(r.step), r.pred_mean, r.pred_var, r.emp_mean, r.emp_var,
                   r.z_mean, r.var_ratio, r.time, r.skewness, r.excess_kurtosis, r.jarque_bera});
    return t;
}

} // namespace sigtrade::iab
