#include "sigtrade/threshold_policies.hpp"

#include <array>
#include <cmath>

namespace sigtrade::policy {

namespace {

void require_log_domain(double horizon, double shift, const char* what) {
    if (!(horizon + shift - 1.0 > 0.0))
        throw EndOfHorizonError(std::string(what) + ": remaining horizon " + std::to_string(horizon) +
                                " is below the formula's domain");
}

// Same variant evaluated from (p_det, h); falls back to p_det where a raw form is undefined.
double probability_from_pace(PolicyVariant v, double p_det, double h, const PolicyOptions& opts) {
    const auto& c = opts.constants;
    switch (v) {
    case PolicyVariant::Deterministic:
        return p_det;
    case PolicyVariant::UnconstrainedRaw:
        return h > 1.0 ? unconstrained_closed_form(p_det, h, 0.0) : p_det;
    case PolicyVariant::ConstrainedRaw:
        return h > 1.0 ? constrained_closed_form(p_det, h, 0.0) : p_det;
    case PolicyVariant::UnconstrainedCalibrated:
        return h + c.tau_unconstrained > 1.0 ? unconstrained_closed_form(p_det, h, c.tau_unconstrained)
                                             : p_det;
    case PolicyVariant::ConstrainedCalibrated:
        return h + c.tau_constrained > 1.0 ? constrained_closed_form(p_det, h, c.tau_constrained)
                                           : p_det;
    case PolicyVariant::Mixed:
        return 0.5 - std::abs(p_det - 0.5) < opts.border_width
                   ? probability_from_pace(PolicyVariant::ConstrainedCalibrated, p_det, h, opts)
                   : probability_from_pace(PolicyVariant::UnconstrainedCalibrated, p_det, h, opts);
    }
    throw DomainError("unknown policy variant");
}

constexpr std::array<std::pair<PolicyVariant, std::string_view>, 6> kNames{{
    {PolicyVariant::Deterministic, "deterministic"},
    {PolicyVariant::UnconstrainedRaw, "unconstrained-raw"},
    {PolicyVariant::ConstrainedRaw, "constrained-raw"},
    {PolicyVariant::UnconstrainedCalibrated, "unconstrained-calibrated"},
    {PolicyVariant::ConstrainedCalibrated, "constrained-calibrated"},
    {PolicyVariant::Mixed, "mixed"},
}};

} // namespace

PolicyInput PolicyInput::from_lattice(int n, int q, int steps, int target) {
    const double dn = static_cast<double>(steps);
    return {static_cast<double>(n) / dn, static_cast<double>(q) / dn,
            static_cast<double>(target) / dn, steps};
}

double p_deterministic(const PolicyInput& in) {
    if (!(in.t < 1.0)) throw DomainError("p_deterministic: t must be < 1");
    if (in.t < 0.0) throw DomainError("p_deterministic: t must be >= 0");
    return clamp_unit((in.q_star - in.q) / (1.0 - in.t));
}

double unconstrained_closed_form(double p_det, double horizon, double shift) {
    require_log_domain(horizon, shift, "unconstrained policy");
    const double denom = (1.0 + std::log(horizon + shift - 1.0) / horizon) * (1.0 - 1.0 / (horizon + shift));
    return clamp_unit(0.5 + (p_det - 0.5) / denom);
}

LambdaSolution solve_lambda(double p_det, double horizon, double shift, int iters) {
    if (!(horizon > 0.0)) throw DomainError("solve_lambda: horizon must be positive");
    if (!(p_det >= 0.0 && p_det <= 1.0)) throw DomainError("solve_lambda: p_det outside [0, 1]");
    require_log_domain(horizon, shift, "solve_lambda");
    const double lambda0 = 1.0 - 2.0 * p_det;
    if (lambda0 == 0.0) return {0.0, false};
    const double sign = lambda0 > 0.0 ? 1.0 : -1.0;
    auto saturated = [](double l) { return LambdaSolution{std::copysign(1.0, l), true}; };

    double lambda = lambda0;
    for (int i = 0; i < iters; ++i) {
        const double a = std::abs(lambda);
        if (a >= 1.0) return saturated(lambda);
        if (a == 0.0) return {0.0, false};
        const double denom = 1.0 + std::log((horizon + shift - 1.0) * (1.0 - a) / a) / horizon;
        if (!(denom > 0.0)) return saturated(lambda);
        const double numer = lambda0 - sign * (1.0 - shift * (1.0 - a)) / horizon;
        lambda = numer / denom;
    }
    if (std::abs(lambda) >= 1.0) return saturated(lambda);
    return {lambda, false};
}

double constrained_closed_form(double p_det, double horizon, double shift, int iters) {
    const auto sol = solve_lambda(p_det, horizon, shift, iters);
    if (sol.saturated) return sol.lambda > 0.0 ? 0.0 : 1.0;
    return clamp_unit(0.5 - 0.5 * sol.lambda / (1.0 - 1.0 / (horizon + shift)));
}

double p_unconstrained_raw(const PolicyInput& in) {
    return unconstrained_closed_form(p_deterministic(in), in.horizon(), 0.0);
}

double p_unconstrained_calibrated(const PolicyInput& in, const CalibrationConstants& c) {
    return unconstrained_closed_form(p_deterministic(in), in.horizon(), c.tau_unconstrained);
}

double p_constrained_raw(const PolicyInput& in) {
    return constrained_closed_form(p_deterministic(in), in.horizon(), 0.0);
}

double p_constrained_calibrated(const PolicyInput& in, const CalibrationConstants& c) {
    return constrained_closed_form(p_deterministic(in), in.horizon(), c.tau_constrained);
}

double p_mixed(const PolicyInput& in, const CalibrationConstants& c, double border_width) {
    const double p_det = p_deterministic(in);
    return 0.5 - std::abs(p_det - 0.5) < border_width ? p_constrained_calibrated(in, c)
                                                      : p_unconstrained_calibrated(in, c);
}

std::string_view to_string(PolicyVariant v) {
    for (const auto& [variant, name] : kNames)
        if (variant == v) return name;
    return "unknown";
}

PolicyVariant parse_variant(std::string_view name) {
    for (const auto& [variant, n] : kNames)
        if (n == name) return variant;
    throw DomainError("unknown policy variant '" + std::string(name) + "'");
}

double policy_probability(PolicyVariant v, const PolicyInput& in, const PolicyOptions& opts) {
    return probability_from_pace(v, p_deterministic(in), in.horizon(), opts);
}

dp::LatticePolicy lattice_policy(PolicyVariant v, int steps, int target, const PolicyOptions& opts) {
    const dp::Lattice lattice(steps, target);
    return [v, lattice, opts](int n, int q) {
        const int remaining = lattice.steps - n;
        const double p_det = clamp_unit(static_cast<double>(lattice.target - q) / remaining);
        return probability_from_pace(v, p_det, static_cast<double>(remaining), opts);
    };
}

double calibrate_shift(ShiftVariant variant, int lambda_iters) {
    constexpr double kHorizon = 3.0;
    constexpr double kPace = 1.0 / 3.0;
    constexpr double kTarget = 3.0 / 8.0;
    constexpr double kLow = 1e-9;
    constexpr double kHigh = 100.0;
    constexpr int kScan = 2000;
    constexpr double kTol = 1e-10;

    auto residual = [&](double x) {
        const double p = variant == ShiftVariant::Unconstrained
                             ? unconstrained_closed_form(kPace, kHorizon, x)
                             : constrained_closed_form(kPace, kHorizon, x, lambda_iters);
        return p - kTarget;
    };
    double a = kLow, fa = residual(a);
    for (int i = 1; i <= kScan; ++i) {
        const double b = kLow + (kHigh - kLow) * i / kScan;
        const double fb = residual(b);
        if (fa == 0.0) return a;
        if ((fa < 0.0) != (fb < 0.0)) {
            double lo = a, hi = b, flo = fa;
            while (hi - lo > kTol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = residual(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        a = b;
        fa = fb;
    }
    throw NumericalError("calibration failure: no sign change of the calibration condition on (0, 100]");
}

} // namespace sigtrade::policy
