/**
 * @file threshold_policies.hpp
 * @brief Closed-form approximate buy-probability policies.
 *
 * Every policy is a function of the deterministic pace
 *   p_det = (q* - q) / (1 - t)
 * and of the remaining horizon h = N (1 - t), measured in opportunities.
 *
 * Unconstrained family (Lagrangian without the [0,1] bound), loss factor
 * shifted by x opportunities:
 *
 *   p = 1/2 + (p_det - 1/2) / [ (1 + ln(h + x - 1) / h) (1 - 1/(h + x)) ]
 *
 * Constrained family (KKT with the bound active near the borders):
 *
 *   p = 1/2 - (lambda/2) / (1 - 1/(h + x))
 *
 * where lambda solves, with s = sign(1 - 2 p_det),
 *
 *   1 - 2 p_det - (s/h)(1 - x (1 - |lambda|))
 *       = lambda (1 + ln[(h + x - 1)(1 - |lambda|)/|lambda|] / h)
 *
 * by a few fixed-point iterations from lambda_0 = 1 - 2 p_det.
 * x = 0 gives the raw formulas; the calibrated shifts make both families
 * reproduce the exact three-step optimum p = 3/8 at p_det = 1/3.
 */

#pragma once

#include "sigtrade/common.hpp"
#include "sigtrade/dp_bench.hpp"

#include <string>
#include <string_view>

namespace sigtrade::policy {

/// Normalized state of the trader.
struct PolicyInput {
    double t = 0.0;       ///< elapsed fraction of the horizon, in [0, 1)
    double q = 0.0;       ///< shares bought / N
    double q_star = 0.0;  ///< target / N
    int steps = 2;        ///< N

    double horizon() const { return static_cast<double>(steps) * (1.0 - t); }
    /// Lattice state (n, Q) of an N-step, Q*-target problem.
    static PolicyInput from_lattice(int n, int q, int steps, int target);
};

/// Loss-factor shifts, in opportunities (shift x N).
struct CalibrationConstants {
    double tau_unconstrained = 3.5723;
    double tau_constrained = 1.3445;
};

/// Thrown by the raw formulas when h <= 1 (log argument not positive).
class EndOfHorizonError : public DomainError {
public:
    using DomainError::DomainError;
};

/// clamp((q* - q) / (1 - t), 0, 1). Throws DomainError for t >= 1.
double p_deterministic(const PolicyInput& in);

/// Unconstrained closed form with shift x, clamped to [0, 1].
/// Throws EndOfHorizonError unless h + x > 1.
double unconstrained_closed_form(double p_det, double horizon, double shift);

struct LambdaSolution {
    double lambda = 0.0;
    bool saturated = false;  ///< |lambda| reached 1: the policy sits on a border
};

/// Fixed-point iteration for the constrained multiplier, `iters` times from
/// 1 - 2 p_det. lambda_0 = 0 short-circuits to 0.
LambdaSolution solve_lambda(double p_det, double horizon, double shift, int iters = 4);

/// Constrained closed form with shift x, clamped; exactly 0 or 1 when saturated.
/// Throws EndOfHorizonError unless h + x > 1.
double constrained_closed_form(double p_det, double horizon, double shift, int iters = 4);

double p_unconstrained_raw(const PolicyInput& in);
double p_unconstrained_calibrated(const PolicyInput& in, const CalibrationConstants& c = {});
double p_constrained_raw(const PolicyInput& in);
double p_constrained_calibrated(const PolicyInput& in, const CalibrationConstants& c = {});

inline constexpr double kDefaultBorderWidth = 0.15;

/// Constrained form when 1/2 - |p_det - 1/2| < border_width, unconstrained otherwise.
double p_mixed(const PolicyInput& in, const CalibrationConstants& c = {},
               double border_width = kDefaultBorderWidth);

enum class PolicyVariant {
    Deterministic,
    UnconstrainedRaw,
    ConstrainedRaw,
    UnconstrainedCalibrated,
    ConstrainedCalibrated,
    Mixed,
};

std::string_view to_string(PolicyVariant v);
/// Accepts the kebab-case names printed by to_string.
PolicyVariant parse_variant(std::string_view name);

struct PolicyOptions {
    CalibrationConstants constants{};
    double border_width = kDefaultBorderWidth;
};

/// Evaluates a variant; where a raw formula is out of its domain (h <= 1) the
/// clamped deterministic pace is returned instead.
double policy_probability(PolicyVariant v, const PolicyInput& in, const PolicyOptions& opts = {});

/// The variant as a policy on the (n, Q) lattice.
dp::LatticePolicy lattice_policy(PolicyVariant v, int steps, int target,
                                 const PolicyOptions& opts = {});

enum class ShiftVariant { Unconstrained, Constrained };

/// Shift x such that the variant yields 3/8 at h = 3, p_det = 1/3. Bisection
/// on (0, 100] to 1e-10, started on the first sign change of a coarse scan.
/// Throws NumericalError when no sign change exists.
double calibrate_shift(ShiftVariant variant, int lambda_iters = 4);

} // namespace sigtrade::policy
