/**
 * @file gain_models.hpp
 * @brief Statistical environment of a threshold trader: the quantile map
 *        p -> threshold, the gain map g(p) = E[dP 1{S >= threshold(p)}] and
 *        samplers of (signal, price change) pairs.
 *
 * Two kinds of model are provided:
 *   - LinearUniform: S ~ U[-1/2, 1/2), dP = a*S + eps with eps ~ N(0, noise^2).
 *     Then threshold(p) = 1/2 - p and g(p) = (a/2) p (1 - p), i.e. the quadratic
 *     gain with scale G = a/2.
 *   - Empirical: tables estimated from user supplied (signal, price change)
 *     rows on a uniform 1001-knot p-grid, linearly interpolated.
 */

#pragma once

#include "sigtrade/common.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sigtrade::gain {

enum class GainKind { LinearUniform, Empirical };

struct SignalDraw {
    double signal = 0.0;
    double price_change = 0.0;
};

/// Absolute gain G(p) = g(p)/p sampled on a coarse grid, with the verdict of
/// the "well designed signal" check (G non-increasing in p up to noise).
struct MonotonicityReport {
    std::vector<double> p;
    std::vector<double> absolute_gain;
    std::vector<double> standard_error;
    bool non_increasing = true;
};

/// Number of knots of the empirical p-grid.
inline constexpr std::size_t kEmpiricalKnots = 1001;
/// Minimum number of rows accepted by empirical_from_samples.
inline constexpr std::size_t kMinEmpiricalRows = 1000;

class GainModel {
public:
    /// Linear conditional mean E[dP | S] = slope * S with S uniform on [-1/2, 1/2).
    static GainModel linear_uniform(double slope, double noise_sd = 0.0);
    /// Same model parameterised by the gain scale G (slope = 2G).
    static GainModel quadratic(double scale, double noise_sd = 0.0);

    GainKind kind() const { return kind_; }
    bool is_quadratic() const { return kind_ == GainKind::LinearUniform; }

    double slope() const { return slope_; }
    /// G in g(p) = G p (1-p); LinearUniform only.
    double scale() const;
    double noise_sd() const { return noise_sd_; }

    /// g(p). Throws DomainError outside [0, 1].
    double gain(double p) const;
    /// Threshold such that P(S >= threshold) = p. Throws DomainError outside [0, 1].
    double threshold(double p) const;
    /// G(p) = g(p)/p, extended by continuity at p = 0.
    double absolute_gain(double p) const;

    /// True when g(1-p) = g(p) on the evaluation grid.
    bool symmetric(double tol = 1e-12) const;

    bool has_sampler() const;
    /// One i.i.d. draw. Empirical models resample the stored (centered) rows.
    SignalDraw sample(Rng& rng) const;

    /// Empirical only: tables on the uniform p-grid.
    std::span<const double> quantile_table() const;
    std::span<const double> gain_table() const;
    const MonotonicityReport& monotonicity() const;
    /// False when the absolute gain is not non-increasing in p.
    bool well_designed() const;
    /// Empirical only: the raw price-change mean was significantly non-zero.
    bool drift_warning() const;
    std::size_t sample_count() const;

    nlohmann::json to_json() const;
    static GainModel from_json(const nlohmann::json& j);

private:
    struct EmpiricalData;
    friend GainModel empirical_from_samples(std::span<const SignalDraw> rows);

    GainKind kind_ = GainKind::LinearUniform;
    double slope_ = 0.0;
    double noise_sd_ = 0.0;
    std::shared_ptr<const EmpiricalData> empirical_;
};

/// Builds an Empirical model. Price changes are centered on their sample mean
/// so that g(1) = 0 holds exactly; a significant raw mean sets drift_warning().
/// Throws DomainError on fewer than kMinEmpiricalRows rows or a constant signal.
GainModel empirical_from_samples(std::span<const SignalDraw> rows);

/// Reads `signal,price_change` rows (header row required).
std::vector<SignalDraw> read_samples_csv(const std::filesystem::path& path);
std::vector<SignalDraw> parse_samples_csv(std::istream& in);

} // namespace sigtrade::gain
