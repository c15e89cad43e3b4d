/**
 * @file common.hpp
 * @brief Error types, random-number plumbing and small numeric helpers shared
 *        by every sigtrade module.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace sigtrade {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a meaningful result
/// (degenerate ratio, failed calibration, unrealisable schedule, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Random engine used everywhere. One engine per path or per thread, never shared.
using Rng = std::mt19937_64;

/// Engine for stream `index` of a run seeded with `seed`. The mapping is a pure
/// function of (seed, index), so serial and parallel runs draw identical numbers.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

/// Splits [0, count) into contiguous blocks and runs `body(begin, end)` on up
/// to `threads` workers. `threads == 0` means hardware concurrency.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

inline double clamp_unit(double p) {
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Sample moments of a set of observations (two-pass, compensated).
struct SampleMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;        ///< unbiased (n-1)
    double skewness = 0.0;        ///< standardized third central moment
    double excess_kurtosis = 0.0; ///< standardized fourth central moment minus 3

    double standard_error() const;
    /// Jarque-Bera statistic n/6 (S^2 + K^2/4); ~chi2(2) under normality.
    double jarque_bera() const;
};

SampleMoments sample_moments(std::span<const double> xs);

} // namespace sigtrade
