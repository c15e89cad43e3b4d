#include "sigtrade/common.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace sigtrade {

Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x5eedu};
    return Rng(seq);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, count);
    if (workers <= 1) {
        body(0, count);
        return;
    }
    const std::size_t block = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * block;
        const std::size_t end = std::min(count, begin + block);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

double SampleMoments::standard_error() const {
    return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

double SampleMoments::jarque_bera() const {
    const double n = static_cast<double>(count);
    return n / 6.0 * (skewness * skewness + 0.25 * excess_kurtosis * excess_kurtosis);
}

SampleMoments sample_moments(std::span<const double> xs) {
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) return m;
    CompensatedSum s1;
    for (double x : xs) s1.add(x);
    const double n = static_cast<double>(xs.size());
    m.mean = s1.value() / n;
    CompensatedSum s2, s3, s4;
    for (double x : xs) {
        const double d = x - m.mean;
        const double d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    const double m2 = s2.value() / n;
    m.variance = xs.size() > 1 ? s2.value() / (n - 1.0) : 0.0;
    if (m2 > 0.0) {
        m.skewness = (s3.value() / n) / std::pow(m2, 1.5);
        m.excess_kurtosis = (s4.value() / n) / (m2 * m2) - 3.0;
    }
    return m;
}

} // namespace sigtrade
