#include "doctest.h"

#include "sigtrade/common.hpp"

#include <atomic>
#include <vector>

using namespace sigtrade;

TEST_CASE("stream_rng is a pure function of seed and index") {
    auto a = stream_rng(42, 7);
    auto b = stream_rng(42, 7);
    auto c = stream_rng(42, 8);
    auto d = stream_rng(43, 7);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("parallel_for visits every index exactly once") {
    for (unsigned threads : {0u, 1u, 3u, 7u, 64u}) {
        for (std::size_t count : {std::size_t{0}, std::size_t{1}, std::size_t{5}, std::size_t{1000}}) {
            std::vector<std::atomic<int>> hits(count);
            parallel_for(count, threads, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) hits[i]++;
            });
            for (auto& h : hits) CHECK(h.load() == 1);
        }
    }
}

TEST_CASE("sample moments of a small hand-computed set") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 10.0};
    const auto m = sample_moments(xs);
    CHECK(m.count == 5);
    CHECK(m.mean == doctest::Approx(4.0));
    // deviations -3 -2 -1 0 6: sum sq = 50
    CHECK(m.variance == doctest::Approx(12.5));
    const double m2 = 10.0, m3 = (-27 - 8 - 1 + 216) / 5.0, m4 = (81 + 16 + 1 + 1296) / 5.0;
    CHECK(m.skewness == doctest::Approx(m3 / std::pow(m2, 1.5)));
    CHECK(m.excess_kurtosis == doctest::Approx(m4 / (m2 * m2) - 3.0));
    CHECK(m.standard_error() == doctest::Approx(std::sqrt(12.5 / 5.0)));
}

TEST_CASE("sample moments of an empty or constant set") {
    CHECK(sample_moments({}).count == 0);
    const std::vector<double> same(10, 3.0);
    const auto m = sample_moments(same);
    CHECK(m.variance == 0.0);
    CHECK(m.skewness == 0.0);
}

TEST_CASE("compensated sum keeps the small terms") {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
}

TEST_CASE("clamp_unit") {
    CHECK(clamp_unit(-0.1) == 0.0);
    CHECK(clamp_unit(1.5) == 1.0);
    CHECK(clamp_unit(0.25) == 0.25);
}
