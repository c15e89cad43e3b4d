#include "doctest.h"

#include "oracles.hpp"
#include "sigtrade/ac_bridge.hpp"

using namespace sigtrade;
using namespace sigtrade::ac;

namespace {

ACParams reference_params() {
    ACParams p;  // T=1, Q*=100, eta=gamma=sigma=1, lambda=3, K=20, u=1e4
    return p;
}

std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return i;
    FAIL("missing column " << name);
    return 0;
}

double num(const Table& t, std::size_t row, const std::string& name) {
    return std::get<double>(t.rows[row][column(t, name)]);
}

} // namespace

TEST_CASE("kappas for the reference parameters") {
    const auto k = compute_kappas(reference_params());
    CHECK(k.eta_tilde == doctest::Approx(0.975).epsilon(1e-15));
    CHECK(k.kappa_tilde == doctest::Approx(std::sqrt(3.0 / 0.975)).epsilon(1e-15));
    CHECK(k.kappa == doctest::Approx(std::acosh(1.0 + 0.5 * std::pow(k.kappa_tilde * 0.05, 2)) / 0.05).epsilon(1e-12));
    CHECK(k.kappa < k.kappa_tilde);
}

TEST_CASE("risk neutral limit") {
    auto p = reference_params();
    p.lambda_risk = 0.0;
    const auto s = schedule(p);
    CHECK(s.kappas.kappa_tilde == 0.0);
    CHECK(s.kappas.kappa == 0.0);
    for (double nu : s.speeds) CHECK(nu == doctest::Approx(100.0).epsilon(1e-15));
    CHECK(s.det_inventory(0.25) == doctest::Approx(75.0));
}

TEST_CASE("kappa tends to kappa-tilde as tau shrinks") {
    auto p = reference_params();
    p.intervals = 10000;
    p.u = 1e6;
    const auto k = compute_kappas(p);
    CHECK(std::abs(k.kappa / k.kappa_tilde - 1.0) < 1e-6);
}

TEST_CASE("parameter validation") {
    auto p = reference_params();
    p.gamma_perm = 40.1;  // eta - gamma tau / 2 < 0
    CHECK_THROWS_AS(compute_kappas(p), DomainError);
    p = reference_params();
    p.u = 10.0;  // u tau = 0.5
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = reference_params();
    p.intervals = 0;
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("property: schedules conserve mass") {
    oracle::Gen gen(41);
    for (int i = 0; i < 300; ++i) {
        ACParams p;
        p.horizon = gen.real(0.1, 10.0);
        p.q_star = gen.real(1.0, 1e5);
        p.sigma = gen.real(0.0, 3.0);
        p.eta = gen.real(0.1, 5.0);
        p.gamma_perm = gen.real(0.0, 1.0);
        p.lambda_risk = gen.real(0.0, 10.0);
        p.intervals = gen.integer(1, 200);
        p.u = 1e9;
        if (p.eta - p.gamma_perm * p.tau() / 2 <= 0) continue;
        const auto s = schedule(p);
        CompensatedSum mass;
        for (double nu : s.speeds) {
            CHECK(nu > 0.0);
            mass.add(nu * p.tau());
        }
        CHECK(std::abs(mass.value() / p.q_star - 1.0) < 1e-10);
        CHECK(s.det_inventory(0.0) == doctest::Approx(p.q_star));
        CHECK(std::abs(s.det_inventory(p.horizon)) < 1e-9 * p.q_star);
        CHECK(std::abs(s.scheduled_inventory(p.horizon)) < 1e-9 * p.q_star);
    }
}

TEST_CASE("risk aversion front-loads the schedule") {
    auto lo = reference_params();
    lo.lambda_risk = 0.5;
    const auto a = schedule(lo);
    const auto b = schedule(reference_params());
    CHECK(b.speeds.front() > a.speeds.front());
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) CHECK(b.det_inventory(t) < a.det_inventory(t));
    CHECK(b.det_inventory(0.5) < 50.0);
    for (std::size_t k = 1; k < b.speeds.size(); ++k) CHECK(b.speeds[k] < b.speeds[k - 1]);
}

TEST_CASE("fill field scaling and saturation") {
    auto p = reference_params();
    auto s = schedule(p);
    const double top = *std::max_element(s.speeds.begin(), s.speeds.end());
    s.params.u = 2.0 * top;
    s.params.intervals = 20;
    const auto fills = fill_probabilities(s);
    CHECK(*std::max_element(fills.begin(), fills.end()) == doctest::Approx(0.5));

    auto flat = reference_params();
    flat.lambda_risk = 0.0;
    flat.u = 400.0;
    const auto f = fill_field(schedule(flat));
    for (double t : {0.0, 0.33, 0.999, 1.0}) CHECK(f(t, 0.0) == doctest::Approx(0.25));
    CHECK(f.scale == 400);
    CHECK_FALSE(f.depends_on_q);

    auto slow = reference_params();
    slow.u = 150.0;
    try {
        fill_probabilities(schedule(slow));
        FAIL("expected saturation");
    } catch (const SaturationError& e) {
        CHECK(e.minimal_u == doctest::Approx(top));
    }
    CHECK_THROWS_AS(fill_field(std::vector<double>{10.0}, 1.0, 10.5), DomainError);
}

TEST_CASE("fill field at the start equals nu_0 / u") {
    const auto s = schedule(reference_params());
    const auto f = fill_field(s);
    CHECK(f(0.0, 0.0) == s.speeds[0] / 1e4);
    CHECK(f(0.05, 0.0) == s.speeds[1] / 1e4);
    CHECK(f(std::nextafter(0.05, 0.0), 0.0) == s.speeds[0] / 1e4);
    CHECK(f.breakpoints.size() == 19);
}

TEST_CASE("speed and inventory variances") {
    ACParams p;
    p.q_star = 50.0;
    p.lambda_risk = 0.0;
    p.intervals = 10;
    p.u = 100.0;
    const auto s = schedule(p);
    CHECK(speed_variance(s, 3) == doctest::Approx(250.0));
    CHECK(std::sqrt(speed_variance(s, 3)) == doctest::Approx(15.81).epsilon(1e-3));
    CHECK(inventory_variance(s, 0.0) == 0.0);
    CHECK(inventory_variance(s, 1.0) == doctest::Approx(100.0 * 0.25));
    CHECK(inventory_variance(s, 0.35) == doctest::Approx(35.0 * 0.25));
    CHECK_THROWS_AS(speed_variance(s, 10), DomainError);
}

TEST_CASE("horizon variance equals the diffusion moment integration") {
    const auto s = schedule(reference_params());
    const double bands = inventory_variance(s, 1.0);
    const double diffusion = iab::gaussian_moments(fill_field(s), 1.0).variance;
    CHECK(std::abs(bands - diffusion) <= 1e-9 * bands);
    const double mean = iab::gaussian_moments(fill_field(s), 1.0).mean;
    CHECK(mean == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("band table") {
    const auto s = schedule(reference_params());
    const auto t = uncertainty_bands(s);
    CHECK(t.columns.size() == 12);
    CHECK(t.columns[0] == "t");
    CHECK(t.rows.size() == 21);
    CHECK(num(t, 0, "mean_Q") == 100.0);
    CHECK(num(t, 0, "std_Q") == 0.0);
    CHECK(num(t, 0, "q05") == num(t, 0, "q95"));
    CHECK(std::abs(num(t, 20, "mean_Q")) < 1e-9);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double m = num(t, r, "mean_Q");
        CHECK(num(t, r, "q95") - m == doctest::Approx(m - num(t, r, "q05")).epsilon(1e-12));
        CHECK(num(t, r, "q75") - m == doctest::Approx(m - num(t, r, "q25")).epsilon(1e-12));
        CHECK(num(t, r, "q95") - m == doctest::Approx(1.6448536269514722 * num(t, r, "std_Q")).epsilon(1e-12));
    }
    const auto custom = uncertainty_bands(s, {0.5});
    CHECK(num(custom, 0, "det_Q") == doctest::Approx(s.det_inventory(0.5)));
}

TEST_CASE("Monte Carlo under a constant fill rate") {
    ACParams p;
    p.lambda_risk = 0.0;
    p.u = 400.0;
    const auto v = validate_bands(schedule(p), 100000, 17, 0);
    for (const auto& c : v.inventory) {
        CHECK(c.var_ratio >= 0.95);
        CHECK(c.var_ratio <= 1.05);
        CHECK(std::abs(c.z_mean) < 4.0);
    }
}

TEST_CASE("Monte Carlo with the reference parameters") {
    const auto s = schedule(reference_params());
    const auto v = validate_bands(s, 100000, 5, 0);
    REQUIRE(v.inventory.size() == 20);
    for (const auto& c : v.inventory) {
        CHECK(std::abs(c.emp_mean - c.pred_mean) < 3.0 * std::sqrt(c.emp_var / v.paths) + 1e-9);
        CHECK(c.var_ratio == doctest::Approx(1.0).epsilon(0.03));
    }
    for (const auto& sp : v.speed) CHECK(sp.var_ratio == doctest::Approx(1.0).epsilon(0.03));
    CHECK(v.pooled_coverage >= 0.885);
    CHECK(v.pooled_coverage <= 0.915);
    CHECK(v.horizon_coverage >= 0.885);
    CHECK(v.horizon_coverage <= 0.915);
    CHECK(validation_table(v).rows.size() == 20);
}

TEST_CASE("band validation needs an integral count per interval") {
    auto p = reference_params();
    p.u = 1e4 + 0.5;
    CHECK_THROWS_AS(validate_bands(schedule(p), 10, 1), DomainError);
}
