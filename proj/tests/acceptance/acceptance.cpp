// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "cli_app.hpp"
#include "oracles.hpp"

#include "sigtrade/ac_bridge.hpp"
#include "sigtrade/dp_bench.hpp"
#include "sigtrade/gain_models.hpp"
#include "sigtrade/iab.hpp"
#include "sigtrade/market_sim.hpp"
#include "sigtrade/threshold_policies.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

using namespace sigtrade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > limit_s) {
        o.pass = false;
        o.detail << " [runtime " << secs << " s over " << limit_s << " s]";
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << name << " ("
              << std::fixed << std::setprecision(2) << secs << " s)" << std::defaultfloat << std::setprecision(6)
              << o.detail.str() << std::endl;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

int main() {
    const auto quad = gain::GainModel::quadratic(1.0);

    criterion(1, "DP closed forms on short horizons", 1.0, [&](Outcome& o) {
        for (auto [N, Q] : {std::pair{3, 1}, std::pair{3, 2}, std::pair{20, 10}, std::pair{57, 13}}) {
            const auto sol = dp::solve_dp(N, Q, quad);
            const auto& lat = sol.values.lattice();
            if (lat.feasible(N - 2, Q - 1)) {
                o.require(near(sol.values(N - 2, Q - 1), 0.25, 1e-12), "V(N-2,Q*-1)");
                o.require(near(sol.policy(N - 2, Q - 1), 0.5, 1e-12), "p(N-2,Q*-1)");
            }
            if (lat.feasible(N - 3, Q - 1)) {
                o.require(near(sol.values(N - 3, Q - 1), 0.390625, 1e-12), "V(N-3,Q*-1)");
                o.require(near(sol.policy(N - 3, Q - 1), 0.375, 1e-12), "p(N-3,Q*-1)");
            }
            if (Q >= 2 && lat.feasible(N - 3, Q - 2)) {
                o.require(near(sol.values(N - 3, Q - 2), 0.390625, 1e-12), "V(N-3,Q*-2)");
                o.require(near(sol.policy(N - 3, Q - 2), 0.625, 1e-12), "p(N-3,Q*-2)");
            }
        }
        o.detail << " V(0,0) for N=3,Q*=1: " << dp::solve_dp(3, 1, quad).optimal_value();
    });

    criterion(2, "mirror symmetry of V and p on full grids", 5.0, [&](Outcome& o) {
        double worst = 0.0;
        for (int N : {10, 50, 100})
            for (int Q : {N / 4, N / 2, 3 * N / 4}) {
                const auto rep = dp::check_symmetry(dp::solve_dp(N, Q, quad), quad, 1e-10);
                o.require(rep.applicable && rep.passed && rep.cells_checked > 0,
                          "N=" + std::to_string(N) + " Q*=" + std::to_string(Q));
                worst = std::max({worst, rep.max_value_gap, rep.max_policy_gap});
            }
        o.detail << " max gap " << worst;
    });

    criterion(3, "calibration constants", 1.0, [&](Outcome& o) {
        const double tu = policy::calibrate_shift(policy::ShiftVariant::Unconstrained);
        const double tc = policy::calibrate_shift(policy::ShiftVariant::Constrained);
        o.require(near(tu, 3.5723, 1e-3), "unconstrained shift");
        o.require(near(tc, 1.3445, 1e-3), "constrained shift");
        const policy::PolicyInput in{0.0, 0.0, 1.0 / 3.0, 3};
        const policy::CalibrationConstants c{tu, tc};
        const double pu = policy::p_unconstrained_calibrated(in, c);
        const double pc = policy::p_constrained_calibrated(in, c);
        o.require(near(pu, 0.375, 1e-6), "unconstrained p at h=3");
        o.require(near(pc, 0.375, 1e-6), "constrained p at h=3");
        const double pu4 = policy::p_unconstrained_calibrated(in);
        const double pc4 = policy::p_constrained_calibrated(in);
        o.detail << std::setprecision(10) << " shifts " << tu << ", " << tc << "; p " << pu << ", " << pc
                 << "; with 4-digit constants p " << pu4 << ", " << pc4 << std::setprecision(6);
    });

    criterion(4, "mixed heuristic performance ratio at N=100", 30.0, [&](Outcome& o) {
        double worst_all = 1.0, worst_mid = 1.0;
        for (int Q = 1; Q <= 99; ++Q) {
            const double r = dp::performance_ratio(policy::lattice_policy(policy::PolicyVariant::Mixed, 100, Q), 100,
                                                   Q, quad);
            worst_all = std::min(worst_all, r);
            if (Q >= 10 && Q <= 90) worst_mid = std::min(worst_mid, r);
        }
        o.require(worst_all >= 0.97, "min over 1..99 >= 0.97");
        o.require(worst_mid >= 0.985, "min over 10..90 >= 0.985");
        o.detail << " min ratio " << worst_all << " (all), " << worst_mid << " (10..90)";
    });

    criterion(5, "raw constrained vs raw unconstrained ordering at N=100", 30.0, [&](Outcome& o) {
        auto ratios = [&](int Q) {
            const auto base = dp::ratio_baseline(100, Q, quad);
            const double u = dp::performance_ratio(
                dp::evaluate_policy(policy::lattice_policy(policy::PolicyVariant::UnconstrainedRaw, 100, Q), 100, Q,
                                    quad),
                base);
            const double c = dp::performance_ratio(
                dp::evaluate_policy(policy::lattice_policy(policy::PolicyVariant::ConstrainedRaw, 100, Q), 100, Q,
                                    quad),
                base);
            return std::pair{u, c};
        };
        int checked = 0;
        for (int Q : {1, 2, 3, 4, 5, 95, 96, 97, 98, 99}) {
            const auto [u, c] = ratios(Q);
            o.require(c > u, "constrained > unconstrained at Q*=" + std::to_string(Q));
            ++checked;
        }
        for (int Q = 40; Q <= 60; ++Q) {
            const auto [u, c] = ratios(Q);
            o.require(u > c, "unconstrained > constrained at Q*=" + std::to_string(Q));
            ++checked;
        }
        const auto [u50, c50] = ratios(50);
        o.detail << " " << checked << " targets; at Q*=50 unconstrained " << u50 << ", constrained " << c50;
    });

    criterion(6, "Monte Carlo gain oracle", 10.0, [&](Outcome& o) {
        const auto m = gain::GainModel::quadratic(1.0, 0.1);
        double worst = 0.0;
        for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            auto rng = stream_rng(6, static_cast<std::uint64_t>(p * 10));
            const double th = m.threshold(p);
            std::vector<double> xs(1000000);
            for (auto& x : xs) {
                const auto d = m.sample(rng);
                x = d.signal >= th ? d.price_change : 0.0;
            }
            const auto mom = sample_moments(xs);
            const double z = (mom.mean - p * (1 - p)) / mom.standard_error();
            o.require(std::abs(z) < 3.0, "p=" + std::to_string(p));
            worst = std::max(worst, std::abs(z));
        }
        o.detail << " max |z| " << worst;
    });

    criterion(7, "diffusion limit of the inventory", 60.0, [&](Outcome& o) {
        iab::VerifyOptions v;
        v.paths = 100000;
        v.seed = 7;
        const auto coin = iab::verify_iab(iab::constant_field(0.5, 100), v);
        double zmax = 0.0, lo = 10.0, hi = 0.0;
        for (const auto& r : coin.rows) {
            const double n = r.step;
            // exact Binomial(n, 1/2) moments
            o.require(near(r.pred_mean, n / 2.0, 1e-9) && near(r.pred_var, n / 4.0, 1e-9), "binomial prediction");
            o.require(std::abs(r.z_mean) < 3.0, "z at n=" + std::to_string(r.step));
            o.require(r.var_ratio >= 0.95 && r.var_ratio <= 1.05, "variance ratio at n=" + std::to_string(r.step));
            zmax = std::max(zmax, std::abs(r.z_mean));
            lo = std::min(lo, r.var_ratio);
            hi = std::max(hi, r.var_ratio);
        }
        const auto pace = iab::verify_iab(iab::deterministic_pace_field(0.5, 100), v);
        double plo = 10.0, phi = 0.0;
        for (const auto& r : pace.rows) {
            o.require(r.var_ratio >= 0.8 && r.var_ratio <= 1.2, "pace variance ratio at n=" + std::to_string(r.step));
            plo = std::min(plo, r.var_ratio);
            phi = std::max(phi, r.var_ratio);
        }
        o.detail << " coin: max |z| " << zmax << ", ratio [" << lo << ", " << hi << "]; pace: ratio [" << plo
                 << ", " << phi << "]";
    });

    criterion(8, "simulated gain equals exact policy value", 60.0, [&](Outcome& o) {
        const auto m = gain::GainModel::quadratic(1.0, 0.1);
        const int N = 100, Q = 50;
        std::vector<std::pair<std::string, dp::PolicyGrid>> grids;
        grids.emplace_back("optimal", dp::solve_dp(N, Q, m).policy);
        for (auto v : {policy::PolicyVariant::Deterministic, policy::PolicyVariant::UnconstrainedRaw,
                       policy::PolicyVariant::ConstrainedRaw, policy::PolicyVariant::UnconstrainedCalibrated,
                       policy::PolicyVariant::ConstrainedCalibrated, policy::PolicyVariant::Mixed})
            grids.emplace_back(std::string(policy::to_string(v)),
                               dp::tabulate_policy(policy::lattice_policy(v, N, Q), N, Q));
        double worst = 0.0;
        for (auto& [name, grid] : grids) {
            const double exact = dp::evaluate_policy(grid, m);
            sim::SimConfig cfg(m, grid);
            cfg.paths = 100000;
            cfg.seed = 8;
            cfg.threads = 0;
            const auto ens = sim::run_ensemble(cfg);
            const double z = (ens.gain.mean - exact) / ens.gain.standard_error();
            o.require(std::abs(z) < 3.0, name);
            worst = std::max(worst, std::abs(z));
        }
        o.detail << " " << grids.size() << " policies, max |z| " << worst;
    });

    criterion(9, "execution-schedule bands", 60.0, [&](Outcome& o) {
        ac::ACParams p;  // T=1, Q*=100, eta=gamma=sigma=1, lambda=3, tau=0.05, u T = 1e4
        const auto s = ac::schedule(p);
        CompensatedSum mass;
        for (double nu : s.speeds) mass.add(nu * p.tau());
        o.require(std::abs(mass.value() / p.q_star - 1.0) <= 1e-10, "mass conservation");
        const double bands = ac::inventory_variance(s, p.horizon);
        const double diffusion = iab::gaussian_moments(ac::fill_field(s), p.horizon).variance;
        o.require(std::abs(bands - diffusion) <= 1e-9 * bands, "horizon variance vs moment integration");
        const auto v = ac::validate_bands(s, 100000, 9, 0);
        o.require(v.pooled_coverage >= 0.885 && v.pooled_coverage <= 0.915, "pooled 90% coverage");
        o.require(v.horizon_coverage >= 0.885 && v.horizon_coverage <= 0.915, "horizon 90% coverage");
        double lo = 1.0, hi = 0.0;
        for (const auto& c : v.inventory) {
            lo = std::min(lo, c.coverage90);
            hi = std::max(hi, c.coverage90);
        }
        o.detail << " mass error " << mass.value() - p.q_star << ", variance gap " << bands - diffusion
                 << ", coverage pooled " << v.pooled_coverage << " horizon " << v.horizon_coverage
                 << " (per checkpoint " << lo << ".." << hi << ")";
    });

    criterion(10, "repeated CLI runs are byte-identical", 60.0, [&](Outcome& o) {
        const auto root = fs::temp_directory_path() / "sigtrade_acceptance";
        fs::remove_all(root);
        const std::vector<std::vector<std::string>> runs{
            {"simulate", "-N", "60", "-Q", "25", "--paths", "2000", "--noise-sd", "0.2", "--store-paths", "3"},
            {"iab-verify", "--field", "deterministic", "--q-star", "0.4", "--paths", "5000"},
            {"ac-bands", "--paths", "2000"},
            {"perf-compare", "-N", "30"},
            {"dp-solve", "-N", "25", "-Q", "10"},
            {"calibrate"},
        };
        std::size_t compared = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            // Same configuration twice, output directory included.
            const auto dir = root / std::to_string(i);
            auto args = runs[i];
            args.insert(args.end(), {"--seed", "1234", "--out", dir.string()});
            std::map<std::string, std::string> first;
            for (int rep = 0; rep < 2; ++rep) {
                std::ostringstream out, err;
                o.require(cli::run(args, out, err) == 0, runs[i][0] + " exit code");
                for (const auto& entry : fs::directory_iterator(dir)) {
                    const auto name = entry.path().filename().string();
                    if (rep == 0) {
                        first[name] = slurp(entry.path());
                    } else {
                        o.require(first.count(name) && first[name] == slurp(entry.path()), runs[i][0] + "/" + name);
                        ++compared;
                    }
                }
                if (rep == 0) fs::remove_all(dir);
            }
        }
        o.detail << " " << compared << " files compared";
        fs::remove_all(root);
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
