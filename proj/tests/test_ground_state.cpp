#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hill/ground_state.hpp"
#include "hill/rng.hpp"
#include "oracles.hpp"

using namespace hill;
using namespace hill::testing;

TEST_CASE("lagrange points") {
    const ModelParams p1(1.0);
    const auto [l1, l2] = lagrange_points(p1);
    CHECK(l1.x == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(l2.x == doctest::Approx(1.0).epsilon(1e-14));

    const ModelParams p2(2.0);
    CHECK(lagrange_points(p2).second.x ==
          doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-14));

    for (double a : {1.0, 2.0, 3.0, 5.0}) {
        const ModelParams p(a);
        double vx, vy;
        potential_gradient(p, p.q0, 0.0, vx, vy);
        CHECK(std::abs(vx) <= 1e-12);
        CHECK(std::abs(vy) <= 1e-12);
        potential_gradient(p, -p.q0, 0.0, vx, vy);
        CHECK(std::abs(vx) <= 1e-12);
    }
}

TEST_CASE("ground state energy closed form") {
    CHECK(ground_state_energy(ModelParams(1.0)) == doctest::Approx(-4.5).epsilon(1e-14));
    CHECK(ground_state_energy(ModelParams(2.0)) ==
          doctest::Approx(-4.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ground_state_energy(ModelParams(3.0)) ==
          doctest::Approx(-12.5 * std::pow(3.0, -0.6)).epsilon(1e-14));
}

TEST_CASE("critical point catalog: radii, multipliers, residuals") {
    const ModelParams p(3.0);
    const auto catalog = critical_point_catalog(p);
    REQUIRE(catalog.size() == 4);

    const auto& g0 = catalog[0];
    CHECK(g0.multiplier == 0.0);
    CHECK(std::pow(g0.radius, 5.0) == doctest::Approx(3.0).epsilon(1e-10));

    const auto& g1 = catalog[1];
    CHECK(g1.multiplier == doctest::Approx(-0.5));
    CHECK(std::pow(g1.radius, 5.0) == doctest::Approx(75.0).epsilon(1e-10));

    const double root = std::sqrt((3.0 - 2.0) / (3.0 + 2.0));
    CHECK(catalog[2].multiplier == doctest::Approx(0.5 * (1.0 - root)).epsilon(1e-10));
    CHECK(catalog[3].multiplier == doctest::Approx(0.5 * (1.0 + root)).epsilon(1e-10));
    for (int i : {2, 3})
        CHECK(std::pow(catalog[i].radius, 5.0) ==
              doctest::Approx(3.0 * 5.0 * 1.0 / 4.0).epsilon(1e-10));

    for (const auto& cp : catalog) {
        CHECK(std::abs(virial_k(p, cp.state)) <= 1e-10);
        CHECK(lagrange_residual(p, cp.state, cp.multiplier) <= 1e-9);
        CHECK(std::hypot(cp.state.x, cp.state.y) ==
              doctest::Approx(cp.radius).epsilon(1e-12));
    }
}

TEST_CASE("catalog energy ordering across the strong-potential grid") {
    for (double a : {2.0, 2.5, 3.0, 5.0, 10.0}) {
        const ModelParams p(a);
        const auto catalog = critical_point_catalog(p);
        INFO("alpha = " << a);
        if (a > 2.0) {
            REQUIRE(catalog.size() == 4);
            CHECK(catalog[0].energy < catalog[1].energy - 1e-6);
            CHECK(catalog[1].energy < catalog[2].energy - 1e-6);
            CHECK(catalog[2].energy < -1e-6);
            CHECK(catalog[3].energy > 1e-6);
        } else {
            REQUIRE(catalog.size() == 2);  // the y-axis pair merges away at 2
            CHECK(catalog[0].energy < catalog[1].energy - 1e-6);
            CHECK(catalog[1].energy < 0.0);
        }
    }
}

TEST_CASE("energy ratio of the first two catalog levels") {
    double prev = 1.0;
    for (double a : {2.0, 2.5, 3.0, 5.0, 10.0}) {
        const ModelParams p(a);
        const auto catalog = critical_point_catalog(p);
        const double ratio = catalog[1].energy / catalog[0].energy;
        CHECK(ratio == doctest::Approx(gamma1_energy_ratio(a)).epsilon(1e-10));
        CHECK(ratio < 1.0);
        CHECK(ratio < prev);  // strictly decreasing in alpha
        prev = ratio;
    }
}

TEST_CASE("variational infimum audit at alpha = 2 and 3") {
    for (double a : {2.0, 3.0}) {
        const ModelParams p(a);
        const Report rep = verify_variational_infimum(p, 200000, 42);
        INFO("alpha = " << a);
        CHECK(rep.ok());
        CHECK(rep.get_double("min_energy_sampled") >= p.e_star - 1e-6);
        CHECK(rep.get_double("max_minimizer_distance") <= 1e-4);
    }
}

TEST_CASE("variational audit runs without assertions for weak potential") {
    const ModelParams p(1.0);
    const Report rep = verify_variational_infimum(p, 50000, 42);
    CHECK(rep.ok());  // no strong-potential checks are armed
    CHECK(rep.get("min_energy_sampled") != "");
}

TEST_CASE("away-from-singularity margin for alpha > 2") {
    const ModelParams p(3.0);
    const auto res = verify_away_from_singularity(p, 1.0, 512);
    CHECK(res.certified);
    CHECK(res.c_found > 0.0);
}

TEST_CASE("away-from-singularity margin at alpha = 2 depends on the energy cap") {
    const ModelParams p(2.0);
    // caps below -2 sqrt 2 certify a positive margin
    const auto strict = verify_away_from_singularity(p, -3.0, 512);
    CHECK(strict.certified);
    CHECK(strict.c_found > 0.0);
    // at cap -1 a circular-velocity family keeps K = 0 with E near -2 sqrt 2
    // at arbitrarily small radius, so no positive margin exists
    const auto loose = verify_away_from_singularity(p, -1.0, 512);
    CHECK_FALSE(loose.certified);

    for (double r : {1e-2, 1e-4, 1e-6}) {
        const double s = std::sqrt(8.0 / (r * r) + r * r) - r;
        const CartesianState c{0.0, r, -s, 0.0};
        CHECK(std::abs(virial_k(p, c)) <= 1e-6 * (8.0 / (r * r)));
        CHECK(energy(p, c) < -1.0);
    }
}

TEST_CASE("no sampled state below the certified margin violates it") {
    const ModelParams p(2.0);
    const double e_cap = -3.0;
    const auto res = verify_away_from_singularity(p, e_cap, 512);
    REQUIRE(res.certified);
    Rng rng(4242, 0);
    int violations = 0;
    for (int i = 0; i < 200000; ++i) {
        const double r = res.c_found * std::pow(rng.unit(), 2.0);
        if (r < 1e-8) continue;
        const double th = rng.uniform(0, 2 * M_PI);
        const double x = r * std::cos(th), y = r * std::sin(th);
        const double v = effective_potential(p, x, y);
        if (v > e_cap) continue;
        const double spd = rng.uniform(0, std::sqrt(2.0 * (e_cap - v)));
        const double dir = rng.uniform(0, 2 * M_PI);
        const CartesianState c{x, y, spd * std::cos(dir), spd * std::sin(dir)};
        if (std::abs(virial_k(p, c)) < res.c_found) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("kappa margin: |K| bounded below on the sub-threshold inner set") {
    const ModelParams p2(2.0);
    const auto r1 = verify_kappa_delta(p2, 0.1, 200000, 7);
    CHECK(r1.kappa > 0.0);
    CHECK(r1.all_k_negative);

    const ModelParams p3(3.0);
    const auto r2 = verify_kappa_delta(p3, 0.5, 200000, 7);
    CHECK(r2.kappa > 0.0);
    CHECK(r2.all_k_negative);

    // monotonicity: smaller delta enlarges the set and shrinks the margin
    const auto k_large = verify_kappa_delta(p2, 0.5, 100000, 7);
    const auto k_mid = verify_kappa_delta(p2, 0.1, 100000, 7);
    const auto k_small = verify_kappa_delta(p2, 0.02, 100000, 7);
    CHECK(k_large.kappa >= k_mid.kappa);
    CHECK(k_mid.kappa >= k_small.kappa);
    CHECK(k_small.kappa > 0.0);
}

TEST_CASE("two-constraint stationarity: equilibria minimize, one excited pair exists") {
    // The system grad E = lambda grad K + mu grad W with K = W = 0 has the
    // equilibria (lambda = 0) and one additional pair +-(q0, 0, 0, -2 q0)
    // with lambda = 1 at energy E* + 2 q0^2. The energy minimum over the
    // constraint set is still attained only at the equilibria.
    const ModelParams p(3.0);
    const auto roots = two_constraint_roots(p, 400, 99);
    CHECK(!roots.empty());
    bool saw_equilibrium = false;
    double min_energy = 1e30;
    for (const auto& root : roots) {
        CHECK(root.residual <= 1e-10);
        const auto dist_to = [&](double x, double vy) {
            return std::hypot(root.state.x - x, root.state.y) +
                   std::hypot(root.state.vx, root.state.vy - vy);
        };
        const double d_eq = std::min(dist_to(p.q0, 0.0), dist_to(-p.q0, 0.0));
        const double d_exc =
            std::min(dist_to(p.q0, -2.0 * p.q0), dist_to(-p.q0, 2.0 * p.q0));
        CHECK(std::min(d_eq, d_exc) <= 1e-6);
        min_energy = std::min(min_energy, energy(p, root.state));
        if (d_eq <= 1e-6) {
            saw_equilibrium = true;
            CHECK(std::abs(root.lambda) <= 1e-8);
            CHECK(energy(p, root.state) == doctest::Approx(p.e_star).epsilon(1e-10));
        } else {
            CHECK(root.lambda == doctest::Approx(1.0).epsilon(1e-8));
            CHECK(energy(p, root.state) ==
                  doctest::Approx(p.e_star + 2.0 * p.q0 * p.q0).epsilon(1e-10));
        }
    }
    CHECK(saw_equilibrium);
    CHECK(min_energy == doctest::Approx(p.e_star).epsilon(1e-10));
}
