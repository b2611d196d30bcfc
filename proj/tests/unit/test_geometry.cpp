#include <doctest.h>

#include <cmath>

#include "pih/geometry.hpp"
#include "pih/rng.hpp"
#include "support/oracles.hpp"

using namespace pih;

TEST_CASE("wrap_angle basics") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kPi) == kPi);  // boundary maps to +pi
    CHECK(wrap_angle(-kPi) == kPi);
    CHECK(wrap_angle(190.0 * kPi / 180.0) ==
          doctest::Approx(testing::wrap_oracle(190.0 * kPi / 180.0)).epsilon(1e-15));
    CHECK(wrap_angle(190.0 * kPi / 180.0) < 0.0);  // lands near -170 deg
    CHECK_THROWS_AS(wrap_angle(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(wrap_angle(INFINITY), std::invalid_argument);
}

TEST_CASE("wrap_angle idempotence and oracle agreement") {
    Rng rng(101);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.uniform(-50.0, 50.0);
        const double w = wrap_angle(a);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        CHECK(wrap_angle(w) == w);
        CHECK(std::abs(testing::wrap_oracle(w - testing::wrap_oracle(a))) < 1e-9);
    }
}

TEST_CASE("pose and delta constructors validate and wrap") {
    const Pose4 p(1.0, 2.0, 3.0, 4.0);
    CHECK(p.psi == wrap_angle(4.0));
    CHECK_THROWS_AS(Pose4(std::nan(""), 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(DeltaPose(0, 0, INFINITY, 0), std::invalid_argument);
}

TEST_CASE("delta examples") {
    const Pose4 a(0.02, 0.0, 0.08, 0.0);
    const Pose4 g(0.05, 0.0, 0.02, 0.0);
    const DeltaPose d = delta(g, a);
    CHECK(d.dx == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(d.dy == 0.0);
    CHECK(d.dz == doctest::Approx(-0.06).epsilon(1e-12));
    CHECK(d.dpsi == 0.0);

    const DeltaPose zero = delta(a, a);
    CHECK(zero.dx == 0.0);
    CHECK(zero.dy == 0.0);
    CHECK(zero.dz == 0.0);
    CHECK(zero.dpsi == 0.0);

    // 170 deg to -170 deg wraps to -20 deg, not +340.
    const Pose4 c(0, 0, 0, -170.0 * kPi / 180.0);
    const Pose4 t(0, 0, 0, 170.0 * kPi / 180.0);
    const double expect = testing::wrap_oracle(340.0 * kPi / 180.0);
    CHECK(delta(t, c).dpsi == doctest::Approx(expect).epsilon(1e-12));
    CHECK(delta(t, c).dpsi < 0.0);
}

TEST_CASE("apply examples") {
    const Pose4 p(0.4, -0.2, 0.1, 1.0);
    const Pose4 same = apply(p, DeltaPose());
    CHECK(same.x == p.x);
    CHECK(same.y == p.y);
    CHECK(same.z == p.z);
    CHECK(same.psi == p.psi);

    const Pose4 origin(0, 0, 0, 0);
    const Pose4 moved = apply(origin, DeltaPose(0.01, -0.02, 0.005, 0.1));
    CHECK(moved.x == 0.01);
    CHECK(moved.y == -0.02);
    CHECK(moved.z == 0.005);
    CHECK(moved.psi == 0.1);
}

TEST_CASE("round trip apply(p, delta(g, p)) == g over random pairs") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Pose4 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1),
                      rng.uniform(-kPi, kPi));
        const Pose4 g(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1),
                      rng.uniform(-kPi, kPi));
        const Pose4 r = apply(p, delta(g, p));
        CHECK(r.x == g.x);  // linear fields exact
        CHECK(r.y == g.y);
        CHECK(r.z == g.z);
        CHECK(std::abs(testing::wrap_oracle(r.psi - g.psi)) < 1e-12);
    }
}

TEST_CASE("delta yaw antisymmetry away from pi") {
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const Pose4 p(0, 0, 0, rng.uniform(-3.0, 3.0));
        const Pose4 g(0, 0, 0, rng.uniform(-3.0, 3.0));
        const double fwd = delta(g, p).dpsi;
        if (std::abs(std::abs(fwd) - kPi) < 1e-9) continue;
        CHECK(delta(p, g).dpsi == doctest::Approx(-fwd).epsilon(1e-12));
    }
}

TEST_CASE("planar_distance") {
    CHECK(planar_distance(DeltaPose(0, 0, 0.3, 1.0)) == 0.0);
    CHECK(planar_distance(DeltaPose(0.03, 0.04, 0, 0)) == doctest::Approx(0.05).epsilon(1e-15));
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const DeltaPose d(rng.uniform(-1, 1), rng.uniform(-1, 1), 0, 0);
        CHECK(planar_distance(d) == doctest::Approx(std::hypot(d.dx, d.dy)).epsilon(1e-12));
    }
}
