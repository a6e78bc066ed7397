#include "doctest.h"

#include <cmath>
#include <set>

#include "qrotor/error.hpp"
#include "qrotor/lattice.hpp"

using namespace qrotor;

TEST_CASE("bond counts") {
  CHECK(build_lattice({5}, {false}).bonds().size() == 4);
  CHECK(build_lattice({5}, {true}).bonds().size() == 5);
  CHECK(build_lattice({3, 4}, {false, false}).bonds().size() == 3 * 3 + 4 * 2);
  CHECK(build_lattice({3, 4}, {true, true}).bonds().size() == 2 * 12);
  CHECK(build_lattice({1}, {false}).bonds().empty());
}

TEST_CASE("bonds are unique and ordered") {
  const Lattice lat = build_lattice({4, 4}, {true, false});
  std::set<std::pair<int, int>> seen;
  for (auto [k, l] : lat.bonds()) {
    CHECK(k < l);
    CHECK(seen.insert({k, l}).second);
  }
}

TEST_CASE("invalid lattices") {
  CHECK_THROWS_AS(build_lattice({2}, {true}), ConfigError);
  CHECK_THROWS_AS(build_lattice({0}, {false}), ConfigError);
  CHECK_THROWS_AS(build_lattice({3, 3}, {true}), ConfigError);
  CHECK_THROWS_AS(build_lattice({2, 2, 2}, {false, false, false}), ConfigError);
}

TEST_CASE("shift respects boundaries") {
  const Lattice open = build_lattice({3, 3}, {false, false});
  CHECK(open.shift(open.site(0, 2), 1, 0) == -1);
  CHECK(open.shift(open.site(1, 1), 1, 0) == open.site(1, 2));
  CHECK(open.shift(open.site(1, 1), 0, 1) == open.site(2, 1));
  const Lattice ring = build_lattice({3, 3}, {true, true});
  CHECK(ring.shift(ring.site(0, 2), 1, 0) == ring.site(0, 0));
  CHECK(ring.shift(ring.site(0, 0), 0, -1) == ring.site(2, 0));
}

TEST_CASE("plaquette enumeration") {
  const Lattice open = build_lattice({4, 4}, {false, false});
  CHECK(open.plaquettes(1).size() == 9);
  CHECK(open.plaquettes(2).size() == 4);
  CHECK(open.plaquettes(3).size() == 1);
  CHECK_THROWS_AS(open.plaquettes(4), ConfigError);
  const Lattice torus = build_lattice({4, 4}, {true, true});
  CHECK(torus.plaquettes(1).size() == 16);

  for (const Plaquette& p : open.plaquettes(2)) {
    REQUIRE(p.sites.size() == 9);
    CHECK(p.sites.front() == p.sites.back());
    int sx = 0, sy = 0, area2 = 0, x = 0, y = 0;
    for (auto [dx, dy] : p.steps) {
      area2 += x * dy - y * dx;  // shoelace, positive for counterclockwise
      x += dx;
      y += dy;
      sx += dx;
      sy += dy;
    }
    CHECK(sx == 0);
    CHECK(sy == 0);
    CHECK(area2 == 2 * 4);
  }
  CHECK_THROWS_AS(build_lattice({4}, {false}).plaquettes(1), ConfigError);
}

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.5) == 0.5);
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(3 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-kPi) == -kPi);
  for (double x : {-20.0, -3.2, 7.7, 100.0}) {
    const double w = wrap_angle(x);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(wrap_angle(w) == w);
    CHECK(std::remainder(x - w, kTwoPi) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(wrap_angle(NAN), NumericalError);
}

TEST_CASE("circular statistics") {
  // Two samples at +a and -a about 0: R = cos a.
  const double a = 0.3;
  const std::vector<double> s{a, -a};
  const auto st = circular_site_stats(s, 1);
  CHECK(st.resultant[0] == doctest::Approx(std::cos(a)));
  CHECK(st.variance[0] == doctest::Approx(-2.0 * std::log(std::cos(a))));
  CHECK(st.mean_direction[0] == doctest::Approx(0.0));
  const std::vector<double> anti{0.0, kPi};
  CHECK(std::isinf(circular_site_stats(anti, 1).variance[0]));
}
