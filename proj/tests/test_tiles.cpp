#include <cmath>

#include "doctest.h"
#include "pwe/errors.hpp"
#include "pwe/rng.hpp"
#include "pwe/scene.hpp"
#include "pwe/tiles.hpp"

using namespace pwe;

namespace {

Tile make_tile(Vec3 center = {0, 0, 0}, Vec3 normal = {0, 1, 0}) {
  Tile t;
  t.id = 0;
  t.wall_index = 0;
  t.center = center;
  t.normal = normal;
  t.side_m = 1.0;
  return t;
}

const Band kBand{59.9875e9, 60.0125e9};

TileFunction steer_fn(Vec3 in, Vec3 out, Band band = kBand) {
  TileFunction fn;
  fn.action = Action::Steer;
  fn.incident_dir = in;
  fn.outgoing_dir = out;
  fn.band = band;
  return fn;
}

}  // namespace

TEST_CASE("callback validates and installs") {
  Tile t = make_tile();
  const Vec3 in = Vec3{1, -1, 0}.normalized();

  SUBCASE("steer ok") {
    auto out = callback(t, steer_fn(in, Vec3{0, 1, 0}));
    CHECK(out.ok());
    REQUIRE(t.active.has_value());
    CHECK(t.active->action == Action::Steer);
  }
  SUBCASE("absorb needs no directions") {
    TileFunction fn;
    fn.action = Action::Absorb;
    fn.band = kBand;
    fn.alpha = 1.0;
    CHECK(callback(t, fn).ok());
    CHECK(t.active->action == Action::Absorb);
  }
  SUBCASE("steer into the wall rejected") {
    auto out = callback(t, steer_fn(in, Vec3{0, -1, 0}));
    CHECK(!out.ok());
    CHECK(!out.reason.empty());
    CHECK(!t.active.has_value());
  }
  SUBCASE("malformed steer rejected") {
    auto out = callback(t, steer_fn(in, Vec3{0, 0, 0}));
    CHECK(!out.ok());
  }
  SUBCASE("inverted band rejected") {
    auto out = callback(t, steer_fn(in, Vec3{0, 1, 0}, Band{2e9, 1e9}));
    CHECK(!out.ok());
  }
  SUBCASE("focus behind wall rejected") {
    TileFunction fn;
    fn.action = Action::Focus;
    fn.incident_dir = in;
    fn.focal_point = {0, -3, 0};
    fn.band = kBand;
    CHECK(!callback(t, fn).ok());
  }
  SUBCASE("replace and reset") {
    CHECK(callback(t, steer_fn(in, Vec3{0, 1, 0})).ok());
    CHECK(callback(t, steer_fn(in, Vec3{1, 1, 0})).ok());
    CHECK(t.active->outgoing_dir.x == doctest::Approx(1 / std::sqrt(2.0))); // one active fn
    TileFunction reset;
    reset.action = Action::Reset;
    CHECK(callback(t, reset).ok());
    CHECK(!t.active.has_value());
  }
}

TEST_CASE("interact dispatch") {
  InteractParams params;
  const double f = 60e9;

  SUBCASE("unconfigured tile reflects specularly") {
    Tile t = make_tile();
    const Vec3 in = Vec3{1, -1, 0}.normalized();
    auto inter = interact(t, Ray{{-1, 1, 0}, in}, f, params);
    CHECK(inter.kind == InteractionKind::Specular);
    CHECK(inter.outgoing_dir.x == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(inter.outgoing_dir.y == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(inter.loss_db == params.wall_loss_db);
  }
  SUBCASE("matching steer returns the configured direction exactly") {
    Tile t = make_tile();
    const Vec3 in = Vec3{1, -1, 0}.normalized();
    const Vec3 out = Vec3{-1, 2, 0}.normalized();
    REQUIRE(callback(t, steer_fn(in, out)).ok());
    auto inter = interact(t, Ray{{-1, 1, 0}, in}, f, params);
    CHECK(inter.kind == InteractionKind::Steer);
    CHECK((inter.outgoing_dir - out).norm() < 1e-12);
    CHECK(inter.loss_db == params.steer_loss_db);
  }
  SUBCASE("incidence tolerance boundary") {
    Tile t = make_tile();
    const Vec3 in = Vec3{0, -1, 0};
    REQUIRE(callback(t, steer_fn(in, Vec3{0, 1, 0})).ok());
    auto rotated = [&](double deg) {
      const double r = deg2rad(deg);
      return Vec3{std::sin(r), -std::cos(r), 0};
    };
    CHECK(interact(t, Ray{{0, 1, 0}, rotated(9.9)}, f, params).kind == InteractionKind::Steer);
    CHECK(interact(t, Ray{{0, 1, 0}, rotated(10.1)}, f, params).kind == InteractionKind::Specular);
  }
  SUBCASE("out-of-band falls back to specular") {
    Tile t = make_tile();
    const Vec3 in = Vec3{0, -1, 0};
    REQUIRE(callback(t, steer_fn(in, Vec3{0, 1, 0})).ok());
    CHECK(interact(t, Ray{{0, 1, 0}, in}, 5e9, params).kind == InteractionKind::Specular);
  }
  SUBCASE("full absorption terminates the ray") {
    Tile t = make_tile();
    TileFunction fn;
    fn.action = Action::Absorb;
    fn.band = kBand;
    fn.alpha = 1.0;
    REQUIRE(callback(t, fn).ok());
    auto inter = interact(t, Ray{{0, 1, 0}, {0, -1, 0}}, f, params);
    CHECK(inter.kind == InteractionKind::Absorb);
    CHECK(inter.terminal);
  }
  SUBCASE("partial absorption reflects the remnant") {
    Tile t = make_tile();
    TileFunction fn;
    fn.action = Action::Absorb;
    fn.band = kBand;
    fn.alpha = 0.9;
    REQUIRE(callback(t, fn).ok());
    auto inter = interact(t, Ray{{0, 1, 0}, {0, -1, 0}}, f, params);
    CHECK(inter.kind == InteractionKind::Absorb);
    CHECK(!inter.terminal);
    CHECK(inter.loss_db == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(inter.outgoing_dir.y == doctest::Approx(1.0));
  }
}

TEST_CASE("interact properties") {
  InteractParams params;
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    // random orientation and incident direction into the front face
    Vec3 n = Vec3{rng.next_real(-1, 1), rng.next_real(-1, 1), rng.next_real(-1, 1)};
    if (n.norm() < 1e-3) n = {0, 0, 1};
    n = n.normalized();
    Vec3 d = Vec3{rng.next_real(-1, 1), rng.next_real(-1, 1), rng.next_real(-1, 1)}.normalized();
    if (dot(d, n) >= -1e-3) d = reflect(d, n) * -1.0;
    if (dot(d, n) >= -1e-3) continue;

    Tile t = make_tile({0, 0, 0}, n);
    auto inter = interact(t, Ray{Vec3{0, 0, 0} - d, d}, 60e9, params);
    CHECK(inter.loss_db >= 0.0);  // interact never adds power
    // reflection law: angle in = angle out, normal component flipped
    CHECK(angle_between(inter.outgoing_dir, reflect(d, n)) < 1e-9);
    CHECK(std::abs(dot(inter.outgoing_dir, n) + dot(d, n)) < 1e-9);
  }
}

TEST_CASE("meta_atom_bounds") {
  auto [lo5, hi5] = meta_atom_bounds_m(5e9);
  CHECK(lo5 == doctest::Approx(5.996e-3).epsilon(1e-3));
  CHECK(hi5 == doctest::Approx(11.99e-3).epsilon(1e-3));
  CHECK(lo5 < 8e-3);
  CHECK(hi5 > 8e-3);

  auto [lo60, hi60] = meta_atom_bounds_m(60e9);
  CHECK(lo60 == doctest::Approx(0.4997e-3).epsilon(1e-3));
  CHECK(hi60 == doctest::Approx(0.9993e-3).epsilon(1e-3));

  auto [lo10, hi10] = meta_atom_bounds_m(10e9);
  CHECK(lo10 == doctest::Approx(meta_atom_bounds_m(5e9).first / 2).epsilon(1e-12));
  CHECK(hi10 == doctest::Approx(meta_atom_bounds_m(5e9).second / 2).epsilon(1e-12));
  CHECK_THROWS_AS(meta_atom_bounds_m(-1.0), ValidationError);
}

TEST_CASE("power_drain") {
  // 5 x 3 m wall with 8 mm elements: 625 x 375 = 234,375 switches
  CHECK(power_drain_watts(15.0, 8e-3, 1.0) == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(power_drain_watts(1.0, 8e-3, 1.0) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(power_drain_watts(15.0, 8e-3, 0.0) == 0.0);
  CHECK_THROWS_AS(power_drain_watts(0.0, 8e-3, 1.0), ValidationError);
  CHECK_THROWS_AS(power_drain_watts(15.0, 0.0, 1.0), ValidationError);

  // linear in on_fraction, monotone in area
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double area = rng.next_real(0.5, 30.0);
    const double side = rng.next_real(1e-3, 2e-2);
    const double f = rng.next_real(0.0, 1.0);
    CHECK(power_drain_watts(area, side, f) ==
          doctest::Approx(f * power_drain_watts(area, side, 1.0)).epsilon(1e-12));
    CHECK(power_drain_watts(area + 1.0, side, 1.0) >= power_drain_watts(area, side, 1.0));
  }
}
