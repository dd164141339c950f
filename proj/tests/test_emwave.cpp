#include <cmath>
#include <vector>

#include "doctest.h"
#include "pwe/emwave.hpp"
#include "pwe/errors.hpp"
#include "pwe/rng.hpp"

using namespace pwe;

namespace {

PropagationPath direct_path(Vec3 a, Vec3 b) {
  PropagationPath p;
  p.start = a;
  p.end = b;
  return p;
}

PropagationPath one_bounce(Vec3 a, Vec3 m, Vec3 b, BounceKind kind, double loss_db) {
  PropagationPath p;
  p.start = a;
  p.end = b;
  p.bounces.push_back({m, kind, loss_db, -1, -1});
  return p;
}

}  // namespace

TEST_CASE("wavelength") {
  CHECK(wavelength_m(60e9) == doctest::Approx(4.997e-3).epsilon(1e-3));
  CHECK(wavelength_m(5e9) == doctest::Approx(59.96e-3).epsilon(1e-3));
  CHECK_THROWS_AS(wavelength_m(0.0), ValidationError);
  // lambda/10 and lambda/5 at 5 GHz bracket an 8 mm element
  CHECK(wavelength_m(5e9) / 10.0 < 8e-3);
  CHECK(wavelength_m(5e9) / 5.0 > 8e-3);
}

TEST_CASE("fspl") {
  CHECK(fspl_db(1.0, 60e9) == doctest::Approx(68.0).epsilon(0.1 / 68.0));
  // doubling distance adds 20*log10(2)
  for (double d : {0.5, 1.0, 3.7, 10.0}) {
    CHECK(fspl_db(2 * d, 60e9) - fspl_db(d, 60e9) == doctest::Approx(6.0206).epsilon(0.002));
  }
  const double lambda = wavelength_m(5e9);
  CHECK(fspl_db(lambda / (4 * kPi), 5e9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(fspl_db(0.0, 60e9), ValidationError);
}

TEST_CASE("dipole gain") {
  CHECK(dipole_gain(kPi / 2) == doctest::Approx(1.64));
  CHECK(10 * std::log10(dipole_gain(kPi / 2)) == doctest::Approx(2.15).epsilon(0.005));
  CHECK(dipole_gain(0.0) == 0.0);
  CHECK(dipole_gain(kPi) == 0.0);
  // independent evaluation of the closed form at pi/3
  const double theta = kPi / 3;
  const double expected = 1.64 * std::pow(std::cos(kPi / 2 * std::cos(theta)) / std::sin(theta), 2);
  CHECK(dipole_gain(theta) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.0933).epsilon(1e-3));
}

TEST_CASE("dbm/watts round trip") {
  CHECK(dbm_to_watts(100.0) == doctest::Approx(1e7));
  CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
  for (double x = -250.0; x <= 100.0; x += 13.7) {
    CHECK(watts_to_dbm(dbm_to_watts(x)) == doctest::Approx(x).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("path_power: direct, steer, focus") {
  const WaveSpec wave{60e9, 25e6};
  const auto iso = Antenna::Isotropic;

  // 1 m LoS, isotropic, 0 dBm in -> -fspl out
  const double p_direct1 = path_power_dbm(direct_path({0, 0, 0}, {1, 0, 0}), wave, 0.0, iso, iso);
  CHECK(p_direct1 == doctest::Approx(-68.0).epsilon(0.1 / 68.0));

  // lossless steer over 1 m + 1 m equals a direct 2 m path
  const double p_direct2 = path_power_dbm(direct_path({0, 0, 0}, {2, 0, 0}), wave, 0.0, iso, iso);
  const double p_steer = path_power_dbm(
      one_bounce({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, BounceKind::Steer, 0.0), wave, 0.0, iso, iso);
  CHECK(p_steer == doctest::Approx(p_direct2).epsilon(1e-12));

  // lossless focus resets the spreading: equals the direct 1 m path,
  // 6.02 dB above the steer case
  const double p_focus = path_power_dbm(
      one_bounce({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, BounceKind::Focus, 0.0), wave, 0.0, iso, iso);
  CHECK(p_focus == doctest::Approx(p_direct1).epsilon(1e-12));
  CHECK(p_focus - p_steer == doctest::Approx(6.0206).epsilon(1e-4));

  CHECK_THROWS_AS(path_power_dbm(direct_path({0, 0, 0}, {0, 0, 0}), wave, 0.0, iso, iso),
                  ValidationError);

  // endpoint gains: vertical dipoles looking broadside add 2.15 dBi each
  const double p_dipole = path_power_dbm(direct_path({0, 0, 1.5}, {1, 0, 1.5}), wave, 0.0,
                                         Antenna::HalfWaveDipole, Antenna::HalfWaveDipole);
  CHECK(p_dipole - p_direct1 == doctest::Approx(2 * 10 * std::log10(1.64)).epsilon(1e-9));
  // a slanted departure leaves the pattern maximum (same path length)
  const double p_slant = path_power_dbm(direct_path({0, 0, 0}, {1, 0, 1}), wave, 0.0,
                                        Antenna::HalfWaveDipole, Antenna::Isotropic);
  const double p_flat = path_power_dbm(direct_path({0, 0, 0}, {std::sqrt(2.0), 0, 0}), wave, 0.0,
                                       Antenna::HalfWaveDipole, Antenna::Isotropic);
  CHECK(p_slant < p_flat);
}

TEST_CASE("path_power monotonicity properties") {
  const WaveSpec wave{60e9, 25e6};
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a{0, 0, 0};
    const Vec3 m{rng.next_real(0.5, 5.0), rng.next_real(-2.0, 2.0), rng.next_real(-1.0, 1.0)};
    const Vec3 b = m + Vec3{rng.next_real(0.5, 5.0), rng.next_real(-2.0, 2.0), 0.1};
    const double loss = rng.next_real(0.0, 10.0);
    const auto kind = rng.next_bool() ? BounceKind::Steer : BounceKind::Focus;
    const double base = path_power_dbm(one_bounce(a, m, b, kind, loss), wave, 0.0,
                                       Antenna::Isotropic, Antenna::Isotropic);
    // more bounce loss never helps
    const double worse = path_power_dbm(one_bounce(a, m, b, kind, loss + 1.0), wave, 0.0,
                                        Antenna::Isotropic, Antenna::Isotropic);
    CHECK(worse < base);
    // longer last segment never helps (same angles: scale the segment)
    const Vec3 b_far = m + (b - m) * 1.5;
    const double farther = path_power_dbm(one_bounce(a, m, b_far, kind, loss), wave, 0.0,
                                          Antenna::Isotropic, Antenna::Isotropic);
    CHECK(farther < base);
    // focus -> steer on the same geometry never increases power
    const double as_steer = path_power_dbm(one_bounce(a, m, b, BounceKind::Steer, loss), wave, 0.0,
                                           Antenna::Isotropic, Antenna::Isotropic);
    const double as_focus = path_power_dbm(one_bounce(a, m, b, BounceKind::Focus, loss), wave, 0.0,
                                           Antenna::Isotropic, Antenna::Isotropic);
    CHECK(as_steer <= as_focus + 1e-12);
  }
}

TEST_CASE("aggregate_power") {
  const double floor = -250.0;
  std::vector<double> two{-70.0, -70.0};
  CHECK(aggregate_power_dbm(two, floor) == doctest::Approx(-66.99).epsilon(0.01 / 67.0));
  std::vector<double> one{-91.25};
  CHECK(aggregate_power_dbm(one, floor) == doctest::Approx(-91.25).epsilon(1e-12));
  CHECK(aggregate_power_dbm({}, floor) == floor);

  // aggregate >= max single path, equality iff one path
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> powers;
    const int n = 1 + static_cast<int>(rng.next_index(5));
    double mx = -1e9;
    for (int k = 0; k < n; ++k) {
      powers.push_back(rng.next_real(-120.0, -40.0));
      mx = std::max(mx, powers.back());
    }
    const double agg = aggregate_power_dbm(powers, floor);
    CHECK(agg >= mx - 1e-12);
    if (n == 1) CHECK(agg == doctest::Approx(mx).epsilon(1e-12));
    if (n > 1) CHECK(agg > mx);
  }
}

TEST_CASE("coherent aggregation") {
  const double lambda = wavelength_m(60e9);
  // two equal paths, half-wavelength length difference -> cancellation
  std::vector<double> p{-70.0, -70.0};
  std::vector<double> d_opp{3.0, 3.0 + lambda / 2.0};
  std::vector<double> d_same{3.0, 3.0 + lambda};
  CHECK(aggregate_power_coherent_dbm(p, d_opp, lambda, -250.0) == -250.0);
  CHECK(aggregate_power_coherent_dbm(p, d_same, lambda, -250.0) ==
        doctest::Approx(-70.0 + 6.0206).epsilon(1e-6));
}

TEST_CASE("pdp and rms delay spread") {
  const WaveSpec wave{60e9, 25e6};
  const auto iso = Antenna::Isotropic;

  // single path -> single tap, zero spread
  std::vector<PropagationPath> single{direct_path({0, 0, 0}, {3, 0, 0})};
  Pdp pdp1 = make_pdp(single, wave, 0.0, iso, iso);
  REQUIRE(pdp1.taps.size() == 1);
  CHECK(pdp1.taps[0].delay_s == doctest::Approx(3.0 / kSpeedOfLight).epsilon(1e-12));
  CHECK(rms_delay_spread_s(pdp1) == 0.0);

  // two equal-power taps 100 ns apart -> 50 ns spread
  Pdp two;
  two.taps = {{0.0, 1e-9}, {100e-9, 1e-9}};
  CHECK(rms_delay_spread_s(two) == doctest::Approx(50e-9).epsilon(1e-12));

  // random taps vs the direct formula
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Pdp pdp;
    double psum = 0, tsum = 0;
    for (int k = 0; k < 3; ++k) {
      const double t = rng.next_real(0.0, 1e-6) + k * 1e-6;
      const double p = rng.next_real(1e-12, 1e-9);
      pdp.taps.push_back({t, p});
      psum += p;
      tsum += p * t;
    }
    const double mean = tsum / psum;
    double acc = 0;
    for (const auto& t : pdp.taps) acc += t.power_w * (t.delay_s - mean) * (t.delay_s - mean);
    const double expected = std::sqrt(acc / psum);
    CHECK(rms_delay_spread_s(pdp) == doctest::Approx(expected).epsilon(1e-12));
  }

  CHECK_THROWS_AS(rms_delay_spread_s(Pdp{}), ValidationError);

  // focus bounces do not reset the delay
  std::vector<PropagationPath> focus{
      one_bounce({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, BounceKind::Focus, 0.0)};
  Pdp pdpf = make_pdp(focus, wave, 0.0, iso, iso);
  CHECK(pdpf.taps[0].delay_s == doctest::Approx(2.0 / kSpeedOfLight).epsilon(1e-12));
}
