#include "pwe/emwave.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "pwe/errors.hpp"

namespace pwe {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double wavelength_m(double f_hz) {
  if (!(f_hz > 0.0)) throw ValidationError("wavelength: frequency must be > 0");
  return kSpeedOfLight / f_hz;
}

double fspl_db(double d_m, double f_hz) {
  if (!(d_m > 0.0)) throw ValidationError("fspl: distance must be > 0");
  const double lambda = wavelength_m(f_hz);
  return 20.0 * std::log10(4.0 * kPi * d_m / lambda);
}

double dipole_gain(double theta_rad) {
  const double s = std::sin(theta_rad);
  if (std::abs(s) < 1e-9) return 0.0;  // axial null
  const double num = std::cos(kPi / 2.0 * std::cos(theta_rad));
  const double v = num / s;
  return 1.64 * v * v;
}

double antenna_gain(Antenna antenna, const Vec3& direction) {
  switch (antenna) {
    case Antenna::Isotropic:
      return 1.0;
    case Antenna::HalfWaveDipole:
      return dipole_gain(polar_angle(direction));
  }
  return 1.0;
}

std::vector<Vec3> PropagationPath::vertices() const {
  std::vector<Vec3> v;
  v.reserve(bounces.size() + 2);
  v.push_back(start);
  for (const Bounce& b : bounces) v.push_back(b.point);
  v.push_back(end);
  return v;
}

double PropagationPath::total_length_m() const {
  const auto v = vertices();
  double len = 0.0;
  for (size_t i = 1; i < v.size(); ++i) len += distance(v[i - 1], v[i]);
  return len;
}

double path_power_dbm(const PropagationPath& path, const WaveSpec& wave,
                      double tx_power_dbm, Antenna tx_antenna, Antenna rx_antenna) {
  const auto v = path.vertices();
  if (v.size() < 2 || distance(v.front(), v.back()) == 0.0 || path.segment_count() < 1)
    throw ValidationError("path_power: path must have at least one segment");

  double bounce_loss_db = 0.0;
  double spread_m = 0.0;  // cumulative unfolded distance since TX or last focus
  for (size_t i = 1; i < v.size(); ++i) {
    const double seg = distance(v[i - 1], v[i]);
    if (!(seg > 0.0)) throw ValidationError("path_power: zero-length segment");
    spread_m += seg;
    if (i - 1 < path.bounces.size()) {
      const Bounce& b = path.bounces[i - 1];
      bounce_loss_db += b.loss_db;
      if (b.kind == BounceKind::Focus) spread_m = 0.0;  // lens: spreading restarts here
    }
  }

  const Vec3 depart = (v[1] - v[0]).normalized();
  const Vec3 arrive = (v[v.size() - 1] - v[v.size() - 2]).normalized();
  const double gtx_dbi = 10.0 * std::log10(std::max(antenna_gain(tx_antenna, depart), 1e-300));
  const double grx_dbi = 10.0 * std::log10(std::max(antenna_gain(rx_antenna, arrive), 1e-300));

  return tx_power_dbm + gtx_dbi + grx_dbi - bounce_loss_db - fspl_db(spread_m, wave.frequency_hz);
}

double aggregate_power_dbm(std::span<const double> path_powers_dbm, double floor_dbm) {
  if (path_powers_dbm.empty()) return floor_dbm;
  double watts = 0.0;
  for (double p : path_powers_dbm) watts += dbm_to_watts(p);
  return std::max(watts_to_dbm(watts), floor_dbm);
}

double aggregate_power_coherent_dbm(std::span<const double> path_powers_dbm,
                                    std::span<const double> path_lengths_m,
                                    double lambda_m, double floor_dbm) {
  if (path_powers_dbm.empty()) return floor_dbm;
  std::complex<double> field{0.0, 0.0};
  for (size_t i = 0; i < path_powers_dbm.size(); ++i) {
    const double amp = std::sqrt(dbm_to_watts(path_powers_dbm[i]));
    const double phase = -2.0 * kPi * path_lengths_m[i] / lambda_m;
    field += std::polar(amp, phase);
  }
  const double watts = std::norm(field);
  if (watts <= 0.0) return floor_dbm;
  return std::max(watts_to_dbm(watts), floor_dbm);
}

Pdp make_pdp(std::span<const PropagationPath> paths, const WaveSpec& wave,
             double tx_power_dbm, Antenna tx_antenna, Antenna rx_antenna) {
  std::vector<PdpTap> taps;
  taps.reserve(paths.size());
  for (const PropagationPath& p : paths) {
    const double delay = p.total_length_m() / kSpeedOfLight;
    const double watts = dbm_to_watts(path_power_dbm(p, wave, tx_power_dbm, tx_antenna, rx_antenna));
    taps.push_back({delay, watts});
  }
  std::sort(taps.begin(), taps.end(),
            [](const PdpTap& a, const PdpTap& b) { return a.delay_s < b.delay_s; });
  // merge equal delays so delays stay strictly sorted
  Pdp out;
  for (const PdpTap& t : taps) {
    if (!out.taps.empty() && t.delay_s == out.taps.back().delay_s) {
      out.taps.back().power_w += t.power_w;
    } else {
      out.taps.push_back(t);
    }
  }
  return out;
}

double rms_delay_spread_s(const Pdp& pdp) {
  if (pdp.taps.empty()) throw ValidationError("rms_delay_spread: empty profile");
  double psum = 0.0, tsum = 0.0;
  for (const PdpTap& t : pdp.taps) {
    psum += t.power_w;
    tsum += t.power_w * t.delay_s;
  }
  if (psum <= 0.0) throw ValidationError("rms_delay_spread: zero total power");
  const double mean = tsum / psum;
  double acc = 0.0;
  for (const PdpTap& t : pdp.taps) {
    const double d = t.delay_s - mean;
    acc += t.power_w * d * d;
  }
  return std::sqrt(acc / psum);
}

}  // namespace pwe
