#pragma once

#include <span>
#include <vector>

#include "pwe/geom.hpp"

namespace pwe {

struct WaveSpec {
  double frequency_hz = 0.0;
  double bandwidth_hz = 0.0;

  double f_lo() const { return frequency_hz - bandwidth_hz / 2.0; }
  double f_hi() const { return frequency_hz + bandwidth_hz / 2.0; }
};

enum class Antenna { Isotropic, HalfWaveDipole };

// dBm <-> watts. 0 dBm = 1 mW.
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// c / f. Throws ValidationError on f <= 0.
double wavelength_m(double f_hz);

// Free-space path loss 20*log10(4*pi*d/lambda). Throws on d <= 0 or f <= 0.
double fspl_db(double d_m, double f_hz);

// Half-wave dipole power gain at polar angle theta from the antenna axis:
// 1.64 * [cos((pi/2) cos theta) / sin theta]^2, with the axial limit 0.
double dipole_gain(double theta_rad);

// Gain of a device antenna for a propagation direction; dipole axes are vertical.
double antenna_gain(Antenna antenna, const Vec3& direction);

enum class BounceKind { Specular, Steer, Focus, AbsorbRemnant };

struct Bounce {
  Vec3 point;
  BounceKind kind = BounceKind::Specular;
  double loss_db = 0.0;
  int tile_id = -1;     // set when the bounce happened on a tile
  int wall_index = -1;  // set for wall-surface bounces
};

// Ordered TX -> (bounce points) -> RX polyline.
struct PropagationPath {
  Vec3 start;
  Vec3 end;
  std::vector<Bounce> bounces;

  std::vector<Vec3> vertices() const;
  int segment_count() const { return static_cast<int>(bounces.size()) + 1; }
  double total_length_m() const;
};

// Link budget over one path. Spreading loss is FSPL over the cumulative
// unfolded distance, except that every FOCUS bounce restarts the spreading
// at the focusing tile (lens behavior). Antenna gains apply at the endpoints
// only, evaluated on the first/last segment directions.
double path_power_dbm(const PropagationPath& path, const WaveSpec& wave,
                      double tx_power_dbm, Antenna tx_antenna, Antenna rx_antenna);

// Non-coherent aggregation: per-path watts summed. Empty input and any total
// below the floor report the disconnect floor.
double aggregate_power_dbm(std::span<const double> path_powers_dbm, double floor_dbm);

// Coherent aggregation: complex sum of sqrt(P_i) * exp(-j*2*pi*d_i/lambda)
// with d_i the unfolded geometric path length (no lens reset for phase).
double aggregate_power_coherent_dbm(std::span<const double> path_powers_dbm,
                                    std::span<const double> path_lengths_m,
                                    double lambda_m, double floor_dbm);

struct PdpTap {
  double delay_s = 0.0;
  double power_w = 0.0;
};

// Power-delay profile: taps strictly sorted by delay (equal delays merged).
struct Pdp {
  std::vector<PdpTap> taps;
};

// One tap per path at delay = geometric length / c (focus bounces do not
// shorten the delay; the wave still travels the full polyline).
Pdp make_pdp(std::span<const PropagationPath> paths, const WaveSpec& wave,
             double tx_power_dbm, Antenna tx_antenna, Antenna rx_antenna);

// sqrt(sum p_i (t_i - t_mean)^2 / sum p_i), t_mean power-weighted.
// Throws ValidationError on an empty profile.
double rms_delay_spread_s(const Pdp& pdp);

}  // namespace pwe
