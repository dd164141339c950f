#pragma once

#include <optional>
#include <string>
#include <utility>

#include "pwe/geom.hpp"

namespace pwe {

struct Tile;  // scene.hpp

enum class Action { Steer, Focus, Absorb, Reset };

std::string to_string(Action a);

struct Band {
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;

  bool contains(double f_hz) const { return f_hz >= f_lo_hz && f_hz <= f_hi_hz; }
};

// One abstract EM function installed on a tile. Which fields are meaningful
// depends on the action:
//   Steer:  incident_dir, outgoing_dir, band
//   Focus:  incident_dir, focal_point, band
//   Absorb: band, alpha
//   Reset:  none (clears the active function)
struct TileFunction {
  Action action = Action::Reset;
  Vec3 incident_dir;   // unit, propagation direction of the impinging wave
  Vec3 outgoing_dir;   // unit, away from the surface
  Vec3 focal_point;
  Band band;
  double alpha = 1.0;  // absorption coefficient in [0,1]
};

bool operator==(const TileFunction& a, const TileFunction& b);

struct Outcome {
  enum class Status { Ok, Rejected };
  Status status = Status::Ok;
  std::string reason;                           // non-empty when rejected
  std::optional<std::string> switch_config_ref; // lookup-table key, when known

  bool ok() const { return status == Status::Ok; }
};

enum class InteractionKind { Specular, Steer, Focus, Absorb };

struct Interaction {
  InteractionKind kind = InteractionKind::Specular;
  Vec3 outgoing_dir;   // unit; unset for a terminal absorb
  Vec3 focal_point;    // focus only
  double loss_db = 0.0;
  bool terminal = false;  // absorb with alpha = 1: no outgoing ray
};

// A command record mirrors callback() one-to-one.
struct TileCommand {
  int tile_id = -1;
  TileFunction fn;
  std::string correlation_id;
};

// Interaction dispatch knobs. Wall loss comes from the tile's parent wall;
// steer/focus losses from the scenario loss model.
struct InteractParams {
  double wall_loss_db = 10.0;
  double steer_loss_db = 1.0;
  double focus_loss_db = 1.0;
  double incidence_tol_rad = deg2rad(10.0);
};

inline constexpr double kDefaultIncidenceTolDeg = 10.0;

// Validates the request against the tile geometry and, on success, installs
// it as the tile's single active function (Reset clears it). Returns a
// REJECTED outcome with a reason instead of throwing.
Outcome callback(Tile& tile, const TileFunction& request);

// EM interaction of a ray with a tile at frequency f. A configured tile whose
// band contains f and whose configured incidence matches the ray within the
// angular tolerance performs its programmed function; anything else reflects
// specularly with the parent wall's material loss.
Interaction interact(const Tile& tile, const Ray& incident, double f_hz,
                     const InteractParams& params);

// Meta-atom side bounds (lambda/10, lambda/5) for interaction frequency f.
std::pair<double, double> meta_atom_bounds_m(double f_hz);

inline constexpr double kDiodeDrainWatts = 8e-6;  // 5 V * 1.6 uA per switch

// Diode-array drain for a coated area: floor-grid meta-atom count times the
// per-diode drain, scaled by the fraction of switches driven ON.
double power_drain_watts(double area_m2, double meta_atom_side_m, double on_fraction);

}  // namespace pwe
