#include "pwe/tiles.hpp"

#include <cmath>

#include "pwe/emwave.hpp"
#include "pwe/errors.hpp"
#include "pwe/scene.hpp"

namespace pwe {

std::string to_string(Action a) {
  switch (a) {
    case Action::Steer: return "STEER";
    case Action::Focus: return "FOCUS";
    case Action::Absorb: return "ABSORB";
    case Action::Reset: return "RESET";
  }
  return "?";
}

bool operator==(const TileFunction& a, const TileFunction& b) {
  if (a.action != b.action) return false;
  auto eq = [](const Vec3& u, const Vec3& v) { return u.x == v.x && u.y == v.y && u.z == v.z; };
  switch (a.action) {
    case Action::Steer:
      return eq(a.incident_dir, b.incident_dir) && eq(a.outgoing_dir, b.outgoing_dir) &&
             a.band.f_lo_hz == b.band.f_lo_hz && a.band.f_hi_hz == b.band.f_hi_hz;
    case Action::Focus:
      return eq(a.incident_dir, b.incident_dir) && eq(a.focal_point, b.focal_point) &&
             a.band.f_lo_hz == b.band.f_lo_hz && a.band.f_hi_hz == b.band.f_hi_hz;
    case Action::Absorb:
      return a.alpha == b.alpha && a.band.f_lo_hz == b.band.f_lo_hz &&
             a.band.f_hi_hz == b.band.f_hi_hz;
    case Action::Reset:
      return true;
  }
  return false;
}

namespace {

Outcome rejected(std::string reason) {
  return Outcome{Outcome::Status::Rejected, std::move(reason), std::nullopt};
}

bool normalize_dir(Vec3& d) {
  const double n = d.norm();
  if (!(n > 1e-12) || !d.finite()) return false;
  d = d / n;
  return true;
}

}  // namespace

Outcome callback(Tile& tile, const TileFunction& request) {
  TileFunction fn = request;

  if (fn.action == Action::Reset) {
    tile.active.reset();
    return Outcome{};
  }

  if (fn.band.f_lo_hz > fn.band.f_hi_hz)
    return rejected("band: f_lo must be <= f_hi");
  if (!(fn.band.f_lo_hz > 0.0))
    return rejected("band: frequencies must be > 0");

  switch (fn.action) {
    case Action::Steer: {
      if (!normalize_dir(fn.incident_dir)) return rejected("STEER: missing incident direction");
      if (!normalize_dir(fn.outgoing_dir)) return rejected("STEER: missing outgoing direction");
      if (!(dot(fn.outgoing_dir, tile.normal) > 0.0))
        return rejected("STEER: outgoing direction points into the wall");
      break;
    }
    case Action::Focus: {
      if (!normalize_dir(fn.incident_dir)) return rejected("FOCUS: missing incident direction");
      if (!fn.focal_point.finite()) return rejected("FOCUS: missing focal point");
      if (!(dot(fn.focal_point - tile.center, tile.normal) > 0.0))
        return rejected("FOCUS: focal point behind the wall");
      break;
    }
    case Action::Absorb: {
      if (!(fn.alpha >= 0.0 && fn.alpha <= 1.0))
        return rejected("ABSORB: alpha must be in [0,1]");
      break;
    }
    case Action::Reset:
      break;
  }

  tile.active = fn;  // at most one active function per tile
  return Outcome{};
}

Interaction interact(const Tile& tile, const Ray& incident, double f_hz,
                     const InteractParams& params) {
  if (!(dot(incident.dir, tile.normal) < 0.0))
    throw ValidationError("interact: ray does not hit the tile front face");

  if (tile.active && tile.active->band.contains(f_hz)) {
    const TileFunction& fn = *tile.active;
    switch (fn.action) {
      case Action::Absorb: {
        Interaction out;
        out.kind = InteractionKind::Absorb;
        if (fn.alpha >= 1.0) {
          out.terminal = true;
          out.loss_db = 0.0;  // nothing leaves; loss is moot
        } else {
          out.outgoing_dir = reflect(incident.dir, tile.normal);
          out.loss_db = -10.0 * std::log10(1.0 - fn.alpha);
        }
        return out;
      }
      case Action::Steer:
        if (angle_between(incident.dir, fn.incident_dir) <= params.incidence_tol_rad) {
          Interaction out;
          out.kind = InteractionKind::Steer;
          out.outgoing_dir = fn.outgoing_dir;
          out.loss_db = params.steer_loss_db;
          return out;
        }
        break;
      case Action::Focus:
        if (angle_between(incident.dir, fn.incident_dir) <= params.incidence_tol_rad) {
          Interaction out;
          out.kind = InteractionKind::Focus;
          out.focal_point = fn.focal_point;
          out.outgoing_dir = (fn.focal_point - tile.center).normalized();
          out.loss_db = params.focus_loss_db;
          return out;
        }
        break;
      case Action::Reset:
        break;
    }
  }

  Interaction out;
  out.kind = InteractionKind::Specular;
  out.outgoing_dir = reflect(incident.dir, tile.normal);
  out.loss_db = params.wall_loss_db;
  return out;
}

std::pair<double, double> meta_atom_bounds_m(double f_hz) {
  const double lambda = wavelength_m(f_hz);
  return {lambda / 10.0, lambda / 5.0};
}

double power_drain_watts(double area_m2, double meta_atom_side_m, double on_fraction) {
  if (!(area_m2 > 0.0)) throw ValidationError("power_drain: area must be > 0");
  if (!(meta_atom_side_m > 0.0)) throw ValidationError("power_drain: side must be > 0");
  if (!(on_fraction >= 0.0 && on_fraction <= 1.0))
    throw ValidationError("power_drain: on_fraction must be in [0,1]");
  const double n = area_m2 / (meta_atom_side_m * meta_atom_side_m);
  // tolerate representation error in exact multiples before flooring
  const double count = std::floor(n + 1e-9 * std::max(1.0, n));
  return count * kDiodeDrainWatts * on_fraction;
}

}  // namespace pwe
