#pragma once

#include <string>
#include <vector>

#include "pwe/scene.hpp"
#include "pwe/tiles.hpp"

namespace pwe::test {

inline Wall make_wall(std::string id, Vec3 corner, Vec3 eu, Vec3 ev, Vec3 n,
                      bool coated = true, double thickness = 0.1) {
  Wall w;
  w.id = std::move(id);
  w.corner = corner;
  w.edge_u = eu;
  w.edge_v = ev;
  w.normal = n;
  w.thickness_m = thickness;
  w.reflection_loss_db = 10.0;
  w.coated = coated;
  return w;
}

inline Device make_device(std::string id, Role role, Vec3 pos,
                          Antenna ant = Antenna::Isotropic, double tx_dbm = 0.0) {
  Device d;
  d.id = std::move(id);
  d.role = role;
  d.position = pos;
  d.antenna = ant;
  d.tx_power_dbm = tx_dbm;
  return d;
}

// Assembles a scenario: generates the tile grid of every coated wall and
// validates. Wave defaults to the 60 GHz evaluation band.
inline Scenario make_scenario(Bounds bounds, std::vector<Wall> walls,
                              std::vector<Device> devices, double tile_side = 1.0) {
  Scenario s;
  s.bounds = bounds;
  s.wave = {60e9, 25e6};
  s.tile_side_m = tile_side;
  s.walls = std::move(walls);
  s.devices = std::move(devices);
  int next_id = 0;
  for (size_t wi = 0; wi < s.walls.size(); ++wi) {
    if (!s.walls[wi].coated) continue;
    auto grid = tile_surface(s.walls[wi], tile_side, static_cast<int>(wi), next_id);
    next_id += static_cast<int>(grid.size());
    s.tiles.insert(s.tiles.end(), grid.begin(), grid.end());
  }
  s.finalize();
  return s;
}

inline Band scenario_band(const Scenario& s) {
  return Band{s.wave.f_lo(), s.wave.f_hi()};
}

inline Outcome configure_steer(Scenario& s, int tile_id, Vec3 incident, Vec3 outgoing) {
  TileFunction fn;
  fn.action = Action::Steer;
  fn.incident_dir = incident;
  fn.outgoing_dir = outgoing;
  fn.band = scenario_band(s);
  return callback(*s.tile_by_id(tile_id), fn);
}

inline Outcome configure_focus(Scenario& s, int tile_id, Vec3 incident, Vec3 focal) {
  TileFunction fn;
  fn.action = Action::Focus;
  fn.incident_dir = incident;
  fn.focal_point = focal;
  fn.band = scenario_band(s);
  return callback(*s.tile_by_id(tile_id), fn);
}

inline Outcome configure_absorb(Scenario& s, int tile_id, double alpha = 1.0) {
  TileFunction fn;
  fn.action = Action::Absorb;
  fn.alpha = alpha;
  fn.band = scenario_band(s);
  return callback(*s.tile_by_id(tile_id), fn);
}

}  // namespace pwe::test
