#include "pwe/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pwe/errors.hpp"
#include "pwe/tiles.hpp"

namespace pwe {

namespace {

InteractParams interact_params(const Scenario& s, const Wall& wall, const TraceConfig& cfg) {
  InteractParams p;
  p.wall_loss_db = wall.reflection_loss_db;
  p.steer_loss_db = s.losses.steer_db;
  p.focus_loss_db = s.losses.focus_db;
  p.incidence_tol_rad = cfg.incidence_tol_rad;
  return p;
}

// Intersection of the segment from `a` toward `b` with the wall's face plane,
// strictly between the endpoints and inside the rectangle.
bool plane_hit(const Wall& w, const Vec3& a, const Vec3& b, Vec3* hit) {
  const Vec3 d = b - a;
  const double denom = dot(d, w.normal);
  if (std::abs(denom) < 1e-15) return false;
  const double t = dot(w.corner - a, w.normal) / denom;
  if (t <= 1e-9 || t >= 1.0 - 1e-9) return false;
  const Vec3 p = a + d * t;
  const Vec3 rel = p - w.corner;
  const double u = dot(rel, w.edge_u.normalized());
  const double v = dot(rel, w.edge_v.normalized());
  if (u < 0.0 || u > w.width_m() || v < 0.0 || v > w.height_m()) return false;
  *hit = p;
  return true;
}

// Resolves what a specular bounce at `point` on wall `wi` does to a ray with
// direction `dir`. Returns false when the surface does not reflect the mirror
// direction there (programmed steer/focus or terminal absorption).
bool specular_response(const Scenario& s, int wi, const Vec3& point, const Vec3& dir,
                       const TraceConfig& cfg, Bounce* bounce) {
  const Wall& wall = s.walls[wi];
  bounce->point = point;
  bounce->wall_index = wi;
  bounce->kind = BounceKind::Specular;
  bounce->loss_db = wall.reflection_loss_db;
  bounce->tile_id = -1;
  if (!wall.coated) return true;
  const auto tid = s.tile_at(wi, point);
  if (!tid) return true;
  const Tile* tile = s.tile_by_id(*tid);
  bounce->tile_id = tile->id;
  const Interaction inter =
      interact(*tile, Ray{point, dir}, s.wave.frequency_hz, interact_params(s, wall, cfg));
  switch (inter.kind) {
    case InteractionKind::Specular:
      bounce->loss_db = inter.loss_db;
      return true;
    case InteractionKind::Absorb:
      if (inter.terminal) return false;
      bounce->kind = BounceKind::AbsorbRemnant;
      bounce->loss_db = inter.loss_db;
      return true;
    case InteractionKind::Steer:
    case InteractionKind::Focus:
      return false;  // the programmed function owns this incidence
  }
  return false;
}

void specular_paths(const Scenario& s, const Device& tx, const Device& rx,
                    const TraceConfig& cfg, std::vector<PropagationPath>* out) {
  const int nwalls = static_cast<int>(s.walls.size());
  std::vector<int> seq;

  // depth-first over wall index sequences (consecutive walls distinct)
  auto expand = [&](auto&& self, int depth) -> void {
    if (depth > 0) {
      // mirror TX through the sequence
      std::vector<Vec3> images(seq.size() + 1);
      images[0] = tx.position;
      for (size_t k = 0; k < seq.size(); ++k) {
        const Wall& w = s.walls[seq[k]];
        images[k + 1] = mirror_point(images[k], w.corner, w.normal);
      }
      // back-substitute bounce points from RX toward TX
      std::vector<Vec3> pts(seq.size());
      Vec3 cursor = rx.position;
      bool ok = true;
      for (int k = static_cast<int>(seq.size()) - 1; k >= 0 && ok; --k) {
        ok = plane_hit(s.walls[seq[k]], cursor, images[k + 1], &pts[k]);
        if (ok) cursor = pts[k];
      }
      if (ok) {
        PropagationPath path;
        path.start = tx.position;
        path.end = rx.position;
        Vec3 prev = tx.position;
        for (size_t k = 0; k < pts.size() && ok; ++k) {
          const Vec3 dir = (pts[k] - prev).normalized();
          if (!(dot(dir, s.walls[seq[k]].normal) < 0.0)) {
            ok = false;  // must hit the coated face from the front
            break;
          }
          Bounce b;
          if (!specular_response(s, seq[k], pts[k], dir, cfg, &b)) {
            ok = false;
            break;
          }
          path.bounces.push_back(b);
          prev = pts[k];
        }
        if (ok) {
          const auto verts = path.vertices();
          for (size_t i = 1; i < verts.size() && ok; ++i) {
            if (distance(verts[i - 1], verts[i]) < 1e-9 ||
                occluded(verts[i - 1], verts[i], s))
              ok = false;
          }
          if (ok) out->push_back(std::move(path));
        }
      }
    }
    if (depth == cfg.max_specular) return;
    for (int wi = 0; wi < nwalls; ++wi) {
      if (!seq.empty() && seq.back() == wi) continue;
      seq.push_back(wi);
      self(self, depth + 1);
      seq.pop_back();
    }
  };
  expand(expand, 0);
}

struct HopState {
  std::vector<const Tile*> chain;
  std::vector<Bounce> bounces;
};

bool front_of(const Tile& t, const Vec3& p) { return dot(p - t.center, t.normal) > 0.0; }

void tile_hop_paths(const Scenario& s, const Device& tx, const Device& rx,
                    const TraceConfig& cfg, std::vector<PropagationPath>* out) {
  std::vector<const Tile*> configured;
  for (const Tile& t : s.tiles)
    if (t.active) configured.push_back(&t);
  std::sort(configured.begin(), configured.end(),
            [](const Tile* a, const Tile* b) { return a->id < b->id; });
  if (configured.empty()) return;

  HopState st;

  auto emit = [&]() {
    PropagationPath path;
    path.start = tx.position;
    path.end = rx.position;
    path.bounces = st.bounces;
    out->push_back(std::move(path));
  };

  auto extend = [&](auto&& self, const Tile& tile, const Interaction& inter) -> void {
    const bool steer = inter.kind == InteractionKind::Steer;

    // terminal hop to the receiver
    if (steer) {
      const Vec3 to_rx = (rx.position - tile.center).normalized();
      if (front_of(tile, rx.position) &&
          angle_between(inter.outgoing_dir, to_rx) <= cfg.incidence_tol_rad &&
          !occluded(tile.center, rx.position, s)) {
        emit();
      }
    } else {
      if (distance(inter.focal_point, rx.position) <= cfg.focal_tol_m &&
          !occluded(tile.center, rx.position, s)) {
        emit();
      }
    }

    if (static_cast<int>(st.chain.size()) >= cfg.max_tile_hops) return;

    for (const Tile* next : configured) {
      if (std::find(st.chain.begin(), st.chain.end(), next) != st.chain.end()) continue;
      const Vec3 span = next->center - tile.center;
      if (span.norm() < 1e-9) continue;
      const Vec3 dir = span.normalized();
      if (steer) {
        if (angle_between(inter.outgoing_dir, dir) > cfg.incidence_tol_rad) continue;
      } else {
        if (distance(inter.focal_point, next->center) > cfg.focal_tol_m) continue;
      }
      if (!front_of(tile, next->center) || !front_of(*next, tile.center)) continue;
      if (occluded(tile.center, next->center, s)) continue;
      const Interaction ni = interact(*next, Ray{tile.center, dir}, s.wave.frequency_hz,
                                      interact_params(s, s.walls[next->wall_index], cfg));
      if (ni.kind == InteractionKind::Specular) continue;  // not a programmed hop
      if (ni.kind == InteractionKind::Absorb) continue;    // chain ends, nothing forwarded
      st.chain.push_back(next);
      st.bounces.push_back({next->center,
                            ni.kind == InteractionKind::Steer ? BounceKind::Steer : BounceKind::Focus,
                            ni.loss_db, next->id, next->wall_index});
      self(self, *next, ni);
      st.bounces.pop_back();
      st.chain.pop_back();
    }
  };

  for (const Tile* first : configured) {
    if (!front_of(*first, tx.position)) continue;
    const Vec3 span = first->center - tx.position;
    if (span.norm() < 1e-9) continue;
    const Vec3 dir = span.normalized();
    if (occluded(tx.position, first->center, s)) continue;
    const Interaction inter = interact(*first, Ray{tx.position, dir}, s.wave.frequency_hz,
                                       interact_params(s, s.walls[first->wall_index], cfg));
    if (inter.kind == InteractionKind::Specular || inter.kind == InteractionKind::Absorb)
      continue;  // only programmed steer/focus starts an air-route hop
    st.chain.push_back(first);
    st.bounces.push_back({first->center,
                          inter.kind == InteractionKind::Steer ? BounceKind::Steer : BounceKind::Focus,
                          inter.loss_db, first->id, first->wall_index});
    extend(extend, *first, inter);
    st.bounces.pop_back();
    st.chain.pop_back();
  }
}

}  // namespace

std::vector<PropagationPath> trace_paths(const Scenario& scenario, const Device& tx,
                                         const Device& rx, const TraceConfig& cfg) {
  std::vector<PropagationPath> paths;
  if (distance(tx.position, rx.position) > 0.0 && !occluded(tx.position, rx.position, scenario)) {
    PropagationPath direct;
    direct.start = tx.position;
    direct.end = rx.position;
    paths.push_back(direct);
  }
  specular_paths(scenario, tx, rx, cfg, &paths);
  tile_hop_paths(scenario, tx, rx, cfg, &paths);
  return paths;
}

double received_power_dbm(const Scenario& scenario, const Device& tx, const Device& rx,
                          const TraceConfig& cfg) {
  const auto paths = trace_paths(scenario, tx, rx, cfg);
  std::vector<double> powers;
  powers.reserve(paths.size());
  for (const auto& p : paths)
    powers.push_back(path_power_dbm(p, scenario.wave, tx.tx_power_dbm, tx.antenna, rx.antenna));
  if (!cfg.coherent) return aggregate_power_dbm(powers, scenario.disconnect_floor_dbm);
  std::vector<double> lengths;
  lengths.reserve(paths.size());
  for (const auto& p : paths) lengths.push_back(p.total_length_m());
  return aggregate_power_coherent_dbm(powers, lengths, wavelength_m(scenario.wave.frequency_hz),
                                      scenario.disconnect_floor_dbm);
}

CoverageGrid coverage_map(const Scenario& scenario, const Device& tx, const GridSpec& grid,
                          const TraceConfig& cfg) {
  if (!(grid.cell_m > 0.0)) throw ValidationError("coverage_map: cell size must be > 0");
  if (grid.height_m < 0.0 || grid.height_m > scenario.bounds.height_m)
    throw ValidationError("coverage_map: grid height outside bounds");

  CoverageGrid out;
  out.cell_m = grid.cell_m;
  out.height_m = grid.height_m;
  out.nx = std::max(1, static_cast<int>(std::floor(scenario.bounds.length_m / grid.cell_m + 1e-9)));
  out.ny = std::max(1, static_cast<int>(std::floor(scenario.bounds.width_m / grid.cell_m + 1e-9)));
  out.x0 = grid.cell_m / 2.0;
  out.y0 = grid.cell_m / 2.0;
  out.dbm.assign(static_cast<size_t>(out.nx) * out.ny, scenario.disconnect_floor_dbm);

  Device probe;
  probe.id = "probe";
  probe.role = Role::Receiver;
  probe.antenna = Antenna::Isotropic;

  const double guard = grid.cell_m / 2.0;
  std::vector<int> guarded;
  for (int iy = 0; iy < out.ny; ++iy) {
    for (int ix = 0; ix < out.nx; ++ix) {
      const Vec3 center{out.x0 + ix * grid.cell_m, out.y0 + iy * grid.cell_m, grid.height_m};
      const int idx = iy * out.nx + ix;
      if (distance(center, tx.position) < guard) {
        guarded.push_back(idx);  // singular cell, filled below
        continue;
      }
      probe.position = center;
      out.dbm[idx] = received_power_dbm(scenario, tx, probe, cfg);
    }
  }
  for (int idx : guarded) {
    const int ix = idx % out.nx, iy = idx / out.nx;
    const Vec3 center{out.x0 + ix * grid.cell_m, out.y0 + iy * grid.cell_m, grid.height_m};
    double best = 1e300;
    int nearest = -1;
    for (int j = 0; j < out.nx * out.ny; ++j) {
      if (std::find(guarded.begin(), guarded.end(), j) != guarded.end()) continue;
      const Vec3 c2{out.x0 + (j % out.nx) * grid.cell_m, out.y0 + (j / out.nx) * grid.cell_m,
                    grid.height_m};
      const double d = distance(center, c2);
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    if (nearest >= 0) out.dbm[idx] = out.dbm[nearest];
  }
  return out;
}

std::string coverage_to_csv(const CoverageGrid& grid) {
  std::ostringstream os;
  char buf[64];
  os << "nx,ny,cell_m,height_m,x0,y0\n";
  std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f\n", grid.nx, grid.ny, grid.cell_m,
                grid.height_m, grid.x0, grid.y0);
  os << buf;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      std::snprintf(buf, sizeof buf, "%.6f", grid.at(ix, iy));
      os << buf << (ix + 1 == grid.nx ? "\n" : ",");
    }
  }
  return os.str();
}

CoverageGrid coverage_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string header, values;
  if (!std::getline(is, header) || header != "nx,ny,cell_m,height_m,x0,y0")
    throw ParseError("coverage csv: bad header");
  if (!std::getline(is, values)) throw ParseError("coverage csv: missing metadata row");
  CoverageGrid grid;
  if (std::sscanf(values.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &grid.nx, &grid.ny, &grid.cell_m,
                  &grid.height_m, &grid.x0, &grid.y0) != 6)
    throw ParseError("coverage csv: bad metadata row");
  if (grid.nx <= 0 || grid.ny <= 0) throw ParseError("coverage csv: bad grid size");
  grid.dbm.reserve(static_cast<size_t>(grid.nx) * grid.ny);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) grid.dbm.push_back(std::stod(cell));
  }
  if (grid.dbm.size() != static_cast<size_t>(grid.nx) * grid.ny)
    throw ParseError("coverage csv: value count mismatch");
  return grid;
}

}  // namespace pwe
