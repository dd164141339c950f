#include "pwe/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pwe/errors.hpp"

namespace pwe {

namespace {

constexpr double kOrthoTol = 1e-9;
constexpr double kUnitTol = 1e-9;

// Shrink applied to wall slabs during occlusion tests so that segments
// starting, ending, or grazing exactly on a surface do not register.
constexpr double kSurfaceEps = 1e-9;

bool nearly_integer(double x, double* rounded) {
  const double r = std::round(x);
  *rounded = r;
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x));
}

// Intersection of segment p + t(q-p), t in [0,1], with the wall slab
// (the box extending `thickness` behind the face). Returns true when the
// overlap interval has positive length.
bool segment_hits_slab(const Vec3& p, const Vec3& q, const Wall& w) {
  const Vec3 u = w.edge_u.normalized();
  const Vec3 v = w.edge_v.normalized();
  const Vec3& n = w.normal;
  const Vec3 d = q - p;
  const Vec3 rel = p - w.corner;

  const double o[3] = {dot(rel, u), dot(rel, v), dot(rel, n)};
  const double dir[3] = {dot(d, u), dot(d, v), dot(d, n)};
  const double lo[3] = {kSurfaceEps, kSurfaceEps, -w.thickness_m + kSurfaceEps};
  const double hi[3] = {w.width_m() - kSurfaceEps, w.height_m() - kSurfaceEps, -kSurfaceEps};

  double t0 = 0.0, t1 = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - o[a]) / dir[a];
    double tb = (hi[a] - o[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return t1 - t0 > 1e-12;
}

}  // namespace

std::string to_string(Role r) {
  switch (r) {
    case Role::Transmitter: return "transmitter";
    case Role::Receiver: return "receiver";
    case Role::Unauthorized: return "unauthorized";
  }
  return "?";
}

std::vector<Tile> tile_surface(const Wall& wall, double side_m, int wall_index, int first_id) {
  if (!(side_m > 0.0)) throw ValidationError("tile_surface: side length > 0 violated");

  const double wu = wall.width_m();
  const double wv = wall.height_m();
  double nu_d = 0.0, nv_d = 0.0;
  if (!nearly_integer(wu / side_m, &nu_d) || !nearly_integer(wv / side_m, &nv_d)) {
    std::ostringstream msg;
    msg << "tile_surface: wall '" << wall.id << "' dimensions (" << wu << " x " << wv
        << ") are not integer multiples of side " << side_m
        << " (remainders " << std::fmod(wu, side_m) << ", " << std::fmod(wv, side_m) << ")";
    throw ValidationError(msg.str());
  }
  const int nu = static_cast<int>(nu_d);
  const int nv = static_cast<int>(nv_d);

  const Vec3 u = wall.edge_u.normalized();
  const Vec3 v = wall.edge_v.normalized();
  std::vector<Tile> out;
  out.reserve(static_cast<size_t>(nu) * nv);
  for (int iv = 0; iv < nv; ++iv) {
    for (int iu = 0; iu < nu; ++iu) {
      Tile t;
      t.id = first_id + iv * nu + iu;
      t.wall_index = wall_index;
      t.center = wall.corner + u * ((iu + 0.5) * side_m) + v * ((iv + 0.5) * side_m);
      t.normal = wall.normal;
      t.side_m = side_m;
      out.push_back(t);
    }
  }
  return out;
}

bool occluded(const Vec3& p, const Vec3& q, const Scenario& scenario) {
  if (distance(p, q) == 0.0) throw ValidationError("occluded: p and q must differ");
  for (const Wall& w : scenario.walls) {
    if (segment_hits_slab(p, q, w)) return true;
  }
  return false;
}

void Scenario::finalize() {
  if (!(bounds.length_m > 0.0 && bounds.width_m > 0.0 && bounds.height_m > 0.0))
    throw ValidationError("bounds: all dimensions must be > 0");
  if (!(wave.frequency_hz > 0.0)) throw ValidationError("wave: frequency > 0 violated");
  if (!(wave.bandwidth_hz >= 0.0)) throw ValidationError("wave: bandwidth >= 0 violated");

  for (size_t i = 0; i < walls.size(); ++i) {
    const Wall& w = walls[i];
    if (!w.corner.finite() || !w.edge_u.finite() || !w.edge_v.finite() || !w.normal.finite())
      throw ValidationError("wall '" + w.id + "': non-finite geometry");
    if (std::abs(dot(w.edge_u, w.edge_v)) > kOrthoTol * std::max(1.0, w.edge_u.norm() * w.edge_v.norm()))
      throw ValidationError("wall '" + w.id + "': edge vectors not orthogonal");
    if (std::abs(w.normal.norm() - 1.0) > kUnitTol)
      throw ValidationError("wall '" + w.id + "': normal not unit length");
    if (std::abs(dot(w.normal, w.edge_u)) > kOrthoTol * std::max(1.0, w.edge_u.norm()) ||
        std::abs(dot(w.normal, w.edge_v)) > kOrthoTol * std::max(1.0, w.edge_v.norm()))
      throw ValidationError("wall '" + w.id + "': normal not orthogonal to edges");
    if (!(w.thickness_m > 0.0)) throw ValidationError("wall '" + w.id + "': thickness > 0 violated");
    if (!(w.reflection_loss_db >= 0.0))
      throw ValidationError("wall '" + w.id + "': reflection loss >= 0 violated");
    for (size_t j = 0; j < i; ++j)
      if (walls[j].id == w.id) throw ValidationError("duplicate wall id '" + w.id + "'");
  }

  // Tile list must be exactly the full grid of every coated wall.
  size_t expected = 0;
  std::vector<std::pair<int, int>> dims(walls.size(), {0, 0});
  for (size_t wi = 0; wi < walls.size(); ++wi) {
    if (!walls[wi].coated) continue;
    if (!(tile_side_m > 0.0)) throw ValidationError("tiling: side length > 0 violated");
    double nu_d = 0.0, nv_d = 0.0;
    if (!nearly_integer(walls[wi].width_m() / tile_side_m, &nu_d) ||
        !nearly_integer(walls[wi].height_m() / tile_side_m, &nv_d))
      throw ValidationError("wall '" + walls[wi].id + "': dimensions not a multiple of tile side");
    dims[wi] = {static_cast<int>(nu_d), static_cast<int>(nv_d)};
    expected += static_cast<size_t>(dims[wi].first) * dims[wi].second;
  }
  if (tiles.size() != expected)
    throw ValidationError("tile list inconsistent with coated walls");

  grids_.assign(walls.size(), WallGrid{});
  for (size_t wi = 0; wi < walls.size(); ++wi) {
    if (!walls[wi].coated) continue;
    grids_[wi].nu = dims[wi].first;
    grids_[wi].nv = dims[wi].second;
    grids_[wi].tile_ids.assign(static_cast<size_t>(dims[wi].first) * dims[wi].second, -1);
  }

  int max_id = -1;
  for (const Tile& t : tiles) max_id = std::max(max_id, t.id);
  tile_pos_by_id_.assign(static_cast<size_t>(max_id + 1), -1);

  for (size_t ti = 0; ti < tiles.size(); ++ti) {
    const Tile& t = tiles[ti];
    if (!(t.side_m > 0.0)) throw ValidationError("tile: side length > 0 violated");
    if (t.wall_index < 0 || t.wall_index >= static_cast<int>(walls.size()) ||
        !walls[t.wall_index].coated)
      throw ValidationError("tile: parent wall invalid");
    const Wall& w = walls[t.wall_index];
    const Vec3 rel = t.center - w.corner;
    const double cu = dot(rel, w.edge_u.normalized());
    const double cv = dot(rel, w.edge_v.normalized());
    const double cn = dot(rel, w.normal);
    if (std::abs(cn) > 1e-9 || cu < 0.0 || cu > w.width_m() || cv < 0.0 || cv > w.height_m())
      throw ValidationError("tile: center does not lie on parent wall rectangle");
    if (t.id < 0 || tile_pos_by_id_[t.id] != -1)
      throw ValidationError("tile: duplicate or negative tile id");
    tile_pos_by_id_[t.id] = static_cast<int>(ti);

    WallGrid& g = grids_[t.wall_index];
    const int iu = static_cast<int>(std::floor(cu / t.side_m));
    const int iv = static_cast<int>(std::floor(cv / t.side_m));
    const int ciu = std::clamp(iu, 0, g.nu - 1);
    const int civ = std::clamp(iv, 0, g.nv - 1);
    g.tile_ids[static_cast<size_t>(civ) * g.nu + ciu] = t.id;
  }
  for (size_t wi = 0; wi < walls.size(); ++wi) {
    for (int id : grids_[wi].tile_ids)
      if (id < 0) throw ValidationError("wall '" + walls[wi].id + "': tile grid incomplete");
  }

  for (size_t i = 0; i < devices.size(); ++i) {
    const Device& d = devices[i];
    if (!d.position.finite() || !bounds.contains(d.position))
      throw ValidationError("device '" + d.id + "': position outside scenario bounds");
    if (d.role == Role::Transmitter && !std::isfinite(d.tx_power_dbm))
      throw ValidationError("device '" + d.id + "': transmit power not finite");
    for (size_t j = 0; j < i; ++j)
      if (devices[j].id == d.id) throw ValidationError("duplicate device id '" + d.id + "'");
  }
}

const Tile* Scenario::tile_by_id(int id) const {
  if (id < 0 || id >= static_cast<int>(tile_pos_by_id_.size())) return nullptr;
  const int pos = tile_pos_by_id_[id];
  return pos < 0 ? nullptr : &tiles[pos];
}

Tile* Scenario::tile_by_id(int id) {
  return const_cast<Tile*>(static_cast<const Scenario*>(this)->tile_by_id(id));
}

const Device* Scenario::device_by_id(std::string_view id) const {
  for (const Device& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

Device* Scenario::device_by_id(std::string_view id) {
  return const_cast<Device*>(static_cast<const Scenario*>(this)->device_by_id(id));
}

std::vector<const Device*> Scenario::devices_with_role(Role role) const {
  std::vector<const Device*> out;
  for (const Device& d : devices)
    if (d.role == role) out.push_back(&d);
  return out;
}

std::optional<int> Scenario::tile_at(int wall_index, const Vec3& surface_point) const {
  if (wall_index < 0 || wall_index >= static_cast<int>(walls.size())) return std::nullopt;
  const WallGrid& g = grids_[wall_index];
  if (g.tile_ids.empty()) return std::nullopt;
  const Wall& w = walls[wall_index];
  const Vec3 rel = surface_point - w.corner;
  const double cu = dot(rel, w.edge_u.normalized());
  const double cv = dot(rel, w.edge_v.normalized());
  if (cu < 0.0 || cu > w.width_m() || cv < 0.0 || cv > w.height_m()) return std::nullopt;
  const int iu = std::clamp(static_cast<int>(std::floor(cu / tile_side_m)), 0, g.nu - 1);
  const int iv = std::clamp(static_cast<int>(std::floor(cv / tile_side_m)), 0, g.nv - 1);
  return g.tile_ids[static_cast<size_t>(iv) * g.nu + iu];
}

// -------------------- document format --------------------

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Vec3 parse_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
    throw ParseError(field + ": expected array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require(const json& j, const std::string& key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(ctx + ": missing field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field + ": expected number");
  return j.get<double>();
}

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

}  // namespace

Scenario load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario document: expected JSON object");

  Scenario s;
  const json& b = require(doc, "bounds", "scenario");
  s.bounds.length_m = number(require(b, "length_m", "bounds"), "bounds.length_m");
  s.bounds.width_m = number(require(b, "width_m", "bounds"), "bounds.width_m");
  s.bounds.height_m = number(require(b, "height_m", "bounds"), "bounds.height_m");

  const json& w = require(doc, "wave", "scenario");
  s.wave.frequency_hz = number(require(w, "frequency_hz", "wave"), "wave.frequency_hz");
  s.wave.bandwidth_hz = number(require(w, "bandwidth_hz", "wave"), "wave.bandwidth_hz");

  if (doc.contains("disconnect_threshold_dbm"))
    s.disconnect_floor_dbm = number(doc["disconnect_threshold_dbm"], "disconnect_threshold_dbm");

  const json& tiling = require(doc, "tiling", "scenario");
  s.tile_side_m = number(require(tiling, "side_m", "tiling"), "tiling.side_m");

  if (doc.contains("losses")) {
    const json& l = doc["losses"];
    if (l.contains("steer_db")) s.losses.steer_db = number(l["steer_db"], "losses.steer_db");
    if (l.contains("focus_db")) s.losses.focus_db = number(l["focus_db"], "losses.focus_db");
  }

  const json& walls = require(doc, "walls", "scenario");
  if (!walls.is_array()) throw ParseError("walls: expected array");
  for (size_t i = 0; i < walls.size(); ++i) {
    const json& jw = walls[i];
    const std::string ctx = "walls[" + std::to_string(i) + "]";
    Wall wall;
    wall.id = require(jw, "id", ctx).get<std::string>();
    wall.corner = parse_vec3(require(jw, "corner", ctx), ctx + ".corner");
    wall.edge_u = parse_vec3(require(jw, "edge_u", ctx), ctx + ".edge_u");
    wall.edge_v = parse_vec3(require(jw, "edge_v", ctx), ctx + ".edge_v");
    wall.normal = parse_vec3(require(jw, "normal", ctx), ctx + ".normal");
    wall.thickness_m = number(require(jw, "thickness_m", ctx), ctx + ".thickness_m");
    if (jw.contains("reflection_loss_db"))
      wall.reflection_loss_db = number(jw["reflection_loss_db"], ctx + ".reflection_loss_db");
    wall.coated = jw.value("coated", false);
    s.walls.push_back(wall);
  }

  const json& devices = require(doc, "devices", "scenario");
  if (!devices.is_array()) throw ParseError("devices: expected array");
  for (size_t i = 0; i < devices.size(); ++i) {
    const json& jd = devices[i];
    const std::string ctx = "devices[" + std::to_string(i) + "]";
    Device d;
    d.id = require(jd, "id", ctx).get<std::string>();
    const std::string role = require(jd, "role", ctx).get<std::string>();
    if (role == "transmitter") d.role = Role::Transmitter;
    else if (role == "receiver") d.role = Role::Receiver;
    else if (role == "unauthorized") d.role = Role::Unauthorized;
    else throw ParseError(ctx + ".role: unknown role '" + role + "'");
    d.position = parse_vec3(require(jd, "position", ctx), ctx + ".position");
    const std::string ant = jd.value("antenna", "dipole");
    if (ant == "dipole") d.antenna = Antenna::HalfWaveDipole;
    else if (ant == "isotropic") d.antenna = Antenna::Isotropic;
    else throw ParseError(ctx + ".antenna: unknown antenna '" + ant + "'");
    if (d.role == Role::Transmitter)
      d.tx_power_dbm = number(require(jd, "tx_power_dbm", ctx), ctx + ".tx_power_dbm");
    s.devices.push_back(d);
  }

  // tiles are derived: the full grid of every coated wall
  int next_id = 0;
  for (size_t wi = 0; wi < s.walls.size(); ++wi) {
    if (!s.walls[wi].coated) continue;
    auto grid = tile_surface(s.walls[wi], s.tile_side_m, static_cast<int>(wi), next_id);
    next_id += static_cast<int>(grid.size());
    s.tiles.insert(s.tiles.end(), grid.begin(), grid.end());
  }

  s.finalize();
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  ordered_json doc;
  doc["bounds"] = {{"length_m", s.bounds.length_m},
                   {"width_m", s.bounds.width_m},
                   {"height_m", s.bounds.height_m}};
  doc["wave"] = {{"frequency_hz", s.wave.frequency_hz}, {"bandwidth_hz", s.wave.bandwidth_hz}};
  doc["disconnect_threshold_dbm"] = s.disconnect_floor_dbm;
  doc["tiling"] = {{"side_m", s.tile_side_m}};
  doc["losses"] = {{"steer_db", s.losses.steer_db}, {"focus_db", s.losses.focus_db}};
  doc["walls"] = ordered_json::array();
  for (const Wall& w : s.walls) {
    ordered_json jw;
    jw["id"] = w.id;
    jw["corner"] = vec3_json(w.corner);
    jw["edge_u"] = vec3_json(w.edge_u);
    jw["edge_v"] = vec3_json(w.edge_v);
    jw["normal"] = vec3_json(w.normal);
    jw["thickness_m"] = w.thickness_m;
    jw["reflection_loss_db"] = w.reflection_loss_db;
    jw["coated"] = w.coated;
    doc["walls"].push_back(jw);
  }
  doc["devices"] = ordered_json::array();
  for (const Device& d : s.devices) {
    ordered_json jd;
    jd["id"] = d.id;
    jd["role"] = to_string(d.role);
    jd["position"] = vec3_json(d.position);
    jd["antenna"] = d.antenna == Antenna::Isotropic ? "isotropic" : "dipole";
    if (d.role == Role::Transmitter) jd["tx_power_dbm"] = d.tx_power_dbm;
    doc["devices"].push_back(jd);
  }
  return doc.dump(2) + "\n";
}

Scenario build_paper_scenario() {
  Scenario s;
  s.bounds = {15.0, 10.0, 3.0};
  s.wave = {60e9, 25e6};
  s.disconnect_floor_dbm = -250.0;
  s.tile_side_m = 1.0;

  auto wall = [](std::string id, Vec3 corner, Vec3 eu, Vec3 ev, Vec3 n, double thick) {
    Wall w;
    w.id = std::move(id);
    w.corner = corner;
    w.edge_u = eu;
    w.edge_v = ev;
    w.normal = n;
    w.thickness_m = thick;
    w.reflection_loss_db = 10.0;
    w.coated = true;
    return w;
  };

  // Perimeter walls, normals pointing into the room.
  s.walls.push_back(wall("wall-x0", {0, 0, 0}, {0, 10, 0}, {0, 0, 3}, {1, 0, 0}, 0.2));
  s.walls.push_back(wall("wall-x15", {15, 0, 0}, {0, 10, 0}, {0, 0, 3}, {-1, 0, 0}, 0.2));
  s.walls.push_back(wall("wall-y0", {0, 0, 0}, {15, 0, 0}, {0, 0, 3}, {0, 1, 0}, 0.2));
  s.walls.push_back(wall("wall-y10", {0, 10, 0}, {15, 0, 0}, {0, 0, 3}, {0, -1, 0}, 0.2));
  // Middle wall: 12 m long, 1 m thick overall, modeled as two coated faces
  // back to back (0.5 m slab each). It spans x in [0, 12]; the 3 m passage
  // is at the end away from the transmitter.
  s.walls.push_back(wall("wall-mid-a", {0, 4.5, 0}, {12, 0, 0}, {0, 0, 3}, {0, -1, 0}, 0.5));
  s.walls.push_back(wall("wall-mid-b", {0, 5.5, 0}, {12, 0, 0}, {0, 0, 3}, {0, 1, 0}, 0.5));

  int next_id = 0;
  for (size_t wi = 0; wi < s.walls.size(); ++wi) {
    auto grid = tile_surface(s.walls[wi], s.tile_side_m, static_cast<int>(wi), next_id);
    next_id += static_cast<int>(grid.size());
    s.tiles.insert(s.tiles.end(), grid.begin(), grid.end());
  }

  Device tx;
  tx.id = "tx";
  tx.role = Role::Transmitter;
  tx.position = {1.0, 2.25, 2.0};
  tx.antenna = Antenna::HalfWaveDipole;
  tx.tx_power_dbm = 100.0;
  s.devices.push_back(tx);

  // 12 receivers, 3 x 4 grid on the non-line-of-sight side, 1 m margins.
  int n = 0;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) {
      Device rx;
      char buf[16];
      std::snprintf(buf, sizeof buf, "rx%02d", ++n);
      rx.id = buf;
      rx.role = Role::Receiver;
      rx.position = {1.0 + 13.0 * col / 3.0, 6.5 + 1.25 * row, 1.5};
      rx.antenna = Antenna::HalfWaveDipole;
      s.devices.push_back(rx);
    }
  }

  s.finalize();
  return s;
}

}  // namespace pwe
