#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwe/emwave.hpp"
#include "pwe/geom.hpp"
#include "pwe/tiles.hpp"

namespace pwe {

struct Bounds {
  double length_m = 0.0;  // x extent
  double width_m = 0.0;   // y extent
  double height_m = 0.0;  // z extent

  bool contains(const Vec3& p) const {
    return p.x >= 0.0 && p.x <= length_m && p.y >= 0.0 && p.y <= width_m &&
           p.z >= 0.0 && p.z <= height_m;
  }
};

// A wall is a rectangular face plus a solid slab of `thickness_m` behind it
// (opposite the outward normal). Occlusion treats the slab as a box.
struct Wall {
  std::string id;
  Vec3 corner;   // one rectangle corner
  Vec3 edge_u;   // full first edge (length = rectangle width)
  Vec3 edge_v;   // full second edge, orthogonal to edge_u
  Vec3 normal;   // unit, outward (coated side)
  double thickness_m = 0.1;
  double reflection_loss_db = 10.0;
  bool coated = false;

  double width_m() const { return edge_u.norm(); }
  double height_m() const { return edge_v.norm(); }
  double area_m2() const { return width_m() * height_m(); }
};

struct Tile {
  int id = -1;
  int wall_index = -1;
  Vec3 center;
  Vec3 normal;  // unit, equals parent wall normal
  double side_m = 0.0;
  std::optional<TileFunction> active;
};

enum class Role { Transmitter, Receiver, Unauthorized };

std::string to_string(Role r);

struct Device {
  std::string id;
  Role role = Role::Receiver;
  Vec3 position;
  Antenna antenna = Antenna::HalfWaveDipole;
  double tx_power_dbm = 0.0;  // transmitters only
};

// Per-bounce efficiency losses for programmed interactions.
struct LossModel {
  double steer_db = 1.0;
  double focus_db = 1.0;
};

// Row-major tile grid of one coated wall; tile_ids[iv * nu + iu].
struct WallGrid {
  int nu = 0;
  int nv = 0;
  std::vector<int> tile_ids;
};

class Scenario {
 public:
  Bounds bounds;
  WaveSpec wave;
  double disconnect_floor_dbm = -250.0;
  double tile_side_m = 1.0;
  LossModel losses;
  std::vector<Wall> walls;
  std::vector<Tile> tiles;
  std::vector<Device> devices;

  // Validates all invariants and rebuilds derived indices. Must be called
  // after construction or any structural change; load/build do it already.
  void finalize();

  const Tile* tile_by_id(int id) const;
  Tile* tile_by_id(int id);
  const Device* device_by_id(std::string_view id) const;
  Device* device_by_id(std::string_view id);
  std::vector<const Device*> devices_with_role(Role role) const;

  // Tile id of the grid cell containing a point on a coated wall's surface.
  std::optional<int> tile_at(int wall_index, const Vec3& surface_point) const;

  const WallGrid& grid(int wall_index) const { return grids_[wall_index]; }

 private:
  std::vector<WallGrid> grids_;       // per wall, empty for uncoated
  std::vector<int> tile_pos_by_id_;   // tile id -> index into tiles
};

// Splits a wall rectangle into a full grid of side x side tiles, row-major
// along edge_u then edge_v. The rectangle dimensions must be integer
// multiples of the side. Tile ids start at first_id.
std::vector<Tile> tile_surface(const Wall& wall, double side_m,
                               int wall_index = 0, int first_id = 0);

// True iff the open segment (p, q) passes through any wall slab. Endpoints
// lying on a surface do not count as occlusion.
bool occluded(const Vec3& p, const Vec3& q, const Scenario& scenario);

// Parses and validates a scenario document (JSON text). Throws ParseError /
// ValidationError.
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Serializes back to the document format; load(serialize(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

// The built-in evaluation scenario: a 15 x 10 x 3 m room split by a 12 m
// long, 1 m thick middle wall into two 4.5 m sections, every wall face
// coated with 1 m tiles, one 60 GHz / 100 dBm transmitter and 12 receivers
// in a 3 x 4 grid on the non-line-of-sight side.
Scenario build_paper_scenario();

}  // namespace pwe
