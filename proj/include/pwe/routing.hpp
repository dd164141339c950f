#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pwe/scene.hpp"
#include "pwe/tiles.hpp"

namespace pwe {

// Generic undirected weighted graph used for air-route search; nodes are
// dense indices, weights are positive.
struct Graph {
  struct Edge {
    int to = -1;
    double weight = 0.0;
  };

  explicit Graph(int n = 0) : adjacency(static_cast<size_t>(n)) {}

  int node_count() const { return static_cast<int>(adjacency.size()); }
  void add_edge(int a, int b, double weight);

  std::vector<std::vector<Edge>> adjacency;
};

struct GraphPath {
  std::vector<int> nodes;
  double length = 0.0;
};

// The K shortest loopless paths by total weight (Yen's construction), sorted
// ascending with ties broken by the lexicographic node sequence. Fewer than K
// paths are returned when the graph has fewer; none when dst is unreachable.
std::vector<GraphPath> k_shortest(const Graph& graph, int src, int dst, int K,
                                  const std::set<int>& excluded_nodes = {});

// Line-of-sight connectivity over tiles: one node per tile, an edge wherever
// two tile centers see each other and each center lies in the open front
// half-space of the other tile.
struct TileGraph {
  std::vector<int> tile_ids;             // node index -> tile id
  std::vector<int> node_by_tile_id;      // tile id -> node index (-1 when absent)
  Graph graph;

  int node_of(int tile_id) const {
    return tile_id >= 0 && tile_id < static_cast<int>(node_by_tile_id.size())
               ? node_by_tile_id[tile_id]
               : -1;
  }
  int edge_count() const;
};

TileGraph build_tile_graph(const Scenario& scenario);

// Tiles with unobstructed line of sight to the device (device in the tile's
// front half-space), ranked by ascending single-segment path loss.
std::vector<int> entry_tiles(const Device& device, const Scenario& scenario);

enum class ObjectiveKind { Qos, Power, Secure, Block };

std::string to_string(ObjectiveKind k);

struct Objective {
  std::string id;          // report key; defaults to "<kind>:<subject>" when empty
  ObjectiveKind kind = ObjectiveKind::Qos;
  std::string subject_id;  // device served (QOS/POWER/SECURE) or blocked (BLOCK)
  std::string src_id;      // transmitter; empty = the scenario's transmitter
  double secure_radius_m = 0.0;             // SECURE
  std::vector<std::string> avoid_ids;       // SECURE; empty = all other devices
  std::optional<double> delay_spread_cap_s; // QOS
};

std::string objective_key(const Objective& o);

struct AirRoute {
  std::string objective_id;
  std::string src_id;
  std::string dst_id;
  std::vector<int> tile_ids;   // ordered, distinct
  double length_m = 0.0;       // src -> tiles -> dst total
  bool last_hop_focus = true;  // FOCUS onto dst from the final tile
};

struct ObjectiveOutcome {
  std::string objective_id;
  std::string src_id;      // resolved transmitter
  std::string subject_id;  // served or blocked device
  bool served = false;
  std::string reason;  // set when unserved
};

struct PlanResult {
  std::vector<AirRoute> routes;          // one per served routed objective
  std::vector<TileCommand> commands;     // tile exclusivity holds across all
  std::vector<ObjectiveOutcome> outcomes;
};

struct PlanParams {
  int k_candidates = 8;         // K-shortest candidates per objective
  std::set<int> claimed_tiles;  // pre-claimed tiles to exclude
  int max_route_tiles = 0;      // 0 = unlimited; BLOCK entry sets are capped too
  double incidence_tol_rad = deg2rad(kDefaultIncidenceTolDeg);
};

// Ordered greedy embedding of the objectives into the tile graph. QOS/POWER
// pick the shortest feasible of K candidate routes; SECURE additionally
// requires every segment to clear the avoid radius around the avoided
// devices; BLOCK emits ABSORB on the subject's entry tiles. Each tile serves
// at most one objective. Infeasible objectives are reported, not thrown.
PlanResult plan_routes(const std::vector<Objective>& objectives, const TileGraph& graph,
                       const Scenario& scenario, const PlanParams& params = {});

// The K shortest device-to-device air-routes over the tile graph, entry
// segments included, skipping claimed tiles.
std::vector<AirRoute> k_shortest_routes(const TileGraph& graph, const Scenario& scenario,
                                        const Device& src, const Device& dst, int K,
                                        const std::set<int>& claimed_tiles = {},
                                        const std::string& objective_id = {});

// Builds the per-tile command sequence realizing one route: STEER along the
// chain and FOCUS from the final tile onto the destination device.
std::vector<TileCommand> route_commands(const AirRoute& route, const Scenario& scenario,
                                        bool last_hop_focus = true);

double route_length_m(const std::vector<int>& tile_ids, const Vec3& src, const Vec3& dst,
                      const Scenario& scenario);

// Human-readable report: objective id, status, tile sequence, length,
// command count.
std::string routes_report(const PlanResult& plan);

}  // namespace pwe
