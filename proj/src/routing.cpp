#include "pwe/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "pwe/emwave.hpp"
#include "pwe/errors.hpp"
#include "pwe/raytrace.hpp"

namespace pwe {

void Graph::add_edge(int a, int b, double weight) {
  if (a == b) throw ValidationError("graph: self loops not allowed");
  if (!(weight > 0.0)) throw ValidationError("graph: edge weight must be > 0");
  if (a < 0 || b < 0 || a >= node_count() || b >= node_count())
    throw ValidationError("graph: node out of range");
  adjacency[a].push_back({b, weight});
  adjacency[b].push_back({a, weight});
}

namespace {

std::optional<GraphPath> dijkstra(const Graph& g, int src, int dst,
                                  const std::vector<char>& banned_node,
                                  const std::set<std::pair<int, int>>& banned_edge) {
  const int n = g.node_count();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> pred(n, -1);
  using Item = std::pair<double, int>;  // (distance, node): node id breaks ties
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.push({0.0, src});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (const Graph::Edge& e : g.adjacency[u]) {
      if (banned_node[e.to]) continue;
      if (banned_edge.count({u, e.to})) continue;
      const double nd = d + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        pred[e.to] = u;
        heap.push({nd, e.to});
      }
    }
  }
  if (!std::isfinite(dist[dst])) return std::nullopt;
  GraphPath path;
  path.length = dist[dst];
  for (int v = dst; v != -1; v = pred[v]) path.nodes.push_back(v);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

bool path_less(const GraphPath& a, const GraphPath& b) {
  if (a.length != b.length) return a.length < b.length;
  return a.nodes < b.nodes;  // lexicographic node-id tie break
}

}  // namespace

std::vector<GraphPath> k_shortest(const Graph& graph, int src, int dst, int K,
                                  const std::set<int>& excluded_nodes) {
  if (K < 1) throw ValidationError("k_shortest: K must be >= 1");
  if (src < 0 || dst < 0 || src >= graph.node_count() || dst >= graph.node_count())
    throw ValidationError("k_shortest: node out of range");
  if (src == dst) return {};

  std::vector<char> base_ban(graph.node_count(), 0);
  for (int v : excluded_nodes)
    if (v >= 0 && v < graph.node_count()) base_ban[v] = 1;
  if (base_ban[src] || base_ban[dst]) return {};

  auto edge_weight = [&](int a, int b) {
    for (const Graph::Edge& e : graph.adjacency[a])
      if (e.to == b) return e.weight;
    return std::numeric_limits<double>::infinity();
  };

  std::vector<GraphPath> found;
  std::vector<GraphPath> candidates;

  auto first = dijkstra(graph, src, dst, base_ban, {});
  if (!first) return {};
  found.push_back(*first);

  while (static_cast<int>(found.size()) < K) {
    const GraphPath prev = found.back();
    for (size_t i = 0; i + 1 < prev.nodes.size(); ++i) {
      const int spur = prev.nodes[i];
      std::vector<int> root(prev.nodes.begin(), prev.nodes.begin() + i + 1);

      std::set<std::pair<int, int>> banned_edge;
      for (const GraphPath& p : found) {
        if (p.nodes.size() > i + 1 && std::equal(root.begin(), root.end(), p.nodes.begin())) {
          banned_edge.insert({p.nodes[i], p.nodes[i + 1]});
          banned_edge.insert({p.nodes[i + 1], p.nodes[i]});
        }
      }
      std::vector<char> banned_node = base_ban;
      for (size_t j = 0; j < i; ++j) banned_node[root[j]] = 1;

      auto spur_path = dijkstra(graph, spur, dst, banned_node, banned_edge);
      if (!spur_path) continue;

      GraphPath total;
      total.nodes = root;
      total.nodes.insert(total.nodes.end(), spur_path->nodes.begin() + 1, spur_path->nodes.end());
      double root_len = 0.0;
      for (size_t j = 0; j + 1 < root.size(); ++j) root_len += edge_weight(root[j], root[j + 1]);
      total.length = root_len + spur_path->length;

      const auto same = [&](const GraphPath& p) { return p.nodes == total.nodes; };
      if (std::any_of(found.begin(), found.end(), same) ||
          std::any_of(candidates.begin(), candidates.end(), same))
        continue;
      candidates.push_back(std::move(total));
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(), path_less);
    found.push_back(*best);
    candidates.erase(best);
  }
  return found;
}

int TileGraph::edge_count() const {
  size_t total = 0;
  for (const auto& adj : graph.adjacency) total += adj.size();
  return static_cast<int>(total / 2);
}

TileGraph build_tile_graph(const Scenario& scenario) {
  TileGraph tg;
  tg.tile_ids.reserve(scenario.tiles.size());
  int max_id = -1;
  for (const Tile& t : scenario.tiles) {
    tg.tile_ids.push_back(t.id);
    max_id = std::max(max_id, t.id);
  }
  std::sort(tg.tile_ids.begin(), tg.tile_ids.end());
  tg.node_by_tile_id.assign(static_cast<size_t>(max_id + 1), -1);
  for (size_t i = 0; i < tg.tile_ids.size(); ++i)
    tg.node_by_tile_id[tg.tile_ids[i]] = static_cast<int>(i);

  tg.graph = Graph(static_cast<int>(tg.tile_ids.size()));
  for (size_t a = 0; a < tg.tile_ids.size(); ++a) {
    const Tile& ta = *scenario.tile_by_id(tg.tile_ids[a]);
    for (size_t b = a + 1; b < tg.tile_ids.size(); ++b) {
      const Tile& tb = *scenario.tile_by_id(tg.tile_ids[b]);
      // mutually facing: each center in the open front half-space of the other
      if (!(dot(tb.center - ta.center, ta.normal) > 0.0)) continue;
      if (!(dot(ta.center - tb.center, tb.normal) > 0.0)) continue;
      if (occluded(ta.center, tb.center, scenario)) continue;
      tg.graph.add_edge(static_cast<int>(a), static_cast<int>(b),
                        distance(ta.center, tb.center));
    }
  }
  return tg;
}

std::vector<int> entry_tiles(const Device& device, const Scenario& scenario) {
  std::vector<std::pair<double, int>> ranked;
  for (const Tile& t : scenario.tiles) {
    if (!(dot(device.position - t.center, t.normal) > 0.0)) continue;
    const double d = distance(device.position, t.center);
    if (d < 1e-9) continue;
    if (occluded(device.position, t.center, scenario)) continue;
    ranked.emplace_back(fspl_db(d, scenario.wave.frequency_hz), t.id);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  out.reserve(ranked.size());
  for (const auto& [loss, id] : ranked) out.push_back(id);
  return out;
}

std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Qos: return "qos";
    case ObjectiveKind::Power: return "power";
    case ObjectiveKind::Secure: return "secure";
    case ObjectiveKind::Block: return "block";
  }
  return "?";
}

std::string objective_key(const Objective& o) {
  return o.id.empty() ? to_string(o.kind) + ":" + o.subject_id : o.id;
}

double route_length_m(const std::vector<int>& tile_ids, const Vec3& src, const Vec3& dst,
                      const Scenario& scenario) {
  double len = 0.0;
  Vec3 prev = src;
  for (int id : tile_ids) {
    const Tile* t = scenario.tile_by_id(id);
    if (!t) throw ValidationError("route: unknown tile id " + std::to_string(id));
    len += distance(prev, t->center);
    prev = t->center;
  }
  return len + distance(prev, dst);
}

std::vector<TileCommand> route_commands(const AirRoute& route, const Scenario& scenario,
                                        bool last_hop_focus) {
  const Device* src = scenario.device_by_id(route.src_id);
  const Device* dst = scenario.device_by_id(route.dst_id);
  if (!src || !dst) throw ValidationError("route: unknown endpoint device");
  const Band band{scenario.wave.f_lo(), scenario.wave.f_hi()};

  std::vector<TileCommand> out;
  Vec3 prev = src->position;
  for (size_t i = 0; i < route.tile_ids.size(); ++i) {
    const Tile* tile = scenario.tile_by_id(route.tile_ids[i]);
    if (!tile) throw ValidationError("route: unknown tile id");
    const Vec3 next = i + 1 < route.tile_ids.size()
                          ? scenario.tile_by_id(route.tile_ids[i + 1])->center
                          : dst->position;
    TileCommand cmd;
    cmd.tile_id = tile->id;
    cmd.correlation_id = route.objective_id;
    cmd.fn.band = band;
    cmd.fn.incident_dir = (tile->center - prev).normalized();
    const bool last = i + 1 == route.tile_ids.size();
    if (last && last_hop_focus) {
      cmd.fn.action = Action::Focus;
      cmd.fn.focal_point = dst->position;
    } else {
      cmd.fn.action = Action::Steer;
      cmd.fn.outgoing_dir = (next - tile->center).normalized();
    }
    out.push_back(std::move(cmd));
    prev = tile->center;
  }
  return out;
}

namespace {

// Query graph: the tile graph plus two virtual device nodes wired to their
// entry tiles. Node N = src device, node N+1 = dst device.
std::vector<AirRoute> device_routes(const TileGraph& tg, const Scenario& scenario,
                                    const Device& src, const Device& dst, int K,
                                    const std::set<int>& claimed,
                                    const std::string& objective_id) {
  const int n = tg.graph.node_count();
  Graph q(n + 2);
  q.adjacency = tg.graph.adjacency;
  q.adjacency.resize(static_cast<size_t>(n) + 2);
  const int src_node = n, dst_node = n + 1;
  for (int tid : entry_tiles(src, scenario)) {
    const int node = tg.node_of(tid);
    if (node >= 0)
      q.add_edge(src_node, node, distance(src.position, scenario.tile_by_id(tid)->center));
  }
  for (int tid : entry_tiles(dst, scenario)) {
    const int node = tg.node_of(tid);
    if (node >= 0)
      q.add_edge(dst_node, node, distance(dst.position, scenario.tile_by_id(tid)->center));
  }

  std::set<int> excluded;
  for (int tid : claimed) {
    const int node = tg.node_of(tid);
    if (node >= 0) excluded.insert(node);
  }

  std::vector<AirRoute> routes;
  for (const GraphPath& p : k_shortest(q, src_node, dst_node, K, excluded)) {
    AirRoute r;
    r.objective_id = objective_id;
    r.src_id = src.id;
    r.dst_id = dst.id;
    for (size_t i = 1; i + 1 < p.nodes.size(); ++i) r.tile_ids.push_back(tg.tile_ids[p.nodes[i]]);
    if (r.tile_ids.empty()) continue;  // device-to-device hops must cross a tile
    r.length_m = p.length;
    routes.push_back(std::move(r));
  }
  return routes;
}

double min_clearance_m(const AirRoute& route, const Device& avoided, const Scenario& scenario) {
  std::vector<Vec3> verts;
  verts.push_back(scenario.device_by_id(route.src_id)->position);
  for (int id : route.tile_ids) verts.push_back(scenario.tile_by_id(id)->center);
  verts.push_back(scenario.device_by_id(route.dst_id)->position);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < verts.size(); ++i)
    best = std::min(best, point_segment_distance(avoided.position, verts[i - 1], verts[i]));
  return best;
}

PropagationPath route_as_path(const AirRoute& route, const Scenario& scenario,
                              bool last_hop_focus) {
  PropagationPath p;
  p.start = scenario.device_by_id(route.src_id)->position;
  p.end = scenario.device_by_id(route.dst_id)->position;
  for (size_t i = 0; i < route.tile_ids.size(); ++i) {
    const Tile* t = scenario.tile_by_id(route.tile_ids[i]);
    const bool last = i + 1 == route.tile_ids.size();
    Bounce b;
    b.point = t->center;
    b.kind = (last && last_hop_focus) ? BounceKind::Focus : BounceKind::Steer;
    b.loss_db = (last && last_hop_focus) ? scenario.losses.focus_db : scenario.losses.steer_db;
    b.tile_id = t->id;
    b.wall_index = t->wall_index;
    p.bounces.push_back(b);
  }
  return p;
}

}  // namespace

std::vector<AirRoute> k_shortest_routes(const TileGraph& graph, const Scenario& scenario,
                                        const Device& src, const Device& dst, int K,
                                        const std::set<int>& claimed_tiles,
                                        const std::string& objective_id) {
  return device_routes(graph, scenario, src, dst, K, claimed_tiles, objective_id);
}

PlanResult plan_routes(const std::vector<Objective>& objectives, const TileGraph& graph,
                       const Scenario& scenario, const PlanParams& params) {
  PlanResult result;
  std::set<int> claimed = params.claimed_tiles;
  const Band band{scenario.wave.f_lo(), scenario.wave.f_hi()};

  const auto default_tx = [&]() -> const Device* {
    for (const Device& d : scenario.devices)
      if (d.role == Role::Transmitter) return &d;
    return nullptr;
  };

  for (const Objective& obj : objectives) {
    ObjectiveOutcome outcome;
    outcome.objective_id = objective_key(obj);
    outcome.subject_id = obj.subject_id;

    const Device* subject = scenario.device_by_id(obj.subject_id);
    if (!subject) {
      outcome.reason = "unknown device '" + obj.subject_id + "'";
      result.outcomes.push_back(outcome);
      continue;
    }

    if (obj.kind == ObjectiveKind::Block) {
      std::vector<int> entries = entry_tiles(*subject, scenario);
      std::erase_if(entries, [&](int id) { return claimed.count(id) > 0; });
      if (params.max_route_tiles > 0 &&
          static_cast<int>(entries.size()) > params.max_route_tiles)
        entries.resize(params.max_route_tiles);
      if (entries.empty()) {
        outcome.reason = "no entry tiles";
        result.outcomes.push_back(outcome);
        continue;
      }
      for (int tid : entries) {
        TileCommand cmd;
        cmd.tile_id = tid;
        cmd.correlation_id = outcome.objective_id;
        cmd.fn.action = Action::Absorb;
        cmd.fn.alpha = 1.0;
        cmd.fn.band = band;
        result.commands.push_back(std::move(cmd));
        claimed.insert(tid);
      }
      outcome.served = true;
      result.outcomes.push_back(outcome);
      continue;
    }

    const Device* src = obj.src_id.empty() ? default_tx() : scenario.device_by_id(obj.src_id);
    if (!src) {
      outcome.reason = obj.src_id.empty() ? "no transmitter in scenario"
                                          : "unknown device '" + obj.src_id + "'";
      result.outcomes.push_back(outcome);
      continue;
    }
    outcome.src_id = src->id;

    auto candidates = device_routes(graph, scenario, *src, *subject, params.k_candidates,
                                    claimed, outcome.objective_id);
    if (candidates.empty()) {
      outcome.reason =
          entry_tiles(*src, scenario).empty() || entry_tiles(*subject, scenario).empty()
              ? "no entry tiles"
              : "no route over unclaimed tiles";
      result.outcomes.push_back(outcome);
      continue;
    }

    const AirRoute* chosen = nullptr;
    std::string filter_reason;
    for (const AirRoute& cand : candidates) {
      if (params.max_route_tiles > 0 &&
          static_cast<int>(cand.tile_ids.size()) > params.max_route_tiles) {
        filter_reason = "route exceeds the tile budget";
        continue;
      }
      if (obj.kind == ObjectiveKind::Secure) {
        bool clear = true;
        for (const Device& other : scenario.devices) {
          if (other.id == src->id || other.id == subject->id) continue;
          if (!obj.avoid_ids.empty() &&
              std::find(obj.avoid_ids.begin(), obj.avoid_ids.end(), other.id) ==
                  obj.avoid_ids.end())
            continue;
          if (min_clearance_m(cand, other, scenario) <= obj.secure_radius_m) {
            clear = false;
            break;
          }
        }
        if (!clear) {
          filter_reason = "no clearing route";
          continue;
        }
      }
      if (obj.kind == ObjectiveKind::Qos && obj.delay_spread_cap_s) {
        auto paths = trace_paths(scenario, *src, *subject);
        paths.push_back(route_as_path(cand, scenario, true));
        const Pdp pdp =
            make_pdp(paths, scenario.wave, src->tx_power_dbm, src->antenna, subject->antenna);
        if (rms_delay_spread_s(pdp) > *obj.delay_spread_cap_s) {
          filter_reason = "delay spread cap exceeded";
          continue;
        }
      }
      chosen = &cand;
      break;
    }
    if (!chosen) {
      outcome.reason = filter_reason.empty() ? "no route over unclaimed tiles" : filter_reason;
      result.outcomes.push_back(outcome);
      continue;
    }

    auto commands = route_commands(*chosen, scenario, chosen->last_hop_focus);
    for (const TileCommand& c : commands) claimed.insert(c.tile_id);
    result.commands.insert(result.commands.end(), commands.begin(), commands.end());
    result.routes.push_back(*chosen);
    outcome.served = true;
    result.outcomes.push_back(outcome);
  }
  return result;
}

std::string routes_report(const PlanResult& plan) {
  std::ostringstream os;
  for (const ObjectiveOutcome& o : plan.outcomes) {
    os << o.objective_id << ": " << (o.served ? "served" : "infeasible (" + o.reason + ")");
    const auto route =
        std::find_if(plan.routes.begin(), plan.routes.end(),
                     [&](const AirRoute& r) { return r.objective_id == o.objective_id; });
    if (route != plan.routes.end()) {
      os << " tiles=[";
      for (size_t i = 0; i < route->tile_ids.size(); ++i)
        os << (i ? " " : "") << route->tile_ids[i];
      char buf[48];
      std::snprintf(buf, sizeof buf, "] length_m=%.3f", route->length_m);
      os << buf;
    }
    int count = 0;
    for (const TileCommand& c : plan.commands)
      if (c.correlation_id == o.objective_id) ++count;
    os << " commands=" << count << "\n";
  }
  return os.str();
}

}  // namespace pwe
