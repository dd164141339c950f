#include "pwe/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pwe/errors.hpp"
#include "pwe/rng.hpp"

namespace pwe {

std::vector<std::string> TileAssignment::receiver_ids() const {
  std::vector<std::string> ids;
  for (const ObjectiveOutcome& o : outcomes) ids.push_back(o.subject_id);
  return ids;
}

namespace {

// Rebuilds the tile->function map from the serving routes.
void refresh_functions(TileAssignment* a, const Scenario& scenario) {
  a->functions.clear();
  a->provenance.clear();
  for (const AirRoute& r : a->routes) {
    for (const TileCommand& c : route_commands(r, scenario, r.last_hop_focus)) {
      a->functions[c.tile_id] = c.fn;
      a->provenance[c.tile_id] = r.objective_id;
    }
  }
}

std::set<int> claimed_except(const TileAssignment& a, const std::set<int>& base,
                             const std::string& skip_objective) {
  std::set<int> claimed = base;
  for (const AirRoute& r : a.routes) {
    if (r.objective_id == skip_objective) continue;
    claimed.insert(r.tile_ids.begin(), r.tile_ids.end());
  }
  return claimed;
}

std::set<int> claimed_except2(const TileAssignment& a, const std::set<int>& base,
                              const std::string& skip1, const std::string& skip2) {
  std::set<int> claimed = base;
  for (const AirRoute& r : a.routes) {
    if (r.objective_id == skip1 || r.objective_id == skip2) continue;
    claimed.insert(r.tile_ids.begin(), r.tile_ids.end());
  }
  return claimed;
}

const AirRoute* route_of(const TileAssignment& a, const std::string& objective_id) {
  for (const AirRoute& r : a.routes)
    if (r.objective_id == objective_id) return &r;
  return nullptr;
}

void set_route(TileAssignment* a, const std::string& objective_id,
               const std::optional<AirRoute>& route) {
  std::erase_if(a->routes, [&](const AirRoute& r) { return r.objective_id == objective_id; });
  for (ObjectiveOutcome& o : a->outcomes) {
    if (o.objective_id != objective_id) continue;
    o.served = route.has_value();
    o.reason = route ? "" : "no route over unclaimed tiles";
  }
  if (route) {
    a->routes.push_back(*route);
    std::sort(a->routes.begin(), a->routes.end(),
              [](const AirRoute& x, const AirRoute& y) { return x.objective_id < y.objective_id; });
  }
}

// min, then mean, then frugality (fewer claimed tiles)
bool strictly_better(const EvalReport& a, size_t a_tiles, const EvalReport& b, size_t b_tiles) {
  if (a.min_dbm != b.min_dbm) return a.min_dbm > b.min_dbm;
  if (a.mean_dbm != b.mean_dbm) return a.mean_dbm > b.mean_dbm;
  return a_tiles < b_tiles;
}

}  // namespace

Scenario apply_assignment(const Scenario& scenario, const TileAssignment& assignment) {
  Scenario snapshot = scenario;
  for (const auto& [tile_id, fn] : assignment.functions) {
    Tile* tile = snapshot.tile_by_id(tile_id);
    if (!tile) throw ValidationError("assignment references unknown tile " + std::to_string(tile_id));
    const Outcome out = callback(*tile, fn);
    if (!out.ok())
      throw ValidationError("assignment rejected on tile " + std::to_string(tile_id) + ": " +
                            out.reason);
  }
  return snapshot;
}

EvalReport evaluate_assignment(const Scenario& scenario, const TileAssignment& assignment,
                               const std::vector<const Device*>& receivers,
                               const TraceConfig& trace) {
  const Scenario snapshot = apply_assignment(scenario, assignment);
  const Device* tx = snapshot.device_by_id(assignment.tx_id);
  if (!tx) {
    for (const Device& d : snapshot.devices)
      if (d.role == Role::Transmitter) tx = &d;
  }
  if (!tx) throw ValidationError("evaluate_assignment: no transmitter");

  EvalReport report;
  double sum = 0.0;
  for (const Device* rx : receivers) {
    const Device* probe = snapshot.device_by_id(rx->id);
    const double p = received_power_dbm(snapshot, *tx, probe ? *probe : *rx, trace);
    report.receivers.push_back({rx->id, rx->position, p});
    sum += p;
    if (p <= snapshot.disconnect_floor_dbm) ++report.disconnected;
  }
  if (report.receivers.empty()) return report;
  report.min_dbm = report.receivers[0].dbm;
  report.max_dbm = report.receivers[0].dbm;
  for (const ReceiverPower& r : report.receivers) {
    report.min_dbm = std::min(report.min_dbm, r.dbm);
    report.max_dbm = std::max(report.max_dbm, r.dbm);
  }
  report.mean_dbm = sum / static_cast<double>(report.receivers.size());
  return report;
}

TileAssignment greedy_assign(const Scenario& scenario, const Device& tx,
                             const std::vector<const Device*>& receivers,
                             const GreedyParams& params) {
  if (receivers.empty()) throw ValidationError("greedy_assign: need at least one receiver");

  // most distant receiver first; ids break ties
  std::vector<const Device*> order = receivers;
  std::sort(order.begin(), order.end(), [&](const Device* a, const Device* b) {
    const double da = distance(tx.position, a->position);
    const double db = distance(tx.position, b->position);
    if (da != db) return da > db;
    return a->id < b->id;
  });

  const TileGraph graph = build_tile_graph(scenario);

  TileAssignment out;
  out.tx_id = tx.id;
  std::set<int> claimed;
  for (const Device* rx : order) {
    const std::string oid = "qos:" + rx->id;
    ObjectiveOutcome outcome;
    outcome.objective_id = oid;
    outcome.src_id = tx.id;
    outcome.subject_id = rx->id;
    auto candidates =
        k_shortest_routes(graph, scenario, tx, *rx, params.k_candidates, claimed, oid);
    if (candidates.empty()) {
      outcome.reason = "no route over unclaimed tiles";
      out.outcomes.push_back(outcome);
      continue;
    }
    const AirRoute& best = candidates.front();
    claimed.insert(best.tile_ids.begin(), best.tile_ids.end());
    out.routes.push_back(best);
    outcome.served = true;
    out.outcomes.push_back(outcome);
  }
  std::sort(out.routes.begin(), out.routes.end(),
            [](const AirRoute& a, const AirRoute& b) { return a.objective_id < b.objective_id; });
  std::sort(out.outcomes.begin(), out.outcomes.end(),
            [](const ObjectiveOutcome& a, const ObjectiveOutcome& b) {
              return a.objective_id < b.objective_id;
            });
  refresh_functions(&out, scenario);
  return out;
}

TileAssignment maxmin_search(const Scenario& scenario, const TileAssignment& initial,
                             long budget, uint64_t seed, const SearchParams& params) {
  if (budget < 1) throw ValidationError("maxmin_search: budget must be >= 1");

  std::vector<const Device*> receivers;
  for (const ObjectiveOutcome& o : initial.outcomes) {
    const Device* rx = scenario.device_by_id(o.subject_id);
    if (!rx) throw ValidationError("maxmin_search: unknown receiver '" + o.subject_id + "'");
    receivers.push_back(rx);
  }
  if (receivers.empty()) return initial;

  const TileGraph graph = build_tile_graph(scenario);
  Rng rng(seed);

  TileAssignment cur = initial;
  EvalReport cur_eval = evaluate_assignment(scenario, cur, receivers, params.trace);

  const size_t n_obj = cur.outcomes.size();
  long evals = 0;
  long stale = 0;

  while (evals < budget) {
    const uint64_t move = rng.next_index(10);
    TileAssignment cand = cur;
    bool built = false;

    if (move < 6 || n_obj < 2) {
      // reassign one objective to one of its K shortest alternatives
      const ObjectiveOutcome& o = cur.outcomes[rng.next_index(n_obj)];
      const Device* src = scenario.device_by_id(o.src_id);
      const Device* dst = scenario.device_by_id(o.subject_id);
      if (src && dst) {
        auto alts = k_shortest_routes(graph, scenario, *src, *dst, params.k_candidates,
                                      claimed_except(cur, params.claimed_tiles, o.objective_id), o.objective_id);
        if (!alts.empty()) {
          AirRoute pick = alts[rng.next_index(alts.size())];
          const AirRoute* have = route_of(cur, o.objective_id);
          if (have) pick.last_hop_focus = have->last_hop_focus;
          if (!have || have->tile_ids != pick.tile_ids) {
            set_route(&cand, o.objective_id, pick);
            built = true;
          }
        }
      }
    } else if (move < 8) {
      // release two routes and re-plan both, first one first
      const size_t i = rng.next_index(n_obj);
      size_t j = rng.next_index(n_obj - 1);
      if (j >= i) ++j;
      const ObjectiveOutcome& oi = cur.outcomes[i];
      const ObjectiveOutcome& oj = cur.outcomes[j];
      const Device* si = scenario.device_by_id(oi.src_id);
      const Device* di = scenario.device_by_id(oi.subject_id);
      const Device* sj = scenario.device_by_id(oj.src_id);
      const Device* dj = scenario.device_by_id(oj.subject_id);
      if (si && di && sj && dj) {
        std::set<int> claimed = claimed_except2(cur, params.claimed_tiles, oi.objective_id, oj.objective_id);
        auto first = k_shortest_routes(graph, scenario, *si, *di, params.k_candidates, claimed,
                                       oi.objective_id);
        std::optional<AirRoute> ri, rj;
        if (!first.empty()) {
          ri = first[rng.next_index(first.size())];
          claimed.insert(ri->tile_ids.begin(), ri->tile_ids.end());
        }
        auto second = k_shortest_routes(graph, scenario, *sj, *dj, params.k_candidates, claimed,
                                        oj.objective_id);
        if (!second.empty()) rj = second.front();
        set_route(&cand, oi.objective_id, ri);
        set_route(&cand, oj.objective_id, rj);
        built = true;
      }
    } else {
      // toggle the final hop of one served route between focus and steer
      if (!cur.routes.empty()) {
        const size_t i = rng.next_index(cur.routes.size());
        for (AirRoute& r : cand.routes) {
          if (r.objective_id == cur.routes[i].objective_id) {
            r.last_hop_focus = !r.last_hop_focus;
            built = true;
          }
        }
      }
    }

    if (!built) {
      if (++stale > 50 * budget) break;  // move generation exhausted
      continue;
    }

    refresh_functions(&cand, scenario);
    const EvalReport cand_eval = evaluate_assignment(scenario, cand, receivers, params.trace);
    ++evals;
    if (strictly_better(cand_eval, cand.functions.size(), cur_eval, cur.functions.size())) {
      cur = std::move(cand);
      cur_eval = cand_eval;
    }
  }
  return cur;
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  char buf[160];
  os << "receiver_id,x_m,y_m,z_m,power_dbm\n";
  for (const ReceiverPower& r : report.receivers) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f\n", r.id.c_str(), r.position.x,
                  r.position.y, r.position.z, r.dbm);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "summary,%.6f,%.6f,%.6f,%d\n", report.min_dbm, report.mean_dbm,
                report.max_dbm, report.disconnected);
  os << buf;
  return os.str();
}

}  // namespace pwe
