#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pwe/raytrace.hpp"
#include "pwe/routing.hpp"
#include "pwe/scene.hpp"

namespace pwe {

// The optimizer's decision variable: which function every claimed tile runs,
// together with the serving routes it was derived from.
struct TileAssignment {
  std::map<int, TileFunction> functions;   // tile id -> active function
  std::map<int, std::string> provenance;   // tile id -> objective that claimed it
  std::vector<AirRoute> routes;            // served routes, one per objective
  std::vector<ObjectiveOutcome> outcomes;  // every objective, served or not
  std::string tx_id;

  std::vector<std::string> receiver_ids() const;
};

struct ReceiverPower {
  std::string id;
  Vec3 position;
  double dbm = 0.0;
};

struct EvalReport {
  std::vector<ReceiverPower> receivers;
  double min_dbm = 0.0;
  double mean_dbm = 0.0;  // arithmetic mean of the per-receiver dBm values
  double max_dbm = 0.0;
  int disconnected = 0;   // receivers at the disconnect floor
};

struct GreedyParams {
  int k_candidates = 8;
  TraceConfig trace;
};

// The coverage construction: receivers in descending transmitter distance
// each take the shortest feasible air-route over still-unclaimed tiles
// (STEER chain, FOCUS final hop). Unserved receivers are reported in the
// outcomes, never thrown.
TileAssignment greedy_assign(const Scenario& scenario, const Device& tx,
                             const std::vector<const Device*>& receivers,
                             const GreedyParams& params = {});

struct SearchParams {
  int k_candidates = 8;
  TraceConfig trace;
  std::set<int> claimed_tiles;  // externally owned tiles, never touched
};

// Seeded max-min local search. Moves: reassign one route to one of its K
// shortest alternatives, jointly re-plan a pair of routes (claim swap), or
// toggle the final hop between focus and steer. A move is accepted only if
// the minimum received power strictly improves, with ties broken by mean
// power and then by fewer claimed tiles, so the result is never worse than
// the input. Deterministic for a fixed seed; budget counts evaluations.
TileAssignment maxmin_search(const Scenario& scenario, const TileAssignment& initial,
                             long budget, uint64_t seed, const SearchParams& params = {});

// Applies the assignment to a scenario snapshot and traces every receiver.
// The input scenario is untouched.
EvalReport evaluate_assignment(const Scenario& scenario, const TileAssignment& assignment,
                               const std::vector<const Device*>& receivers,
                               const TraceConfig& trace = {});

// Scenario copy with the assignment's functions installed.
Scenario apply_assignment(const Scenario& scenario, const TileAssignment& assignment);

// CSV: one row per receiver (id, x, y, z, dBm) and a trailing summary line.
std::string eval_report_to_csv(const EvalReport& report);

}  // namespace pwe
