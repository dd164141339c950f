#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pwe/optimize.hpp"
#include "pwe/routing.hpp"
#include "pwe/scene.hpp"
#include "pwe/tiles.hpp"

namespace pwe {

// Global policies: who is authorized, what unaware devices get, and hard
// per-objective resource limits.
struct PolicySet {
  std::set<std::string> authorized_ids;        // empty = every device authorized
  bool default_qos_for_receivers = false;      // receivers without an objective get QOS
  int max_tiles_per_objective = 0;             // 0 = unlimited
};

struct LocationEvent {
  std::string device_id;
  Vec3 position;
  int64_t timestamp_ms = 0;
};

struct CommandBatch {
  std::vector<TileCommand> commands;
  std::vector<ObjectiveOutcome> outcomes;  // per-objective planning metadata
};

struct ConfigureOptions {
  uint64_t seed = 1;
  long maxmin_budget = 0;  // 0 = greedy embedding only
  int k_candidates = 8;
  TraceConfig trace;
};

struct ConfigureResult {
  CommandBatch batch;
  EvalReport predicted;  // evaluation of the planned state over all receivers
};

// One-shot pipeline: derives BLOCK objectives for unauthorized devices
// (promoted ahead of everything), embeds SECURE/POWER objectives in list
// order, then serves the QOS group farthest-receiver-first with an optional
// max-min refinement. Deterministic for fixed inputs and seed.
ConfigureResult configure(const Scenario& scenario, const std::vector<Objective>& objectives,
                          const PolicySet& policies, const ConfigureOptions& opts = {});

// Applies a batch to the scenario's tile registry via callback(), one command
// at a time; a bad command rejects alone and the rest still apply.
std::vector<Outcome> apply_commands(const CommandBatch& batch, Scenario& scenario);

// ---- wire format ----
// SET <tile_id> STEER in=<az,el> out=<az,el> band=<f_lo>,<f_hi>
// SET <tile_id> FOCUS in=<az,el> focal=<x,y,z> band=<f_lo>,<f_hi>
// SET <tile_id> ABSORB alpha=<a> band=<f_lo>,<f_hi>
// RESET <tile_id>
// Angles in degrees (two decimals), frequencies in Hz.
std::string encode_command(const TileCommand& cmd);
TileCommand parse_command(const std::string& line);  // throws ParseError
std::string encode_reply(int tile_id, const Outcome& outcome);
std::string encode_batch(const CommandBatch& batch);

// The stateful service driving one environment: owns the scenario snapshot,
// the committed tile functions and the objective claims, and re-plans
// incrementally as devices move.
class ConfService {
 public:
  ConfService(Scenario scenario, std::vector<Objective> objectives, PolicySet policies,
              ConfigureOptions opts = {});

  // Full plan; commits and returns the complete batch.
  CommandBatch configure_all();

  // Re-plans only the objectives involving the moved device and returns the
  // delta batch (RESET for released tiles, SET for new or changed ones).
  // An unchanged position yields an empty delta. Throws on unknown devices
  // or out-of-bounds positions.
  CommandBatch on_location_update(const LocationEvent& event);

  // Applies one wire line to the tile registry and returns the reply line.
  std::string handle_line(const std::string& line);

  const Scenario& scenario() const { return scenario_; }
  const std::map<int, TileFunction>& installed() const { return installed_; }

 private:
  struct Planned {
    std::vector<TileCommand> commands;
    std::vector<ObjectiveOutcome> outcomes;
    std::map<std::string, std::vector<int>> claims;  // objective -> tiles
  };

  Planned plan_objectives(const std::vector<Objective>& objectives,
                          const std::set<int>& fixed_claims, bool allow_maxmin);
  std::vector<Objective> effective_objectives() const;
  CommandBatch commit(const Planned& planned, const std::set<std::string>& replanned_ids);

  Scenario scenario_;
  std::vector<Objective> objectives_;
  PolicySet policies_;
  ConfigureOptions opts_;
  std::map<int, TileFunction> installed_;               // committed tile state mirror
  std::map<std::string, std::vector<int>> claims_;      // committed objective claims
};

// Line-oriented TCP front end on localhost; blocks until the process is
// interrupted. Each connection is served sequentially.
int serve_tcp(ConfService& service, uint16_t port);

}  // namespace pwe
