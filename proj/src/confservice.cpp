#include "pwe/confservice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pwe/errors.hpp"

namespace pwe {

namespace {

const Device* default_transmitter(const Scenario& s) {
  for (const Device& d : s.devices)
    if (d.role == Role::Transmitter) return &d;
  return nullptr;
}

bool involves_device(const Objective& o, const std::string& device_id, const Scenario& s) {
  if (o.subject_id == device_id) return true;
  if (o.src_id == device_id) return true;
  if (o.src_id.empty() && o.kind != ObjectiveKind::Block) {
    const Device* tx = default_transmitter(s);
    if (tx && tx->id == device_id) return true;
  }
  if (o.kind == ObjectiveKind::Secure) {
    if (o.avoid_ids.empty()) return true;  // clearance against every other device
    if (std::find(o.avoid_ids.begin(), o.avoid_ids.end(), device_id) != o.avoid_ids.end())
      return true;
  }
  return false;
}

}  // namespace

ConfService::ConfService(Scenario scenario, std::vector<Objective> objectives,
                         PolicySet policies, ConfigureOptions opts)
    : scenario_(std::move(scenario)),
      objectives_(std::move(objectives)),
      policies_(std::move(policies)),
      opts_(opts) {}

std::vector<Objective> ConfService::effective_objectives() const {
  std::vector<Objective> out;

  // block objectives first: devices flagged unauthorized, plus anything not
  // on the authorization list when one is given
  std::set<std::string> blocked;
  for (const Device& d : scenario_.devices) {
    const bool unauthorized =
        d.role == Role::Unauthorized ||
        (!policies_.authorized_ids.empty() && d.role != Role::Transmitter &&
         policies_.authorized_ids.count(d.id) == 0);
    if (!unauthorized || blocked.count(d.id)) continue;
    Objective block;
    block.kind = ObjectiveKind::Block;
    block.subject_id = d.id;
    out.push_back(block);
    blocked.insert(d.id);
  }

  std::set<std::string> with_objective = blocked;
  for (const Objective& o : objectives_) {
    if (blocked.count(o.subject_id)) continue;  // security outranks the request
    out.push_back(o);
    with_objective.insert(o.subject_id);
  }

  // unaware devices: global default policy
  if (policies_.default_qos_for_receivers) {
    for (const Device& d : scenario_.devices) {
      if (d.role != Role::Receiver || with_objective.count(d.id)) continue;
      Objective qos;
      qos.kind = ObjectiveKind::Qos;
      qos.subject_id = d.id;
      out.push_back(qos);
    }
  }
  return out;
}

// Plans the given objectives around externally fixed claims: BLOCKs first,
// SECURE/POWER in list order, then the QOS group farthest receiver first.
ConfService::Planned ConfService::plan_objectives(const std::vector<Objective>& objectives,
                                                  const std::set<int>& fixed_claims,
                                                  bool allow_maxmin) {
  const TileGraph graph = build_tile_graph(scenario_);

  std::vector<Objective> ordered;  // blocks, then the rest minus QOS, in order
  std::vector<Objective> qos;
  for (const Objective& o : objectives) {
    (o.kind == ObjectiveKind::Qos ? qos : ordered).push_back(o);
  }
  std::stable_partition(ordered.begin(), ordered.end(),
                        [](const Objective& o) { return o.kind == ObjectiveKind::Block; });

  PlanParams params;
  params.k_candidates = opts_.k_candidates;
  params.max_route_tiles = policies_.max_tiles_per_objective;
  params.claimed_tiles = fixed_claims;
  PlanResult fixed = plan_routes(ordered, graph, scenario_, params);

  std::set<int> taken = fixed_claims;
  for (const TileCommand& c : fixed.commands) taken.insert(c.tile_id);

  const Device* tx = default_transmitter(scenario_);
  std::stable_sort(qos.begin(), qos.end(), [&](const Objective& a, const Objective& b) {
    const Device* src_a = a.src_id.empty() ? tx : scenario_.device_by_id(a.src_id);
    const Device* src_b = b.src_id.empty() ? tx : scenario_.device_by_id(b.src_id);
    const Device* da = scenario_.device_by_id(a.subject_id);
    const Device* db = scenario_.device_by_id(b.subject_id);
    const double dist_a = src_a && da ? distance(src_a->position, da->position) : 0.0;
    const double dist_b = src_b && db ? distance(src_b->position, db->position) : 0.0;
    if (dist_a != dist_b) return dist_a > dist_b;
    return a.subject_id < b.subject_id;
  });
  PlanParams qos_params = params;
  qos_params.claimed_tiles = taken;
  PlanResult qos_plan = plan_routes(qos, graph, scenario_, qos_params);

  if (allow_maxmin && opts_.maxmin_budget > 0 && !qos_plan.outcomes.empty() && tx) {
    TileAssignment assignment;
    assignment.tx_id = tx->id;
    assignment.routes = qos_plan.routes;
    assignment.outcomes = qos_plan.outcomes;
    SearchParams sp;
    sp.k_candidates = opts_.k_candidates;
    sp.trace = opts_.trace;
    sp.claimed_tiles = taken;
    const TileAssignment tuned =
        maxmin_search(scenario_, assignment, opts_.maxmin_budget, opts_.seed, sp);
    qos_plan.routes = tuned.routes;
    qos_plan.outcomes = tuned.outcomes;
    qos_plan.commands.clear();
    for (const AirRoute& r : tuned.routes) {
      auto cmds = route_commands(r, scenario_, r.last_hop_focus);
      qos_plan.commands.insert(qos_plan.commands.end(), cmds.begin(), cmds.end());
    }
  }

  Planned out;
  out.commands = fixed.commands;
  out.commands.insert(out.commands.end(), qos_plan.commands.begin(), qos_plan.commands.end());
  out.outcomes = fixed.outcomes;
  out.outcomes.insert(out.outcomes.end(), qos_plan.outcomes.begin(), qos_plan.outcomes.end());
  for (const ObjectiveOutcome& o : out.outcomes) out.claims[o.objective_id] = {};
  for (const TileCommand& c : out.commands) out.claims[c.correlation_id].push_back(c.tile_id);
  return out;
}

// Applies the plan for the re-planned objectives as a delta batch: RESET the
// tiles they released, SET what is new or changed, leave identical state
// untouched.
CommandBatch ConfService::commit(const Planned& planned,
                                 const std::set<std::string>& replanned_ids) {
  std::map<int, TileFunction> goal;
  for (const TileCommand& c : planned.commands) goal[c.tile_id] = c.fn;

  CommandBatch delta;
  delta.outcomes = planned.outcomes;
  for (const std::string& oid : replanned_ids) {
    auto it = claims_.find(oid);
    if (it == claims_.end()) continue;
    for (int tile_id : it->second) {
      if (goal.count(tile_id)) continue;
      TileCommand reset;
      reset.tile_id = tile_id;
      reset.fn.action = Action::Reset;
      delta.commands.push_back(reset);
    }
  }
  for (const TileCommand& c : planned.commands) {
    auto it = installed_.find(c.tile_id);
    if (it != installed_.end() && it->second == c.fn) continue;  // already live
    delta.commands.push_back(c);
  }

  apply_commands(delta, scenario_);
  for (const TileCommand& c : delta.commands) {
    if (c.fn.action == Action::Reset)
      installed_.erase(c.tile_id);
    else
      installed_[c.tile_id] = scenario_.tile_by_id(c.tile_id)->active.value();
  }
  for (const std::string& oid : replanned_ids) claims_.erase(oid);
  for (const auto& [oid, tiles] : planned.claims) claims_[oid] = tiles;
  return delta;
}

CommandBatch ConfService::configure_all() {
  const std::vector<Objective> effective = effective_objectives();
  Planned planned = plan_objectives(effective, {}, /*allow_maxmin=*/true);
  std::set<std::string> all_ids;
  for (const auto& [oid, tiles] : claims_) all_ids.insert(oid);
  for (const auto& [oid, tiles] : planned.claims) all_ids.insert(oid);
  return commit(planned, all_ids);
}

CommandBatch ConfService::on_location_update(const LocationEvent& event) {
  Device* device = scenario_.device_by_id(event.device_id);
  if (!device) throw ValidationError("location update: unknown device '" + event.device_id + "'");
  if (!event.position.finite() || !scenario_.bounds.contains(event.position))
    throw ValidationError("location update: position outside scenario bounds");

  if (distance(device->position, event.position) == 0.0) return {};  // fixpoint

  device->position = event.position;

  // only objectives that depend on the moved device are re-planned; everyone
  // else keeps their committed tiles
  std::vector<Objective> involved;
  std::set<std::string> involved_ids;
  for (const Objective& o : effective_objectives()) {
    if (involves_device(o, event.device_id, scenario_)) {
      involved.push_back(o);
      involved_ids.insert(objective_key(o));
    }
  }
  std::set<int> fixed_claims;
  for (const auto& [oid, tiles] : claims_) {
    if (involved_ids.count(oid)) continue;
    fixed_claims.insert(tiles.begin(), tiles.end());
  }

  Planned planned = plan_objectives(involved, fixed_claims, /*allow_maxmin=*/false);
  return commit(planned, involved_ids);
}

std::string ConfService::handle_line(const std::string& line) {
  TileCommand cmd;
  try {
    cmd = parse_command(line);
  } catch (const ParseError& e) {
    return std::string("REJ - ") + e.what();
  }
  Tile* tile = scenario_.tile_by_id(cmd.tile_id);
  if (!tile) {
    Outcome out;
    out.status = Outcome::Status::Rejected;
    out.reason = "unknown tile id";
    return encode_reply(cmd.tile_id, out);
  }
  const Outcome out = callback(*tile, cmd.fn);
  if (out.ok()) {
    if (cmd.fn.action == Action::Reset)
      installed_.erase(cmd.tile_id);
    else
      installed_[cmd.tile_id] = tile->active.value();
  }
  return encode_reply(cmd.tile_id, out);
}

ConfigureResult configure(const Scenario& scenario, const std::vector<Objective>& objectives,
                          const PolicySet& policies, const ConfigureOptions& opts) {
  ConfService service(scenario, objectives, policies, opts);
  ConfigureResult result;
  result.batch = service.configure_all();

  std::vector<const Device*> receivers;
  for (const Device& d : service.scenario().devices)
    if (d.role == Role::Receiver) receivers.push_back(&d);
  const Device* tx = default_transmitter(service.scenario());
  if (tx && !receivers.empty()) {
    TileAssignment assignment;
    assignment.tx_id = tx->id;
    for (const auto& [tile_id, fn] : service.installed()) assignment.functions[tile_id] = fn;
    result.predicted = evaluate_assignment(scenario, assignment, receivers, opts.trace);
  }
  return result;
}

std::vector<Outcome> apply_commands(const CommandBatch& batch, Scenario& scenario) {
  std::vector<Outcome> outcomes;
  outcomes.reserve(batch.commands.size());
  for (const TileCommand& cmd : batch.commands) {
    Tile* tile = scenario.tile_by_id(cmd.tile_id);
    if (!tile) {
      Outcome out;
      out.status = Outcome::Status::Rejected;
      out.reason = "unknown tile id";
      outcomes.push_back(out);  // isolation: the rest of the batch still runs
      continue;
    }
    outcomes.push_back(callback(*tile, cmd.fn));
  }
  return outcomes;
}

// -------------------- wire format --------------------

std::string encode_command(const TileCommand& cmd) {
  char buf[256];
  switch (cmd.fn.action) {
    case Action::Reset:
      std::snprintf(buf, sizeof buf, "RESET %d", cmd.tile_id);
      break;
    case Action::Steer: {
      const AzEl in = to_azel(cmd.fn.incident_dir);
      const AzEl out = to_azel(cmd.fn.outgoing_dir);
      std::snprintf(buf, sizeof buf,
                    "SET %d STEER in=%.2f,%.2f out=%.2f,%.2f band=%.0f,%.0f", cmd.tile_id,
                    in.az_deg, in.el_deg, out.az_deg, out.el_deg, cmd.fn.band.f_lo_hz,
                    cmd.fn.band.f_hi_hz);
      break;
    }
    case Action::Focus: {
      const AzEl in = to_azel(cmd.fn.incident_dir);
      std::snprintf(buf, sizeof buf,
                    "SET %d FOCUS in=%.2f,%.2f focal=%.6f,%.6f,%.6f band=%.0f,%.0f", cmd.tile_id,
                    in.az_deg, in.el_deg, cmd.fn.focal_point.x, cmd.fn.focal_point.y,
                    cmd.fn.focal_point.z, cmd.fn.band.f_lo_hz, cmd.fn.band.f_hi_hz);
      break;
    }
    case Action::Absorb:
      std::snprintf(buf, sizeof buf, "SET %d ABSORB alpha=%.3f band=%.0f,%.0f", cmd.tile_id,
                    cmd.fn.alpha, cmd.fn.band.f_lo_hz, cmd.fn.band.f_hi_hz);
      break;
  }
  return buf;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

// "key=v1,v2,..." -> values
std::vector<double> kv_numbers(const std::string& token, const std::string& key, size_t count) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0)
    throw ParseError("command: expected '" + key + "=...', got '" + token + "'");
  std::vector<double> values;
  std::istringstream is(token.substr(prefix.size()));
  std::string field;
  while (std::getline(is, field, ',')) {
    try {
      values.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw ParseError("command: bad number in '" + token + "'");
    }
  }
  if (values.size() != count)
    throw ParseError("command: '" + key + "' needs " + std::to_string(count) + " values");
  return values;
}

}  // namespace

TileCommand parse_command(const std::string& line) {
  const auto tokens = split_ws(line);
  if (tokens.empty()) throw ParseError("command: empty line");

  TileCommand cmd;
  if (tokens[0] == "RESET") {
    if (tokens.size() != 2) throw ParseError("command: RESET takes exactly a tile id");
    try {
      cmd.tile_id = std::stoi(tokens[1]);
    } catch (const std::exception&) {
      throw ParseError("command: bad tile id '" + tokens[1] + "'");
    }
    cmd.fn.action = Action::Reset;
    return cmd;
  }
  if (tokens[0] != "SET") throw ParseError("command: unknown verb '" + tokens[0] + "'");
  if (tokens.size() < 3) throw ParseError("command: SET needs a tile id and an action");
  try {
    cmd.tile_id = std::stoi(tokens[1]);
  } catch (const std::exception&) {
    throw ParseError("command: bad tile id '" + tokens[1] + "'");
  }

  const std::string& action = tokens[2];
  if (action == "STEER") {
    if (tokens.size() != 6) throw ParseError("command: STEER needs in=, out=, band=");
    const auto in = kv_numbers(tokens[3], "in", 2);
    const auto out = kv_numbers(tokens[4], "out", 2);
    const auto band = kv_numbers(tokens[5], "band", 2);
    cmd.fn.action = Action::Steer;
    cmd.fn.incident_dir = from_azel(in[0], in[1]);
    cmd.fn.outgoing_dir = from_azel(out[0], out[1]);
    cmd.fn.band = {band[0], band[1]};
  } else if (action == "FOCUS") {
    if (tokens.size() != 6) throw ParseError("command: FOCUS needs in=, focal=, band=");
    const auto in = kv_numbers(tokens[3], "in", 2);
    const auto focal = kv_numbers(tokens[4], "focal", 3);
    const auto band = kv_numbers(tokens[5], "band", 2);
    cmd.fn.action = Action::Focus;
    cmd.fn.incident_dir = from_azel(in[0], in[1]);
    cmd.fn.focal_point = {focal[0], focal[1], focal[2]};
    cmd.fn.band = {band[0], band[1]};
  } else if (action == "ABSORB") {
    if (tokens.size() != 5) throw ParseError("command: ABSORB needs alpha=, band=");
    const auto alpha = kv_numbers(tokens[3], "alpha", 1);
    const auto band = kv_numbers(tokens[4], "band", 2);
    cmd.fn.action = Action::Absorb;
    cmd.fn.alpha = alpha[0];
    cmd.fn.band = {band[0], band[1]};
  } else {
    throw ParseError("command: unknown action '" + action + "'");
  }
  return cmd;
}

std::string encode_reply(int tile_id, const Outcome& outcome) {
  std::ostringstream os;
  if (outcome.ok()) {
    os << "OK " << tile_id;
  } else {
    os << "REJ " << tile_id << " " << outcome.reason;
  }
  return os.str();
}

std::string encode_batch(const CommandBatch& batch) {
  std::ostringstream os;
  for (const TileCommand& c : batch.commands) os << encode_command(c) << "\n";
  return os.str();
}

int serve_tcp(ConfService& service, uint16_t port) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) return 1;
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listener, 4) != 0) {
    ::close(listener);
    return 1;
  }
  std::fprintf(stderr, "listening on 127.0.0.1:%u\n", port);

  for (;;) {
    const int client = ::accept(listener, nullptr, nullptr);
    if (client < 0) break;
    std::string pending;
    char buf[4096];
    for (;;) {
      const ssize_t n = ::read(client, buf, sizeof buf);
      if (n <= 0) break;
      pending.append(buf, static_cast<size_t>(n));
      size_t pos;
      while ((pos = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pending.erase(0, pos + 1);
        if (line.empty()) continue;
        const std::string reply = service.handle_line(line) + "\n";
        if (::write(client, reply.data(), reply.size()) < 0) break;
      }
    }
    ::close(client);
  }
  ::close(listener);
  return 0;
}

}  // namespace pwe
