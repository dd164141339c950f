#include "pwe/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pwe/confservice.hpp"
#include "pwe/errors.hpp"
#include "pwe/optimize.hpp"
#include "pwe/raytrace.hpp"
#include "pwe/routing.hpp"
#include "pwe/scene.hpp"

namespace pwe::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << content;
}

const Device& require_transmitter(const Scenario& s) {
  for (const Device& d : s.devices)
    if (d.role == Role::Transmitter) return d;
  throw ValidationError("scenario has no transmitter");
}

std::vector<Objective> load_objectives(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open objectives file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("objectives file: ") + e.what());
  }
  if (!doc.contains("objectives") || !doc["objectives"].is_array())
    throw ParseError("objectives file: missing 'objectives' array");

  std::vector<Objective> out;
  for (const auto& jo : doc["objectives"]) {
    Objective o;
    const std::string kind = jo.value("kind", "");
    if (kind == "qos") o.kind = ObjectiveKind::Qos;
    else if (kind == "power") o.kind = ObjectiveKind::Power;
    else if (kind == "secure") o.kind = ObjectiveKind::Secure;
    else if (kind == "block") o.kind = ObjectiveKind::Block;
    else throw ParseError("objectives file: unknown kind '" + kind + "'");
    if (!jo.contains("subject")) throw ParseError("objectives file: objective without subject");
    o.subject_id = jo["subject"].get<std::string>();
    o.src_id = jo.value("src", "");
    o.id = jo.value("id", "");
    if (jo.contains("radius_m")) o.secure_radius_m = jo["radius_m"].get<double>();
    if (jo.contains("avoid"))
      for (const auto& a : jo["avoid"]) o.avoid_ids.push_back(a.get<std::string>());
    if (jo.contains("delay_spread_cap_s"))
      o.delay_spread_cap_s = jo["delay_spread_cap_s"].get<double>();
    out.push_back(std::move(o));
  }
  return out;
}

std::string comparison_csv(const std::vector<std::pair<std::string, EvalReport>>& stages) {
  std::ostringstream os;
  os << "stage,min_dbm,mean_dbm,max_dbm,disconnected\n";
  char buf[160];
  for (const auto& [name, report] : stages) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%d\n", name.c_str(), report.min_dbm,
                  report.mean_dbm, report.max_dbm, report.disconnected);
    os << buf;
  }
  return os.str();
}

CommandBatch batch_from_assignment(const TileAssignment& assignment, const Scenario& scenario) {
  CommandBatch batch;
  for (const AirRoute& r : assignment.routes) {
    auto cmds = route_commands(r, scenario, r.last_hop_focus);
    batch.commands.insert(batch.commands.end(), cmds.begin(), cmds.end());
  }
  batch.outcomes = assignment.outcomes;
  return batch;
}

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  unsigned long long seed = kDefaultSeed;
  long budget = kDefaultBudget;
  int max_depth = 3;
  bool coherent = false;
  double cell = 0.5;
  double height = 1.5;
};

TraceConfig trace_from(const CommonArgs& args) {
  TraceConfig cfg;
  cfg.max_tile_hops = args.max_depth;
  cfg.coherent = args.coherent;
  return cfg;
}

int cmd_simulate(const CommonArgs& args) {
  Scenario s = load_scenario_file(args.scenario_path);
  const Device& tx = require_transmitter(s);
  const TraceConfig cfg = trace_from(args);

  fs::create_directories(args.out_dir);
  const CoverageGrid grid = coverage_map(s, tx, GridSpec{args.height, args.cell}, cfg);
  write_file(fs::path(args.out_dir) / "coverage.csv", coverage_to_csv(grid));

  auto receivers = s.devices_with_role(Role::Receiver);
  if (!receivers.empty()) {
    TileAssignment as_is;
    as_is.tx_id = tx.id;
    const EvalReport report = evaluate_assignment(s, as_is, receivers, cfg);
    write_file(fs::path(args.out_dir) / "receivers.csv", eval_report_to_csv(report));
    std::cout << "receivers: min " << report.min_dbm << " dBm, mean " << report.mean_dbm
              << " dBm, max " << report.max_dbm << " dBm, disconnected " << report.disconnected
              << "\n";
  }
  std::cout << "coverage grid " << grid.nx << "x" << grid.ny << " written to " << args.out_dir
            << "\n";
  return 0;
}

int cmd_optimize(const CommonArgs& args) {
  Scenario s = load_scenario_file(args.scenario_path);
  const Device& tx = require_transmitter(s);
  auto receivers = s.devices_with_role(Role::Receiver);
  if (receivers.empty()) throw ValidationError("scenario has no receivers to optimize for");
  const TraceConfig cfg = trace_from(args);

  TileAssignment empty;
  empty.tx_id = tx.id;
  const EvalReport before = evaluate_assignment(s, empty, receivers, cfg);

  GreedyParams gp;
  gp.trace = cfg;
  TileAssignment assignment = greedy_assign(s, tx, receivers, gp);
  if (args.budget > 0) {
    SearchParams sp;
    sp.trace = cfg;
    assignment = maxmin_search(s, assignment, args.budget, args.seed, sp);
  }
  const EvalReport after = evaluate_assignment(s, assignment, receivers, cfg);

  fs::create_directories(args.out_dir);
  write_file(fs::path(args.out_dir) / "eval_before.csv", eval_report_to_csv(before));
  write_file(fs::path(args.out_dir) / "eval_after.csv", eval_report_to_csv(after));
  write_file(fs::path(args.out_dir) / "commands.txt",
             encode_batch(batch_from_assignment(assignment, s)));
  std::cout << comparison_csv({{"baseline", before}, {"optimized", after}});
  return 0;
}

int cmd_reproduce_paper(const CommonArgs& args) {
  Scenario s = build_paper_scenario();
  const Device& tx = require_transmitter(s);
  auto receivers = s.devices_with_role(Role::Receiver);
  const TraceConfig cfg = trace_from(args);

  fs::create_directories(args.out_dir);
  write_file(fs::path(args.out_dir) / "scenario.json", serialize_scenario(s));

  TileAssignment empty;
  empty.tx_id = tx.id;
  const EvalReport baseline = evaluate_assignment(s, empty, receivers, cfg);
  write_file(fs::path(args.out_dir) / "baseline_eval.csv", eval_report_to_csv(baseline));
  write_file(fs::path(args.out_dir) / "baseline_coverage.csv",
             coverage_to_csv(coverage_map(s, tx, GridSpec{args.height, args.cell}, cfg)));

  GreedyParams gp;
  gp.trace = cfg;
  const TileAssignment greedy = greedy_assign(s, tx, receivers, gp);
  const EvalReport greedy_eval = evaluate_assignment(s, greedy, receivers, cfg);
  write_file(fs::path(args.out_dir) / "greedy_eval.csv", eval_report_to_csv(greedy_eval));

  SearchParams sp;
  sp.trace = cfg;
  const TileAssignment tuned = maxmin_search(s, greedy, args.budget, args.seed, sp);
  const EvalReport tuned_eval = evaluate_assignment(s, tuned, receivers, cfg);
  write_file(fs::path(args.out_dir) / "optimized_eval.csv", eval_report_to_csv(tuned_eval));

  const Scenario configured = apply_assignment(s, tuned);
  write_file(fs::path(args.out_dir) / "optimized_coverage.csv",
             coverage_to_csv(coverage_map(configured, tx, GridSpec{args.height, args.cell}, cfg)));
  write_file(fs::path(args.out_dir) / "commands.txt",
             encode_batch(batch_from_assignment(tuned, s)));

  const std::string table = comparison_csv(
      {{"baseline", baseline}, {"greedy", greedy_eval}, {"optimized", tuned_eval}});
  write_file(fs::path(args.out_dir) / "comparison.txt", table);
  std::cout << table;
  return 0;
}

int cmd_route(const CommonArgs& args, const std::string& objectives_path) {
  Scenario s = load_scenario_file(args.scenario_path);
  const auto objectives = load_objectives(objectives_path);
  const TileGraph graph = build_tile_graph(s);
  const PlanResult plan = plan_routes(objectives, graph, s);

  fs::create_directories(args.out_dir);
  write_file(fs::path(args.out_dir) / "routes.txt", routes_report(plan));
  CommandBatch batch;
  batch.commands = plan.commands;
  batch.outcomes = plan.outcomes;
  write_file(fs::path(args.out_dir) / "commands.txt", encode_batch(batch));
  std::cout << routes_report(plan);
  for (const ObjectiveOutcome& o : plan.outcomes) {
    if (!o.served) return 3;  // partial failure: artifacts written, flag it
  }
  return 0;
}

int cmd_serve(const CommonArgs& args, const std::string& objectives_path, uint16_t port) {
  Scenario s = load_scenario_file(args.scenario_path);
  std::vector<Objective> objectives;
  if (!objectives_path.empty()) objectives = load_objectives(objectives_path);
  ConfigureOptions opts;
  opts.seed = args.seed;
  opts.maxmin_budget = args.budget;
  opts.trace = trace_from(args);
  ConfService service(std::move(s), std::move(objectives), PolicySet{}, opts);
  const CommandBatch batch = service.configure_all();
  std::cout << "initial configuration: " << batch.commands.size() << " commands\n";
  return serve_tcp(service, port);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"programmable wireless environment simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string objectives_path;
  uint16_t port = 7010;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario)
      cmd->add_option("--scenario", args.scenario_path, "scenario document (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "RNG seed");
    cmd->add_option("--budget", args.budget, "optimizer evaluation budget");
    cmd->add_option("--max-depth", args.max_depth, "max programmed tile hops per path");
    cmd->add_flag("--coherent", args.coherent, "phase-aware power aggregation");
    cmd->add_option("--cell", args.cell, "coverage cell size (m)");
    cmd->add_option("--height", args.height, "coverage plane height (m)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "trace a scenario and emit coverage");
  add_common(simulate, true);

  CLI::App* optimize = app.add_subcommand("optimize", "plan tile functions for the receivers");
  add_common(optimize, true);

  CLI::App* reproduce =
      app.add_subcommand("reproduce-paper", "run the built-in evaluation room end to end");
  add_common(reproduce, false);

  CLI::App* route = app.add_subcommand("route", "plan air-routes for an objective list");
  add_common(route, true);
  route->add_option("--objectives", objectives_path, "objectives file (JSON)")->required();

  CLI::App* serve = app.add_subcommand("serve", "run the configuration service on a TCP socket");
  serve->add_option("--scenario", args.scenario_path, "scenario document (JSON)")->required();
  serve->add_option("--objectives", objectives_path, "objectives file (JSON)");
  serve->add_option("--port", port, "listen port");
  serve->add_option("--seed", args.seed, "RNG seed");
  serve->add_option("--budget", args.budget, "optimizer evaluation budget");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (optimize->parsed()) return cmd_optimize(args);
    if (reproduce->parsed()) return cmd_reproduce_paper(args);
    if (route->parsed()) return cmd_route(args, objectives_path);
    if (serve->parsed()) return cmd_serve(args, objectives_path, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace pwe::cli
