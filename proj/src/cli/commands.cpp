#include "mlcd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mlcd/io.hpp"
#include "mlcd/scenario.hpp"
#include "mlcd/swarm_sim.hpp"

namespace mlcd {
namespace {

namespace fs = std::filesystem;

Scenario load(const RunManifest& manifest, std::ostream& err) {
  if (manifest.scenario.empty()) throw InputError("no scenario given (--config)");
  const std::string builtin = builtin_scenario(manifest.scenario);
  Scenario scenario =
      builtin.empty() ? load_scenario_file(manifest.scenario) : load_scenario(builtin);
  for (const ValidationIssue& w : scenario.warnings) {
    err << "warning: " << w.code << ": " << w.message << '\n';
  }
  if (manifest.dt) {
    if (!(*manifest.dt > 0.0)) throw InputError("nonpositive step: --dt must be > 0");
    scenario.sim.dt = *manifest.dt;
  }
  if (manifest.duration) scenario.trajectory.set_duration(*manifest.duration);
  if (manifest.mode) scenario.planner.mode = *manifest.mode;
  return scenario;
}

const char* extension(TableFormat format) { return format == TableFormat::kCsv ? "csv" : "txt"; }

fs::path output_path(const RunManifest& manifest, const char* stem) {
  return fs::path(manifest.out_dir) / fmt::format("{}.{}", stem, extension(manifest.format));
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void finish(std::ofstream& file, const fs::path& path) {
  file.close();
  if (!file) throw InputError(fmt::format("failed writing '{}'", path.string()));
}

void write_schedule_outputs(const RunManifest& manifest, const std::vector<ScheduleEntry>& plan,
                            const TrajectoryTable& table, std::ostream& out) {
  const fs::path trace_path = output_path(manifest, "plan_trace");
  std::ofstream trace = open_output(trace_path);
  write_planner_trace(trace, plan, manifest.format);
  finish(trace, trace_path);

  const fs::path trajectory_path = output_path(manifest, "trajectory");
  std::ofstream trajectory = open_output(trajectory_path);
  write_trajectory(trajectory, table, manifest.format);
  finish(trajectory, trajectory_path);

  out << "wrote " << trace_path.string() << '\n' << "wrote " << trajectory_path.string() << '\n';
}

void print_plan_summary(const Scenario& scenario, const std::vector<LayerWeights>& weights,
                        const PlannerSettings& planner, const std::vector<ScheduleEntry>& plan,
                        std::ostream& out) {
  const int n_boundary = scenario.team.partition.primary_count() - 1;
  double alpha_lo = std::numeric_limits<double>::infinity();
  double alpha_hi = -alpha_lo;
  double deviation = 0.0;
  double kkt = 0.0;
  for (const ScheduleEntry& e : plan) {
    alpha_lo = std::min(alpha_lo, e.alpha.head(n_boundary).minCoeff());
    alpha_hi = std::max(alpha_hi, e.alpha.head(n_boundary).maxCoeff());
    const Vec3 p = nominal_position(scenario.team, weights, e.alpha, e.s, planner.averaging);
    deviation = std::max(deviation, (p - scenario.trajectory.position(e.t)).norm());
    kkt = std::max(kkt, e.kkt.max());
  }
  out << fmt::format("steps: {}\n", plan.size());
  out << fmt::format("alpha bounds used: [{:.6g}, {:.6g}]\n", planner.bounds.min, planner.bounds.max);
  out << fmt::format("alpha range observed: [{:.6g}, {:.6g}]\n", alpha_lo, alpha_hi);
  out << fmt::format("max |p - s|: {:.3e} m\n", deviation);
  out << fmt::format("max KKT residual: {:.3e}\n", kkt);
}

std::vector<PlanStep> plan_steps(const std::vector<ScheduleEntry>& schedule) {
  std::vector<PlanStep> steps;
  steps.reserve(schedule.size());
  for (const ScheduleEntry& e : schedule) steps.push_back({e.t, e.alpha, e.s});
  return steps;
}

}  // namespace

int cmd_plan(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  const Scenario scenario = load(manifest, err);
  const auto weights = scenario_weights(scenario);
  const PlannerSettings planner = resolve_planner(scenario);
  const auto grid = time_grid(scenario.trajectory.duration(), scenario.sim.dt);
  const auto plan = alpha_schedule(scenario.team, weights, scenario.trajectory, grid, planner);

  TrajectoryTable table;
  table.time = grid;
  for (const ScheduleEntry& e : plan) {
    table.desired.push_back(forward_pass(scenario.team, weights, e.alpha, e.s));
  }
  table.actual = table.desired;

  print_plan_summary(scenario, weights, planner, plan, out);
  write_schedule_outputs(manifest, plan, table, out);
  return exit_code::kOk;
}

int cmd_simulate(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  const Scenario scenario = load(manifest, err);
  const auto weights = scenario_weights(scenario);
  const PlannerSettings planner = resolve_planner(scenario);
  SimSettings sim = scenario.sim;
  if (manifest.open_loop) sim.mode = SimMode::kOpenLoop;

  const SimLog log = run_simulation(scenario.team, weights, scenario.trajectory, planner, sim);
  const TrackingErrorSummary tracking = tracking_error(log);
  const SafetyParameters& safety = scenario.team.safety;

  double settled = 0.0;
  int settled_flags = 0;
  for (std::size_t k = 0; k < log.time.size(); ++k) {
    if (log.time[k] < sim.transient) continue;
    settled = std::max(settled, log.max_tracking_error[k]);
    if (log.max_tracking_error[k] > safety.delta) ++settled_flags;
  }
  const auto closest = std::min_element(log.min_distance.begin(), log.min_distance.end());
  const auto closest_step = static_cast<std::size_t>(closest - log.min_distance.begin());

  print_plan_summary(scenario, weights, planner, log.plan, out);
  out << fmt::format("mode: {}\n", sim.mode == SimMode::kOpenLoop ? "open-loop" : "closed-loop");
  out << fmt::format("max tracking error: {:.6g} m (agent {}, t = {:.6g} s), delta = {:.6g} m\n",
                     tracking.max, tracking.agent, log.time[static_cast<std::size_t>(tracking.step)],
                     safety.delta);
  out << fmt::format("max tracking error after {:.6g} s: {:.6g} m ({} steps above delta)\n",
                     sim.transient, settled, settled_flags);
  out << fmt::format("min pairwise distance: {:.6g} m (t = {:.6g} s), 2 epsilon = {:.6g} m\n",
                     *closest, log.time[closest_step], 2.0 * safety.epsilon);

  TrajectoryTable table{log.time, log.desired, log.actual};
  write_schedule_outputs(manifest, log.plan, table, out);

  if (*closest < 2.0 * safety.epsilon) {
    out << "verdict: unsafe (agents closer than 2 epsilon)\n";
    return exit_code::kUnsafe;
  }
  return exit_code::kOk;
}

int cmd_certify(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  const Scenario scenario = load(manifest, err);
  const auto weights = scenario_weights(scenario);
  const TeamConfiguration& team = scenario.team;

  const fs::path schedule_path =
      manifest.schedule.empty() ? output_path(manifest, "plan_trace") : fs::path(manifest.schedule);
  std::ifstream schedule_file(schedule_path);
  if (!schedule_file) {
    throw InputError(fmt::format("cannot open schedule file '{}'", schedule_path.string()));
  }
  std::vector<ScheduleEntry> schedule;
  try {
    schedule = read_planner_trace(schedule_file);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", schedule_path.string(), e.what()));
  }
  const int n_pl = team.partition.primary_count();
  if (schedule.front().alpha.size() != n_pl) {
    throw InputError(fmt::format("{}: schedule has {} alpha columns, scenario has {} primary leaders",
                                 schedule_path.string(), schedule.front().alpha.size(), n_pl));
  }

  std::vector<Positions> actual;
  if (!manifest.trajectory.empty()) {
    std::ifstream trajectory_file(manifest.trajectory);
    if (!trajectory_file) {
      throw InputError(fmt::format("cannot open trajectory file '{}'", manifest.trajectory));
    }
    TrajectoryTable table = read_trajectory(trajectory_file);
    if (!std::equal(table.time.begin(), table.time.end(), schedule.begin(), schedule.end(),
                    [](double t, const ScheduleEntry& e) { return t == e.t; })) {
      throw InputError("trajectory time stamps do not match the schedule");
    }
    if (table.desired.front().rows() != team.agent_count) {
      throw InputError(fmt::format("trajectory lists {} agents, scenario has {}",
                                   table.desired.front().rows(), team.agent_count));
    }
    actual = std::move(table.actual);
  }

  const CertificationReport report =
      certify_configuration(team, weights, plan_steps(schedule), {}, actual);

  const fs::path report_path = output_path(manifest, "certification");
  std::ofstream report_file = open_output(report_path);
  write_certification_table(report_file, report, manifest.format);
  finish(report_file, report_path);

  out << fmt::format("steps: {}, cells: {}\n", schedule.size(), team.cells.size());
  out << fmt::format("min margin: {:.6g}\n", report.min_margin);
  if (report.first_violation) {
    const Violation& v = *report.first_violation;
    out << fmt::format("first violation: step {} (t = {:.6g} s), cell {}\n", v.step, v.t, v.cell_id);
  }
  const auto min_desired =
      std::min_element(report.min_desired_distance.begin(), report.min_desired_distance.end());
  out << fmt::format("min desired distance: {:.6g} m, 2(delta + epsilon) = {:.6g} m, flagged steps: {}\n",
                     *min_desired, 2.0 * (team.safety.delta + team.safety.epsilon),
                     report.desired_distance_flags.size());
  if (!report.min_actual_distance.empty()) {
    out << fmt::format("min actual distance: {:.6g} m, 2 epsilon = {:.6g} m\n",
                       *std::min_element(report.min_actual_distance.begin(),
                                         report.min_actual_distance.end()),
                       2.0 * team.safety.epsilon);
    if (report.first_actual_violation) {
      out << fmt::format("first actual violation: step {}\n", *report.first_actual_violation);
    }
  }
  out << "wrote " << report_path.string() << '\n';
  out << "verdict: " << (report.safe ? "safe" : "unsafe") << '\n';
  return report.safe ? exit_code::kOk : exit_code::kUnsafe;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-layer continuum deformation planner"};
  app.require_subcommand(1);

  RunManifest manifest;
  std::string format = "csv";
  std::string mode;
  double dt = 0.0;
  double duration = 0.0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", manifest.scenario, "Scenario file or built-in name (helix67)")
        ->required();
    sub->add_option("--out", manifest.out_dir, "Output directory");
    sub->add_option("--dt", dt, "Time step [s]");
    sub->add_option("--T", duration, "Duration [s]");
    sub->add_option("--mode", mode, "QP scaling: consistent | paper-exact");
    sub->add_option("--format", format, "Output format: csv | text");
  };

  CLI::App* plan = app.add_subcommand("plan", "Solve the alpha schedule");
  add_common(plan);
  CLI::App* simulate = app.add_subcommand("simulate", "Plan and simulate the team");
  add_common(simulate);
  simulate->add_flag("--open-loop", manifest.open_loop, "Actual positions follow the plan exactly");
  CLI::App* certify = app.add_subcommand("certify", "Certify a planner trace");
  add_common(certify);
  certify->add_option("--schedule", manifest.schedule,
                      "Planner trace (default <out>/plan_trace.<ext>)");
  certify->add_option("--trajectory", manifest.trajectory, "Trajectory with actual positions");
  CLI::App* scenario = app.add_subcommand("scenario", "Print a built-in scenario document");
  std::string scenario_name;
  scenario->add_option("name", scenario_name, "Built-in scenario name")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code::kInputError;
  }

  if (scenario->parsed()) {
    const std::string doc = builtin_scenario(scenario_name);
    if (doc.empty()) {
      err << "error: unknown built-in scenario '" << scenario_name << "'\n";
      return exit_code::kInputError;
    }
    out << doc;
    return exit_code::kOk;
  }

  CLI::App* sub = app.get_subcommands().front();
  manifest.command = sub->get_name();
  if (format == "csv") {
    manifest.format = TableFormat::kCsv;
  } else if (format == "text") {
    manifest.format = TableFormat::kText;
  } else {
    err << "error: unknown output format '" << format << "' (expected csv or text)\n";
    return exit_code::kInputError;
  }
  if (!mode.empty()) {
    if (mode == "consistent") {
      manifest.mode = ScalingMode::kConsistent;
    } else if (mode == "paper-exact") {
      manifest.mode = ScalingMode::kHalfQuadratic;
    } else {
      err << "error: unknown scaling mode '" << mode << "' (expected consistent or paper-exact)\n";
      return exit_code::kInputError;
    }
  }
  if (sub->count("--dt") > 0) manifest.dt = dt;
  if (sub->count("--T") > 0) manifest.duration = duration;

  try {
    if (manifest.command == "plan") return cmd_plan(manifest, out, err);
    if (manifest.command == "simulate") return cmd_simulate(manifest, out, err);
    return cmd_certify(manifest, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_code::kNumericalFailure;
  }
}

}  // namespace mlcd
