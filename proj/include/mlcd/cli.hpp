#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlcd/qp_planner.hpp"
#include "mlcd/safety_cert.hpp"

namespace mlcd {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUnsafe = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNumericalFailure = 3;
}  // namespace exit_code

struct RunManifest {
  std::string command;
  std::string scenario;  // path or built-in name
  std::string out_dir = ".";
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<ScalingMode> mode;
  TableFormat format = TableFormat::kCsv;
  bool open_loop = false;
  std::string schedule;    // certify: planner trace (default <out>/plan_trace.<ext>)
  std::string trajectory;  // certify: optional trajectory with actual positions
};

int cmd_plan(const RunManifest& manifest, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunManifest& manifest, std::ostream& out, std::ostream& err);
int cmd_certify(const RunManifest& manifest, std::ostream& out, std::ostream& err);

// argv-style entry point (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlcd
