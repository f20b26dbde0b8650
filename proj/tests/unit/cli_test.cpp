#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mlcd/cli.hpp"
#include "mlcd/io.hpp"
#include "mlcd/safety_cert.hpp"
#include "mlcd/scenario.hpp"
#include "support/documents.hpp"

namespace mlcd {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt_name(::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    scenario_path_ = write_file("triangle.json", testing::triangle_json().dump(2));
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string fmt_name(const std::string& test) { return "mlcd_cli_" + test; }

  std::string write_file(const std::string& name, const std::string& text) const {
    const fs::path path = dir_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  static std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mlcd");
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::string scenario_path_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, PlanWritesTraceAndTrajectory) {
  ASSERT_EQ(run({"plan", "--config", scenario_path_, "--out", dir_.string()}), 0) << err_.str();
  std::ifstream trace(dir_ / "plan_trace.csv");
  const auto schedule = read_planner_trace(trace);
  EXPECT_EQ(schedule.size(), 101u);
  std::ifstream trajectory(dir_ / "trajectory.csv");
  const auto table = read_trajectory(trajectory);
  ASSERT_EQ(table.time.size(), 101u);
  EXPECT_EQ(table.desired[50], table.actual[50]);
  EXPECT_NE(out_.str().find("max KKT residual"), std::string::npos);
}

TEST_F(CliTest, ZeroDurationGivesOneRow) {
  ASSERT_EQ(run({"plan", "--config", scenario_path_, "--out", dir_.string(), "--T", "0",
                 "--format", "text"}),
            0)
      << err_.str();
  std::ifstream trace(dir_ / "plan_trace.txt");
  EXPECT_EQ(read_planner_trace(trace).size(), 1u);
}

TEST_F(CliTest, ArgumentErrors) {
  EXPECT_EQ(run({"plan", "--config", scenario_path_, "--format", "yaml"}), 2);
  EXPECT_NE(err_.str().find("yaml"), std::string::npos);
  EXPECT_EQ(run({"plan", "--config", scenario_path_, "--mode", "fast"}), 2);
  EXPECT_EQ(run({"plan"}), 2);
  EXPECT_EQ(run({"plan", "--config", (dir_ / "missing.json").string()}), 2);
  EXPECT_EQ(run({"plan", "--config", scenario_path_, "--dt", "0"}), 2);
  EXPECT_EQ(run({"plan", "--config", scenario_path_, "--open-loop"}), 2);
  EXPECT_EQ(run({"scenario", "unknown"}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, EmptySafetyWindowIsInputError) {
  auto doc = testing::triangle_json();
  doc["safety"]["a_max"] = 1.5;
  const std::string path = write_file("narrow.json", doc.dump());
  EXPECT_EQ(run({"plan", "--config", path, "--out", dir_.string()}), 2);
  EXPECT_NE(err_.str().find("alpha_min"), std::string::npos) << err_.str();
}

TEST_F(CliTest, CertifyMatchesInMemoryCertification) {
  ASSERT_EQ(run({"plan", "--config", scenario_path_, "--out", dir_.string()}), 0) << err_.str();
  ASSERT_EQ(run({"certify", "--config", scenario_path_, "--out", dir_.string()}), 0) << err_.str();
  EXPECT_NE(out_.str().find("verdict: safe"), std::string::npos);

  const Scenario scenario = load_scenario_file(scenario_path_);
  const auto weights = scenario_weights(scenario);
  const auto grid = time_grid(scenario.trajectory.duration(), scenario.sim.dt);
  const auto plan = alpha_schedule(scenario.team, weights, scenario.trajectory, grid,
                                   resolve_planner(scenario));
  std::vector<PlanStep> steps;
  for (const auto& e : plan) steps.push_back({e.t, e.alpha, e.s});
  const auto report = certify_configuration(scenario.team, weights, steps);
  std::ostringstream expected;
  write_certification_table(expected, report);
  EXPECT_EQ(read_file(dir_ / "certification.csv"), expected.str());
}

TEST_F(CliTest, EditedScheduleIsUnsafe) {
  ASSERT_EQ(run({"plan", "--config", scenario_path_, "--out", dir_.string()}), 0) << err_.str();
  std::ifstream trace(dir_ / "plan_trace.csv");
  auto schedule = read_planner_trace(trace);
  for (auto& e : schedule) e.alpha.head(3).setConstant(0.01);
  std::ostringstream edited;
  write_planner_trace(edited, schedule);
  const std::string path = write_file("edited.csv", edited.str());
  EXPECT_EQ(run({"certify", "--config", scenario_path_, "--out", dir_.string(), "--schedule", path}), 1);
  EXPECT_NE(out_.str().find("verdict: unsafe"), std::string::npos);
  EXPECT_NE(out_.str().find("first violation: step 0"), std::string::npos) << out_.str();
}

TEST_F(CliTest, CertifyRejectsBadSchedules) {
  const std::string empty = write_file("empty.csv", "t,alpha_1,alpha_2,alpha_3,alpha_4,s_x,s_y,s_z,objective,kkt\n");
  EXPECT_EQ(run({"certify", "--config", scenario_path_, "--schedule", empty}), 2);
  const std::string narrow = write_file("narrow.csv", "t,alpha_1,s_x,s_y,s_z,objective,kkt\n0,1,0,0,0,0,0\n");
  EXPECT_EQ(run({"certify", "--config", scenario_path_, "--schedule", narrow}), 2);
  EXPECT_EQ(run({"certify", "--config", scenario_path_, "--schedule", (dir_ / "none.csv").string()}), 2);
}

TEST_F(CliTest, SimulateOpenLoopTracksExactly) {
  ASSERT_EQ(run({"simulate", "--config", scenario_path_, "--out", dir_.string(), "--open-loop"}), 0)
      << err_.str();
  EXPECT_NE(out_.str().find("mode: open-loop"), std::string::npos);
  std::ifstream trajectory(dir_ / "trajectory.csv");
  const auto table = read_trajectory(trajectory);
  for (std::size_t k = 0; k < table.time.size(); ++k) EXPECT_EQ(table.desired[k], table.actual[k]);
}

TEST_F(CliTest, SimulateThenCertifyWithActualPositions) {
  ASSERT_EQ(run({"simulate", "--config", scenario_path_, "--out", dir_.string()}), 0) << err_.str();
  EXPECT_NE(out_.str().find("mode: closed-loop"), std::string::npos);
  ASSERT_EQ(run({"certify", "--config", scenario_path_, "--out", dir_.string(), "--trajectory",
                 (dir_ / "trajectory.csv").string()}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("min actual distance"), std::string::npos);
}

TEST_F(CliTest, ScenarioCommandPrintsBuiltin) {
  ASSERT_EQ(run({"scenario", "helix67"}), 0);
  EXPECT_EQ(out_.str(), helix67_document());
}

}  // namespace
}  // namespace mlcd
