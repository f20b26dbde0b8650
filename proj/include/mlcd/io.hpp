#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mlcd/common.hpp"
#include "mlcd/qp_planner.hpp"
#include "mlcd/safety_cert.hpp"

namespace mlcd {

// Shortest text that reads back to the same double (17 significant digits).
std::string format_real(double value);

// Header: t,alpha_1..alpha_npl,s_x,s_y,s_z,objective,kkt
void write_planner_trace(std::ostream& out, const std::vector<ScheduleEntry>& schedule,
                         TableFormat format = TableFormat::kCsv);
// Accepts either format. Throws InputError on empty or malformed input.
std::vector<ScheduleEntry> read_planner_trace(std::istream& in);

struct TrajectoryTable {
  std::vector<double> time;
  std::vector<Positions> desired;
  std::vector<Positions> actual;
};

// Header: t,agent_id,x_des,y_des,z_des,x_act,y_act,z_act
void write_trajectory(std::ostream& out, const TrajectoryTable& table,
                      TableFormat format = TableFormat::kCsv);
TrajectoryTable read_trajectory(std::istream& in);

}  // namespace mlcd
