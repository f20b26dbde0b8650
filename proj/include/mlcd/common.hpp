#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mlcd {

using Vec3 = Eigen::Vector3d;

// Agent ids are 1-based, matching the scenario documents.
using AgentId = int;

// Row i holds the position of agent i + 1.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Malformed scenario, schedule, or argument. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver or integrator failure on otherwise valid input. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlcd
