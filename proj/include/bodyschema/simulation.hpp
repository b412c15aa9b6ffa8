#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "bodyschema/agent.hpp"

namespace bodyschema {

// How an active joint angle follows its target.
//   kFirstOrder:  theta += gain * (target - theta) * dt
//   kSecondOrder: damped spring, natural frequency `gain` [rad/s] on the
//                 first axis and gain * axis_frequency_ratio on the second.
enum class Controller { kFirstOrder, kSecondOrder };

struct MotionConfig {
  double p_coordination = 0.9;  // probability a joint stays locked per epoch
  int decision_interval = 500;  // steps between activation redraws
  double dt = 0.1;              // [s]
  int total_steps = 100000;
  double controller_gain = 1.0;    // [1/s], or [rad/s] for the second-order controller
  double settle_tolerance = 1e-3;  // [rad] (and [rad/s]) at which a joint stops
  double rho = 1010.0;             // fluid density [kg/m^3]
  Controller controller = Controller::kSecondOrder;
  double damping_ratio = 0.08;          // second order only
  double axis_frequency_ratio = 1.618;  // second order only
  std::uint64_t seed = 1;

  // Throws ConfigError when any field is out of range.
  void validate() const;
};

using PressureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LevelMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-sensor pressure time series (sensors x steps), plus the quantized
// symbols in {1..n_levels} once `quantize` has run.
struct TactileLog {
  PressureMatrix raw;
  std::optional<LevelMatrix> quantized;
  int n_levels = 0;
  double dt = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t agent_fingerprint = 0;

  Eigen::Index sensors() const { return raw.rows(); }
  Eigen::Index steps() const { return raw.rows() > 0 ? raw.cols() : (quantized ? quantized->cols() : 0); }
};

// Optional diagnostics recorded during simulation.
struct SimulationTrace {
  std::vector<int> activations_per_epoch;
  Eigen::MatrixXd joint_angles;  // (2 * joints) x steps
};

// Dynamic pressure on a surface element moving with `velocity` whose outward
// normal is `normal`: rho * (v . n)^2 when the element pushes into the fluid,
// zero otherwise.
inline double tactile_pressure(const Eigen::Vector3d& velocity, const Eigen::Vector3d& normal, double rho) {
  const double approach = velocity.dot(normal);
  return approach > 0.0 ? rho * approach * approach : 0.0;
}

// World pose of every part for joint angles laid out as [j0a, j0b, j1a, ...].
std::vector<Eigen::Isometry3d> forward_kinematics(const AgentModel& agent,
                                                  const Eigen::Ref<const Eigen::VectorXd>& joint_angles);

// World positions (3 x M) and normals (3 x M) of all sensors.
void sensor_world_frames(const AgentModel& agent, const std::vector<Eigen::Isometry3d>& poses,
                         Eigen::Matrix3Xd& positions, Eigen::Matrix3Xd& normals);

// Kinematic simulation of coordinated random movements. Deterministic in
// (agent, cfg); the root part stays fixed at the world origin.
TactileLog simulate(const AgentModel& agent, const MotionConfig& cfg, SimulationTrace* trace = nullptr);

// Per-sensor equal-frequency binning of raw pressures into {1..n_levels}.
// Cut points are order statistics; values equal to a cut point fall in the
// lower bin. Throws ConfigError for n_levels outside [2, 255].
TactileLog quantize(const TactileLog& log, int n_levels);

// Quantizes a single channel; exposed for tests and external tools.
std::vector<std::uint8_t> quantize_channel(std::span<const float> values, int n_levels);

}  // namespace bodyschema
