#include "bodyschema/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>

#include "bodyschema/errors.hpp"

namespace bodyschema {

void MotionConfig::validate() const {
  if (!(p_coordination >= 0.0 && p_coordination <= 1.0)) throw ConfigError("p_coordination must lie in [0, 1]");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (total_steps < 2) throw ConfigError("total_steps must be at least 2 to form a velocity");
  if (decision_interval < 1) throw ConfigError("decision_interval must be at least 1");
  if (!(controller_gain > 0.0)) throw ConfigError("controller_gain must be positive");
  if (!(settle_tolerance >= 0.0)) throw ConfigError("settle_tolerance must be non-negative");
  if (!(rho >= 0.0)) throw ConfigError("rho must be non-negative");
  if (controller == Controller::kSecondOrder) {
    if (!(damping_ratio > 0.0)) throw ConfigError("damping_ratio must be positive");
    if (!(axis_frequency_ratio > 0.0)) throw ConfigError("axis_frequency_ratio must be positive");
    // Explicit integration needs omega * dt well below 2.
    const double omega = controller_gain * std::max(1.0, axis_frequency_ratio);
    if (omega * dt >= 1.0) throw ConfigError("second-order controller is unstable at this gain and dt");
  }
}

std::vector<Eigen::Isometry3d> forward_kinematics(const AgentModel& agent,
                                                  const Eigen::Ref<const Eigen::VectorXd>& joint_angles) {
  std::vector<Eigen::Isometry3d> poses(agent.parts.size(), Eigen::Isometry3d::Identity());
  for (std::size_t j = 0; j < agent.joints.size(); ++j) {
    const Joint& joint = agent.joints[j];
    const Eigen::Quaterniond rest = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitX(), joint.direction);
    Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
    local.translate(joint.anchor);
    local.rotate(rest);
    local.rotate(Eigen::AngleAxisd(joint_angles[2 * j], Eigen::Vector3d::UnitZ()));
    local.rotate(Eigen::AngleAxisd(joint_angles[2 * j + 1], Eigen::Vector3d::UnitY()));
    poses[joint.child] = poses[joint.parent] * local;
  }
  return poses;
}

void sensor_world_frames(const AgentModel& agent, const std::vector<Eigen::Isometry3d>& poses,
                         Eigen::Matrix3Xd& positions, Eigen::Matrix3Xd& normals) {
  const auto m = static_cast<Eigen::Index>(agent.sensors.size());
  positions.resize(3, m);
  normals.resize(3, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = agent.sensors[i];
    const auto& pose = poses[s.part];
    positions.col(i) = pose * s.position;
    normals.col(i) = pose.linear() * s.normal;
  }
}

TactileLog simulate(const AgentModel& agent, const MotionConfig& cfg, SimulationTrace* trace) {
  cfg.validate();
  const auto n_joints = static_cast<Eigen::Index>(agent.joints.size());
  const auto m = static_cast<Eigen::Index>(agent.sensors.size());
  const int steps = cfg.total_steps;

  TactileLog log;
  log.raw = PressureMatrix::Zero(m, steps);
  log.dt = cfg.dt;
  log.seed = cfg.seed;
  log.agent_fingerprint = agent.fingerprint();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> target_angle(-std::numbers::pi, std::numbers::pi);

  Eigen::VectorXd angles = Eigen::VectorXd::Zero(2 * n_joints);
  Eigen::VectorXd targets = angles;
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(2 * n_joints);
  std::vector<bool> active(static_cast<std::size_t>(n_joints), false);

  if (trace != nullptr) {
    trace->activations_per_epoch.clear();
    trace->joint_angles.resize(2 * n_joints, steps);
  }

  Eigen::Matrix3Xd prev_pos, pos, normals;
  sensor_world_frames(agent, forward_kinematics(agent, angles), prev_pos, normals);

  for (int t = 0; t < steps; ++t) {
    if (t % cfg.decision_interval == 0) {
      int activated = 0;
      for (Eigen::Index j = 0; j < n_joints; ++j) {
        // Both draws happen for every joint so the stream does not depend on
        // the activation outcome.
        const bool moves = unit(rng) < 1.0 - cfg.p_coordination;
        const double a = target_angle(rng);
        const double b = target_angle(rng);
        const Joint& joint = agent.joints[j];
        active[j] = moves;
        if (moves) {
          ++activated;
          targets[2 * j] = std::clamp(a, joint.lower[0], joint.upper[0]);
          targets[2 * j + 1] = std::clamp(b, joint.lower[1], joint.upper[1]);
        } else {
          targets.segment<2>(2 * j) = angles.segment<2>(2 * j);
          rates.segment<2>(2 * j).setZero();
        }
      }
      if (trace != nullptr) trace->activations_per_epoch.push_back(activated);
    }

    bool moved = false;
    for (Eigen::Index j = 0; j < n_joints; ++j) {
      if (!active[j]) continue;
      const Joint& joint = agent.joints[j];
      for (int axis = 0; axis < 2; ++axis) {
        const Eigen::Index a = 2 * j + axis;
        const double error = targets[a] - angles[a];
        if (cfg.controller == Controller::kFirstOrder) {
          if (error == 0.0) continue;
          moved = true;
          if (std::abs(error) <= cfg.settle_tolerance) {
            angles[a] = targets[a];
          } else {
            angles[a] += cfg.controller_gain * error * cfg.dt;
          }
          continue;
        }
        if (error == 0.0 && rates[a] == 0.0) continue;
        moved = true;
        if (std::abs(error) <= cfg.settle_tolerance && std::abs(rates[a]) <= cfg.settle_tolerance) {
          angles[a] = targets[a];
          rates[a] = 0.0;
          continue;
        }
        const double omega = cfg.controller_gain * (axis == 1 ? cfg.axis_frequency_ratio : 1.0);
        // Semi-implicit Euler.
        rates[a] += (omega * omega * error - 2.0 * cfg.damping_ratio * omega * rates[a]) * cfg.dt;
        angles[a] += rates[a] * cfg.dt;
        // Joint stops are inelastic.
        if (angles[a] < joint.lower[axis] || angles[a] > joint.upper[axis]) {
          angles[a] = std::clamp(angles[a], joint.lower[axis], joint.upper[axis]);
          rates[a] = 0.0;
        }
      }
    }
    if (trace != nullptr) trace->joint_angles.col(t) = angles;
    if (!moved) continue;  // a static pose gives zero velocity everywhere

    sensor_world_frames(agent, forward_kinematics(agent, angles), pos, normals);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Vector3d velocity = (pos.col(i) - prev_pos.col(i)) / cfg.dt;
      log.raw(i, t) = static_cast<float>(tactile_pressure(velocity, normals.col(i), cfg.rho));
    }
    prev_pos.swap(pos);
  }
  return log;
}

std::vector<std::uint8_t> quantize_channel(std::span<const float> values, int n_levels) {
  if (n_levels < 2 || n_levels > 255) throw ConfigError("n_levels must lie in [2, 255]");
  const std::size_t t = values.size();
  std::vector<std::uint8_t> out(t, 1);
  if (t == 0) return out;

  std::vector<float> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Cut b (1-based) is the ceil(b*T/N)-th order statistic.
  std::vector<float> cuts(static_cast<std::size_t>(n_levels - 1));
  for (int b = 1; b < n_levels; ++b) {
    const std::size_t rank = (static_cast<std::size_t>(b) * t + n_levels - 1) / n_levels;
    cuts[b - 1] = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  for (std::size_t k = 0; k < t; ++k) {
    const auto idx = std::lower_bound(cuts.begin(), cuts.end(), values[k]) - cuts.begin();
    out[k] = static_cast<std::uint8_t>(idx + 1);
  }
  return out;
}

TactileLog quantize(const TactileLog& log, int n_levels) {
  if (n_levels < 2 || n_levels > 255) throw ConfigError("n_levels must lie in [2, 255]");
  if (log.raw.size() == 0 && log.raw.rows() == 0) throw ValidationError("tactile log has no raw data to quantize");
  TactileLog out = log;
  out.n_levels = n_levels;
  LevelMatrix q(log.raw.rows(), log.raw.cols());
  for (Eigen::Index i = 0; i < log.raw.rows(); ++i) {
    const auto row = quantize_channel(std::span<const float>(log.raw.row(i).data(), static_cast<std::size_t>(log.raw.cols())), n_levels);
    std::copy(row.begin(), row.end(), q.row(i).data());
  }
  out.quantized = std::move(q);
  return out;
}

}  // namespace bodyschema
