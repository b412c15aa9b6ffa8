#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bodyschema {

// Cylinder body part. The local frame has its origin at the proximal end and
// the cylinder axis along +x, spanning x in [0, length].
struct BodyPart {
  std::string id;
  double length = 0.0;  // [m]
  double radius = 0.0;  // [m]
};

// Universal joint: two rotational degrees of freedom about the child's local
// z and y axes, applied after the rest rotation that maps the child's +x axis
// onto `direction` (expressed in the parent frame).
struct Joint {
  int child = -1;
  int parent = -1;
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();     // parent frame [m]
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();  // parent frame, unit
  std::array<double, 2> lower{};                         // [rad]
  std::array<double, 2> upper{};                         // [rad]
};

struct SensorPlacement {
  int id = 0;
  int part = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // part frame [m]
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();   // part frame, unit
};

// Parts, joints and sensors of a multilink agent. Part indices are positions
// in `parts`; joints are stored in topological order (parents before
// children), and `ground_truth_tree[p]` is the parent index of part p or -1.
struct AgentModel {
  std::vector<BodyPart> parts;
  std::vector<Joint> joints;
  std::vector<SensorPlacement> sensors;
  std::vector<int> ground_truth_tree;

  int root() const;
  std::size_t sensor_count() const { return sensors.size(); }
  // Owning part index per sensor; the labeling oracle for evaluation.
  std::vector<int> sensor_labels() const;
  // Stable digest of geometry and structure, recorded with every artifact.
  std::uint64_t fingerprint() const;
};

// Declarative description of an agent, as read from an agent spec file.
struct PartSpec {
  std::string id;
  double length = 0.0;
  double radius = 0.0;
  std::optional<int> sensors;  // explicit count; otherwise area-proportional
};

struct JointSpec {
  std::string child;
  std::string parent;
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
  std::array<double, 2> lower{-1.5707963267948966, -1.5707963267948966};
  std::array<double, 2> upper{1.5707963267948966, 1.5707963267948966};
};

struct AgentSpec {
  std::vector<PartSpec> parts;
  std::vector<JointSpec> joints;
  // Distributed over parts without an explicit count, proportionally to the
  // lateral cylinder surface area (largest-remainder rounding).
  int total_sensors = 0;
};

// Five cylinders: a trunk with four limbs attached directly to it.
AgentSpec default_agent_spec(int total_sensors = 840);

AgentSpec load_agent_spec(const std::filesystem::path& path);
AgentSpec parse_agent_spec(const std::string& json_text);
std::string to_json(const AgentSpec& spec);

// Throws ValidationError for dangling references or bad geometry and
// StructureError when the joints do not form a tree over the parts.
AgentModel build_agent(const AgentSpec& spec);

// Sensor counts per part under area-proportional allocation.
std::vector<int> allocate_sensors(const AgentSpec& spec);

}  // namespace bodyschema
