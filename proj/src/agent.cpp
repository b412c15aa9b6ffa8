#include "bodyschema/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bodyschema/errors.hpp"
#include "bodyschema/hashing.hpp"

namespace bodyschema {

using nlohmann::json;

int AgentModel::root() const {
  for (std::size_t p = 0; p < ground_truth_tree.size(); ++p) {
    if (ground_truth_tree[p] < 0) return static_cast<int>(p);
  }
  return -1;
}

std::vector<int> AgentModel::sensor_labels() const {
  std::vector<int> labels(sensors.size());
  std::transform(sensors.begin(), sensors.end(), labels.begin(),
                 [](const SensorPlacement& s) { return s.part; });
  return labels;
}

std::uint64_t AgentModel::fingerprint() const {
  ContentHasher h;
  h.update_value(parts.size());
  for (const auto& p : parts) {
    h.update(p.id);
    h.update_value(p.length).update_value(p.radius);
  }
  for (const auto& j : joints) {
    h.update_value(j.child).update_value(j.parent);
    h.update_values(std::span<const double>(j.anchor.data(), 3));
    h.update_values(std::span<const double>(j.direction.data(), 3));
    h.update_values(std::span<const double>(j.lower));
    h.update_values(std::span<const double>(j.upper));
  }
  for (const auto& s : sensors) {
    h.update_value(s.part);
    h.update_values(std::span<const double>(s.position.data(), 3));
    h.update_values(std::span<const double>(s.normal.data(), 3));
  }
  return h.digest64();
}

AgentSpec default_agent_spec(int total_sensors) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  AgentSpec spec;
  spec.total_sensors = total_sensors;
  spec.parts = {
      {"trunk", 0.40, 0.120, std::nullopt},
      {"left_arm", 0.25, 0.030, std::nullopt},
      {"right_arm", 0.25, 0.030, std::nullopt},
      {"left_leg", 0.25, 0.030, std::nullopt},
      {"right_leg", 0.25, 0.030, std::nullopt},
  };
  auto limb = [&](const char* name, double x, double side, double tilt) {
    JointSpec j;
    j.child = name;
    j.parent = "trunk";
    j.anchor = Eigen::Vector3d(x, side * 0.12, 0.0);
    j.direction = Eigen::Vector3d(tilt, side, 0.0).normalized();
    j.lower = {-kHalfPi, -kHalfPi};
    j.upper = {kHalfPi, kHalfPi};
    return j;
  };
  spec.joints = {
      limb("left_arm", 0.36, 1.0, 0.3),
      limb("right_arm", 0.36, -1.0, 0.3),
      limb("left_leg", 0.03, 1.0, -0.6),
      limb("right_leg", 0.03, -1.0, -0.6),
  };
  return spec;
}

std::vector<int> allocate_sensors(const AgentSpec& spec) {
  std::vector<int> counts(spec.parts.size(), 0);
  int fixed = 0;
  double free_area = 0.0;
  for (std::size_t p = 0; p < spec.parts.size(); ++p) {
    const auto& part = spec.parts[p];
    if (part.sensors) {
      counts[p] = *part.sensors;
      fixed += *part.sensors;
    } else {
      free_area += 2.0 * std::numbers::pi * part.radius * part.length;
    }
  }
  const int remaining = spec.total_sensors - fixed;
  if (remaining <= 0 || free_area <= 0.0) return counts;

  // Largest remainder: floor the exact shares, then hand out the leftovers
  // to the biggest fractional parts (ties to the lower index).
  std::vector<std::pair<double, std::size_t>> fractions;
  int assigned = 0;
  for (std::size_t p = 0; p < spec.parts.size(); ++p) {
    const auto& part = spec.parts[p];
    if (part.sensors) continue;
    const double share =
        remaining * (2.0 * std::numbers::pi * part.radius * part.length) / free_area;
    counts[p] = static_cast<int>(std::floor(share));
    assigned += counts[p];
    fractions.emplace_back(share - std::floor(share), p);
  }
  std::stable_sort(fractions.begin(), fractions.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < remaining - assigned; ++k) {
    ++counts[fractions[static_cast<std::size_t>(k) % fractions.size()].second];
  }
  return counts;
}

namespace {

// Rings of sensors along the lateral surface, uniform in axial position and
// angle. The final ring carries the remainder with its own uniform spacing.
void place_sensors(const BodyPart& part, int part_index, int count,
                   std::vector<SensorPlacement>& out) {
  if (count <= 0) return;
  const double circumference = 2.0 * std::numbers::pi * part.radius;
  const int per_ring = std::clamp(
      static_cast<int>(std::lround(std::sqrt(count * circumference / part.length))), 1,
      count);
  const int rings = (count + per_ring - 1) / per_ring;
  int placed = 0;
  for (int r = 0; r < rings; ++r) {
    const int in_ring = std::min(per_ring, count - placed);
    const double x = (r + 0.5) / rings * part.length;
    for (int a = 0; a < in_ring; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / in_ring;
      SensorPlacement s;
      s.id = static_cast<int>(out.size());
      s.part = part_index;
      s.normal = Eigen::Vector3d(0.0, std::cos(phi), std::sin(phi));
      s.position = Eigen::Vector3d(x, 0.0, 0.0) + part.radius * s.normal;
      out.push_back(s);
    }
    placed += in_ring;
  }
}

}  // namespace

AgentModel build_agent(const AgentSpec& spec) {
  if (spec.parts.empty()) throw ValidationError("agent spec has no parts");

  AgentModel model;
  std::map<std::string, int> index;
  for (const auto& p : spec.parts) {
    if (!(p.length > 0.0) || !(p.radius > 0.0)) {
      throw ValidationError("part '" + p.id + "' needs positive length and radius");
    }
    if (!index.emplace(p.id, static_cast<int>(model.parts.size())).second) {
      throw ValidationError("duplicate part id '" + p.id + "'");
    }
    model.parts.push_back({p.id, p.length, p.radius});
  }

  const std::size_t n_parts = model.parts.size();
  model.ground_truth_tree.assign(n_parts, -1);
  std::vector<Joint> joints;
  for (const auto& js : spec.joints) {
    auto child = index.find(js.child);
    auto parent = index.find(js.parent);
    if (child == index.end()) throw ValidationError("joint references unknown part '" + js.child + "'");
    if (parent == index.end()) throw ValidationError("joint references unknown part '" + js.parent + "'");
    if (child->second == parent->second) throw StructureError("part '" + js.child + "' is jointed to itself");
    if (model.ground_truth_tree[child->second] >= 0) {
      throw StructureError("part '" + js.child + "' has more than one parent joint");
    }
    if (js.direction.norm() < 1e-12) throw ValidationError("joint direction must be non-zero");
    for (int a = 0; a < 2; ++a) {
      if (js.lower[a] > js.upper[a]) throw ValidationError("joint limits are inverted for '" + js.child + "'");
    }
    model.ground_truth_tree[child->second] = parent->second;
    joints.push_back({child->second, parent->second, js.anchor, js.direction.normalized(), js.lower, js.upper});
  }
  if (joints.size() != n_parts - 1) {
    throw StructureError("a tree over " + std::to_string(n_parts) + " parts needs " +
                         std::to_string(n_parts - 1) + " joints, got " +
                         std::to_string(joints.size()));
  }

  // Every part must reach the unique root by following parent links.
  for (std::size_t p = 0; p < n_parts; ++p) {
    int cur = static_cast<int>(p);
    for (std::size_t steps = 0; cur >= 0; ++steps) {
      if (steps > n_parts) throw StructureError("joint graph contains a cycle through '" + model.parts[p].id + "'");
      cur = model.ground_truth_tree[cur];
    }
  }

  // Topological order so forward kinematics can run in a single pass.
  std::vector<int> depth(n_parts, 0);
  for (std::size_t p = 0; p < n_parts; ++p) {
    for (int cur = model.ground_truth_tree[p]; cur >= 0; cur = model.ground_truth_tree[cur]) ++depth[p];
  }
  std::stable_sort(joints.begin(), joints.end(),
                   [&](const Joint& a, const Joint& b) { return depth[a.child] < depth[b.child]; });
  model.joints = std::move(joints);

  const auto counts = allocate_sensors(spec);
  for (std::size_t p = 0; p < n_parts; ++p) {
    place_sensors(model.parts[p], static_cast<int>(p), counts[p], model.sensors);
  }
  return model;
}

namespace {

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

AgentSpec parse_agent_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("agent spec is not valid JSON: ") + e.what());
  }
  AgentSpec spec;
  try {
    spec.total_sensors = doc.value("total_sensors", 0);
    for (const auto& p : doc.at("parts")) {
      PartSpec part;
      part.id = p.at("id").get<std::string>();
      part.length = p.at("length").get<double>();
      part.radius = p.at("radius").get<double>();
      if (p.contains("sensors")) part.sensors = p.at("sensors").get<int>();
      spec.parts.push_back(std::move(part));
    }
    for (const auto& j : doc.value("joints", json::array())) {
      JointSpec joint;
      joint.child = j.at("child").get<std::string>();
      joint.parent = j.at("parent").get<std::string>();
      if (j.contains("anchor")) joint.anchor = vec3(j.at("anchor"));
      if (j.contains("direction")) joint.direction = vec3(j.at("direction"));
      if (j.contains("limits")) {
        const auto& lim = j.at("limits");
        for (int a = 0; a < 2; ++a) {
          joint.lower[a] = lim.at(a).at(0).get<double>();
          joint.upper[a] = lim.at(a).at(1).get<double>();
        }
      }
      spec.joints.push_back(std::move(joint));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("agent spec: ") + e.what());
  }
  return spec;
}

AgentSpec load_agent_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open agent spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_agent_spec(buf.str());
}

std::string to_json(const AgentSpec& spec) {
  json doc;
  doc["total_sensors"] = spec.total_sensors;
  doc["parts"] = json::array();
  for (const auto& p : spec.parts) {
    json part{{"id", p.id}, {"length", p.length}, {"radius", p.radius}};
    if (p.sensors) part["sensors"] = *p.sensors;
    doc["parts"].push_back(part);
  }
  doc["joints"] = json::array();
  for (const auto& j : spec.joints) {
    doc["joints"].push_back({{"child", j.child},
                             {"parent", j.parent},
                             {"anchor", {j.anchor.x(), j.anchor.y(), j.anchor.z()}},
                             {"direction", {j.direction.x(), j.direction.y(), j.direction.z()}},
                             {"limits", {{j.lower[0], j.upper[0]}, {j.lower[1], j.upper[1]}}}});
  }
  return doc.dump(2);
}

}  // namespace bodyschema
