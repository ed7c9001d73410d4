#include "agnc/geometry/point_cloud.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "agnc/errors.hpp"

namespace agnc {

void PointCloud::validate() const {
  if (!(sigma > 0.0)) throw DomainError("point sigma must be positive");
  if (normals.empty()) return;
  if (normals.size() != points.size() || normal_valid.size() != points.size()) {
    throw DomainError(fmt::format("{} normals for {} points", normals.size(), points.size()));
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (normal_valid[i] && std::abs(normals[i].norm() - 1.0) > 1e-6) {
      throw DomainError(fmt::format("normal {} is not unit length", i));
    }
  }
}

PointCloud transform(const PointCloud& cloud, const Pose& pose) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = pose * p;
  for (auto& n : out.normals) n = pose.rotation * n;
  return out;
}

PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Eigen::Vector3d p;
    if (!(ss >> p.x() >> p.y() >> p.z()) || !p.allFinite()) {
      throw DomainError(fmt::format("line {}: expected three finite numbers", number));
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw DomainError("not a PLY file");
  long vertices = -1;
  bool in_vertex = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw DomainError("only ASCII PLY is supported");
    } else if (key == "element") {
      std::string name;
      long count = 0;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertices = count;
    } else if (key == "property" && in_vertex) {
      std::string type;
      std::string name;
      ss >> type >> name;
      if (type == "list") throw DomainError("list properties on vertices are not supported");
      props.push_back(name);
    } else if (key == "end_header") {
      break;
    }
  }
  if (vertices < 0) throw DomainError("PLY has no vertex element");
  int ix = -1, iy = -1, iz = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (props[i] == "x") ix = i;
    if (props[i] == "y") iy = i;
    if (props[i] == "z") iz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw DomainError("PLY vertices lack x/y/z");

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(vertices));
  std::vector<double> values(props.size());
  for (long v = 0; v < vertices; ++v) {
    if (!std::getline(in, line)) throw DomainError(fmt::format("PLY ends after {} vertices", v));
    std::istringstream ss(line);
    for (double& x : values) {
      if (!(ss >> x)) throw DomainError(fmt::format("PLY vertex {} is malformed", v));
    }
    cloud.points.emplace_back(values[ix], values[iy], values[iz]);
  }
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open {}", path.string()));
  return path.extension() == ".ply" ? read_ply(in) : read_xyz(in);
}

void write_xyz(std::ostream& os, const PointCloud& cloud) {
  for (const auto& p : cloud.points) fmt::print(os, "{} {} {}\n", p.x(), p.y(), p.z());
}

void write_pose(std::ostream& os, const Pose& pose) {
  const auto& c = pose.rotation;
  const auto& r = pose.translation;
  fmt::print(os, "{} {} {} {} {} {} {} {} {} {} {} {}\n", c(0, 0), c(0, 1), c(0, 2), r.x(), c(1, 0),
             c(1, 1), c(1, 2), r.y(), c(2, 0), c(2, 1), c(2, 2), r.z());
}

Pose parse_pose(const std::vector<double>& v) {
  if (v.size() != 12) throw DomainError(fmt::format("a pose needs 12 numbers, got {}", v.size()));
  Pose pose;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) pose.rotation(row, col) = v[4 * row + col];
    pose.translation[row] = v[4 * row + 3];
  }
  if (pose.orthonormality_error() > 1e-6 || pose.rotation.determinant() < 0.0) {
    throw DomainError("pose rotation is not a rotation matrix");
  }
  pose.orthonormalize();
  return pose;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) throw DomainError("voxel size must be positive");
  using Key = std::tuple<long long, long long, long long>;
  std::map<Key, std::pair<Eigen::Vector3d, int>> voxels;
  for (const auto& p : cloud.points) {
    const Key key{static_cast<long long>(std::floor(p.x() / voxel_size)),
                  static_cast<long long>(std::floor(p.y() / voxel_size)),
                  static_cast<long long>(std::floor(p.z() / voxel_size))};
    auto [it, inserted] = voxels.try_emplace(key, Eigen::Vector3d::Zero(), 0);
    it->second.first += p;
    ++it->second.second;
  }
  PointCloud out;
  out.sigma = cloud.sigma;
  out.points.reserve(voxels.size());
  for (const auto& [key, acc] : voxels) out.points.push_back(acc.first / acc.second);
  return out;
}

}  // namespace agnc
