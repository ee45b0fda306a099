// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/sim/scene.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "copilot/common/rng.hpp"

namespace copilot::sim {
namespace {

struct Footprint {
  double min_x, min_y, max_x, max_y;

  bool overlaps(const Footprint& o, double gap) const {
    return min_x < o.max_x + gap && o.min_x < max_x + gap &&
           min_y < o.max_y + gap && o.min_y < max_y + gap;
  }
};

Footprint footprint(const Obstacle& obstacle) {
  if (const auto* box = std::get_if<Box>(&obstacle.shape)) {
    return {box->min.x(), box->min.y(), box->max.x(), box->max.y()};
  }
  const auto& cyl = std::get<Cylinder>(obstacle.shape);
  return {cyl.center.x() - cyl.radius, cyl.center.y() - cyl.radius,
          cyl.center.x() + cyl.radius, cyl.center.y() + cyl.radius};
}

Vec3 random_albedo(Rng& rng) {
  return {rng.uniform(0.2, 0.95), rng.uniform(0.2, 0.95),
          rng.uniform(0.2, 0.95)};
}

void check_params(const SceneParams& p) {
  std::ostringstream err;
  if (p.width <= 0.0 || p.depth <= 0.0) err << "bounds must be positive; ";
  if (p.min_obstacles < 0 || p.max_obstacles < p.min_obstacles) {
    err << "obstacle count range [" << p.min_obstacles << ", "
        << p.max_obstacles << "] is invalid; ";
  }
  if (p.box_min_size <= 0.0 || p.box_max_size < p.box_min_size) {
    err << "box size range is invalid; ";
  }
  if (p.box_min_height <= 0.0 || p.box_max_height < p.box_min_height) {
    err << "box height range is invalid; ";
  }
  if (p.cylinder_min_radius <= 0.0 ||
      p.cylinder_max_radius < p.cylinder_min_radius) {
    err << "cylinder radius range is invalid; ";
  }
  if (p.cylinder_min_height <= 0.0 ||
      p.cylinder_max_height < p.cylinder_min_height) {
    err << "cylinder height range is invalid; ";
  }
  if (p.perimeter_walls &&
      (p.wall_thickness <= 0.0 || 2.0 * p.wall_thickness >= p.width ||
       2.0 * p.wall_thickness >= p.depth || p.wall_height <= 0.0)) {
    err << "wall geometry does not fit the bounds; ";
  }
  if (!err.str().empty()) throw GenerationError("scene params: " + err.str());
}

}  // namespace

bool operator==(const Scene& a, const Scene& b) {
  // Serialized comparison keeps this exact without per-field boilerplate.
  return scene_to_json(a) == scene_to_json(b);
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  check_params(params);
  Rng rng(seed);

  Scene scene;
  scene.scene_id = "scene_" + std::to_string(seed);
  scene.seed = seed;
  scene.floor_height = 0.0;
  scene.bounds = {0.0, 0.0, params.width, params.depth};

  const double z0 = scene.floor_height;
  const double w = params.width;
  const double d = params.depth;
  double inset = 0.0;
  if (params.perimeter_walls) {
    const double t = params.wall_thickness;
    const double h = z0 + params.wall_height;
    const Box walls[4] = {
        {{0.0, 0.0, z0}, {w, t, h}},
        {{0.0, d - t, z0}, {w, d, h}},
        {{0.0, t, z0}, {t, d - t, h}},
        {{w - t, t, z0}, {w, d - t, h}},
    };
    for (const auto& wall : walls) {
      scene.obstacles.push_back({wall, random_albedo(rng)});
    }
    inset = t;
  }

  const int count = static_cast<int>(
      rng.uniform_int(params.min_obstacles, params.max_obstacles));
  if (count == 0 && scene.obstacles.empty()) {
    throw GenerationError("scene would contain no obstacles (min_obstacles=0)");
  }

  const Footprint interior{inset + params.min_clearance,
                           inset + params.min_clearance,
                           w - inset - params.min_clearance,
                           d - inset - params.min_clearance};
  std::vector<Footprint> placed;
  for (int i = 0; i < count; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < params.placement_attempts && !ok;
         ++attempt) {
      Obstacle obstacle;
      if (rng.bernoulli(params.cylinder_probability)) {
        Cylinder cyl;
        cyl.radius =
            rng.uniform(params.cylinder_min_radius, params.cylinder_max_radius);
        const double lo_x = interior.min_x + cyl.radius;
        const double hi_x = interior.max_x - cyl.radius;
        const double lo_y = interior.min_y + cyl.radius;
        const double hi_y = interior.max_y - cyl.radius;
        if (hi_x < lo_x || hi_y < lo_y) continue;
        cyl.center = {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)};
        cyl.z_min = z0;
        cyl.z_max = z0 + rng.uniform(params.cylinder_min_height,
                                     params.cylinder_max_height);
        obstacle.shape = cyl;
      } else {
        const double sx = rng.uniform(params.box_min_size, params.box_max_size);
        const double sy = rng.uniform(params.box_min_size, params.box_max_size);
        const double lo_x = interior.min_x;
        const double hi_x = interior.max_x - sx;
        const double lo_y = interior.min_y;
        const double hi_y = interior.max_y - sy;
        if (hi_x < lo_x || hi_y < lo_y) continue;
        Box box;
        box.min = {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y), z0};
        if (rng.bernoulli(params.elevated_probability)) {
          box.min.z() =
              z0 + rng.uniform(params.elevated_min_z, params.elevated_max_z);
          box.max = box.min + Vec3(sx, sy, rng.uniform(0.2, 0.4));
        } else {
          box.max = box.min + Vec3(sx, sy,
                                   rng.uniform(params.box_min_height,
                                               params.box_max_height));
        }
        obstacle.shape = box;
      }
      obstacle.albedo = random_albedo(rng);

      const Footprint fp = footprint(obstacle);
      ok = std::none_of(placed.begin(), placed.end(), [&](const Footprint& o) {
        return fp.overlaps(o, params.min_clearance);
      });
      if (ok) {
        placed.push_back(fp);
        scene.obstacles.push_back(std::move(obstacle));
      }
    }
    if (!ok) {
      throw GenerationError("could not place obstacle " + std::to_string(i + 1) +
                            " of " + std::to_string(count) + " after " +
                            std::to_string(params.placement_attempts) +
                            " attempts (seed " + std::to_string(seed) + ")");
    }
  }

  if (auto problem = validate_scene(scene); !problem.empty()) {
    throw GenerationError("generated scene is invalid: " + problem);
  }
  return scene;
}

std::string validate_scene(const Scene& scene) {
  constexpr double kTol = 1e-9;
  if (scene.obstacles.empty()) return "scene has no obstacles";
  const Bounds& b = scene.bounds;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const auto& o = scene.obstacles[i];
    const std::string tag = "obstacle " + std::to_string(i) + ": ";
    double z_min = 0.0;
    double z_max = 0.0;
    if (const auto* box = std::get_if<Box>(&o.shape)) {
      if ((box->max - box->min).minCoeff() <= 0.0) return tag + "degenerate box";
      z_min = box->min.z();
      z_max = box->max.z();
    } else {
      const auto& cyl = std::get<Cylinder>(o.shape);
      if (cyl.radius <= 0.0) return tag + "non-positive radius";
      z_min = cyl.z_min;
      z_max = cyl.z_max;
    }
    if (z_max <= z_min) return tag + "empty height range";
    if (z_min < scene.floor_height - kTol) return tag + "penetrates the floor";
    const Footprint fp = footprint(o);
    if (fp.min_x < b.min_x - kTol || fp.min_y < b.min_y - kTol ||
        fp.max_x > b.max_x + kTol || fp.max_y > b.max_y + kTol) {
      return tag + "outside bounds";
    }
  }
  return {};
}

namespace {

nlohmann::json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& o : scene.obstacles) {
    nlohmann::json item;
    if (const auto* box = std::get_if<Box>(&o.shape)) {
      item["type"] = "box";
      item["min"] = vec_json(box->min);
      item["max"] = vec_json(box->max);
    } else {
      const auto& cyl = std::get<Cylinder>(o.shape);
      item["type"] = "cylinder";
      item["center"] = vec_json(cyl.center);
      item["radius"] = cyl.radius;
      item["z_min"] = cyl.z_min;
      item["z_max"] = cyl.z_max;
    }
    item["albedo"] = vec_json(o.albedo);
    obstacles.push_back(std::move(item));
  }
  return {
      {"scene_id", scene.scene_id},
      {"seed", scene.seed},
      {"floor_height", scene.floor_height},
      {"bounds",
       {{"min_x", scene.bounds.min_x},
        {"min_y", scene.bounds.min_y},
        {"max_x", scene.bounds.max_x},
        {"max_y", scene.bounds.max_y}}},
      {"obstacles", std::move(obstacles)},
  };
}

Scene scene_from_json(const nlohmann::json& doc) {
  try {
    Scene scene;
    scene.scene_id = doc.at("scene_id").get<std::string>();
    scene.seed = doc.at("seed").get<std::uint64_t>();
    scene.floor_height = doc.at("floor_height").get<double>();
    const auto& b = doc.at("bounds");
    scene.bounds = {b.at("min_x").get<double>(), b.at("min_y").get<double>(),
                    b.at("max_x").get<double>(), b.at("max_y").get<double>()};
    for (const auto& item : doc.at("obstacles")) {
      Obstacle o;
      const auto type = item.at("type").get<std::string>();
      if (type == "box") {
        o.shape = Box{vec3_from(item.at("min")), vec3_from(item.at("max"))};
      } else if (type == "cylinder") {
        const auto& c = item.at("center");
        Cylinder cyl;
        cyl.center = {c.at(0).get<double>(), c.at(1).get<double>()};
        cyl.radius = item.at("radius").get<double>();
        cyl.z_min = item.at("z_min").get<double>();
        cyl.z_max = item.at("z_max").get<double>();
        o.shape = cyl;
      } else {
        throw Error("unknown obstacle type '" + type + "'");
      }
      o.albedo = vec3_from(item.at("albedo"));
      scene.obstacles.push_back(std::move(o));
    }
    if (auto problem = validate_scene(scene); !problem.empty()) {
      throw Error("scene invariant violated: " + problem);
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed scene document: ") + e.what());
  }
}

nlohmann::json scene_params_to_json(const SceneParams& p) {
  return {
      {"width", p.width},
      {"depth", p.depth},
      {"perimeter_walls", p.perimeter_walls},
      {"wall_thickness", p.wall_thickness},
      {"wall_height", p.wall_height},
      {"min_obstacles", p.min_obstacles},
      {"max_obstacles", p.max_obstacles},
      {"box_min_size", p.box_min_size},
      {"box_max_size", p.box_max_size},
      {"box_min_height", p.box_min_height},
      {"box_max_height", p.box_max_height},
      {"cylinder_probability", p.cylinder_probability},
      {"cylinder_min_radius", p.cylinder_min_radius},
      {"cylinder_max_radius", p.cylinder_max_radius},
      {"cylinder_min_height", p.cylinder_min_height},
      {"cylinder_max_height", p.cylinder_max_height},
      {"elevated_probability", p.elevated_probability},
      {"elevated_min_z", p.elevated_min_z},
      {"elevated_max_z", p.elevated_max_z},
      {"min_clearance", p.min_clearance},
      {"placement_attempts", p.placement_attempts},
  };
}

SceneParams scene_params_from_json(const nlohmann::json& doc) {
  SceneParams p;
  auto read = [&](const char* key, auto& field) {
    if (doc.contains(key)) doc.at(key).get_to(field);
  };
  read("width", p.width);
  read("depth", p.depth);
  read("perimeter_walls", p.perimeter_walls);
  read("wall_thickness", p.wall_thickness);
  read("wall_height", p.wall_height);
  read("min_obstacles", p.min_obstacles);
  read("max_obstacles", p.max_obstacles);
  read("box_min_size", p.box_min_size);
  read("box_max_size", p.box_max_size);
  read("box_min_height", p.box_min_height);
  read("box_max_height", p.box_max_height);
  read("cylinder_probability", p.cylinder_probability);
  read("cylinder_min_radius", p.cylinder_min_radius);
  read("cylinder_max_radius", p.cylinder_max_radius);
  read("cylinder_min_height", p.cylinder_min_height);
  read("cylinder_max_height", p.cylinder_max_height);
  read("elevated_probability", p.elevated_probability);
  read("elevated_min_z", p.elevated_min_z);
  read("elevated_max_z", p.elevated_max_z);
  read("min_clearance", p.min_clearance);
  read("placement_attempts", p.placement_attempts);
  return p;
}

}  // namespace copilot::sim
