#include "medmesh/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>

#include "medmesh/error.hpp"

namespace medmesh::synth {

namespace {

constexpr double kPi = std::numbers::pi;

double angle_between(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

double smoothstep_down(double t) { return 0.5 * (1.0 + std::cos(kPi * std::clamp(t, 0.0, 1.0))); }

struct Profile {
  const SynthSpec& s;
  double bump_azimuth;

  double junction_lo() const { return (s.junction_center - 0.5 * s.junction_width) * s.length; }
  double junction_hi() const { return (s.junction_center + 0.5 * s.junction_width) * s.length; }
  double bump_z() const { return s.bump_center * s.length; }

  double base_radius(double z) const {
    const double t = (z - junction_lo()) / (junction_hi() - junction_lo());
    return s.vessel_radius + (s.inlet_radius - s.vessel_radius) * smoothstep_down(t);
  }

  double bump_distance(double z, double theta) const {
    const double dz = z - bump_z();
    const double arc = s.vessel_radius * angle_between(theta, bump_azimuth);
    return std::sqrt(dz * dz + arc * arc);
  }

  double radius(double z, double theta) const {
    const double d = bump_distance(z, theta);
    double r = base_radius(z);
    if (d < s.bump_radius) r += s.bump_height * (1.0 - (d / s.bump_radius) * (d / s.bump_radius));
    return r;
  }

  int classify(double z, double theta) const {
    if (bump_distance(z, theta) < s.bump_radius) return kAneurysm;
    if (z >= junction_lo() && z <= junction_hi()) return kJunction;
    return z < junction_lo() ? kInlet : kVessel;
  }
};

}  // namespace

void validate(const SynthSpec& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::SpecInfeasible, why); };
  if (!(s.inlet_radius > 0 && s.vessel_radius > 0 && s.length > 0 && s.bump_radius > 0 &&
        s.bump_height > 0 && s.junction_width > 0))
    fail("dimensions must be positive");
  if (s.jitter < 0 || s.jitter >= 0.3) fail("jitter must lie in [0, 0.3)");
  if (s.target_edges < 200) fail("target_edges must be at least 200");
  const double lo = s.junction_center - 0.5 * s.junction_width;
  const double hi = s.junction_center + 0.5 * s.junction_width;
  if (lo <= 0.0 || hi >= 1.0) fail("junction band leaves the tube");
  const double bump_lo = s.bump_center * s.length - s.bump_radius;
  const double bump_hi = s.bump_center * s.length + s.bump_radius;
  if (bump_lo <= hi * s.length || bump_hi >= s.length)
    fail("bump must sit on the outlet vessel between the junction and the end");
  if (s.bump_radius >= kPi * s.vessel_radius) fail("bump wraps around the vessel");
}

LabeledSample generate(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::uniform_int_distribution<int> seg_dist(14, 20);
  const int segments = seg_dist(rng);
  const double per_segment = static_cast<double>(spec.target_edges) / segments;
  // open: E = S(3R - 2); closed: E = 3SR. Rounding down keeps E <= target.
  const int rings = std::max(
      3, static_cast<int>(std::floor(spec.open_ends ? (per_segment + 2.0) / 3.0 : per_segment / 3.0)));

  const Profile profile{spec, 2.0 * kPi * unit(rng)};
  const double dz = spec.length / (rings - 1);

  std::vector<Vec3> base;  // unjittered positions, used for labels
  std::vector<Vec3> verts;
  for (int k = 0; k < rings; ++k) {
    const double z = k * dz;
    for (int j = 0; j < segments; ++j) {
      const double theta = 2.0 * kPi * (j + 0.5 * k) / segments;
      const double r = profile.radius(z, theta);
      const Vec3 p(r * std::cos(theta), r * std::sin(theta), z);
      base.push_back(p);
      const double scale = spec.jitter * std::min(dz, 2.0 * kPi * r / segments);
      const Vec3 noise(2 * unit(rng) - 1, 2 * unit(rng) - 1, 2 * unit(rng) - 1);
      verts.push_back(p + scale * noise / std::sqrt(3.0));
    }
  }
  auto id = [&](int k, int j) { return k * segments + ((j % segments) + segments) % segments; };

  std::vector<Face> faces;
  for (int k = 0; k + 1 < rings; ++k) {
    for (int j = 0; j < segments; ++j) {
      faces.push_back({id(k, j), id(k, j + 1), id(k + 1, j)});
      faces.push_back({id(k, j + 1), id(k + 1, j + 1), id(k + 1, j)});
    }
  }
  if (!spec.open_ends) {
    const int bottom = static_cast<int>(verts.size());
    base.emplace_back(0.0, 0.0, 0.0);
    verts.emplace_back(0.0, 0.0, 0.0);
    const int top = static_cast<int>(verts.size());
    base.emplace_back(0.0, 0.0, spec.length);
    verts.emplace_back(0.0, 0.0, spec.length);
    for (int j = 0; j < segments; ++j) {
      faces.push_back({bottom, id(0, j + 1), id(0, j)});
      faces.push_back({top, id(rings - 1, j), id(rings - 1, j + 1)});
    }
  }

  Mesh mesh(std::move(verts), std::move(faces));
  std::vector<int> labels(mesh.edge_count());
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const auto& ev = mesh.edges()[e];
    const Vec3 mid = 0.5 * (base[ev[0]] + base[ev[1]]);
    labels[e] = profile.classify(mid.z(), std::atan2(mid.y(), mid.x()));
  }
  return make_sample(std::move(mesh), std::move(labels), kNumClasses);
}

SynthSpec random_spec(std::uint64_t seed, std::size_t target_edges, bool open_ends) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  SynthSpec s;
  s.seed = seed;
  s.inlet_radius = uniform(1.4, 1.8);
  s.vessel_radius = uniform(0.7, 0.9);
  s.length = uniform(11.0, 13.0);
  s.junction_center = uniform(0.3, 0.4);
  s.junction_width = uniform(0.06, 0.08);
  s.bump_center = uniform(0.66, 0.78);
  s.bump_radius = uniform(1.0, 1.4);
  s.bump_height = uniform(0.7, 1.1);
  s.target_edges = target_edges;
  s.open_ends = open_ends;
  return s;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  // generate() lands at most kMaxEdgeShortfall below its target.
  if (spec.max_edges < spec.min_edges + kMaxEdgeShortfall)
    throw Error(ErrorKind::SpecInfeasible, "edge range narrower than " + std::to_string(kMaxEdgeShortfall));
  std::uniform_int_distribution<std::size_t> size(spec.min_edges + kMaxEdgeShortfall, spec.max_edges);
  Dataset d;
  for (auto [split, count] : {std::pair{&d.train, spec.train}, {&d.val, spec.val}, {&d.test, spec.test}})
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed = rng();
      split->push_back(generate(random_spec(seed, size(rng), spec.open_ends)));
    }
  return d;
}

Mesh icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7}, {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::unordered_map<std::uint64_t, int> mid;
    auto midpoint = [&](int a, int b) {
      auto [it, inserted] = mid.try_emplace(edge_key(a, b), static_cast<int>(v.size()));
      if (inserted) v.push_back((0.5 * (v[a] + v[b])).normalized());
      return it->second;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  return Mesh(std::move(v), std::move(f));
}

}  // namespace medmesh::synth
