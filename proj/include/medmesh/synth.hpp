#pragma once

#include <cstdint>

#include "medmesh/sample.hpp"

namespace medmesh::synth {

/// Class ids, in the order of the per-class loss weights.
enum Class : int { kAneurysm = 0, kInlet = 1, kJunction = 2, kVessel = 3 };
inline constexpr int kNumClasses = 4;

/// Vessel-like tube along +z: a wide inlet section, a junction band where
/// the radius narrows, and a narrow outlet vessel carrying a spherical bump.
/// Lengths are in model units; positions along the axis are fractions of
/// `length`.
struct SynthSpec {
  std::uint64_t seed = 0;
  double inlet_radius = 1.6;
  double vessel_radius = 0.8;
  double length = 12.0;
  double junction_center = 0.35;
  double junction_width = 0.06;
  double bump_center = 0.72;
  double bump_radius = 1.2;   // surface distance from the bump center to its rim
  double bump_height = 1.0;   // outward displacement at the center
  double jitter = 0.08;       // vertex noise, fraction of the local edge length
  std::size_t target_edges = 2000;
  bool open_ends = true;
};

/// Rejects non-positive dimensions, regions that do not fit, and
/// target_edges < 200. Throws SpecInfeasible.
void validate(const SynthSpec& spec);

/// The edge count lies in [target_edges - kMaxEdgeShortfall, target_edges]
/// (rings are whole, 14 to 20 vertices around).
LabeledSample generate(const SynthSpec& spec);
inline constexpr std::size_t kMaxEdgeShortfall = 60;

/// Draws shape parameters around the defaults from `seed`.
SynthSpec random_spec(std::uint64_t seed, std::size_t target_edges, bool open_ends);

struct DatasetSpec {
  std::size_t train = 60, val = 12, test = 12;
  std::size_t min_edges = 1500, max_edges = 2500;
  std::uint64_t seed = 0;
  bool open_ends = true;
};

/// Independent random_spec draws per sample, sizes uniform in [min_edges, max_edges].
Dataset generate_dataset(const DatasetSpec& spec);

/// Subdivided icosahedron on the unit sphere; level 1 gives V=42, F=80, E=120.
Mesh icosphere(int level);

}  // namespace medmesh::synth
