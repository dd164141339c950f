#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwe/geom.hpp"
#include "pwe/tiles.hpp"

namespace pwe {

// Toy phased-array forward model of one tile: an N x M grid of elements with
// binary switches. ON = phase 0, OFF = phase pi. Directions are expressed in
// the array's local frame with +z as boresight.
struct ArrayModel {
  int rows = 1;
  int cols = 1;
  double spacing_m = 0.0;
  double frequency_hz = 0.0;

  int element_count() const { return rows * cols; }
  Vec3 element_position(int r, int c) const {
    return {(c - (cols - 1) / 2.0) * spacing_m, (r - (rows - 1) / 2.0) * spacing_m, 0.0};
  }
};

struct SwitchConfig {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> on;  // row-major, 1 = ON (phase 0)

  bool get(int r, int c) const { return on[static_cast<size_t>(r) * cols + c] != 0; }
  void flip(size_t bit) { on[bit] ^= 1; }
};

bool operator==(const SwitchConfig& a, const SwitchConfig& b);

// Power gain |sum_i exp(j(phi_i + k r_i . d))|^2 toward a unit direction.
double array_factor(const SwitchConfig& config, const ArrayModel& model, const Vec3& direction);

struct SynthesisResult {
  SwitchConfig config;
  double score = 0.0;  // objective value, higher is better (absorb: -max gain)
  long evaluations = 0;
};

// Finds a switch configuration realizing the target function:
//   Steer/Focus: maximize array_factor toward the outgoing/focal direction.
//   Absorb:      minimize the maximum array_factor over a 5 deg hemisphere
//                grid (score is the negated maximum).
// Search spaces no larger than the budget are enumerated exhaustively;
// otherwise a seeded bit-flip hill climb with random restarts runs until the
// evaluation budget is spent. Deterministic given the seed.
SynthesisResult synthesize(const TileFunction& target, const ArrayModel& model,
                           long budget, uint64_t seed = 1);

// Cache of synthesized configurations, keyed by the quantized target
// (directions in 1 degree bins).
class LookupTable {
 public:
  struct Entry {
    SwitchConfig config;
    double score = 0.0;
  };

  static std::string quantize_key(const TileFunction& target);

  std::optional<Entry> lookup(const TileFunction& target) const;
  void store(const TileFunction& target, const SwitchConfig& config, double score);

  size_t size() const { return entries_.size(); }

  // Flat keyed text file, one entry per line:
  //   <key> <score> <rows> <cols> <bitstring>
  std::string serialize() const;
  static LookupTable deserialize(const std::string& text);
  void save(const std::string& path) const;
  static LookupTable load(const std::string& path);

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace pwe
