#pragma once

#include <string>
#include <vector>

#include "pwe/emwave.hpp"
#include "pwe/scene.hpp"

namespace pwe {

struct TraceConfig {
  int max_tile_hops = 3;     // programmed tile bounces per path
  int max_specular = 2;      // image-method wall bounces per path
  bool coherent = false;     // phase-aware power aggregation
  double incidence_tol_rad = deg2rad(kDefaultIncidenceTolDeg);
  double focal_tol_m = 1e-3;
};

// Deterministic multipath enumeration between two devices:
//  (a) the direct path when unobstructed,
//  (b) specular wall bounces up to max_specular via the image method; a
//      bounce landing on a tile uses that tile's interact() response, so a
//      programmed tile suppresses the mirror path and an absorbing tile
//      attenuates or terminates it,
//  (c) tile-hop paths through configured tiles (reflecting at tile centers)
//      whose programmed functions match the ray geometry within tolerance.
std::vector<PropagationPath> trace_paths(const Scenario& scenario, const Device& tx,
                                         const Device& rx, const TraceConfig& cfg = {});

// Aggregated received power over all traced paths; the scenario disconnect
// floor when nothing arrives.
double received_power_dbm(const Scenario& scenario, const Device& tx, const Device& rx,
                          const TraceConfig& cfg = {});

struct GridSpec {
  double height_m = 1.5;
  double cell_m = 0.5;
};

struct CoverageGrid {
  int nx = 0;
  int ny = 0;
  double cell_m = 0.0;
  double height_m = 0.0;
  double x0 = 0.0;  // center of cell (0,0)
  double y0 = 0.0;
  std::vector<double> dbm;  // row-major, ny rows of nx values

  double at(int ix, int iy) const { return dbm[static_cast<size_t>(iy) * nx + ix]; }
};

// Received power at every cell center of a horizontal grid through the room,
// probed with an isotropic receiver. Cells closer than half a cell to the
// transmitter report the nearest valid cell instead of the singular value.
CoverageGrid coverage_map(const Scenario& scenario, const Device& tx, const GridSpec& grid,
                          const TraceConfig& cfg = {});

// CSV with a two-line header (field names, values) followed by the row-major
// matrix, six decimal places throughout.
std::string coverage_to_csv(const CoverageGrid& grid);
CoverageGrid coverage_from_csv(const std::string& text);

}  // namespace pwe
