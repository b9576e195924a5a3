#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attnca/rng.hpp"

namespace nca {

/// Rectangular cell layout with an activity mask. Cell index i maps to
/// (row, col) = (i / cols, i % cols); boundaries are hard (no wraparound).
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> active;  // row-major, length rows*cols

  int cell_count() const { return rows * cols; }
  int index(int r, int c) const { return r * cols + c; }
  int row_of(int i) const { return i / cols; }
  int col_of(int i) const { return i % cols; }
  bool is_active(int i) const { return active[static_cast<std::size_t>(i)] != 0; }
  int active_count() const;
  std::vector<int> active_cells() const;  // ascending cell index

  bool operator==(const Grid&) const = default;
};

/// Action zones, ordered to match the lander action indices.
enum class Zone : std::uint8_t { Noop = 0, Left = 1, Main = 2, Right = 3, Unzoned = 255 };

struct ZoneMap {
  std::vector<Zone> zone;  // per grid cell, Unzoned for cells outside any zone

  bool operator==(const ZoneMap&) const = default;
};

struct Topology {
  Grid grid;
  std::vector<std::vector<int>> local;       // per cell, active neighbor indices, no self
  std::vector<std::vector<int>> long_range;  // per cell, possibly empty
  std::optional<ZoneMap> zones;

  bool operator==(const Topology&) const = default;
};

struct ScaleFreeConfig {
  int hub_count = 0;
  double zipf_exponent = 2.0;  // must be > 1 for the unbounded Zipf draw
  int max_out_degree = 6;
  std::uint64_t seed = 0;
};

Grid build_grid(int rows, int cols, const std::vector<std::uint8_t>* mask = nullptr);

/// Active cells within Chebyshev distance <= radius, self excluded, listed in
/// ascending cell index. radius must be 1 or 2.
std::vector<std::vector<int>> moore_neighbors(const Grid& grid, int radius);

/// Scale-free-style long-range wiring:
///   1. hubs: cfg.hub_count cells drawn without replacement from the active
///      cells in ascending-index order (partial Fisher-Yates, see Rng docs);
///   2. the hub drawn r-th gets out-degree d_r = min(max_out_degree, Z) where
///      Z is an unbounded Zipf(s) draw via Devroye's rejection method:
///      repeat { x = floor(u1^(-1/(s-1))); t = (1 + 1/x)^(s-1);
///               accept x if u2 * x * (t-1)/(b-1) <= t/b, b = 2^(s-1) };
///   3. d_r targets drawn without replacement from active cells at Chebyshev
///      distance > 1 from the hub (ascending-index pool);
///   4. every edge is stored symmetrically in both endpoint lists; an edge
///      that already exists is not duplicated.
std::vector<std::vector<int>> gen_scale_free_longrange(const Grid& grid, const ScaleFreeConfig& cfg, Rng& rng);

/// T-shaped layout on a (2*block) x (3*block) canvas: LEFT, MAIN, RIGHT are
/// block x block zones across the top row, NOOP sits below MAIN; all other
/// cells are inactive.
std::pair<Grid, ZoneMap> gen_t_shape(int block = 8);

/// Four equal quadrants of a full even-sized grid, the fixed vanilla-control
/// layout: top-left NOOP, top-right LEFT, bottom-left MAIN, bottom-right RIGHT.
ZoneMap quadrant_zones(const Grid& grid);

/// Cross-zone patch wiring: a 3x3 patch is centered in each motor zone (LEFT,
/// MAIN, RIGHT; NOOP excluded). Each patch cell receives `targets_per_zone`
/// cells drawn without replacement from each other motor-zone patch; lists are
/// receiver-side and directed as sampled. Patch center is the cell at the
/// integer midpoint of the zone's bounding box. Receivers are processed in
/// ascending cell index, source zones in Left, Main, Right order.
std::vector<std::vector<int>> gen_patch_longrange(const Grid& grid, const ZoneMap& zones,
                                                  int targets_per_zone, Rng& rng);

/// Empty iff all topology invariants hold; each entry names the cell and rule.
std::vector<std::string> validate_topology(const Topology& t);

/// Line-oriented text format:
///   grid L M
///   cell i : n j1 j2 ... ; l k1 k2 ... ; zone Z
/// with one line per active cell and Z in {N,L,M,R,-}. Round-trips bit-exactly.
std::string serialize_topology(const Topology& t);
Topology parse_topology(const std::string& text);

/// 3x3 patch cell indices for one zone (helper shared with tests).
std::vector<int> zone_patch_cells(const Grid& grid, const ZoneMap& zones, Zone z);

}  // namespace nca
