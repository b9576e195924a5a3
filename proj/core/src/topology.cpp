#include "attnca/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nca {

int Grid::active_count() const {
  int n = 0;
  for (auto a : active) n += a ? 1 : 0;
  return n;
}

std::vector<int> Grid::active_cells() const {
  std::vector<int> out;
  out.reserve(active.size());
  for (int i = 0; i < cell_count(); ++i)
    if (is_active(i)) out.push_back(i);
  return out;
}

Grid build_grid(int rows, int cols, const std::vector<std::uint8_t>* mask) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("build_grid: rows and cols must be >= 1");
  Grid g;
  g.rows = rows;
  g.cols = cols;
  if (mask) {
    if (static_cast<int>(mask->size()) != rows * cols)
      throw std::invalid_argument("build_grid: mask length mismatch");
    g.active = *mask;
  } else {
    g.active.assign(static_cast<std::size_t>(rows) * cols, 1);
  }
  if (g.active_count() == 0) throw std::invalid_argument("build_grid: zero active cells");
  return g;
}

namespace {
inline int chebyshev(const Grid& g, int a, int b) {
  return std::max(std::abs(g.row_of(a) - g.row_of(b)), std::abs(g.col_of(a) - g.col_of(b)));
}
}  // namespace

std::vector<std::vector<int>> moore_neighbors(const Grid& grid, int radius) {
  if (radius != 1 && radius != 2) throw std::invalid_argument("moore_neighbors: radius must be 1 or 2");
  std::vector<std::vector<int>> lists(grid.cell_count());
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int i = grid.index(r, c);
      if (!grid.is_active(i)) continue;
      auto& out = lists[i];
      for (int dr = -radius; dr <= radius; ++dr) {
        const int nr = r + dr;
        if (nr < 0 || nr >= grid.rows) continue;
        for (int dc = -radius; dc <= radius; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nc = c + dc;
          if (nc < 0 || nc >= grid.cols) continue;
          const int j = grid.index(nr, nc);
          if (grid.is_active(j)) out.push_back(j);
        }
      }
    }
  }
  return lists;
}

namespace {

// Devroye's rejection sampler for the unbounded Zipf distribution,
// P(Z = k) proportional to k^-s, valid for s > 1.
std::uint64_t zipf_draw(double s, Rng& rng) {
  const double sm1 = s - 1.0;
  const double b = std::pow(2.0, sm1);
  for (;;) {
    const double u1 = 1.0 - rng.uniform();  // (0, 1]
    const double u2 = rng.uniform();
    const double x = std::floor(std::pow(u1, -1.0 / sm1));
    const double t = std::pow(1.0 + 1.0 / x, sm1);
    if (u2 * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
  }
}

void add_edge(std::vector<std::vector<int>>& lists, int a, int b) {
  auto& la = lists[a];
  if (std::find(la.begin(), la.end(), b) != la.end()) return;  // already wired
  la.push_back(b);
  lists[b].push_back(a);
}

}  // namespace

std::vector<std::vector<int>> gen_scale_free_longrange(const Grid& grid, const ScaleFreeConfig& cfg, Rng& rng) {
  const auto active = grid.active_cells();
  if (cfg.hub_count < 0 || cfg.hub_count > static_cast<int>(active.size()))
    throw std::invalid_argument("gen_scale_free_longrange: hub_count out of range");
  if (cfg.max_out_degree < 1) throw std::invalid_argument("gen_scale_free_longrange: max_out_degree must be >= 1");
  if (cfg.zipf_exponent <= 1.0)
    throw std::invalid_argument("gen_scale_free_longrange: zipf_exponent must be > 1");

  std::vector<std::vector<int>> lists(grid.cell_count());
  const std::vector<int> hubs = rng.sample_without_replacement(active, static_cast<std::size_t>(cfg.hub_count));

  for (int hub : hubs) {
    const int degree = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(cfg.max_out_degree), zipf_draw(cfg.zipf_exponent, rng)));
    std::vector<int> eligible;
    for (int cell : active)
      if (cell != hub && chebyshev(grid, hub, cell) > 1) eligible.push_back(cell);
    if (static_cast<int>(eligible.size()) < degree)
      throw std::invalid_argument("gen_scale_free_longrange: insufficient eligible targets for hub " +
                                  std::to_string(hub));
    for (int target : rng.sample_without_replacement(eligible, static_cast<std::size_t>(degree)))
      add_edge(lists, hub, target);
  }
  return lists;
}

std::pair<Grid, ZoneMap> gen_t_shape(int block) {
  if (block < 1) throw std::invalid_argument("gen_t_shape: block must be >= 1");
  const int rows = 2 * block;
  const int cols = 3 * block;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols, 0);
  ZoneMap zones;
  zones.zone.assign(mask.size(), Zone::Unzoned);

  auto paint = [&](int r0, int c0, Zone z) {
    for (int r = r0; r < r0 + block; ++r)
      for (int c = c0; c < c0 + block; ++c) {
        const int i = r * cols + c;
        mask[i] = 1;
        zones.zone[i] = z;
      }
  };
  paint(0, 0, Zone::Left);
  paint(0, block, Zone::Main);
  paint(0, 2 * block, Zone::Right);
  paint(block, block, Zone::Noop);

  return {build_grid(rows, cols, &mask), std::move(zones)};
}

ZoneMap quadrant_zones(const Grid& grid) {
  if (grid.rows % 2 != 0 || grid.cols % 2 != 0)
    throw std::invalid_argument("quadrant_zones: grid sides must be even");
  ZoneMap zones;
  zones.zone.assign(grid.active.size(), Zone::Unzoned);
  const int hr = grid.rows / 2;
  const int hc = grid.cols / 2;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const int i = grid.index(r, c);
      if (!grid.is_active(i)) continue;
      if (r < hr)
        zones.zone[i] = (c < hc) ? Zone::Noop : Zone::Left;
      else
        zones.zone[i] = (c < hc) ? Zone::Main : Zone::Right;
    }
  return zones;
}

std::vector<int> zone_patch_cells(const Grid& grid, const ZoneMap& zones, Zone z) {
  int rmin = grid.rows, rmax = -1, cmin = grid.cols, cmax = -1;
  for (int i = 0; i < grid.cell_count(); ++i) {
    if (!grid.is_active(i) || zones.zone[i] != z) continue;
    rmin = std::min(rmin, grid.row_of(i));
    rmax = std::max(rmax, grid.row_of(i));
    cmin = std::min(cmin, grid.col_of(i));
    cmax = std::max(cmax, grid.col_of(i));
  }
  if (rmax < 0) throw std::invalid_argument("zone_patch_cells: zone is empty");
  const int cr = (rmin + rmax) / 2;
  const int cc = (cmin + cmax) / 2;
  std::vector<int> patch;
  for (int r = cr - 1; r <= cr + 1; ++r)
    for (int c = cc - 1; c <= cc + 1; ++c) {
      if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols)
        throw std::invalid_argument("zone_patch_cells: patch leaves the grid");
      const int i = grid.index(r, c);
      if (!grid.is_active(i) || zones.zone[i] != z)
        throw std::invalid_argument("zone_patch_cells: patch cell outside zone " + std::to_string(i));
      patch.push_back(i);
    }
  return patch;
}

std::vector<std::vector<int>> gen_patch_longrange(const Grid& grid, const ZoneMap& zones,
                                                  int targets_per_zone, Rng& rng) {
  const Zone motor[] = {Zone::Left, Zone::Main, Zone::Right};
  std::vector<std::vector<int>> patches;
  for (Zone z : motor) patches.push_back(zone_patch_cells(grid, zones, z));
  for (const auto& p : patches)
    if (static_cast<int>(p.size()) < targets_per_zone)
      throw std::invalid_argument("gen_patch_longrange: patch smaller than targets_per_zone");

  std::vector<std::vector<int>> lists(grid.cell_count());
  for (std::size_t zi = 0; zi < patches.size(); ++zi) {
    for (int receiver : patches[zi]) {
      for (std::size_t zj = 0; zj < patches.size(); ++zj) {
        if (zj == zi) continue;
        for (int src : rng.sample_without_replacement(patches[zj], static_cast<std::size_t>(targets_per_zone)))
          lists[receiver].push_back(src);
      }
    }
  }
  return lists;
}

std::vector<std::string> validate_topology(const Topology& t) {
  std::vector<std::string> violations;
  const int n = t.grid.cell_count();
  if (t.grid.active_count() == 0) violations.push_back("grid: no active cells");
  if (static_cast<int>(t.local.size()) != n) violations.push_back("local: list count mismatch");
  if (static_cast<int>(t.long_range.size()) != n) violations.push_back("long_range: list count mismatch");

  auto check_lists = [&](const std::vector<std::vector<int>>& lists, const char* kind) {
    for (int i = 0; i < std::min<int>(n, static_cast<int>(lists.size())); ++i) {
      if (!t.grid.is_active(i)) {
        if (!lists[i].empty())
          violations.push_back("cell " + std::to_string(i) + ": " + kind + " list on inactive cell");
        continue;
      }
      std::set<int> seen;
      for (int j : lists[i]) {
        if (j < 0 || j >= n) {
          violations.push_back("cell " + std::to_string(i) + ": " + kind + " index out of range");
          continue;
        }
        if (j == i) violations.push_back("cell " + std::to_string(i) + ": " + kind + " self-loop");
        if (!t.grid.is_active(j))
          violations.push_back("cell " + std::to_string(i) + ": " + kind + " inactive target " + std::to_string(j));
        if (!seen.insert(j).second)
          violations.push_back("cell " + std::to_string(i) + ": " + kind + " duplicate entry " + std::to_string(j));
      }
    }
  };
  check_lists(t.local, "local");
  check_lists(t.long_range, "long-range");

  if (t.zones) {
    if (t.zones->zone.size() != t.grid.active.size()) {
      violations.push_back("zones: size mismatch");
    } else {
      for (int i = 0; i < n; ++i)
        if (!t.grid.is_active(i) && t.zones->zone[i] != Zone::Unzoned)
          violations.push_back("cell " + std::to_string(i) + ": zone label on inactive cell");
    }
  }
  return violations;
}

namespace {
char zone_char(Zone z) {
  switch (z) {
    case Zone::Noop: return 'N';
    case Zone::Left: return 'L';
    case Zone::Main: return 'M';
    case Zone::Right: return 'R';
    default: return '-';
  }
}

Zone zone_from_char(char c) {
  switch (c) {
    case 'N': return Zone::Noop;
    case 'L': return Zone::Left;
    case 'M': return Zone::Main;
    case 'R': return Zone::Right;
    case '-': return Zone::Unzoned;
    default: throw std::invalid_argument(std::string("parse_topology: bad zone char '") + c + "'");
  }
}
}  // namespace

std::string serialize_topology(const Topology& t) {
  std::ostringstream os;
  os << "grid " << t.grid.rows << ' ' << t.grid.cols << '\n';
  for (int i = 0; i < t.grid.cell_count(); ++i) {
    if (!t.grid.is_active(i)) continue;
    os << "cell " << i << " : n";
    for (int j : t.local[i]) os << ' ' << j;
    os << " ; l";
    for (int j : t.long_range[i]) os << ' ' << j;
    os << " ; zone " << zone_char(t.zones ? t.zones->zone[i] : Zone::Unzoned) << '\n';
  }
  return os.str();
}

Topology parse_topology(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  if (!(is >> word) || word != "grid") throw std::invalid_argument("parse_topology: missing grid header");
  int rows = 0, cols = 0;
  if (!(is >> rows >> cols)) throw std::invalid_argument("parse_topology: bad grid header");
  if (rows < 1 || cols < 1) throw std::invalid_argument("parse_topology: bad grid dimensions");

  Topology t;
  t.grid.rows = rows;
  t.grid.cols = cols;
  t.grid.active.assign(static_cast<std::size_t>(rows) * cols, 0);
  t.local.assign(t.grid.active.size(), {});
  t.long_range.assign(t.grid.active.size(), {});
  ZoneMap zones;
  zones.zone.assign(t.grid.active.size(), Zone::Unzoned);
  bool any_zone = false;

  while (is >> word) {
    if (word != "cell") throw std::invalid_argument("parse_topology: expected 'cell', got '" + word + "'");
    int i = -1;
    if (!(is >> i) || i < 0 || i >= rows * cols) throw std::invalid_argument("parse_topology: bad cell index");
    t.grid.active[i] = 1;

    auto expect = [&](const char* tok) {
      if (!(is >> word) || word != tok)
        throw std::invalid_argument(std::string("parse_topology: expected '") + tok + "'");
    };
    expect(":");
    expect("n");
    while (is >> word && word != ";") t.local[i].push_back(std::stoi(word));
    expect("l");
    while (is >> word && word != ";") t.long_range[i].push_back(std::stoi(word));
    expect("zone");
    if (!(is >> word) || word.size() != 1) throw std::invalid_argument("parse_topology: bad zone field");
    const Zone z = zone_from_char(word[0]);
    zones.zone[i] = z;
    if (z != Zone::Unzoned) any_zone = true;
  }
  if (t.grid.active_count() == 0) throw std::invalid_argument("parse_topology: no active cells");
  if (any_zone) t.zones = std::move(zones);
  return t;
}

}  // namespace nca
