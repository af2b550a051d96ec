#pragma once

// Cell structure and level-m graph approximations of post-critically finite
// self-similar sets. Vertices are identified symbolically (word, corner); no
// floating point coordinate is ever compared.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fractalvec/function.hpp"

namespace fv {

/// F_i q_a coincides with F_j q_b.
struct Identification {
  int map_i;
  int corner_a;
  int map_j;
  int corner_b;
};

struct FractalSpec {
  std::string id;
  int n_maps = 0;
  int n_corners = 0;
  /// Energy renormalization factor r; level-m edges carry conductance r^{-m}.
  double r = 1.0;
  /// Corner a is the fixed point of map corner_fixed_map[a].
  std::vector<int> corner_fixed_map;
  std::vector<Identification> identifications;
  /// Corner pairs joined by an edge inside every cell (cyclic order for triangles).
  std::vector<std::pair<int, int>> cell_edges;
  /// Boundary data (one vector per coordinate) that seeds the harmonic coordinates.
  std::vector<std::vector<double>> coordinate_seeds;

  // Plot geometry only: F_i(x) = fixed_i + contraction * (x - fixed_i).
  std::vector<std::array<double, 2>> corner_coords;
  double contraction = 0.5;

  /// Throws fv::Error on violated invariants (0 < r < 1, consistent tables,
  /// connected level-1 graph).
  void validate() const;
};

FractalSpec sierpinski_gasket();
FractalSpec unit_interval();
/// "sg" or "interval".
FractalSpec fractal_by_id(std::string_view id);

struct CellAddress {
  std::vector<std::uint8_t> word;  // 0-based map indices

  std::size_t length() const { return word.size(); }
  /// 1-based digits, "-" for the empty word.
  std::string to_string() const;
  static CellAddress parse(std::string_view text);
  bool operator==(const CellAddress&) const = default;
};

struct Edge {
  std::size_t u;
  std::size_t v;
  std::size_t cell;
};

struct CornerRef {
  std::size_t cell;
  int corner;
};

inline constexpr std::size_t kDefaultVertexBudget = 20'000'000;

/// Identified level-m graph. Immutable after construction.
class LevelGraph {
 public:
  const FractalSpec& spec() const { return spec_; }
  int level() const { return level_; }
  std::size_t num_vertices() const { return num_vertices_; }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t edges_per_cell() const { return spec_.cell_edges.size(); }
  int corners_per_cell() const { return spec_.n_corners; }
  /// r^{-m}
  double conductance() const { return conductance_; }

  const std::vector<Edge>& edges() const { return edges_; }
  /// Edges of a cell are stored contiguously, in FractalSpec::cell_edges order.
  std::size_t first_edge_of_cell(std::size_t cell) const { return cell * edges_per_cell(); }

  std::span<const std::size_t> cell_vertices(std::size_t cell) const {
    const auto k = static_cast<std::size_t>(spec_.n_corners);
    return {cell_vertices_.data() + cell * k, k};
  }
  CellAddress cell_address(std::size_t cell) const;
  std::size_t cell_index(const CellAddress& address) const;

  /// Every (cell, corner) pair that lands on vertex v, lexicographic.
  std::span<const CornerRef> vertex_refs(std::size_t v) const {
    return {refs_.data() + ref_offsets_[v], ref_offsets_[v + 1] - ref_offsets_[v]};
  }
  std::size_t vertex_at(std::size_t cell, int corner) const {
    return cell_vertices_[cell * static_cast<std::size_t>(spec_.n_corners) +
                          static_cast<std::size_t>(corner)];
  }
  /// Canonical address "w:a" (1-based) of the smallest representative.
  std::string vertex_label(std::size_t v) const;
  std::array<double, 2> vertex_coords(std::size_t v) const;
  /// V_0 in corner order.
  std::vector<std::size_t> boundary_vertices() const;

 private:
  friend LevelGraph build_level(const FractalSpec&, int, std::size_t);

  FractalSpec spec_;
  int level_ = 0;
  std::size_t num_vertices_ = 0;
  std::size_t num_cells_ = 0;
  double conductance_ = 1.0;
  std::vector<std::size_t> cell_vertices_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> ref_offsets_;
  std::vector<CornerRef> refs_;
};

/// Deterministic: indices follow lexicographic (word, corner) order with
/// identified duplicates merged into their smallest representative.
/// Throws ErrorKind::resource_limit when n_maps^m * n_corners exceeds the budget.
LevelGraph build_level(const FractalSpec& spec, int m,
                       std::size_t vertex_budget = kDefaultVertexBudget);

struct CellInfo {
  CellAddress address;
  std::vector<std::size_t> vertices;
};

std::vector<CellInfo> cells_at_level(const LevelGraph& g);

/// Index in `fine` of every vertex of `coarse` (fine.level() >= coarse.level()).
std::vector<std::size_t> embed_vertices(const LevelGraph& coarse, const LevelGraph& fine);

/// Connected components check used by validation and tests.
bool is_connected(const LevelGraph& g);

enum class RefineMode { copy };

/// Value transport from level m to level n >= m. New vertices receive the
/// arithmetic mean of the already known corners of the cells that contain them.
DiscreteFunction refine(const LevelGraph& from, const DiscreteFunction& f, int to_level,
                        RefineMode mode = RefineMode::copy);

}  // namespace fv
