#include "fractalvec/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "fractalvec/error.hpp"

namespace fv {

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

void check_tables(const FractalSpec& s) {
  require(s.n_maps >= 2, ErrorKind::invalid_argument, "fractal spec needs at least two maps");
  require(s.n_corners >= 2, ErrorKind::invalid_argument, "fractal spec needs at least two corners");
  require(s.r > 0.0 && s.r < 1.0, ErrorKind::invalid_argument,
          "renormalization factor must satisfy 0 < r < 1");
  require(static_cast<int>(s.corner_fixed_map.size()) == s.n_corners, ErrorKind::invalid_argument,
          "corner_fixed_map must list one map per corner");
  std::vector<int> fixes(static_cast<std::size_t>(s.n_maps), 0);
  for (int m : s.corner_fixed_map) {
    require(m >= 0 && m < s.n_maps, ErrorKind::invalid_argument, "corner_fixed_map out of range");
    ++fixes[static_cast<std::size_t>(m)];
  }
  for (int c : fixes)
    require(c <= 1, ErrorKind::invalid_argument, "a map may fix at most one corner");
  for (const auto& id : s.identifications) {
    require(id.map_i >= 0 && id.map_i < s.n_maps && id.map_j >= 0 && id.map_j < s.n_maps &&
                id.corner_a >= 0 && id.corner_a < s.n_corners && id.corner_b >= 0 &&
                id.corner_b < s.n_corners,
            ErrorKind::invalid_argument, "identification out of range");
    require(id.map_i != id.map_j, ErrorKind::invalid_argument,
            "identifications must join different cells");
  }
  require(!s.cell_edges.empty(), ErrorKind::invalid_argument, "cells need at least one edge");
  for (auto [a, b] : s.cell_edges)
    require(a >= 0 && a < s.n_corners && b >= 0 && b < s.n_corners && a != b,
            ErrorKind::invalid_argument, "cell edge out of range");
  require(s.corner_coords.empty() || static_cast<int>(s.corner_coords.size()) == s.n_corners,
          ErrorKind::invalid_argument, "corner_coords must be empty or one per corner");
  for (const auto& seed : s.coordinate_seeds)
    require(static_cast<int>(seed.size()) == s.n_corners, ErrorKind::invalid_argument,
            "coordinate seed has wrong length");
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // The smaller slot always becomes the root.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a < b)
      parent[b] = a;
    else if (b < a)
      parent[a] = b;
  }
};

}  // namespace

void FractalSpec::validate() const {
  check_tables(*this);
  require(is_connected(build_level(*this, 1)), ErrorKind::invalid_argument,
          "identification rule yields a disconnected level-1 graph");
}

FractalSpec sierpinski_gasket() {
  FractalSpec s;
  s.id = "sg";
  s.n_maps = 3;
  s.n_corners = 3;
  s.r = 3.0 / 5.0;
  s.corner_fixed_map = {0, 1, 2};
  // F_i q_j = F_j q_i for i != j.
  s.identifications = {{0, 1, 1, 0}, {0, 2, 2, 0}, {1, 2, 2, 1}};
  s.cell_edges = {{0, 1}, {1, 2}, {2, 0}};
  s.coordinate_seeds = {{0.0, 1.0, -1.0}, {2.0, -1.0, -1.0}};
  s.corner_coords = {{{0.0, 0.0}}, {{1.0, 0.0}}, {{0.5, std::sqrt(3.0) / 2.0}}};
  s.contraction = 0.5;
  return s;
}

FractalSpec unit_interval() {
  FractalSpec s;
  s.id = "interval";
  s.n_maps = 2;
  s.n_corners = 2;
  s.r = 0.5;
  s.corner_fixed_map = {0, 1};
  s.identifications = {{0, 1, 1, 0}};
  s.cell_edges = {{0, 1}};
  s.coordinate_seeds = {{-0.5, 0.5}};
  s.corner_coords = {{{0.0, 0.0}}, {{1.0, 0.0}}};
  s.contraction = 0.5;
  return s;
}

FractalSpec fractal_by_id(std::string_view id) {
  if (id == "sg") return sierpinski_gasket();
  if (id == "interval") return unit_interval();
  throw Error(ErrorKind::invalid_argument, "unknown fractal id '" + std::string(id) + "'");
}

std::string CellAddress::to_string() const {
  if (word.empty()) return "-";
  std::string out;
  out.reserve(word.size());
  for (auto d : word) out.push_back(static_cast<char>('1' + d));
  return out;
}

CellAddress CellAddress::parse(std::string_view text) {
  CellAddress a;
  if (text == "-") return a;
  for (char c : text) {
    require(c >= '1' && c <= '9', ErrorKind::invalid_argument,
            "bad cell address '" + std::string(text) + "'");
    a.word.push_back(static_cast<std::uint8_t>(c - '1'));
  }
  return a;
}

LevelGraph build_level(const FractalSpec& spec, int m, std::size_t vertex_budget) {
  check_tables(spec);
  require(m >= 0, ErrorKind::invalid_argument, "level must be non-negative");
  const auto n = static_cast<std::size_t>(spec.n_maps);
  const auto k = static_cast<std::size_t>(spec.n_corners);
  const double slots_bound = std::pow(static_cast<double>(n), m) * static_cast<double>(k);
  require(slots_bound <= static_cast<double>(vertex_budget), ErrorKind::resource_limit,
          "level " + std::to_string(m) + " needs " + std::to_string(slots_bound) +
              " vertex addresses, budget is " + std::to_string(vertex_budget));

  const std::size_t cells = ipow(n, m);
  const std::size_t slots = cells * k;
  UnionFind uf(slots);

  // (v i fix(a)^*, a) ~ (v j fix(b)^*, b) for every prefix v and identification.
  for (int len = 0; len < m; ++len) {
    const std::size_t prefixes = ipow(n, len);
    const int tail = m - len - 1;
    for (std::size_t v = 0; v < prefixes; ++v) {
      for (const auto& id : spec.identifications) {
        auto cell_of = [&](int map, int corner) {
          std::size_t c = v * n + static_cast<std::size_t>(map);
          const auto fix = static_cast<std::size_t>(spec.corner_fixed_map[static_cast<std::size_t>(corner)]);
          // Append the fixed-map digit `tail` times.
          for (int t = 0; t < tail; ++t) c = c * n + fix;
          return c;
        };
        const std::size_t a = cell_of(id.map_i, id.corner_a) * k + static_cast<std::size_t>(id.corner_a);
        const std::size_t b = cell_of(id.map_j, id.corner_b) * k + static_cast<std::size_t>(id.corner_b);
        uf.unite(a, b);
      }
    }
  }

  LevelGraph g;
  g.spec_ = spec;
  g.level_ = m;
  g.num_cells_ = cells;
  g.conductance_ = std::pow(spec.r, -m);
  g.cell_vertices_.assign(slots, 0);

  std::vector<std::size_t> root_index(slots, static_cast<std::size_t>(-1));
  std::size_t next = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t root = uf.find(s);
    if (root_index[root] == static_cast<std::size_t>(-1)) root_index[root] = next++;
    g.cell_vertices_[s] = root_index[root];
  }
  g.num_vertices_ = next;

  // CSR of (cell, corner) references per vertex, lexicographic within each vertex.
  g.ref_offsets_.assign(next + 1, 0);
  for (std::size_t s = 0; s < slots; ++s) ++g.ref_offsets_[g.cell_vertices_[s] + 1];
  std::partial_sum(g.ref_offsets_.begin(), g.ref_offsets_.end(), g.ref_offsets_.begin());
  g.refs_.resize(slots);
  std::vector<std::size_t> fill(g.ref_offsets_.begin(), g.ref_offsets_.end() - 1);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t v = g.cell_vertices_[s];
    g.refs_[fill[v]++] = CornerRef{s / k, static_cast<int>(s % k)};
  }

  g.edges_.reserve(cells * spec.cell_edges.size());
  for (std::size_t c = 0; c < cells; ++c)
    for (auto [a, b] : spec.cell_edges)
      g.edges_.push_back(Edge{g.vertex_at(c, a), g.vertex_at(c, b), c});
  return g;
}

CellAddress LevelGraph::cell_address(std::size_t cell) const {
  CellAddress a;
  a.word.assign(static_cast<std::size_t>(level_), 0);
  const auto n = static_cast<std::size_t>(spec_.n_maps);
  for (int i = level_ - 1; i >= 0; --i) {
    a.word[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(cell % n);
    cell /= n;
  }
  return a;
}

std::size_t LevelGraph::cell_index(const CellAddress& address) const {
  require(static_cast<int>(address.length()) == level_, ErrorKind::level_mismatch,
          "cell address length does not match graph level");
  std::size_t c = 0;
  for (auto d : address.word) {
    require(d < spec_.n_maps, ErrorKind::invalid_argument, "cell address digit out of range");
    c = c * static_cast<std::size_t>(spec_.n_maps) + d;
  }
  return c;
}

std::string LevelGraph::vertex_label(std::size_t v) const {
  const CornerRef& r = vertex_refs(v).front();
  return cell_address(r.cell).to_string() + ":" + std::to_string(r.corner + 1);
}

std::array<double, 2> LevelGraph::vertex_coords(std::size_t v) const {
  if (spec_.corner_coords.empty()) return {0.0, 0.0};
  const CornerRef& ref = vertex_refs(v).front();
  const CellAddress addr = cell_address(ref.cell);
  std::array<double, 2> x = spec_.corner_coords[static_cast<std::size_t>(ref.corner)];
  for (auto it = addr.word.rbegin(); it != addr.word.rend(); ++it) {
    const auto corner = static_cast<std::size_t>(
        std::find(spec_.corner_fixed_map.begin(), spec_.corner_fixed_map.end(), *it) -
        spec_.corner_fixed_map.begin());
    const auto& fix = spec_.corner_coords[corner];
    x = {fix[0] + spec_.contraction * (x[0] - fix[0]), fix[1] + spec_.contraction * (x[1] - fix[1])};
  }
  return x;
}

std::vector<std::size_t> LevelGraph::boundary_vertices() const {
  std::vector<std::size_t> out;
  const auto n = static_cast<std::size_t>(spec_.n_maps);
  for (int a = 0; a < spec_.n_corners; ++a) {
    const auto fix = static_cast<std::size_t>(spec_.corner_fixed_map[static_cast<std::size_t>(a)]);
    std::size_t cell = 0;
    for (int t = 0; t < level_; ++t) cell = cell * n + fix;
    out.push_back(vertex_at(cell, a));
  }
  return out;
}

std::vector<CellInfo> cells_at_level(const LevelGraph& g) {
  std::vector<CellInfo> out;
  out.reserve(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    auto vs = g.cell_vertices(c);
    out.push_back(CellInfo{g.cell_address(c), {vs.begin(), vs.end()}});
  }
  return out;
}

std::vector<std::size_t> embed_vertices(const LevelGraph& coarse, const LevelGraph& fine) {
  require(coarse.spec().id == fine.spec().id, ErrorKind::invalid_argument,
          "graphs belong to different fractals");
  require(fine.level() >= coarse.level(), ErrorKind::level_mismatch,
          "embedding requires fine.level() >= coarse.level()");
  const auto n = static_cast<std::size_t>(coarse.spec().n_maps);
  const int depth = fine.level() - coarse.level();
  std::vector<std::size_t> out(coarse.num_vertices());
  for (std::size_t v = 0; v < coarse.num_vertices(); ++v) {
    const CornerRef& r = coarse.vertex_refs(v).front();
    const auto fix =
        static_cast<std::size_t>(coarse.spec().corner_fixed_map[static_cast<std::size_t>(r.corner)]);
    std::size_t cell = r.cell;
    for (int t = 0; t < depth; ++t) cell = cell * n + fix;
    out[v] = fine.vertex_at(cell, r.corner);
  }
  return out;
}

bool is_connected(const LevelGraph& g) {
  if (g.num_vertices() == 0) return true;
  std::vector<std::vector<std::size_t>> adj(g.num_vertices());
  for (const auto& e : g.edges()) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<bool> seen(g.num_vertices(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto x = q.front();
    q.pop();
    for (auto y : adj[x])
      if (!seen[y]) {
        seen[y] = true;
        ++count;
        q.push(y);
      }
  }
  return count == g.num_vertices();
}

DiscreteFunction refine(const LevelGraph& from, const DiscreteFunction& f, int to_level,
                        RefineMode mode) {
  require_level(f.level, from.level());
  require(f.size() == static_cast<Eigen::Index>(from.num_vertices()), ErrorKind::invalid_argument,
          "function length does not match vertex count");
  require(to_level >= from.level(), ErrorKind::level_mismatch, "refine target below source level");
  (void)mode;

  LevelGraph coarse = from;
  Eigen::VectorXd values = f.values;
  for (int l = from.level(); l < to_level; ++l) {
    LevelGraph fine = build_level(from.spec(), l + 1);
    const auto embed = embed_vertices(coarse, fine);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fine.num_vertices()));
    std::vector<bool> known(fine.num_vertices(), false);
    for (std::size_t v = 0; v < embed.size(); ++v) {
      next[static_cast<Eigen::Index>(embed[v])] = values[static_cast<Eigen::Index>(v)];
      known[embed[v]] = true;
    }
    const auto n = static_cast<std::size_t>(from.spec().n_maps);
    for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
      if (known[v]) continue;
      std::vector<std::size_t> corners;
      for (const auto& ref : fine.vertex_refs(v))
        for (auto w : fine.cell_vertices(ref.cell))
          if (known[w] && std::find(corners.begin(), corners.end(), w) == corners.end())
            corners.push_back(w);
      double sum = 0.0;
      int count = 0;
      for (auto w : corners) {
        sum += next[static_cast<Eigen::Index>(w)];
        ++count;
      }
      if (count == 0) {
        // Parent cell corners are always known.
        const std::size_t parent = fine.vertex_refs(v).front().cell / n;
        for (auto w : coarse.cell_vertices(parent)) {
          sum += values[static_cast<Eigen::Index>(w)];
          ++count;
        }
      }
      next[static_cast<Eigen::Index>(v)] = sum / count;
    }
    values = std::move(next);
    coarse = std::move(fine);
  }
  return {to_level, values};
}

}  // namespace fv
