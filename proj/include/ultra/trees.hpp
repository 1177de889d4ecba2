#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ultra {

// Path from the root; entries are 1-based child indices. Empty path is the root.
using Vertex = std::vector<int>;

enum class Relation { ancestor, descendant, cousins, equal };

struct TreeShape {
  std::vector<int> m;  // m_1..m_r, all >= 1

  TreeShape() = default;
  explicit TreeShape(std::vector<int> counts);

  int depth() const { return static_cast<int>(m.size()); }
  // number of vertices at depth k (k = 0 gives 1)
  std::size_t level_size(int k) const;
  // non-root vertex count
  std::size_t size() const;
  // position of the first depth-k vertex in enumerate() order
  std::size_t level_offset(int k) const;
  bool contains(const Vertex& v) const;

  bool operator==(const TreeShape&) const = default;
};

Vertex meet(const Vertex& a, const Vertex& b);
bool is_prefix(const Vertex& a, const Vertex& b);  // a ≼ b
Relation relation(const Vertex& a, const Vertex& b);
Vertex parent(const Vertex& v);

// Throws std::invalid_argument when v is a leaf of the shape.
std::vector<Vertex> children(const Vertex& v, const TreeShape& shape);

// Relabel v ∈ τ into the i-th shifted copy τ^i.
Vertex shift(const Vertex& v, const TreeShape& shape, int i);

// Depth-then-lexicographic listing of the non-root vertices.
std::vector<Vertex> enumerate(const TreeShape& shape);
std::size_t vertex_index(const Vertex& v, const TreeShape& shape);
Vertex vertex_at(std::size_t index, const TreeShape& shape);  // inverse of vertex_index

std::string to_string(const Vertex& v);  // "[1,2]"
Vertex parse_vertex(const std::string& s);

// Weights aligned with enumerate(shape).
struct WeightedTree {
  TreeShape shape;
  std::vector<double> weights;

  WeightedTree() = default;
  explicit WeightedTree(TreeShape s);
  WeightedTree(TreeShape s, std::vector<double> w);

  double at(const Vertex& v) const { return weights[vertex_index(v, shape)]; }
  double& at(const Vertex& v) { return weights[vertex_index(v, shape)]; }
  // weights of the depth-k vertices, in enumerate order
  std::vector<double> level(int k) const;
};

struct StandardOrdered {
  WeightedTree tree;
  // source[j] is the original index of the vertex now at enumerate position j
  std::vector<std::size_t> source;
};

// Siblings sorted by decreasing weight at every vertex, subtrees moving with
// their root. Ties keep the original index order.
StandardOrdered standard_order(const WeightedTree& w);

}  // namespace ultra
