#include "ultra/trees.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ultra {

TreeShape::TreeShape(std::vector<int> counts) : m(std::move(counts)) {
  for (int c : m)
    if (c < 1) throw std::invalid_argument("tree shape entries must be >= 1");
}

std::size_t TreeShape::level_size(int k) const {
  std::size_t n = 1;
  for (int j = 0; j < k; ++j) n *= static_cast<std::size_t>(m[j]);
  return n;
}

std::size_t TreeShape::size() const {
  std::size_t total = 0, n = 1;
  for (int c : m) {
    n *= static_cast<std::size_t>(c);
    total += n;
  }
  return total;
}

std::size_t TreeShape::level_offset(int k) const {
  std::size_t off = 0;
  for (int j = 1; j < k; ++j) off += level_size(j);
  return off;
}

bool TreeShape::contains(const Vertex& v) const {
  if (v.size() > m.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] < 1 || v[i] > m[i]) return false;
  return true;
}

Vertex meet(const Vertex& a, const Vertex& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return Vertex(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
}

bool is_prefix(const Vertex& a, const Vertex& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

Relation relation(const Vertex& a, const Vertex& b) {
  if (a == b) return Relation::equal;
  if (is_prefix(a, b)) return Relation::ancestor;
  if (is_prefix(b, a)) return Relation::descendant;
  return Relation::cousins;
}

Vertex parent(const Vertex& v) {
  if (v.empty()) throw std::invalid_argument("root has no parent");
  return Vertex(v.begin(), v.end() - 1);
}

std::vector<Vertex> children(const Vertex& v, const TreeShape& shape) {
  if (static_cast<int>(v.size()) >= shape.depth())
    throw std::invalid_argument("leaf vertex " + to_string(v) + " has no children");
  std::vector<Vertex> out;
  int m = shape.m[v.size()];
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    Vertex c = v;
    c.push_back(j);
    out.push_back(std::move(c));
  }
  return out;
}

Vertex shift(const Vertex& v, const TreeShape& shape, int i) {
  if (i < 1) throw std::invalid_argument("shift index must be >= 1");
  if (v.empty() || shape.m.empty()) return v;
  Vertex out = v;
  out[0] += (i - 1) * shape.m[0];
  return out;
}

std::vector<Vertex> enumerate(const TreeShape& shape) {
  std::vector<Vertex> out;
  out.reserve(shape.size());
  std::vector<Vertex> level{Vertex{}};
  for (int k = 0; k < shape.depth(); ++k) {
    std::vector<Vertex> next;
    next.reserve(level.size() * static_cast<std::size_t>(shape.m[k]));
    for (const auto& v : level)
      for (int j = 1; j <= shape.m[k]; ++j) {
        Vertex c = v;
        c.push_back(j);
        next.push_back(std::move(c));
      }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

std::size_t vertex_index(const Vertex& v, const TreeShape& shape) {
  if (v.empty()) throw std::invalid_argument("root has no index");
  if (!shape.contains(v)) throw std::out_of_range("vertex " + to_string(v) + " not in shape");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    idx = idx * static_cast<std::size_t>(shape.m[i]) + static_cast<std::size_t>(v[i] - 1);
  return shape.level_offset(static_cast<int>(v.size())) + idx;
}

std::string to_string(const Vertex& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

Vertex parse_vertex(const std::string& s) {
  Vertex v;
  std::string body = s;
  body.erase(std::remove_if(body.begin(), body.end(),
                            [](char c) { return c == '[' || c == ']' || c == ' '; }),
             body.end());
  std::istringstream is(body);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    int x = std::stoi(tok);
    if (x < 1) throw std::invalid_argument("vertex entries must be >= 1: " + s);
    v.push_back(x);
  }
  return v;
}

WeightedTree::WeightedTree(TreeShape s) : shape(std::move(s)), weights(shape.size(), 0.0) {}

WeightedTree::WeightedTree(TreeShape s, std::vector<double> w)
    : shape(std::move(s)), weights(std::move(w)) {
  if (weights.size() != shape.size())
    throw std::invalid_argument("weight count does not match tree shape");
  for (double x : weights)
    if (x < 0) throw std::invalid_argument("negative tree weight");
}

std::vector<double> WeightedTree::level(int k) const {
  auto off = shape.level_offset(k);
  return std::vector<double>(weights.begin() + static_cast<std::ptrdiff_t>(off),
                             weights.begin() + static_cast<std::ptrdiff_t>(off + shape.level_size(k)));
}

Vertex vertex_at(std::size_t index, const TreeShape& shape) {
  int k = 1;
  while (k <= shape.depth() && index >= shape.level_offset(k) + shape.level_size(k)) ++k;
  if (k > shape.depth()) throw std::out_of_range("vertex index out of range");
  std::size_t lex = index - shape.level_offset(k);
  Vertex v(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    auto m = static_cast<std::size_t>(shape.m[i]);
    v[static_cast<std::size_t>(i)] = static_cast<int>(lex % m) + 1;
    lex /= m;
  }
  return v;
}

StandardOrdered standard_order(const WeightedTree& w) {
  const TreeShape& shape = w.shape;
  StandardOrdered out{WeightedTree(shape), {}};
  out.source.reserve(shape.size());

  // lexicographic indices (within the level) of the source vertices, in new order
  std::vector<std::size_t> src_level{0};
  std::vector<int> perm;
  for (int k = 0; k < shape.depth(); ++k) {
    auto m = static_cast<std::size_t>(shape.m[k]);
    std::size_t child_off = shape.level_offset(k + 1);
    std::vector<std::size_t> next;
    next.reserve(src_level.size() * m);
    perm.resize(m);
    for (std::size_t src : src_level) {
      std::size_t base = src * m;
      std::iota(perm.begin(), perm.end(), 0);
      std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return w.weights[child_off + base + static_cast<std::size_t>(a)] >
               w.weights[child_off + base + static_cast<std::size_t>(b)];
      });
      for (int j : perm) next.push_back(base + static_cast<std::size_t>(j));
    }
    for (std::size_t s : next) {
      out.tree.weights[out.source.size()] = w.weights[child_off + s];
      out.source.push_back(child_off + s);
    }
    src_level = std::move(next);
  }
  return out;
}

}  // namespace ultra
