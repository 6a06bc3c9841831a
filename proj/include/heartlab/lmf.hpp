#pragma once

// LMF graphs: labelled, oriented multigraphs embedded in the sphere.
//
// The embedding is combinatorial. Every edge e has two darts, e+ at its source
// and e- at its target; each vertex lists its darts counter-clockwise. A
// graph with several components also records, for each non-root component X,
// the face of its parent that contains X and the face of X that contains the
// parent. Faces are named by their smallest dart (edge id, + before -).

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "heartlab/bifurcations.hpp"
#include "heartlab/errors.hpp"

namespace heartlab::lmf {

enum class VertexLabel { Saddle, Sink, Source, TV, VLC, VETL };
enum class EdgeLabel { SS, US, SC, STS, UTS, LC, OTL, ITL };
enum class Regime { NegEps, PosEpsGeneric, PosEpsLE, PosEpsLI, PosEpsEI };

inline const char* to_string(VertexLabel l) {
  switch (l) {
    case VertexLabel::Saddle: return "SP:saddle";
    case VertexLabel::Sink: return "SP:sink";
    case VertexLabel::Source: return "SP:source";
    case VertexLabel::TV: return "TV";
    case VertexLabel::VLC: return "VLC";
    case VertexLabel::VETL: return "VETL";
  }
  return "?";
}

inline const char* to_string(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::SS: return "SS";
    case EdgeLabel::US: return "US";
    case EdgeLabel::SC: return "SC";
    case EdgeLabel::STS: return "STS";
    case EdgeLabel::UTS: return "UTS";
    case EdgeLabel::LC: return "LC";
    case EdgeLabel::OTL: return "OTL";
    case EdgeLabel::ITL: return "ITL";
  }
  return "?";
}

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::NegEps: return "NegEps";
    case Regime::PosEpsGeneric: return "PosEpsGeneric";
    case Regime::PosEpsLE: return "PosEpsLE";
    case Regime::PosEpsLI: return "PosEpsLI";
    case Regime::PosEpsEI: return "PosEpsEI";
  }
  return "?";
}

inline const std::vector<Regime>& all_regimes() {
  static const std::vector<Regime> r{Regime::NegEps, Regime::PosEpsGeneric, Regime::PosEpsLE, Regime::PosEpsLI,
                                     Regime::PosEpsEI};
  return r;
}

inline VertexLabel parse_vertex_label(const std::string& s) {
  for (auto l : {VertexLabel::Saddle, VertexLabel::Sink, VertexLabel::Source, VertexLabel::TV, VertexLabel::VLC,
                 VertexLabel::VETL}) {
    if (s == to_string(l)) return l;
  }
  throw ConfigError("unknown vertex label '" + s + "'");
}

inline EdgeLabel parse_edge_label(const std::string& s) {
  for (auto l : {EdgeLabel::SS, EdgeLabel::US, EdgeLabel::SC, EdgeLabel::STS, EdgeLabel::UTS, EdgeLabel::LC,
                 EdgeLabel::OTL, EdgeLabel::ITL}) {
    if (s == to_string(l)) return l;
  }
  throw ConfigError("unknown edge label '" + s + "'");
}

inline Regime parse_regime(const std::string& s) {
  for (Regime r : all_regimes()) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown regime '" + s + "'");
}

inline bool is_loop_label(EdgeLabel l) { return l == EdgeLabel::OTL || l == EdgeLabel::ITL; }

struct Dart {
  int edge = 0;
  bool plus = true;  // at the source of the edge

  int key() const { return 2 * edge + (plus ? 0 : 1); }
  Dart twin() const { return {edge, !plus}; }
  friend bool operator==(const Dart& a, const Dart& b) { return a.edge == b.edge && a.plus == b.plus; }
  friend bool operator<(const Dart& a, const Dart& b) { return a.key() < b.key(); }

  std::string to_string() const { return std::to_string(edge) + (plus ? "+" : "-"); }

  static Dart parse(const std::string& s) {
    if (s.size() < 2 || (s.back() != '+' && s.back() != '-')) throw ConfigError("malformed dart '" + s + "'");
    try {
      std::size_t used = 0;
      const int e = std::stoi(s.substr(0, s.size() - 1), &used);
      if (used != s.size() - 1 || e < 0) throw ConfigError("malformed dart '" + s + "'");
      return {e, s.back() == '+'};
    } catch (const std::logic_error&) {
      throw ConfigError("malformed dart '" + s + "'");
    }
  }
};

struct LmfVertex {
  int id = 0;
  VertexLabel label = VertexLabel::Saddle;
  std::string name;
};

struct LmfEdge {
  int id = 0;
  int src = 0;
  int dst = 0;
  EdgeLabel label = EdgeLabel::SS;
  std::string name;
};

struct Nesting {
  Dart child_face;   // face of the child component containing the parent
  Dart parent_face;  // face of the parent component containing the child
};

struct LmfGraph {
  std::vector<LmfVertex> vertices;
  std::vector<LmfEdge> edges;
  std::vector<std::vector<Dart>> rotation;  // per vertex, counter-clockwise
  std::vector<Nesting> nesting;

  int vertex_of(const Dart& d) const { return d.plus ? edges[d.edge].src : edges[d.edge].dst; }

  std::optional<int> vertex_named(const std::string& name) const {
    for (const auto& v : vertices) {
      if (v.name == name) return v.id;
    }
    return std::nullopt;
  }

  std::optional<int> edge_named(const std::string& name) const {
    for (const auto& e : edges) {
      if (e.name == name) return e.id;
    }
    return std::nullopt;
  }

  std::size_t count_edges(EdgeLabel l) const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [l](const LmfEdge& e) { return e.label == l; }));
  }

  std::size_t count_vertices(VertexLabel l) const {
    return static_cast<std::size_t>(
        std::count_if(vertices.begin(), vertices.end(), [l](const LmfVertex& v) { return v.label == l; }));
  }
};

// ---------------------------------------------------------------------------
// Combinatorial structure.

namespace detail {

/// Position of every dart in its vertex rotation; nullopt when the rotation
/// does not list each dart exactly once at the right vertex.
struct RotationIndex {
  std::vector<int> pos;  // by dart key

  static std::optional<RotationIndex> build(const LmfGraph& g) {
    RotationIndex idx;
    idx.pos.assign(2 * g.edges.size(), -1);
    if (g.rotation.size() != g.vertices.size()) return std::nullopt;
    for (std::size_t v = 0; v < g.rotation.size(); ++v) {
      for (std::size_t j = 0; j < g.rotation[v].size(); ++j) {
        const Dart& d = g.rotation[v][j];
        if (d.edge < 0 || d.edge >= static_cast<int>(g.edges.size())) return std::nullopt;
        if (idx.pos[d.key()] != -1) return std::nullopt;
        if (g.vertex_of(d) != static_cast<int>(v)) return std::nullopt;
        idx.pos[d.key()] = static_cast<int>(j);
      }
    }
    for (int p : idx.pos) {
      if (p == -1) return std::nullopt;
    }
    return idx;
  }
};

}  // namespace detail

/// Face successor: the dart following d along the face on its left.
inline Dart face_next(const LmfGraph& g, const std::vector<int>& pos, const Dart& d) {
  const Dart t = d.twin();
  const auto& rot = g.rotation[g.vertex_of(t)];
  const int n = static_cast<int>(rot.size());
  return rot[(pos[t.key()] + n - 1) % n];
}

struct FaceData {
  std::vector<std::vector<Dart>> faces;
  std::vector<int> face_of;  // by dart key
};

/// Faces as dart cycles; requires a consistent rotation.
inline FaceData faces(const LmfGraph& g) {
  const auto idx = detail::RotationIndex::build(g);
  if (!idx) throw DomainError("faces: rotation system is inconsistent");
  FaceData out;
  out.face_of.assign(2 * g.edges.size(), -1);
  for (int key = 0; key < static_cast<int>(2 * g.edges.size()); ++key) {
    if (out.face_of[key] != -1) continue;
    const int id = static_cast<int>(out.faces.size());
    std::vector<Dart> cycle;
    Dart d{key / 2, key % 2 == 0};
    while (out.face_of[d.key()] == -1) {
      out.face_of[d.key()] = id;
      cycle.push_back(d);
      d = face_next(g, idx->pos, d);
    }
    out.faces.push_back(std::move(cycle));
  }
  return out;
}

/// Smallest dart of the face containing d.
inline Dart canonical_face_dart(const LmfGraph& g, const Dart& d) {
  const FaceData f = faces(g);
  const auto& cycle = f.faces[f.face_of[d.key()]];
  return *std::min_element(cycle.begin(), cycle.end());
}

/// Connected components: component id per vertex.
inline std::vector<int> components(const LmfGraph& g, int* count = nullptr) {
  std::vector<int> parent(g.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& e : g.edges) {
    if (e.src >= 0 && e.dst >= 0 && e.src < static_cast<int>(g.vertices.size()) &&
        e.dst < static_cast<int>(g.vertices.size())) {
      parent[find(e.src)] = find(e.dst);
    }
  }
  std::map<int, int> ids;
  std::vector<int> comp(g.vertices.size());
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const int r = find(static_cast<int>(v));
    auto it = ids.find(r);
    if (it == ids.end()) it = ids.emplace(r, static_cast<int>(ids.size())).first;
    comp[v] = it->second;
  }
  if (count) *count = static_cast<int>(ids.size());
  return comp;
}

// ---------------------------------------------------------------------------
// Validation.

inline std::vector<std::string> validate(const LmfGraph& g) {
  std::vector<std::string> out;
  const int V = static_cast<int>(g.vertices.size());
  for (int v = 0; v < V; ++v) {
    if (g.vertices[v].id != v) out.push_back("vertex " + std::to_string(v) + ": id out of sequence");
  }
  bool endpoints_ok = true;
  for (std::size_t j = 0; j < g.edges.size(); ++j) {
    const LmfEdge& e = g.edges[j];
    const std::string tag = "edge " + std::to_string(j);
    if (e.id != static_cast<int>(j)) out.push_back(tag + ": id out of sequence");
    if (e.src < 0 || e.src >= V || e.dst < 0 || e.dst >= V) {
      out.push_back(tag + ": endpoint out of range");
      endpoints_ok = false;
    }
  }
  if (!endpoints_ok) return out;

  auto label = [&](int v) { return g.vertices[v].label; };
  for (const LmfEdge& e : g.edges) {
    const std::string tag = "edge " + std::to_string(e.id) + " (" + to_string(e.label) + ")";
    switch (e.label) {
      case EdgeLabel::LC:
        if (label(e.src) != VertexLabel::VLC || label(e.dst) != VertexLabel::VLC) {
          out.push_back(tag + ": LC endpoint not VLC");
        } else if (e.src != e.dst) {
          out.push_back(tag + ": LC edge must be a loop at its VLC vertex");
        }
        break;
      case EdgeLabel::STS:
        if (label(e.src) != VertexLabel::TV || label(e.dst) != VertexLabel::Saddle) {
          out.push_back(tag + ": STS must run from a TV to a saddle");
        }
        break;
      case EdgeLabel::UTS:
        if (label(e.src) != VertexLabel::Saddle || label(e.dst) != VertexLabel::TV) {
          out.push_back(tag + ": UTS must run from a saddle to a TV");
        }
        break;
      case EdgeLabel::SS:
        if (label(e.dst) != VertexLabel::Saddle || label(e.src) != VertexLabel::Source) {
          out.push_back(tag + ": SS must run from a source to a saddle");
        }
        break;
      case EdgeLabel::US:
        if (label(e.src) != VertexLabel::Saddle || label(e.dst) != VertexLabel::Sink) {
          out.push_back(tag + ": US must run from a saddle to a sink");
        }
        break;
      case EdgeLabel::SC:
        if (label(e.src) != VertexLabel::Saddle || label(e.dst) != VertexLabel::Saddle) {
          out.push_back(tag + ": SC must join two saddles");
        } else if (e.src == e.dst) {
          out.push_back(tag + ": SC joins a saddle to itself");
        }
        break;
      case EdgeLabel::OTL:
      case EdgeLabel::ITL: {
        auto ok = [&](int v) { return label(v) == VertexLabel::TV || label(v) == VertexLabel::VETL; };
        if (!ok(e.src) || !ok(e.dst)) out.push_back(tag + ": loop edge endpoint not TV/VETL");
        break;
      }
    }
  }

  const auto idx = detail::RotationIndex::build(g);
  if (!idx) {
    out.push_back("rotation system does not list every dart exactly once at its vertex");
    return out;
  }

  for (int v = 0; v < V; ++v) {
    const auto& rot = g.rotation[v];
    const std::string tag = "vertex " + std::to_string(v) + " (" + to_string(label(v)) + ")";
    std::vector<Dart> loop_out, loop_in, seps, lcs;
    for (const Dart& d : rot) {
      const EdgeLabel l = g.edges[d.edge].label;
      if (is_loop_label(l)) {
        (d.plus ? loop_out : loop_in).push_back(d);
      } else if (l == EdgeLabel::LC) {
        lcs.push_back(d);
      } else {
        seps.push_back(d);
      }
    }
    switch (label(v)) {
      case VertexLabel::Sink:
        for (const Dart& d : rot) {
          if (d.plus) out.push_back(tag + ": edge " + std::to_string(d.edge) + " leaves a sink");
        }
        break;
      case VertexLabel::Source:
        for (const Dart& d : rot) {
          if (!d.plus) out.push_back(tag + ": edge " + std::to_string(d.edge) + " enters a source");
        }
        break;
      case VertexLabel::Saddle:
        if (rot.empty()) out.push_back(tag + ": isolated saddle");
        break;
      case VertexLabel::VLC:
        if (rot.size() != 2 || lcs.size() != 2) out.push_back(tag + ": VLC must carry exactly one LC loop");
        break;
      case VertexLabel::VETL:
        if (rot.size() != 2 || loop_out.size() != 1 || loop_in.size() != 1) {
          out.push_back(tag + ": VETL must carry exactly one transversal loop passage");
        }
        break;
      case VertexLabel::TV:
        if (loop_out.size() != 1 || loop_in.size() != 1 || seps.size() != 1 || rot.size() != 3) {
          out.push_back(tag + ": TV must join one loop passage and one truncated separatrix");
        } else {
          const int n = 3;
          const int o = idx->pos[loop_out[0].key()];
          if (!(rot[(o + 1) % n] == loop_in[0])) {
            out.push_back(tag + ": transversal loop is not counterclockwise around its limit set");
          }
          const EdgeLabel sl = g.edges[seps[0].edge].label;
          if (sl != EdgeLabel::STS && sl != EdgeLabel::UTS) out.push_back(tag + ": TV separatrix is not truncated");
        }
        break;
    }
  }

  // Euler characteristic per component.
  int C = 0;
  const std::vector<int> comp = components(g, &C);
  const FaceData fd = faces(g);
  std::vector<int> nv(C, 0), ne(C, 0), nf(C, 0);
  for (int v = 0; v < V; ++v) ++nv[comp[v]];
  for (const auto& e : g.edges) ++ne[comp[e.src]];
  for (const auto& f : fd.faces) ++nf[comp[g.vertex_of(f.front())]];
  for (int c = 0; c < C; ++c) {
    const int faces_c = ne[c] == 0 ? 1 : nf[c];
    if (nv[c] - ne[c] + faces_c != 2) {
      out.push_back("component " + std::to_string(c) + ": V - E + F = " + std::to_string(nv[c] - ne[c] + faces_c) +
                    ", not a sphere embedding");
    }
  }

  // Nesting tree.
  if (C > 1 && g.nesting.size() != static_cast<std::size_t>(C - 1)) {
    out.push_back("nesting incomplete: " + std::to_string(g.nesting.size()) + " entries for " + std::to_string(C) +
                  " components");
  }
  if (C <= 1 && !g.nesting.empty()) out.push_back("nesting given for a connected graph");
  std::vector<int> parent(C, -1);
  for (const Nesting& n : g.nesting) {
    const int E = static_cast<int>(g.edges.size());
    if (n.child_face.edge >= E || n.parent_face.edge >= E || n.child_face.edge < 0 || n.parent_face.edge < 0) {
      out.push_back("nesting refers to a missing edge");
      continue;
    }
    const int child = comp[g.vertex_of(n.child_face)];
    const int par = comp[g.vertex_of(n.parent_face)];
    if (child == par) {
      out.push_back("nesting entry joins a component to itself");
      continue;
    }
    if (parent[child] != -1) {
      out.push_back("component " + std::to_string(child) + " nested twice");
      continue;
    }
    parent[child] = par;
  }
  for (int c = 0; c < C; ++c) {
    int x = c;
    for (int steps = 0; x != -1 && steps <= C; ++steps) x = parent[x];
    if (x != -1) {
      out.push_back("nesting contains a cycle");
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nesting relation.

namespace detail {

/// contain[c][d]: a dart of the face of component c that contains component d
/// (c != d), derived from the nesting tree; the tree lists tightest containers.
inline std::vector<std::vector<std::optional<Dart>>> containment(const LmfGraph& g, const std::vector<int>& comp,
                                                                 int C) {
  std::vector<int> parent(C, -1);
  std::vector<std::optional<Nesting>> entry(C);
  for (const Nesting& n : g.nesting) {
    const int child = comp[g.vertex_of(n.child_face)];
    parent[child] = comp[g.vertex_of(n.parent_face)];
    entry[child] = n;
  }
  std::vector<std::vector<std::optional<Dart>>> contain(C, std::vector<std::optional<Dart>>(C));
  for (int d = 0; d < C; ++d) {
    // ancestors of d, nearest first
    std::vector<int> chain{d};
    while (parent[chain.back()] != -1 && static_cast<int>(chain.size()) <= C) chain.push_back(parent[chain.back()]);
    for (int c = 0; c < C; ++c) {
      if (c == d) continue;
      auto it = std::find(chain.begin(), chain.end(), c);
      if (it != chain.end()) {
        const int below = *std::prev(it);  // child of c on the way to d
        if (entry[below]) contain[c][d] = entry[below]->parent_face;
      } else if (entry[c]) {
        contain[c][d] = entry[c]->child_face;
      }
    }
  }
  return contain;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Isotopy.

struct Isomorphism {
  std::vector<int> vertex_map;  // g1 vertex -> g2 vertex
  std::vector<int> edge_map;    // g1 edge -> g2 edge
};

namespace detail {

struct DartMap {
  std::vector<int> dart;    // by g1 dart key -> g2 dart key, -1 unset
  std::vector<int> vertex;  // -1 unset
};

/// Extends a single dart correspondence through rotations and twins.
inline bool propagate(const LmfGraph& g1, const LmfGraph& g2, const RotationIndex& i1, const RotationIndex& i2,
                      Dart start1, Dart start2, DartMap& m) {
  std::vector<std::pair<Dart, Dart>> stack{{start1, start2}};
  auto assign = [&](const Dart& a, const Dart& b) {
    if (g1.edges[a.edge].label != g2.edges[b.edge].label || a.plus != b.plus) return false;
    int& slot = m.dart[a.key()];
    if (slot == -1) {
      slot = b.key();
      stack.emplace_back(a, b);
      return true;
    }
    return slot == b.key();
  };
  if (!assign(start1, start2)) return false;
  stack.erase(stack.begin());
  stack.emplace_back(start1, start2);
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    const int va = g1.vertex_of(a);
    const int vb = g2.vertex_of(b);
    if (g1.vertices[va].label != g2.vertices[vb].label) return false;
    if (m.vertex[va] == -1) {
      m.vertex[va] = vb;
    } else if (m.vertex[va] != vb) {
      return false;
    }
    const auto& ra = g1.rotation[va];
    const auto& rb = g2.rotation[vb];
    if (ra.size() != rb.size()) return false;
    const int n = static_cast<int>(ra.size());
    const int pa = i1.pos[a.key()];
    const int pb = i2.pos[b.key()];
    for (int t = 1; t < n; ++t) {
      if (!assign(ra[(pa + t) % n], rb[(pb + t) % n])) return false;
    }
    if (!assign(a.twin(), b.twin())) return false;
  }
  return true;
}

}  // namespace detail

/// Label-, orientation-, rotation- and nesting-preserving isomorphism, if any.
inline std::optional<Isomorphism> isotopic(const LmfGraph& g1, const LmfGraph& g2) {
  if (g1.vertices.size() != g2.vertices.size() || g1.edges.size() != g2.edges.size()) return std::nullopt;
  const auto i1 = detail::RotationIndex::build(g1);
  const auto i2 = detail::RotationIndex::build(g2);
  if (!i1 || !i2) return std::nullopt;
  int C1 = 0, C2 = 0;
  const auto comp1 = components(g1, &C1);
  const auto comp2 = components(g2, &C2);
  if (C1 != C2) return std::nullopt;

  // Candidate maps for every component pair.
  std::vector<std::vector<int>> verts1(C1), verts2(C2);
  for (std::size_t v = 0; v < comp1.size(); ++v) verts1[comp1[v]].push_back(static_cast<int>(v));
  for (std::size_t v = 0; v < comp2.size(); ++v) verts2[comp2[v]].push_back(static_cast<int>(v));
  const std::size_t D = 2 * g1.edges.size();
  std::vector<std::vector<std::vector<detail::DartMap>>> cand(C1, std::vector<std::vector<detail::DartMap>>(C2));
  for (int c = 0; c < C1; ++c) {
    const int root = verts1[c].front();
    for (int d = 0; d < C2; ++d) {
      if (verts1[c].size() != verts2[d].size()) continue;
      if (g1.rotation[root].empty()) {
        const int other = verts2[d].front();
        if (verts2[d].size() == 1 && g2.rotation[other].empty() &&
            g1.vertices[root].label == g2.vertices[other].label) {
          detail::DartMap m{std::vector<int>(D, -1), std::vector<int>(g1.vertices.size(), -1)};
          m.vertex[root] = other;
          cand[c][d].push_back(std::move(m));
        }
        continue;
      }
      const Dart s1 = g1.rotation[root].front();
      for (int v2 : verts2[d]) {
        for (const Dart& s2 : g2.rotation[v2]) {
          detail::DartMap m{std::vector<int>(D, -1), std::vector<int>(g1.vertices.size(), -1)};
          if (!detail::propagate(g1, g2, *i1, *i2, s1, s2, m)) continue;
          std::size_t mapped = 0;
          for (int v : verts1[c]) mapped += m.vertex[v] != -1;
          if (mapped == verts1[c].size()) cand[c][d].push_back(std::move(m));
        }
      }
    }
  }

  const FaceData f1 = faces(g1);
  const FaceData f2 = faces(g2);
  const auto contain1 = detail::containment(g1, comp1, C1);
  const auto contain2 = detail::containment(g2, comp2, C2);

  std::vector<int> comp_map(C1, -1);
  std::vector<const detail::DartMap*> chosen(C1, nullptr);
  std::vector<bool> used(C2, false);

  auto nesting_ok = [&]() {
    for (int c = 0; c < C1; ++c) {
      for (int d = 0; d < C1; ++d) {
        if (c == d) continue;
        const auto& a = contain1[c][d];
        const auto& b = contain2[comp_map[c]][comp_map[d]];
        if (a.has_value() != b.has_value()) return false;
        if (!a) continue;
        const int key = chosen[c]->dart[a->key()];
        if (key < 0) return false;
        if (f2.face_of[key] != f2.face_of[b->key()]) return false;
      }
    }
    return true;
  };

  std::function<bool(int)> assign = [&](int c) -> bool {
    if (c == C1) return nesting_ok();
    for (int d = 0; d < C2; ++d) {
      if (used[d]) continue;
      for (const auto& m : cand[c][d]) {
        used[d] = true;
        comp_map[c] = d;
        chosen[c] = &m;
        if (assign(c + 1)) return true;
        used[d] = false;
      }
    }
    comp_map[c] = -1;
    return false;
  };
  if (!assign(0)) return std::nullopt;
  (void)f1;

  Isomorphism iso;
  iso.vertex_map.assign(g1.vertices.size(), -1);
  iso.edge_map.assign(g1.edges.size(), -1);
  for (int c = 0; c < C1; ++c) {
    for (int v : verts1[c]) iso.vertex_map[v] = chosen[c]->vertex[v];
    for (std::size_t e = 0; e < g1.edges.size(); ++e) {
      const int k = chosen[c]->dart[2 * e];
      if (k >= 0) iso.edge_map[e] = k / 2;
    }
  }
  return iso;
}

// ---------------------------------------------------------------------------
// Construction helpers.

/// Builds graphs by vertex and edge names; darts are written "name+" / "name-".
class GraphBuilder {
 public:
  int vertex(VertexLabel label, const std::string& name) {
    const int id = static_cast<int>(g_.vertices.size());
    g_.vertices.push_back({id, label, name});
    g_.rotation.emplace_back();
    return id;
  }

  int edge(const std::string& src, const std::string& dst, EdgeLabel label, const std::string& name) {
    const int id = static_cast<int>(g_.edges.size());
    g_.edges.push_back({id, vid(src), vid(dst), label, name});
    return id;
  }

  void rotate(const std::string& vertex, const std::vector<std::string>& darts) {
    auto& rot = g_.rotation[vid(vertex)];
    rot.clear();
    for (const auto& d : darts) rot.push_back(dart(d));
  }

  void nest(const std::string& child_face, const std::string& parent_face) {
    g_.nesting.push_back({dart(child_face), dart(parent_face)});
  }

  /// The graph with nesting tokens replaced by canonical face darts.
  LmfGraph build() const {
    LmfGraph g = g_;
    if (!g.nesting.empty()) {
      const FaceData f = faces(g);
      auto canon = [&](const Dart& d) {
        const auto& cyc = f.faces[f.face_of[d.key()]];
        return *std::min_element(cyc.begin(), cyc.end());
      };
      for (auto& n : g.nesting) n = {canon(n.child_face), canon(n.parent_face)};
    }
    return g;
  }

 private:
  int vid(const std::string& name) const {
    if (auto v = g_.vertex_named(name)) return *v;
    throw DomainError("graph builder: unknown vertex '" + name + "'");
  }

  Dart dart(const std::string& token) const {
    if (token.size() < 2) throw DomainError("graph builder: malformed dart '" + token + "'");
    const auto e = g_.edge_named(token.substr(0, token.size() - 1));
    if (!e) throw DomainError("graph builder: unknown edge in '" + token + "'");
    return {*e, token.back() == '+'};
  }

  LmfGraph g_;
};

namespace detail {

inline void add_core_vertices(GraphBuilder& b) {
  b.vertex(VertexLabel::Saddle, "L");
  b.vertex(VertexLabel::Saddle, "I");
  b.vertex(VertexLabel::Saddle, "E");
  b.vertex(VertexLabel::Sink, "a");
  b.vertex(VertexLabel::Source, "r");
  b.vertex(VertexLabel::Source, "r_in");
  b.vertex(VertexLabel::Sink, "a_out");
}

inline LmfGraph negative_template() {
  GraphBuilder b;
  add_core_vertices(b);
  b.vertex(VertexLabel::VLC, "C_in");
  b.vertex(VertexLabel::VLC, "C_out");
  b.vertex(VertexLabel::TV, "T_I");    // on the loop around C_in, cut by the stable separatrix of I
  b.vertex(VertexLabel::TV, "T_Ls");   // around C_in, stable separatrix of L
  b.vertex(VertexLabel::TV, "T_Lu");   // around C_out, unstable separatrix of L
  b.vertex(VertexLabel::TV, "T_E");    // around C_out, unstable separatrix of E
  b.edge("L", "T_Lu", EdgeLabel::UTS, "uL");
  b.edge("T_Ls", "L", EdgeLabel::STS, "sL");
  b.edge("I", "a", EdgeLabel::US, "uI1");
  b.edge("I", "a", EdgeLabel::US, "uI2");
  b.edge("T_I", "I", EdgeLabel::STS, "sI");
  b.edge("r_in", "I", EdgeLabel::SS, "sI2");
  b.edge("E", "T_E", EdgeLabel::UTS, "uE");
  b.edge("E", "a_out", EdgeLabel::US, "uE2");
  b.edge("r", "E", EdgeLabel::SS, "sE1");
  b.edge("r", "E", EdgeLabel::SS, "sE2");
  b.edge("C_in", "C_in", EdgeLabel::LC, "cyc_in");
  b.edge("C_out", "C_out", EdgeLabel::LC, "cyc_out");
  b.edge("T_I", "T_I", EdgeLabel::OTL, "loop_I");
  b.edge("T_Ls", "T_Ls", EdgeLabel::OTL, "loop_Ls");
  b.edge("T_Lu", "T_Lu", EdgeLabel::ITL, "loop_Lu");
  b.edge("T_E", "T_E", EdgeLabel::ITL, "loop_E");
  b.rotate("T_I", {"loop_I+", "loop_I-", "sI+"});
  b.rotate("T_Ls", {"loop_Ls+", "loop_Ls-", "sL+"});
  b.rotate("T_Lu", {"loop_Lu+", "loop_Lu-", "uL-"});
  b.rotate("T_E", {"loop_E+", "loop_E-", "uE-"});
  b.rotate("C_in", {"cyc_in+", "cyc_in-"});
  b.rotate("C_out", {"cyc_out+", "cyc_out-"});
  b.rotate("L", {"uL+", "sL-"});
  b.rotate("I", {"uI1+", "sI-", "uI2+", "sI2-"});
  b.rotate("E", {"uE+", "sE1-", "uE2+", "sE2-"});
  b.rotate("a", {"uI1-", "uI2-"});
  b.rotate("r", {"sE2+", "sE1+"});
  b.rotate("r_in", {"sI2+"});
  b.rotate("a_out", {"uE2-"});
  // E's component is the root; the rest form a chain of nested annuli.
  b.nest("cyc_out-", "loop_E+");
  b.nest("loop_Lu+", "cyc_out+");
  b.nest("cyc_in-", "loop_Ls+");
  b.nest("loop_I+", "cyc_in+");
  return b.build();
}

inline LmfGraph generic_template() {
  GraphBuilder b;
  add_core_vertices(b);
  b.edge("L", "a", EdgeLabel::US, "uL");
  b.edge("r", "L", EdgeLabel::SS, "sL");
  b.edge("I", "a", EdgeLabel::US, "uI1");
  b.edge("I", "a", EdgeLabel::US, "uI2");
  b.edge("r", "I", EdgeLabel::SS, "sI");
  b.edge("r_in", "I", EdgeLabel::SS, "sI2");
  b.edge("E", "a", EdgeLabel::US, "uE");
  b.edge("E", "a_out", EdgeLabel::US, "uE2");
  b.edge("r", "E", EdgeLabel::SS, "sE1");
  b.edge("r", "E", EdgeLabel::SS, "sE2");
  b.rotate("L", {"uL+", "sL-"});
  b.rotate("I", {"uI1+", "sI-", "uI2+", "sI2-"});
  b.rotate("E", {"uE+", "sE1-", "uE2+", "sE2-"});
  b.rotate("a", {"uI1-", "uI2-", "uL-", "uE-"});
  b.rotate("a_out", {"uE2-"});
  b.rotate("r", {"sI+", "sE2+", "sE1+", "sL+"});
  b.rotate("r_in", {"sI2+"});
  return b.build();
}

/// Connection templates are written out independently of surgery.
inline LmfGraph connection_template(bif::Mark m) {
  GraphBuilder b;
  add_core_vertices(b);
  switch (m) {
    case bif::Mark::LE:
      b.edge("E", "L", EdgeLabel::SC, "sc");
      b.edge("L", "a", EdgeLabel::US, "uL");
      b.edge("I", "a", EdgeLabel::US, "uI1");
      b.edge("I", "a", EdgeLabel::US, "uI2");
      b.edge("r", "I", EdgeLabel::SS, "sI");
      b.edge("r_in", "I", EdgeLabel::SS, "sI2");
      b.edge("E", "a_out", EdgeLabel::US, "uE2");
      b.edge("r", "E", EdgeLabel::SS, "sE1");
      b.edge("r", "E", EdgeLabel::SS, "sE2");
      b.rotate("L", {"uL+", "sc-"});
      b.rotate("I", {"uI1+", "sI-", "uI2+", "sI2-"});
      b.rotate("E", {"sc+", "sE1-", "uE2+", "sE2-"});
      b.rotate("a", {"uI1-", "uI2-", "uL-"});
      b.rotate("r", {"sI+", "sE2+", "sE1+"});
      break;
    case bif::Mark::LI:
      b.edge("L", "I", EdgeLabel::SC, "sc");
      b.edge("r", "L", EdgeLabel::SS, "sL");
      b.edge("I", "a", EdgeLabel::US, "uI1");
      b.edge("I", "a", EdgeLabel::US, "uI2");
      b.edge("r_in", "I", EdgeLabel::SS, "sI2");
      b.edge("E", "a", EdgeLabel::US, "uE");
      b.edge("E", "a_out", EdgeLabel::US, "uE2");
      b.edge("r", "E", EdgeLabel::SS, "sE1");
      b.edge("r", "E", EdgeLabel::SS, "sE2");
      b.rotate("L", {"sc+", "sL-"});
      b.rotate("I", {"uI1+", "sc-", "uI2+", "sI2-"});
      b.rotate("E", {"uE+", "sE1-", "uE2+", "sE2-"});
      b.rotate("a", {"uI1-", "uI2-", "uE-"});
      b.rotate("r", {"sE2+", "sE1+", "sL+"});
      break;
    case bif::Mark::EI:
      b.edge("E", "I", EdgeLabel::SC, "sc");
      b.edge("L", "a", EdgeLabel::US, "uL");
      b.edge("r", "L", EdgeLabel::SS, "sL");
      b.edge("I", "a", EdgeLabel::US, "uI1");
      b.edge("I", "a", EdgeLabel::US, "uI2");
      b.edge("r_in", "I", EdgeLabel::SS, "sI2");
      b.edge("E", "a_out", EdgeLabel::US, "uE2");
      b.edge("r", "E", EdgeLabel::SS, "sE1");
      b.edge("r", "E", EdgeLabel::SS, "sE2");
      b.rotate("L", {"uL+", "sL-"});
      b.rotate("I", {"uI1+", "sc-", "uI2+", "sI2-"});
      b.rotate("E", {"sc+", "sE1-", "uE2+", "sE2-"});
      b.rotate("a", {"uI1-", "uI2-", "uL-"});
      b.rotate("r", {"sE2+", "sE1+", "sL+"});
      break;
  }
  b.rotate("a_out", {"uE2-"});
  b.rotate("r_in", {"sI2+"});
  return b.build();
}

}  // namespace detail

inline LmfGraph make_template(Regime r) {
  switch (r) {
    case Regime::NegEps: return detail::negative_template();
    case Regime::PosEpsGeneric: return detail::generic_template();
    case Regime::PosEpsLE: return detail::connection_template(bif::Mark::LE);
    case Regime::PosEpsLI: return detail::connection_template(bif::Mark::LI);
    case Regime::PosEpsEI: return detail::connection_template(bif::Mark::EI);
  }
  throw DomainError("template: unknown regime");
}

inline Regime regime_of(bif::Mark m) {
  switch (m) {
    case bif::Mark::LE: return Regime::PosEpsLE;
    case bif::Mark::LI: return Regime::PosEpsLI;
    case bif::Mark::EI: return Regime::PosEpsEI;
  }
  throw DomainError("regime_of: unknown mark");
}

// ---------------------------------------------------------------------------
// Surgery.

/// Drops the listed edges and renumbers the rest; nesting darts follow.
inline LmfGraph remove_edges(const LmfGraph& g, const std::set<int>& drop) {
  std::vector<int> remap(g.edges.size(), -1);
  LmfGraph out;
  out.vertices = g.vertices;
  for (const auto& e : g.edges) {
    if (drop.count(e.id)) continue;
    remap[e.id] = static_cast<int>(out.edges.size());
    LmfEdge copy = e;
    copy.id = remap[e.id];
    out.edges.push_back(copy);
  }
  out.rotation.resize(g.rotation.size());
  for (std::size_t v = 0; v < g.rotation.size(); ++v) {
    for (const Dart& d : g.rotation[v]) {
      if (remap[d.edge] >= 0) out.rotation[v].push_back({remap[d.edge], d.plus});
    }
  }
  for (const auto& n : g.nesting) {
    if (remap[n.child_face.edge] < 0 || remap[n.parent_face.edge] < 0) {
      throw DomainError("remove_edges: a nesting face is named by a removed edge");
    }
    out.nesting.push_back({{remap[n.child_face.edge], n.child_face.plus}, {remap[n.parent_face.edge], n.parent_face.plus}});
  }
  return out;
}

/// Replaces the unstable separatrix of the source saddle and the stable
/// separatrix of the target saddle by one saddle connection.
inline LmfGraph surgery(const LmfGraph& g, bif::Mark connection) {
  if (g.count_edges(EdgeLabel::SC) > 0) {
    throw DomainError("surgery: the graph already carries a saddle connection; one connection at a time");
  }
  std::string unstable;
  std::string stable;
  switch (connection) {
    case bif::Mark::LE: unstable = "uE"; stable = "sL"; break;
    case bif::Mark::LI: unstable = "uL"; stable = "sI"; break;
    case bif::Mark::EI: unstable = "uE"; stable = "sI"; break;
  }
  const auto u = g.edge_named(unstable);
  const auto s = g.edge_named(stable);
  if (!u || !s) throw DomainError("surgery: separatrix '" + (u ? stable : unstable) + "' not present");

  LmfGraph h = g;
  const int from = h.edges[*u].src;
  const int to = h.edges[*s].dst;
  const int sc = static_cast<int>(h.edges.size());
  h.edges.push_back({sc, from, to, EdgeLabel::SC, "sc"});
  for (Dart& d : h.rotation[from]) {
    if (d == Dart{*u, true}) d = {sc, true};
  }
  for (Dart& d : h.rotation[to]) {
    if (d == Dart{*s, false}) d = {sc, false};
  }
  for (const Dart& gone : {Dart{*u, false}, Dart{*s, true}}) {
    const int v = h.vertex_of(gone);
    auto& rot = h.rotation[v];
    rot.erase(std::remove(rot.begin(), rot.end(), gone), rot.end());
    if (h.vertices[v].label == VertexLabel::TV) h.vertices[v].label = VertexLabel::VETL;
  }
  return remove_edges(h, {*u, *s});
}

// ---------------------------------------------------------------------------
// Mirror image.

/// Reversed rotations. Transversal loops are re-oriented so they stay
/// counterclockwise; nesting faces follow to the opposite side of each dart.
inline LmfGraph mirror(const LmfGraph& g) {
  LmfGraph m = g;
  auto rename = [&](Dart d) {
    if (is_loop_label(g.edges[d.edge].label)) d.plus = !d.plus;
    return d;
  };
  for (auto& e : m.edges) {
    if (is_loop_label(e.label)) std::swap(e.src, e.dst);
  }
  for (auto& rot : m.rotation) {
    std::reverse(rot.begin(), rot.end());
    for (Dart& d : rot) d = rename(d);
  }
  if (!m.nesting.empty()) {
    const FaceData f = faces(m);
    auto canon = [&](const Dart& d) {
      const auto& cyc = f.faces[f.face_of[rename(d).twin().key()]];
      return *std::min_element(cyc.begin(), cyc.end());
    };
    for (auto& n : m.nesting) n = {canon(n.child_face), canon(n.parent_face)};
  }
  return m;
}

// ---------------------------------------------------------------------------
// Relabelling.

/// Same embedded graph under fresh vertex and edge ids, with every rotation
/// started at a different dart and names cleared.
inline LmfGraph shuffled(const LmfGraph& g, std::mt19937_64& rng) {
  std::vector<int> vp(g.vertices.size()), ep(g.edges.size());
  std::iota(vp.begin(), vp.end(), 0);
  std::iota(ep.begin(), ep.end(), 0);
  std::shuffle(vp.begin(), vp.end(), rng);
  std::shuffle(ep.begin(), ep.end(), rng);
  LmfGraph out;
  out.vertices.resize(g.vertices.size());
  out.edges.resize(g.edges.size());
  out.rotation.resize(g.vertices.size());
  for (const auto& v : g.vertices) out.vertices[vp[v.id]] = {vp[v.id], v.label, ""};
  for (const auto& e : g.edges) out.edges[ep[e.id]] = {ep[e.id], vp[e.src], vp[e.dst], e.label, ""};
  for (std::size_t v = 0; v < g.rotation.size(); ++v) {
    std::vector<Dart> rot;
    for (const Dart& d : g.rotation[v]) rot.push_back({ep[d.edge], d.plus});
    if (!rot.empty()) {
      std::uniform_int_distribution<std::size_t> shift(0, rot.size() - 1);
      std::rotate(rot.begin(), rot.begin() + static_cast<std::ptrdiff_t>(shift(rng)), rot.end());
    }
    out.rotation[vp[v]] = std::move(rot);
  }
  const FaceData f = out.edges.empty() ? FaceData{} : faces(out);
  auto canon = [&](const Dart& d) {
    const auto& cyc = f.faces[f.face_of[d.key()]];
    return *std::min_element(cyc.begin(), cyc.end());
  };
  for (const auto& n : g.nesting) {
    out.nesting.push_back({canon({ep[n.child_face.edge], n.child_face.plus}),
                           canon({ep[n.parent_face.edge], n.parent_face.plus})});
  }
  std::shuffle(out.nesting.begin(), out.nesting.end(), rng);
  return out;
}

// ---------------------------------------------------------------------------
// Text format.
//
//   V <id> <label> [name]
//   E <id> <src> <dst> <label> [name]
//   R <vertex> <dart> ...
//   N <child-face-dart> <parent-face-dart>
//
// '#' starts a comment line.

inline std::string serialize(const LmfGraph& g) {
  std::ostringstream os;
  for (const auto& v : g.vertices) {
    os << "V " << v.id << ' ' << to_string(v.label);
    if (!v.name.empty()) os << ' ' << v.name;
    os << '\n';
  }
  for (const auto& e : g.edges) {
    os << "E " << e.id << ' ' << e.src << ' ' << e.dst << ' ' << to_string(e.label);
    if (!e.name.empty()) os << ' ' << e.name;
    os << '\n';
  }
  for (std::size_t v = 0; v < g.rotation.size(); ++v) {
    os << "R " << v;
    for (const Dart& d : g.rotation[v]) os << ' ' << d.to_string();
    os << '\n';
  }
  for (const auto& n : g.nesting) os << "N " << n.child_face.to_string() << ' ' << n.parent_face.to_string() << '\n';
  return os.str();
}

inline LmfGraph parse_graph(const std::string& text) {
  LmfGraph g;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError("lmf line " + std::to_string(lineno) + ": " + why);
  };
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int x = std::stoi(s, &used);
      if (used != s.size()) fail("expected an integer, got '" + s + "'");
      return x;
    } catch (const std::logic_error&) {
      fail("expected an integer, got '" + s + "'");
    }
    return 0;
  };
  std::vector<std::pair<int, std::vector<Dart>>> rotations;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "V") {
      if (tok.size() < 3 || tok.size() > 4) fail("V needs: id label [name]");
      const int id = to_int(tok[1]);
      if (id != static_cast<int>(g.vertices.size())) fail("vertex ids must be consecutive from 0");
      g.vertices.push_back({id, parse_vertex_label(tok[2]), tok.size() == 4 ? tok[3] : ""});
    } else if (tok[0] == "E") {
      if (tok.size() < 5 || tok.size() > 6) fail("E needs: id src dst label [name]");
      const int id = to_int(tok[1]);
      if (id != static_cast<int>(g.edges.size())) fail("edge ids must be consecutive from 0");
      g.edges.push_back({id, to_int(tok[2]), to_int(tok[3]), parse_edge_label(tok[4]), tok.size() == 6 ? tok[5] : ""});
    } else if (tok[0] == "R") {
      if (tok.size() < 2) fail("R needs a vertex");
      std::vector<Dart> darts;
      for (std::size_t j = 2; j < tok.size(); ++j) darts.push_back(Dart::parse(tok[j]));
      rotations.emplace_back(to_int(tok[1]), std::move(darts));
    } else if (tok[0] == "N") {
      if (tok.size() != 3) fail("N needs: child-face parent-face");
      g.nesting.push_back({Dart::parse(tok[1]), Dart::parse(tok[2])});
    } else {
      fail("unknown record '" + tok[0] + "'");
    }
  }
  g.rotation.assign(g.vertices.size(), {});
  for (auto& [v, darts] : rotations) {
    if (v < 0 || v >= static_cast<int>(g.vertices.size())) throw ConfigError("lmf: rotation for unknown vertex");
    g.rotation[v] = std::move(darts);
  }
  return g;
}

}  // namespace heartlab::lmf
