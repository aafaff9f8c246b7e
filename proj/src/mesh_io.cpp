#include "isofem/mesh_io.hpp"

#include "json.hpp"

#include <istream>
#include <ostream>

namespace isofem {

namespace {

constexpr int kMeshFormatVersion = 1;

void write_point(std::ostream& out, const Point& p) {
  out << '[' << format_g17(p.x()) << ',' << format_g17(p.y()) << ']';
}

template <typename Range, typename Fn>
void write_list(std::ostream& out, const Range& items, Fn&& fn) {
  out << '[';
  bool first = true;
  for (const auto& item : items) {
    if (!first) out << ',';
    first = false;
    fn(item);
  }
  out << ']';
}

std::vector<Index> index_range(Index n) {
  std::vector<Index> r(n);
  for (Index i = 0; i < n; ++i) r[i] = i;
  return r;
}

Point read_point(const nlohmann::json& j) { return Point(j.at(0).get<double>(), j.at(1).get<double>()); }

}  // namespace

void write_mesh_json(const CurvedMesh& mesh, std::ostream& out) {
  const auto& base = mesh.base();
  out << "{\"version\":" << kMeshFormatVersion << ",\"k\":" << mesh.degree()
      << ",\"target_h\":" << format_g17(base.target_h) << ",\n\"vertices\":";
  write_list(out, index_range(base.n_vertices()), [&](Index v) { write_point(out, base.vertex(v)); });
  out << ",\n\"triangles\":";
  write_list(out, base.triangles, [&](const Triangle& t) {
    out << '[' << t[0] << ',' << t[1] << ',' << t[2] << ']';
  });
  out << ",\n\"geom_nodes\":";
  write_list(out, index_range(mesh.n_elements()), [&](Index t) {
    write_list(out, mesh.element_nodes(t), [&](Index a) { write_point(out, mesh.node(a)); });
  });
  out << ",\n\"boundary_node_flags\":";
  write_list(out, mesh.boundary_flags(), [&](char f) { out << (f ? 1 : 0); });
  out << ",\n\"nodes\":";
  write_list(out, index_range(mesh.n_nodes()), [&](Index a) { write_point(out, mesh.node(a)); });
  out << ",\n\"node_map\":";
  write_list(out, index_range(mesh.n_elements()), [&](Index t) {
    write_list(out, mesh.element_nodes(t), [&](Index a) { out << a; });
  });
  out << ",\n\"curved_elements\":";
  write_list(out, index_range(mesh.n_elements()), [&](Index t) { out << (mesh.is_curved(t) ? 1 : 0); });
  out << "}\n";
}

CurvedMesh read_mesh_json(std::istream& in) {
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("version").get<int>() != kMeshFormatVersion) {
      throw Error(ErrorCode::IoError, "unsupported mesh format version");
    }
    const int k = j.at("k").get<int>();

    StraightTriangulation base;
    base.target_h = j.value("target_h", 0.0);
    const auto& verts = j.at("vertices");
    base.vertices.resize(kDim, static_cast<Index>(verts.size()));
    for (std::size_t v = 0; v < verts.size(); ++v) base.vertices.col(static_cast<Index>(v)) = read_point(verts[v]);
    for (const auto& t : j.at("triangles")) base.triangles.push_back({t.at(0).get<Index>(), t.at(1).get<Index>(), t.at(2).get<Index>()});

    const auto& nodes_json = j.at("nodes");
    PointSet nodes(kDim, static_cast<Index>(nodes_json.size()));
    for (std::size_t a = 0; a < nodes_json.size(); ++a) nodes.col(static_cast<Index>(a)) = read_point(nodes_json[a]);

    const int n_local = ReferenceElement<double>::size_for_degree(k);
    std::vector<Index> node_map;
    for (const auto& row : j.at("node_map")) {
      if (static_cast<int>(row.size()) != n_local) throw Error(ErrorCode::IoError, "node_map row has the wrong length");
      for (const auto& a : row) {
        const Index g = a.get<Index>();
        if (g < 0 || g >= nodes.cols()) throw Error(ErrorCode::IoError, "node_map entry out of range");
        node_map.push_back(g);
      }
    }
    if (node_map.size() != base.triangles.size() * n_local) throw Error(ErrorCode::IoError, "node_map size mismatch");

    // geom_nodes must agree with nodes[node_map]; reject inconsistent files.
    const auto& geom = j.at("geom_nodes");
    if (geom.size() != base.triangles.size()) throw Error(ErrorCode::IoError, "geom_nodes size mismatch");
    for (std::size_t t = 0; t < geom.size(); ++t) {
      for (int i = 0; i < n_local; ++i) {
        if (read_point(geom[t].at(i)) != Point(nodes.col(node_map[t * n_local + i]))) {
          throw Error(ErrorCode::IoError, "geom_nodes disagree with nodes/node_map");
        }
      }
    }

    std::vector<char> flags;
    for (const auto& f : j.at("boundary_node_flags")) flags.push_back(f.get<int>() ? 1 : 0);
    if (static_cast<Index>(flags.size()) != nodes.cols()) throw Error(ErrorCode::IoError, "boundary flag count mismatch");
    std::vector<char> curved;
    for (const auto& c : j.at("curved_elements")) curved.push_back(c.get<int>() ? 1 : 0);
    if (curved.size() != base.triangles.size()) throw Error(ErrorCode::IoError, "curved flag count mismatch");

    base.boundary_edges = find_boundary_edges(base.triangles);
    return CurvedMesh(std::move(base), k, std::move(nodes), std::move(node_map), std::move(flags), std::move(curved));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("mesh JSON: ") + e.what());
  }
}

}  // namespace isofem
