#pragma once

#include "isofem/mesh.hpp"

#include <iosfwd>

namespace isofem {

/// Writes a curved mesh as JSON with keys version, k, vertices, triangles,
/// geom_nodes (per triangle), boundary_node_flags (per global node), plus
/// nodes, node_map and curved_elements so the global numbering survives.
void write_mesh_json(const CurvedMesh& mesh, std::ostream& out);

/// Inverse of write_mesh_json. Throws IoError on malformed input.
CurvedMesh read_mesh_json(std::istream& in);

}  // namespace isofem
