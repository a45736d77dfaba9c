#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "fscm/geometry.hpp"

namespace fscm {

enum class NodeTag : int { Interior = 0, OnAxis = 1, OnDirichlet = 2, OnAxisEnd = 3 };

/// Conforming P1 triangulation of the meridian polygon. Quasi-uniform by
/// construction: no grading toward corners.
struct TriMesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;  // CCW node triples
    std::vector<NodeTag> node_tags;
    std::vector<int> node_side;    // polygon side carrying the node, -1 if interior
    std::vector<int> node_vertex;  // polygon vertex index, -1 otherwise
    double h = 0.0;                // max circumscribed diameter
    double shape_reg = 0.0;        // min angle (radians) over all triangles

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double tri_area(int t) const;
    Vec2 centroid(int t) const;

    /// Index of the mesh node sitting on polygon vertex v.
    int node_of_polygon_vertex(int v) const;

    void write_text(std::ostream& os) const;
};

/// Quasi-uniform triangulation with mesh size <= 1.5 * target_h and minimum
/// angle >= 20 degrees; every polygon vertex is a mesh node. Throws on
/// generator failure.
TriMesh triangulate(const MeridianPolygon& poly, double target_h);

std::vector<TriMesh> refine_family(const MeridianPolygon& poly, const std::vector<double>& h_list);

/// Uniform-grid point location for cross-mesh evaluation.
class TriLocator {
  public:
    explicit TriLocator(const TriMesh& mesh);

    /// Containing triangle and barycentric coordinates; points slightly
    /// outside the mesh are clamped to the nearest triangle.
    struct Hit {
        int tri = -1;
        std::array<double, 3> bary{};
    };
    Hit locate(Vec2 p) const;

  private:
    const TriMesh& mesh_;
    double r0_, z0_, cell_;
    int nr_, nz_;
    std::vector<std::vector<int>> bins_;
};

}  // namespace fscm
