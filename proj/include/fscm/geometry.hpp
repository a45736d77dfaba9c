#pragma once

#include <optional>
#include <vector>

#include "fscm/types.hpp"

namespace fscm {

/// Generating polygon of the axisymmetric domain: one side lies on the
/// rotation axis r = 0 (gamma_a), the remaining sides form gamma_b.
/// Vertices are stored counter-clockwise.
struct MeridianPolygon {
    std::vector<Vec2> vertices;
    int axis_side = -1;  // side i runs from vertices[i] to vertices[(i+1) % n]
    double r_max = 0.0;

    int n() const { return static_cast<int>(vertices.size()); }
    Vec2 side_start(int i) const { return vertices[i]; }
    Vec2 side_end(int i) const { return vertices[(i + 1) % n()]; }
    double area() const;
    bool contains(Vec2 p) const;              // strict interior (boundary excluded)
    double boundary_distance(Vec2 p) const;   // distance to the nearest side

    /// Validates and normalizes an explicit CCW vertex list: simple polygon,
    /// r >= 0, exactly one side on the axis whose endpoints are the only
    /// vertices with r = 0.
    static MeridianPolygon from_vertices(std::vector<Vec2> verts);
};

enum class CornerKind { Regular, ReentrantEdge, ConicalVertex };

struct CornerInfo {
    Vec2 location;
    CornerKind kind = CornerKind::Regular;
    double interior_angle = 0.0;
    double alpha = 0.0;          // edge exponent pi / interior_angle
    double beta_aperture = 0.0;  // cone aperture pi/beta (angle gamma_b <-> axis)
    double nu = 0.0;             // conical exponent
    double a = 0.0;              // distance r(e) from edge corner to axis
    double phi0 = 0.0;           // polar angle of the corner's first side from +r
    bool sharp = false;          // cones: nu < 1/2
    double cone_axis_dz = 0.0;   // cones: +-1, z-direction of the axis into the domain
};

/// Classifies every polygon vertex. Off-axis corners with interior angle
/// in (pi, 2 pi) become reentrant edges; the two axis endpoints become
/// conical vertices; everything else is regular.
std::vector<CornerInfo> classify_corners(const MeridianPolygon& poly);

/// Local frame of a singular corner. For edges, phi is measured from the
/// corner's first side so that omega occupies phi in [0, interior_angle]
/// and phi' = phi + phi0 is the polar angle from the +r direction.
/// For cones, phi is the angle from the axis direction into the domain.
/// At rho = 0 the angle is fixed to 0.
std::pair<double, double> local_coords(Vec2 p, const CornerInfo& corner);

struct ExponentChoice {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
};

/// alpha0 = alpha - margin, alpha1 = min(alpha, nu + 1/2) - margin, both
/// required to exceed 1/2. `vertex` may be null when no sharp cone is present.
ExponentChoice choose_exponents(const CornerInfo& edge, const CornerInfo* vertex, double margin);

}  // namespace fscm
