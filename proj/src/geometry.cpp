#include "fscm/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "fscm/specfun.hpp"

namespace fscm {

namespace {

constexpr double kAxisTol = 1e-12;
constexpr double kAngleTol = 1e-9;  // angle-degeneracy tolerance (radians)

double shoelace(const std::vector<Vec2>& v) {
    double s = 0.0;
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) s += cross(v[i], v[(i + 1) % n]);
    return 0.5 * s;
}

bool segments_properly_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
           o4 != 0;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

}  // namespace

double MeridianPolygon::area() const { return shoelace(vertices); }

bool MeridianPolygon::contains(Vec2 p) const {
    // ray crossing, counting crossings of the horizontal ray to +r
    bool inside = false;
    const int nn = n();
    for (int i = 0; i < nn; ++i) {
        const Vec2 a = vertices[i], b = vertices[(i + 1) % nn];
        if ((a.z > p.z) != (b.z > p.z)) {
            const double rx = a.r + (p.z - a.z) / (b.z - a.z) * (b.r - a.r);
            if (p.r < rx) inside = !inside;
        }
    }
    return inside;
}

double MeridianPolygon::boundary_distance(Vec2 p) const {
    double d = std::numeric_limits<double>::max();
    for (int i = 0; i < n(); ++i)
        d = std::min(d, point_segment_distance(p, side_start(i), side_end(i)));
    return d;
}

MeridianPolygon MeridianPolygon::from_vertices(std::vector<Vec2> verts) {
    const int n = static_cast<int>(verts.size());
    if (n < 3) throw Error("polygon: need at least 3 vertices");
    if (shoelace(verts) <= 0.0) throw Error("polygon: vertices must be counter-clockwise");

    for (int i = 0; i < n; ++i) {
        if (verts[i].r < -kAxisTol) throw Error("polygon: vertex with r < 0");
        if (std::abs(verts[i].r) <= kAxisTol) verts[i].r = 0.0;
        for (int j = i + 1; j < n; ++j)
            if (norm(verts[i] - verts[j]) < 1e-12) throw Error("polygon: duplicate vertices");
    }

    // simplicity: no proper intersection between non-adjacent sides
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_properly_intersect(verts[i], verts[(i + 1) % n], verts[j],
                                            verts[(j + 1) % n]))
                throw Error("polygon: self-intersecting");
        }

    MeridianPolygon poly;
    poly.vertices = std::move(verts);
    int n_axis_vertices = 0;
    for (int i = 0; i < n; ++i) {
        if (poly.vertices[i].r == 0.0) ++n_axis_vertices;
        if (poly.vertices[i].r == 0.0 && poly.vertices[(i + 1) % n].r == 0.0) {
            if (poly.axis_side >= 0) throw Error("polygon: more than one side on the axis");
            poly.axis_side = i;
        }
        poly.r_max = std::max(poly.r_max, poly.vertices[i].r);
    }
    if (poly.axis_side < 0) throw Error("polygon: no side on the axis r = 0");
    if (n_axis_vertices != 2) throw Error("polygon: vertices with r = 0 off the axis side");
    return poly;
}

std::vector<CornerInfo> classify_corners(const MeridianPolygon& poly) {
    const int n = poly.n();
    std::vector<CornerInfo> corners(n);
    const int axis_lo = poly.axis_side;            // axis side start vertex
    const int axis_hi = (poly.axis_side + 1) % n;  // axis side end vertex

    for (int i = 0; i < n; ++i) {
        const Vec2 prev = poly.vertices[(i + n - 1) % n];
        const Vec2 cur = poly.vertices[i];
        const Vec2 next = poly.vertices[(i + 1) % n];
        const Vec2 din = cur - prev;
        const Vec2 dout = next - cur;
        const double turn = std::atan2(cross(din, dout), dot(din, dout));
        const double interior = M_PI - turn;

        CornerInfo& c = corners[i];
        c.location = cur;
        c.interior_angle = interior;

        if (cur.r == 0.0) {
            // axis endpoint: conical vertex with aperture = interior angle
            c.kind = CornerKind::ConicalVertex;
            c.beta_aperture = interior;
            if (!(interior > 0.0 && interior < M_PI))
                throw Error("classify_corners: cone aperture outside (0, pi)");
            c.nu = specfun::find_root_nu(interior);
            c.sharp = c.nu < 0.5;
            // axis direction into the domain: toward the other axis endpoint
            const Vec2 other = (i == axis_lo) ? poly.vertices[axis_hi] : poly.vertices[axis_lo];
            c.cone_axis_dz = (other.z > cur.z) ? 1.0 : -1.0;
            continue;
        }

        if (interior > M_PI + kAngleTol) {
            if (interior > 2.0 * M_PI - kAngleTol)
                throw Error("classify_corners: slit corner (interior angle ~ 2 pi)");
            c.kind = CornerKind::ReentrantEdge;
            c.alpha = M_PI / interior;
            c.a = cur.r;
            c.phi0 = std::atan2(dout.z, dout.r);  // first side = outgoing side
        } else if (interior > M_PI - kAngleTol) {
            throw Error("classify_corners: degenerate corner (interior angle ~ pi)");
        } else {
            c.kind = CornerKind::Regular;
        }
    }

    // coincident reentrant edges are rejected (distinct corners required)
    for (size_t i = 0; i < corners.size(); ++i)
        for (size_t j = i + 1; j < corners.size(); ++j)
            if (corners[i].kind == CornerKind::ReentrantEdge &&
                corners[j].kind == CornerKind::ReentrantEdge &&
                norm(corners[i].location - corners[j].location) < 1e-9)
                throw Error("classify_corners: coincident reentrant edges");
    return corners;
}

std::pair<double, double> local_coords(Vec2 p, const CornerInfo& corner) {
    const Vec2 d = p - corner.location;
    const double rho = norm(d);
    if (rho == 0.0) return {0.0, 0.0};

    if (corner.kind == CornerKind::ReentrantEdge) {
        double phi = std::atan2(d.z, d.r) - corner.phi0;
        phi = std::fmod(phi + 4.0 * M_PI, 2.0 * M_PI);
        // points numerically below the first side wrap to ~2 pi; fold them back
        if (phi > 2.0 * M_PI - 1e-9) phi = 0.0;
        return {rho, phi};
    }
    if (corner.kind == CornerKind::ConicalVertex) {
        // angle from the axis direction into the domain; in [0, pi] since r >= 0
        const double phi = std::atan2(std::abs(d.r), corner.cone_axis_dz * d.z);
        return {rho, phi};
    }
    throw Error("local_coords: corner is not singular");
}

ExponentChoice choose_exponents(const CornerInfo& edge, const CornerInfo* vertex, double margin) {
    if (edge.kind != CornerKind::ReentrantEdge) throw Error("choose_exponents: not an edge");
    const double alpha = edge.alpha;
    if (!(margin > 0.0 && margin < 0.5 * (alpha - 0.5)))
        throw Error("choose_exponents: margin outside (0, (alpha - 1/2)/2)");
    double cap = alpha;
    if (vertex != nullptr && vertex->kind == CornerKind::ConicalVertex)
        cap = std::min(alpha, vertex->nu + 0.5);
    ExponentChoice ch{alpha - margin, cap - margin};
    if (ch.alpha0 <= 0.5 || ch.alpha1 <= 0.5)
        throw Error("choose_exponents: bounds cannot be satisfied");
    return ch;
}

}  // namespace fscm
