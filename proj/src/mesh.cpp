#include "fscm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>

namespace fscm {

namespace {

double tri_signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

double circumdiameter(Vec2 a, Vec2 b, Vec2 c) {
    const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
    const double area = std::abs(tri_signed_area(a, b, c));
    if (area <= 0.0) return std::numeric_limits<double>::max();
    return la * lb * lc / (2.0 * area);
}

double min_angle(Vec2 a, Vec2 b, Vec2 c) {
    auto ang = [](Vec2 p, Vec2 q, Vec2 r) {
        const Vec2 u = q - p, v = r - p;
        return std::atan2(std::abs(cross(u, v)), dot(u, v));
    };
    return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

// ---------------------------------------------------------------------------
// Incremental Bowyer-Watson Delaunay triangulation
// ---------------------------------------------------------------------------

struct DelTri {
    std::array<int, 3> v;    // CCW
    std::array<int, 3> adj;  // adj[e] shares the edge opposite vertex e; -1 on hull
    bool alive = true;
};

class Delaunay {
  public:
    explicit Delaunay(const std::vector<Vec2>& pts) : pts_(pts) {
        // bounding super-triangle
        Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
        for (const Vec2& p : pts) {
            lo.r = std::min(lo.r, p.r);
            lo.z = std::min(lo.z, p.z);
            hi.r = std::max(hi.r, p.r);
            hi.z = std::max(hi.z, p.z);
        }
        const double d = std::max({hi.r - lo.r, hi.z - lo.z, 1.0});
        const Vec2 c{0.5 * (lo.r + hi.r), 0.5 * (lo.z + hi.z)};
        sup_[0] = {c.r - 20.0 * d, c.z - 10.0 * d};
        sup_[1] = {c.r + 20.0 * d, c.z - 10.0 * d};
        sup_[2] = {c.r, c.z + 20.0 * d};
        tris_.push_back({{-1, -2, -3}, {-1, -1, -1}, true});
        last_ = 0;
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) insert(i);
    }

    /// Surviving triangles (super-triangle fans removed).
    std::vector<std::array<int, 3>> triangles() const {
        std::vector<std::array<int, 3>> out;
        for (const DelTri& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] < 0 || t.v[1] < 0 || t.v[2] < 0) continue;
            out.push_back(t.v);
        }
        return out;
    }

  private:
    Vec2 coord(int i) const { return i >= 0 ? pts_[i] : sup_[-i - 1]; }

    static double orient(Vec2 a, Vec2 b, Vec2 c) {
        const long double v = (static_cast<long double>(b.r) - a.r) *
                                  (static_cast<long double>(c.z) - a.z) -
                              (static_cast<long double>(b.z) - a.z) *
                                  (static_cast<long double>(c.r) - a.r);
        return static_cast<double>(v);
    }

    bool in_circumcircle(const DelTri& t, Vec2 p) const {
        const Vec2 a = coord(t.v[0]), b = coord(t.v[1]), c = coord(t.v[2]);
        const long double ax = a.r - p.r, ay = a.z - p.z;
        const long double bx = b.r - p.r, by = b.z - p.z;
        const long double cx = c.r - p.r, cy = c.z - p.z;
        const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                                (bx * bx + by * by) * (ax * cy - cx * ay) +
                                (cx * cx + cy * cy) * (ax * by - bx * ay);
        return det > 0.0L;
    }

    int locate(Vec2 p) const {
        int t = last_;
        for (int step = 0; step < 4 * static_cast<int>(tris_.size()) + 16; ++step) {
            if (!tris_[t].alive) {
                t = first_alive();
                continue;
            }
            const DelTri& tri = tris_[t];
            bool moved = false;
            for (int e = 0; e < 3; ++e) {
                const Vec2 p1 = coord(tri.v[(e + 1) % 3]);
                const Vec2 p2 = coord(tri.v[(e + 2) % 3]);
                if (orient(p1, p2, p) < 0.0) {
                    if (tri.adj[e] >= 0) {
                        t = tri.adj[e];
                        moved = true;
                        break;
                    }
                }
            }
            if (!moved) return t;
        }
        // fallback: linear scan
        for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
            if (!tris_[i].alive) continue;
            const DelTri& tri = tris_[i];
            bool inside = true;
            for (int e = 0; e < 3 && inside; ++e)
                inside = orient(coord(tri.v[(e + 1) % 3]), coord(tri.v[(e + 2) % 3]), p) >= 0.0;
            if (inside) return i;
        }
        throw Error("mesh: point location failed");
    }

    int first_alive() const {
        for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
            if (tris_[i].alive) return i;
        throw Error("mesh: no alive triangle");
    }

    void insert(int ip) {
        const Vec2 p = pts_[ip];
        const int seed = locate(p);

        // grow the cavity of triangles whose circumcircle contains p
        ++epoch_;
        mark_.resize(tris_.size() + 8, 0);
        cavity_.clear();
        stack_.assign(1, seed);
        mark_[seed] = epoch_;
        while (!stack_.empty()) {
            const int t = stack_.back();
            stack_.pop_back();
            if (!tris_[t].alive || !in_circumcircle(tris_[t], p)) continue;
            cavity_.push_back(t);
            for (int e = 0; e < 3; ++e) {
                const int nb = tris_[t].adj[e];
                if (nb >= 0 && mark_[nb] != epoch_) {
                    mark_[nb] = epoch_;
                    stack_.push_back(nb);
                }
            }
        }
        if (cavity_.empty()) throw Error("mesh: empty insertion cavity");
        ++epoch_;
        for (const int t : cavity_) mark_[t] = epoch_;  // epoch now marks cavity membership

        // boundary edges of the cavity, with the outside neighbor
        struct BEdge {
            int a, b, outside;
        };
        std::vector<BEdge> boundary;
        for (const int t : cavity_) {
            for (int e = 0; e < 3; ++e) {
                const int nb = tris_[t].adj[e];
                if (nb < 0 || mark_[nb] != epoch_)
                    boundary.push_back({tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3], nb});
            }
        }
        for (const int t : cavity_) tris_[t].alive = false;

        // star the cavity from p; new triangle (ip, a, b) has edges:
        // opposite v0=ip: (a, b) -> outside; opposite v1=a: (b, ip); opposite v2=b: (ip, a)
        std::map<int, int> open_edge;  // other endpoint of edge through ip -> waiting tri
        for (const BEdge& be : boundary) {
            const int id = static_cast<int>(tris_.size());
            tris_.push_back({{ip, be.a, be.b}, {be.outside, -1, -1}, true});
            if (be.outside >= 0) {
                DelTri& out = tris_[be.outside];
                for (int e = 0; e < 3; ++e)
                    if (out.v[(e + 1) % 3] == be.b && out.v[(e + 2) % 3] == be.a) out.adj[e] = id;
            }
            auto stitch = [&](int endpoint, int slot) {
                auto it = open_edge.find(endpoint);
                if (it == open_edge.end()) {
                    open_edge.emplace(endpoint, id);
                    return;
                }
                const int mate = it->second;
                tris_[id].adj[slot] = mate;
                DelTri& m = tris_[mate];
                for (int e = 0; e < 3; ++e) {
                    const int va = m.v[(e + 1) % 3], vb = m.v[(e + 2) % 3];
                    if ((va == endpoint && vb == ip) || (va == ip && vb == endpoint)) m.adj[e] = id;
                }
            };
            stitch(be.b, 1);
            stitch(be.a, 2);
            last_ = id;
        }
    }

    const std::vector<Vec2>& pts_;
    std::array<Vec2, 3> sup_;
    std::vector<DelTri> tris_;
    std::vector<int> mark_;
    std::vector<int> cavity_, stack_;
    int epoch_ = 0;
    int last_ = 0;
};

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

double TriMesh::tri_area(int t) const {
    const auto& tr = triangles[t];
    return tri_signed_area(nodes[tr[0]], nodes[tr[1]], nodes[tr[2]]);
}

Vec2 TriMesh::centroid(int t) const {
    const auto& tr = triangles[t];
    return {(nodes[tr[0]].r + nodes[tr[1]].r + nodes[tr[2]].r) / 3.0,
            (nodes[tr[0]].z + nodes[tr[1]].z + nodes[tr[2]].z) / 3.0};
}

int TriMesh::node_of_polygon_vertex(int v) const {
    for (int i = 0; i < n_nodes(); ++i)
        if (node_vertex[i] == v) return i;
    throw Error("mesh: polygon vertex has no mesh node");
}

void TriMesh::write_text(std::ostream& os) const {
    os << "nodes " << n_nodes() << " triangles " << n_triangles() << "\n";
    char buf[128];
    for (int i = 0; i < n_nodes(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", nodes[i].r, nodes[i].z,
                      static_cast<int>(node_tags[i]));
        os << buf;
    }
    for (const auto& t : triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

TriMesh triangulate(const MeridianPolygon& poly, double target_h) {
    if (!(target_h > 0.0)) throw Error("triangulate: target_h must be positive");
    const int np = poly.n();
    for (int i = 0; i < np; ++i)
        if (norm(poly.side_end(i) - poly.side_start(i)) <= target_h)
            throw Error("triangulate: target_h not smaller than shortest polygon side");

    const double s = 0.92 * target_h;  // generation spacing

    TriMesh mesh;
    std::vector<Vec2> pts;

    // boundary nodes: polygon vertices + equally spaced side subdivisions
    for (int i = 0; i < np; ++i) {
        const Vec2 a = poly.side_start(i), b = poly.side_end(i);
        const int nseg = std::max(1, static_cast<int>(std::ceil(norm(b - a) / s)));
        for (int k = 0; k < nseg; ++k) {
            const double t = static_cast<double>(k) / nseg;
            pts.push_back(a + t * (b - a));
            mesh.node_side.push_back(i);
            mesh.node_vertex.push_back(k == 0 ? i : -1);
        }
    }
    const int n_boundary = static_cast<int>(pts.size());

    // interior points: jittered triangular lattice kept clear of the boundary
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Vec2& v : poly.vertices) {
        lo.r = std::min(lo.r, v.r);
        lo.z = std::min(lo.z, v.z);
        hi.r = std::max(hi.r, v.r);
        hi.z = std::max(hi.z, v.z);
    }
    const double row_dz = s * std::sqrt(3.0) / 2.0;
    const double margin = 0.58 * s;
    const int jmax = static_cast<int>(std::ceil((hi.z - lo.z) / row_dz)) + 1;
    const int imax = static_cast<int>(std::ceil((hi.r - lo.r) / s)) + 2;
    for (int j = 0; j <= jmax; ++j) {
        const double z = lo.z + (j + 0.40) * row_dz;
        for (int i = 0; i <= imax; ++i) {
            const double r = lo.r + (i + 0.25 + 0.5 * (j % 2)) * s;
            const uint64_t hsh = splitmix64(static_cast<uint64_t>(i) * 2654435761ull +
                                            static_cast<uint64_t>(j) + 17);
            const double jr = 0.04 * s * (2.0 * (hsh & 0xFFFFFFu) / double(0xFFFFFFu) - 1.0);
            const double jz =
                0.04 * s * (2.0 * ((hsh >> 24) & 0xFFFFFFu) / double(0xFFFFFFu) - 1.0);
            const Vec2 p{r + jr, z + jz};
            if (!poly.contains(p)) continue;
            if (poly.boundary_distance(p) < margin) continue;
            pts.push_back(p);
            mesh.node_side.push_back(-1);
            mesh.node_vertex.push_back(-1);
        }
    }

    Delaunay del(pts);
    mesh.nodes = pts;

    // keep triangles whose centroid lies inside the polygon
    for (const auto& t : del.triangles()) {
        const Vec2 c{(pts[t[0]].r + pts[t[1]].r + pts[t[2]].r) / 3.0,
                     (pts[t[0]].z + pts[t[1]].z + pts[t[2]].z) / 3.0};
        if (poly.contains(c)) mesh.triangles.push_back(t);
    }

    // node tags
    const int axis_lo = poly.axis_side, axis_hi = (poly.axis_side + 1) % np;
    mesh.node_tags.assign(mesh.n_nodes(), NodeTag::Interior);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        if (mesh.node_side[i] < 0) continue;
        if (mesh.node_vertex[i] == axis_lo || mesh.node_vertex[i] == axis_hi)
            mesh.node_tags[i] = NodeTag::OnAxisEnd;
        else if (mesh.node_side[i] == poly.axis_side)
            mesh.node_tags[i] = NodeTag::OnAxis;
        else
            mesh.node_tags[i] = NodeTag::OnDirichlet;
    }

    // conformity: area identity and boundary-edge recovery
    double area_sum = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double a = mesh.tri_area(t);
        if (a <= 0.0) throw Error("triangulate: inverted triangle produced");
        area_sum += a;
    }
    if (std::abs(area_sum - poly.area()) > 1e-10 * poly.area())
        throw Error("triangulate: triangulation does not cover the polygon (area mismatch " +
                    std::to_string(area_sum - poly.area()) + ")");

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            auto key = std::minmax(t[e], t[(e + 1) % 3]);
            edge_count[{key.first, key.second}]++;
        }
    for (int i = 0; i < n_boundary; ++i) {
        // consecutive boundary nodes around the polygon must form mesh edges
        const int j = (i + 1) % n_boundary;
        auto key = std::minmax(i, j);
        auto it = edge_count.find({key.first, key.second});
        if (it == edge_count.end() || it->second != 1)
            throw Error("triangulate: boundary edge lost near (" +
                        std::to_string(mesh.nodes[i].r) + ", " + std::to_string(mesh.nodes[i].z) +
                        ")");
    }

    // guarded Laplacian smoothing of interior nodes
    std::vector<std::vector<int>> nbr(mesh.n_nodes());
    std::vector<std::vector<int>> n2t(mesh.n_nodes());
    for (int t = 0; t < mesh.n_triangles(); ++t)
        for (int e = 0; e < 3; ++e) {
            const int a = mesh.triangles[t][e], b = mesh.triangles[t][(e + 1) % 3];
            nbr[a].push_back(b);
            nbr[b].push_back(a);
            n2t[a].push_back(t);
        }
    for (auto& v : nbr) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    auto incident_min_angle = [&](int node) {
        double ma = M_PI;
        for (const int t : n2t[node]) {
            const auto& tr = mesh.triangles[t];
            if (tri_signed_area(mesh.nodes[tr[0]], mesh.nodes[tr[1]], mesh.nodes[tr[2]]) <= 0.0)
                return -1.0;
            ma = std::min(ma, min_angle(mesh.nodes[tr[0]], mesh.nodes[tr[1]], mesh.nodes[tr[2]]));
        }
        return ma;
    };
    const double target_angle = 26.0 * M_PI / 180.0;
    for (int sweep = 0; sweep < 10; ++sweep) {
        for (int i = 0; i < mesh.n_nodes(); ++i) {
            if (mesh.node_tags[i] != NodeTag::Interior || nbr[i].empty()) continue;
            Vec2 avg{0, 0};
            for (const int j : nbr[i]) avg = avg + mesh.nodes[j];
            avg = (1.0 / nbr[i].size()) * avg;
            const Vec2 old = mesh.nodes[i];
            const double before = incident_min_angle(i);
            mesh.nodes[i] = avg;
            const double after = incident_min_angle(i);
            if (after < std::min(before, target_angle)) mesh.nodes[i] = old;
        }
    }

    // mesh-size metrics
    mesh.h = 0.0;
    mesh.shape_reg = M_PI;
    for (const auto& t : mesh.triangles) {
        const Vec2 a = mesh.nodes[t[0]], b = mesh.nodes[t[1]], c = mesh.nodes[t[2]];
        mesh.h = std::max(mesh.h, circumdiameter(a, b, c));
        mesh.shape_reg = std::min(mesh.shape_reg, min_angle(a, b, c));
    }
    if (mesh.h > 1.5 * target_h)
        throw Error("triangulate: mesh size " + std::to_string(mesh.h) + " exceeds 1.5 * " +
                    std::to_string(target_h));
    if (mesh.shape_reg < 20.0 * M_PI / 180.0)
        throw Error("triangulate: shape regularity " +
                    std::to_string(mesh.shape_reg * 180.0 / M_PI) + " deg below 20 deg");
    return mesh;
}

std::vector<TriMesh> refine_family(const MeridianPolygon& poly,
                                   const std::vector<double>& h_list) {
    std::vector<TriMesh> out;
    out.reserve(h_list.size());
    for (const double h : h_list) out.push_back(triangulate(poly, h));
    return out;
}

// ---------------------------------------------------------------------------

TriLocator::TriLocator(const TriMesh& mesh) : mesh_(mesh) {
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Vec2& p : mesh.nodes) {
        lo.r = std::min(lo.r, p.r);
        lo.z = std::min(lo.z, p.z);
        hi.r = std::max(hi.r, p.r);
        hi.z = std::max(hi.z, p.z);
    }
    cell_ = std::max(mesh.h, 1e-12);
    r0_ = lo.r - 0.5 * cell_;
    z0_ = lo.z - 0.5 * cell_;
    nr_ = static_cast<int>((hi.r - r0_) / cell_) + 2;
    nz_ = static_cast<int>((hi.z - z0_) / cell_) + 2;
    bins_.resize(static_cast<size_t>(nr_) * nz_);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        double rmin = 1e300, rmax = -1e300, zmin = 1e300, zmax = -1e300;
        for (const int v : tr) {
            rmin = std::min(rmin, mesh.nodes[v].r);
            rmax = std::max(rmax, mesh.nodes[v].r);
            zmin = std::min(zmin, mesh.nodes[v].z);
            zmax = std::max(zmax, mesh.nodes[v].z);
        }
        const int i0 = std::clamp(static_cast<int>((rmin - r0_) / cell_), 0, nr_ - 1);
        const int i1 = std::clamp(static_cast<int>((rmax - r0_) / cell_), 0, nr_ - 1);
        const int j0 = std::clamp(static_cast<int>((zmin - z0_) / cell_), 0, nz_ - 1);
        const int j1 = std::clamp(static_cast<int>((zmax - z0_) / cell_), 0, nz_ - 1);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) bins_[static_cast<size_t>(i) * nz_ + j].push_back(t);
    }
}

TriLocator::Hit TriLocator::locate(Vec2 p) const {
    const int ci = std::clamp(static_cast<int>((p.r - r0_) / cell_), 0, nr_ - 1);
    const int cj = std::clamp(static_cast<int>((p.z - z0_) / cell_), 0, nz_ - 1);

    Hit best;
    double best_quality = -1e300;
    for (int ring = 0; ring < std::max(nr_, nz_); ++ring) {
        for (int i = std::max(0, ci - ring); i <= std::min(nr_ - 1, ci + ring); ++i)
            for (int j = std::max(0, cj - ring); j <= std::min(nz_ - 1, cj + ring); ++j) {
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                for (const int t : bins_[static_cast<size_t>(i) * nz_ + j]) {
                    const auto& tr = mesh_.triangles[t];
                    const Vec2 a = mesh_.nodes[tr[0]], b = mesh_.nodes[tr[1]],
                               c = mesh_.nodes[tr[2]];
                    const double area2 = cross(b - a, c - a);
                    if (area2 <= 0.0) continue;
                    const double l0 = cross(b - p, c - p) / area2;
                    const double l1 = cross(c - p, a - p) / area2;
                    const double l2 = cross(a - p, b - p) / area2;
                    const double q = std::min({l0, l1, l2});
                    if (q > best_quality) {
                        best_quality = q;
                        best = {t, {l0, l1, l2}};
                    }
                }
            }
        if (best_quality >= -1e-12) return best;  // inside (or on the boundary) of some triangle
    }
    if (best.tri < 0) throw Error("locator: empty mesh");
    // clamp slightly-outside points to the closest triangle
    for (double& l : best.bary) l = std::max(l, 0.0);
    const double tot = best.bary[0] + best.bary[1] + best.bary[2];
    for (double& l : best.bary) l /= tot;
    return best;
}

}  // namespace fscm
