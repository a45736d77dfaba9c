#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "fscm/mesh.hpp"

using namespace fscm;

namespace {

MeridianPolygon square() {
    return MeridianPolygon::from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

MeridianPolygon lshape() {
    return MeridianPolygon::from_vertices({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
}

double area_sum(const TriMesh& m) {
    double s = 0;
    for (int t = 0; t < m.n_triangles(); ++t) s += m.tri_area(t);
    return s;
}

}  // namespace

TEST_CASE("unit square smoke mesh") {
    const auto mesh = triangulate(square(), 0.5);
    CHECK(mesh.n_triangles() >= 8);
    CHECK(area_sum(mesh) == doctest::Approx(1.0).epsilon(1e-12));
    for (int t = 0; t < mesh.n_triangles(); ++t) CHECK(mesh.tri_area(t) > 0.0);
    CHECK(mesh.h <= 0.75);
    CHECK(mesh.shape_reg >= 20.0 * M_PI / 180.0);
}

TEST_CASE("L-shape meshes across sizes: conformity, tags, quality") {
    for (double h : {0.4, 0.2, 0.1}) {
        const auto mesh = triangulate(lshape(), h);
        CHECK(area_sum(mesh) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(mesh.shape_reg >= 20.0 * M_PI / 180.0);
        CHECK(mesh.h <= 1.5 * h);

        // every polygon vertex is a mesh node
        for (int v = 0; v < 6; ++v) CHECK_NOTHROW(mesh.node_of_polygon_vertex(v));

        // tags: OnAxis nodes have r = 0; OnDirichlet nodes off the axis side
        int n_axis = 0, n_axis_end = 0;
        for (int i = 0; i < mesh.n_nodes(); ++i) {
            if (mesh.node_tags[i] == NodeTag::OnAxis) {
                CHECK(mesh.nodes[i].r == 0.0);
                ++n_axis;
            }
            if (mesh.node_tags[i] == NodeTag::OnAxisEnd) ++n_axis_end;
        }
        CHECK(n_axis_end == 2);
        CHECK(n_axis >= 1);

        // quasi-uniformity: global max/min edge length ratio <= 4
        double emin = 1e300, emax = 0;
        for (const auto& t : mesh.triangles)
            for (int e = 0; e < 3; ++e) {
                const double len = norm(mesh.nodes[t[e]] - mesh.nodes[t[(e + 1) % 3]]);
                emin = std::min(emin, len);
                emax = std::max(emax, len);
            }
        CHECK(emax / emin <= 4.0);
    }
}

TEST_CASE("boundary edges are consistently tagged") {
    const auto mesh = triangulate(lshape(), 0.25);
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            auto k = std::minmax(t[e], t[(e + 1) % 3]);
            count[{k.first, k.second}]++;
        }
    for (const auto& [edge, c] : count) {
        CHECK(c <= 2);
        if (c == 1) {  // boundary edge: both nodes on the boundary, on a common side
            const auto ta = mesh.node_tags[edge.first], tb = mesh.node_tags[edge.second];
            CHECK(ta != NodeTag::Interior);
            CHECK(tb != NodeTag::Interior);
            const bool a_axisish = ta == NodeTag::OnAxis || ta == NodeTag::OnAxisEnd;
            const bool b_axisish = tb == NodeTag::OnAxis || tb == NodeTag::OnAxisEnd;
            const bool on_gamma_a = mesh.nodes[edge.first].r == 0.0 &&
                                    mesh.nodes[edge.second].r == 0.0;
            if (on_gamma_a) {
                CHECK(a_axisish);
                CHECK(b_axisish);
            }
        }
    }
}

TEST_CASE("refinement family h halves within [1.7, 2.3]") {
    const auto family = refine_family(lshape(), {0.2, 0.1, 0.05});
    CHECK(family.size() == 3);
    for (size_t i = 0; i + 1 < family.size(); ++i) {
        const double ratio = family[i].h / family[i + 1].h;
        CHECK(ratio >= 1.7);
        CHECK(ratio <= 2.3);
        CHECK(family[i].h > family[i + 1].h);
    }
}

TEST_CASE("mesh text export round-trips the header") {
    const auto mesh = triangulate(square(), 0.5);
    std::ostringstream os;
    mesh.write_text(os);
    std::istringstream is(os.str());
    std::string w1, w2;
    int n, m;
    is >> w1 >> n >> w2 >> m;
    CHECK(w1 == "nodes");
    CHECK(w2 == "triangles");
    CHECK(n == mesh.n_nodes());
    CHECK(m == mesh.n_triangles());
}

TEST_CASE("locator finds containing triangles") {
    const auto mesh = triangulate(lshape(), 0.15);
    const TriLocator loc(mesh);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 200) {
        const Vec2 p{2.0 * u(rng), 2.0 * u(rng)};
        if (p.r > 1.0 && p.z > 1.0) continue;  // outside the L
        if (p.r < 0.01 || p.z < 0.01) continue;
        const auto hit = loc.locate(p);
        REQUIRE(hit.tri >= 0);
        const auto& t = mesh.triangles[hit.tri];
        const Vec2 back = hit.bary[0] * mesh.nodes[t[0]] + hit.bary[1] * mesh.nodes[t[1]] +
                          hit.bary[2] * mesh.nodes[t[2]];
        CHECK(norm(back - p) < 1e-9);
        ++checked;
    }
}

TEST_CASE("target_h larger than the shortest side is rejected") {
    CHECK_THROWS(triangulate(square(), 1.5));
}
