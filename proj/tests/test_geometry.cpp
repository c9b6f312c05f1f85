#include "doctest.h"

#include "eit/geometry.hpp"
#include "eit/mesh.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace eit;

namespace {

IndicatorField cells_with_norm(const PixelGrid& grid, double lo, double hi) {
    IndicatorField out(grid);
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.is_interior(c)) continue;
        double r = grid.cell_center(c).norm();
        if (r >= lo && r <= hi) out.set(c, true);
    }
    return out;
}

IndicatorField random_subset(const PixelGrid& grid, std::mt19937_64& rng, double density) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    IndicatorField out(grid);
    for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.is_interior(c) && u(rng) < density) out.set(c, true);
    return out;
}

} // namespace

TEST_CASE("indicator field labels interior cells only") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 8);
    IndicatorField f(grid);
    CHECK(f.empty());
    CHECK(f.count() == 0);

    int inside = grid.cell_index(4, 4);
    REQUIRE(grid.is_interior(inside));
    f.set(inside, true);
    CHECK(f.get(inside));
    CHECK(f.count() == 1);
    CHECK(f.cells() == std::vector<int>{inside});

    int corner = grid.cell_index(0, 0);
    REQUIRE(!grid.is_interior(corner));
    CHECK_THROWS_AS(f.set(corner, true), parameter_error);
    CHECK_NOTHROW(f.set(corner, false));
    CHECK_THROWS_AS(f.set(-1, true), parameter_error);
    CHECK_THROWS_AS(f.set(grid.num_cells(), true), parameter_error);

    IndicatorField g(grid);
    CHECK(!(f == g));
    g.set(inside, true);
    CHECK(f == g);
}

TEST_CASE("outer closure fills the hole of an annulus") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    IndicatorField ring = cells_with_norm(grid, 0.35, 0.7);
    IndicatorField hole = cells_with_norm(grid, 0.0, 0.35 - 1e-12);
    REQUIRE(ring.count() > 0);
    REQUIRE(hole.count() > 0);

    IndicatorField closed = outer_closure(ring);
    CHECK(closed == set_union(ring, hole));
}

TEST_CASE("outer closure leaves a solid blob unchanged") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    IndicatorField blob = cells_with_norm(grid, 0.0, 0.4);
    CHECK(outer_closure(blob) == blob);

    IndicatorField all = full_interior(grid);
    CHECK(outer_closure(all) == all);

    IndicatorField empty(grid);
    CHECK(outer_closure(empty) == empty);
}

TEST_CASE("outer closure is idempotent, monotone, and extensive") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 12);
    std::mt19937_64 rng(20240311);

    for (int trial = 0; trial < 10; ++trial) {
        IndicatorField s = random_subset(grid, rng, 0.3);
        IndicatorField t = set_union(s, random_subset(grid, rng, 0.1));

        IndicatorField cs = outer_closure(s);
        CHECK(is_subset(s, cs));
        CHECK(outer_closure(cs) == cs);
        CHECK(is_subset(cs, outer_closure(t)));
    }
}

TEST_CASE("closure of a set with boundary-connected complement is the set itself") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    // Half-space sets have boundary-connected complements by construction.
    TestSet half = make_halfspace_set(Eigen::Vector2d(0.0, 1.0), 0.2, grid);
    CHECK(half.valid);
    CHECK(outer_closure(half.field) == half.field);
}

TEST_CASE("support of the zero field is empty") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 8);
    std::vector<double> kappa(mesh.num_triangles(), 0.0);
    CHECK(support(kappa, grid).empty());
    CHECK(inner_support(kappa, grid).empty());
}

TEST_CASE("cell-aligned perturbations have matching support and inner support") {
    Mesh mesh = build_disk_mesh(4);
    PixelGrid grid(mesh, 8);

    IndicatorField d = cells_with_norm(grid, 0.0, 0.35);
    REQUIRE(d.count() > 0);
    std::vector<double> kappa(mesh.num_triangles(), 0.0);
    for (int c : d.cells())
        for (int t : grid.cell_triangles(c)) kappa[t] = 1.0;

    CHECK(support(kappa, grid, 0.5) == d);
    CHECK(inner_support(kappa, grid, 0.5) == d);

    // Touching a single triangle of another cell grows the support but not the inner support.
    IndicatorField outside = set_difference(full_interior(grid), d);
    int extra = -1;
    for (int c : outside.cells())
        if (!grid.cell_triangles(c).empty()) {
            extra = c;
            break;
        }
    REQUIRE(extra >= 0);
    kappa[grid.cell_triangles(extra)[0]] = 1.0;

    IndicatorField sup = support(kappa, grid, 0.5);
    CHECK(sup.get(extra));
    CHECK(sup.count() == d.count() + 1);
    CHECK(inner_support(kappa, grid, 0.5) == d);
}

TEST_CASE("cell membership in the support follows the per-triangle threshold") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 8);
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<double> kappa(mesh.num_triangles());
    for (double& v : kappa) v = u(rng);

    const double thresh = 0.5;
    IndicatorField sup = support(kappa, grid, thresh);
    IndicatorField inner = inner_support(kappa, grid, thresh);

    for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.is_interior(c)) continue;
        const auto& tris = grid.cell_triangles(c);
        bool any = false, all = !tris.empty();
        for (int t : tris) {
            if (std::abs(kappa[t]) >= thresh)
                any = true;
            else
                all = false;
        }
        CHECK(sup.get(c) == any);
        CHECK(inner.get(c) == all);
    }

    CHECK(is_subset(inner, sup));
    CHECK(is_subset(sup, outer_closure(sup)));
    CHECK_THROWS_AS(support(kappa, grid, 0.0), parameter_error);
    CHECK_THROWS_AS(inner_support(kappa, grid, -1.0), parameter_error);
}

TEST_CASE("cells holding no triangles never enter the inner support") {
    // A coarse mesh under a fine grid leaves some interior cells without centroids.
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 16);
    std::vector<double> kappa(mesh.num_triangles(), 1.0);

    IndicatorField inner = inner_support(kappa, grid, 0.5);
    IndicatorField sup = support(kappa, grid, 0.5);
    CHECK(inner == sup);

    bool found_empty_interior = false;
    for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.is_interior(c) && grid.cell_triangles(c).empty()) {
            found_empty_interior = true;
            CHECK(!inner.get(c));
        }
    CHECK(found_empty_interior);
}

TEST_CASE("halfspace test sets cover the expected cells") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    TestSet all = make_halfspace_set(Eigen::Vector2d(1.0, 0.0), 1.0, grid);
    CHECK(all.valid);
    CHECK(all.field == full_interior(grid));

    TestSet none = make_halfspace_set(Eigen::Vector2d(1.0, 0.0), -1.0, grid);
    CHECK(none.valid);
    CHECK(none.field.empty());

    TestSet left = make_halfspace_set(Eigen::Vector2d(1.0, 0.0), 0.0, grid);
    CHECK(left.valid);
    CHECK(left.field.count() > 0);
    CHECK(left.field.count() < full_interior(grid).count());
    for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.is_interior(c))
            CHECK(left.field.get(c) == (grid.cell_center(c).x() <= 0.0));

    CHECK_THROWS_AS(make_halfspace_set(Eigen::Vector2d(2.0, 0.0), 0.0, grid), parameter_error);
}

TEST_CASE("channel complements carve a ball plus a path to the boundary") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    TestSet ts = make_channel_complement(Eigen::Vector2d(0.0, 0.0), 0.2, grid);
    CHECK(ts.valid);
    CHECK(outer_closure(ts.field) == ts.field);

    // Ball cells are removed; the centered ball channels along +x by convention.
    int origin_cell = grid.cell_of_point(Eigen::Vector2d(0.01, 0.01));
    CHECK(!ts.field.get(origin_cell));
    int plus_x = grid.cell_of_point(Eigen::Vector2d(0.57, 0.06));
    int minus_x = grid.cell_of_point(Eigen::Vector2d(-0.57, 0.06));
    CHECK(!ts.field.get(plus_x));
    CHECK(ts.field.get(minus_x));
}

TEST_CASE("channel complement edge cases") {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid(mesh, 16);

    // A ball swallowing the whole disk leaves a valid empty test set.
    TestSet empty = make_channel_complement(Eigen::Vector2d(0.1, 0.0), 3.0, grid);
    CHECK(empty.valid);
    CHECK(empty.field.empty());

    CHECK_THROWS_AS(make_channel_complement(Eigen::Vector2d(1.0, 0.0), 0.2, grid),
                    parameter_error);
    CHECK_THROWS_AS(make_channel_complement(Eigen::Vector2d(1.5, 0.5), 0.2, grid),
                    parameter_error);
    CHECK_THROWS_AS(make_channel_complement(Eigen::Vector2d(0.0, 0.0), 0.0, grid),
                    parameter_error);

    TestSet off = make_channel_complement(Eigen::Vector2d(0.4, 0.3), 0.15, grid);
    CHECK(off.valid);
    CHECK(off.field.count() > 0);
}

TEST_CASE("set algebra obeys the usual identities") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 10);
    std::mt19937_64 rng(99);

    IndicatorField a = random_subset(grid, rng, 0.4);
    IndicatorField b = random_subset(grid, rng, 0.4);

    CHECK(set_union(set_difference(a, b), set_intersection(a, b)) == a);
    CHECK(is_subset(set_intersection(a, b), a));
    CHECK(is_subset(a, set_union(a, b)));
    CHECK(set_union(a, b) == set_union(b, a));

    PixelGrid other(mesh, 10);
    IndicatorField c(other);
    CHECK_THROWS_AS(set_union(a, c), parameter_error);
    CHECK_THROWS_AS(is_subset(a, c), parameter_error);
}

TEST_CASE("dilation grows by the 8-neighborhood and clips to the interior") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 12);

    IndicatorField dot(grid);
    int center = grid.cell_of_point(Eigen::Vector2d(0.0, 0.0));
    dot.set(center, true);

    IndicatorField grown = dilate(dot, 1);
    CHECK(grown.count() == 9);
    int cx = grid.cell_x(center), cy = grid.cell_y(center);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            CHECK(grown.get(grid.cell_index(cx + dx, cy + dy)));

    CHECK(dilate(dot, 0) == dot);
    CHECK(dilate(dot, 2) == dilate(grown, 1));

    // Dilating everything stays within the interior.
    IndicatorField all = full_interior(grid);
    CHECK(dilate(all, 1) == all);
    CHECK_THROWS_AS(dilate(dot, -1), parameter_error);
}

TEST_CASE("pgm export writes a full raster with the top row first") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 4);

    IndicatorField f(grid);
    int marked = grid.cell_index(2, 1);
    REQUIRE(grid.is_interior(marked));
    f.set(marked, true);

    std::ostringstream out;
    export_pgm(f, out);
    std::istringstream in(out.str());

    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P2");
    CHECK(w == 4);
    CHECK(h == 4);
    CHECK(maxval == 255);

    std::vector<int> pix(16, -1);
    for (int& p : pix) in >> p;
    REQUIRE(in);
    for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 4; ++col) {
            int value = pix[static_cast<std::size_t>(row) * 4 + col];
            bool lit = (col == 2 && row == 4 - 1 - 1); // x=2, y=1 from the top
            CHECK(value == (lit ? 255 : 0));
        }
}

TEST_CASE("indicator csv lists every cell with its label") {
    Mesh mesh = build_disk_mesh(2);
    PixelGrid grid(mesh, 4);

    IndicatorField f(grid);
    int marked = grid.cell_index(1, 2);
    REQUIRE(grid.is_interior(marked));
    f.set(marked, true);

    std::ostringstream out;
    export_indicator_csv(f, out);
    std::istringstream in(out.str());

    std::string line;
    int rows = 0, ones = 0;
    while (std::getline(in, line)) {
        int x = -1, y = -1, label = -1;
        char c1 = 0, c2 = 0;
        std::istringstream row(line);
        row >> x >> c1 >> y >> c2 >> label;
        REQUIRE(row);
        CHECK(c1 == ',');
        CHECK(c2 == ',');
        CHECK((label == 0 || label == 1));
        if (label == 1) {
            ++ones;
            CHECK(x == 1);
            CHECK(y == 2);
        }
        ++rows;
    }
    CHECK(rows == 16);
    CHECK(ones == 1);
}
