#include "doctest.h"

#include "eit/phantom.hpp"

#include <Eigen/Dense>

#include <memory>

using namespace eit;

namespace {

ShapeSpec disk_spec(double cx, double cy, double r, double contrast) {
    ShapeSpec s;
    s.kind = ShapeSpec::Kind::disk;
    s.center = Eigen::Vector2d(cx, cy);
    s.radius = r;
    s.contrast = contrast;
    return s;
}

ShapeSpec rect_spec(double x0, double y0, double x1, double y1, double contrast) {
    ShapeSpec s;
    s.kind = ShapeSpec::Kind::rect;
    s.lo = Eigen::Vector2d(x0, y0);
    s.hi = Eigen::Vector2d(x1, y1);
    s.contrast = contrast;
    return s;
}

struct Fixture {
    Mesh mesh = build_disk_mesh(3);
    PixelGrid grid{mesh, 8};
};

} // namespace

TEST_CASE("shape membership matches the analytic regions") {
    ShapeSpec d = disk_spec(0.4, 0.0, 0.3, 2.0);
    CHECK(d.contains({0.4, 0.0}));
    CHECK(d.contains({0.6, 0.1}));
    CHECK(!d.contains({0.8, 0.0}));

    ShapeSpec r = rect_spec(-0.5, -0.5, 0.0, 0.0, 2.0);
    CHECK(r.contains({-0.25, -0.25}));
    CHECK(!r.contains({0.1, -0.25}));

    ShapeSpec l = rect_spec(-0.4, -0.4, 0.4, 0.4, 2.0);
    l.kind = ShapeSpec::Kind::lshape;
    CHECK(l.contains({-0.2, -0.2}));
    CHECK(l.contains({-0.2, 0.2}));
    CHECK(l.contains({0.2, -0.2}));
    CHECK(!l.contains({0.2, 0.2})); // upper-right quadrant removed
    CHECK(!l.contains({0.5, 0.0}));
}

TEST_CASE("an empty shape list leaves the background untouched") {
    Fixture fx;
    Phantom ph = make_phantom({}, fx.grid, fx.mesh, "background");
    CHECK(ph.d_plus.empty());
    CHECK(ph.d_minus.empty());
    for (int t = 0; t < fx.mesh.num_triangles(); ++t) CHECK(ph.sigma[t] == 1.0);
    CHECK(ph.name == "background");
}

TEST_CASE("phantom conductivity is exactly the contrast on labeled cells") {
    Fixture fx;
    Phantom ph = make_phantom(
        {disk_spec(0.4, 0.0, 0.25, 2.0), disk_spec(-0.4, 0.0, 0.25, 0.5)}, fx.grid, fx.mesh);

    REQUIRE(ph.d_plus.count() > 0);
    REQUIRE(ph.d_minus.count() > 0);
    CHECK(set_intersection(ph.d_plus, ph.d_minus).empty());

    // Cells are labeled by their center; triangles inherit the cell label.
    for (int c = 0; c < fx.grid.num_cells(); ++c) {
        double expect = 1.0;
        if (ph.d_plus.get(c)) expect = 2.0;
        if (ph.d_minus.get(c)) expect = 0.5;
        for (int t : fx.grid.cell_triangles(c)) CHECK(ph.sigma[t] == expect);
    }

    // Ground truth agrees with cell-center rasterization of the shapes.
    for (int c = 0; c < fx.grid.num_cells(); ++c) {
        if (!fx.grid.is_interior(c)) continue;
        Eigen::Vector2d p = fx.grid.cell_center(c);
        CHECK(ph.d_plus.get(c) == disk_spec(0.4, 0.0, 0.25, 2.0).contains(p));
        CHECK(ph.d_minus.get(c) == disk_spec(-0.4, 0.0, 0.25, 0.5).contains(p));
    }
}

TEST_CASE("phantom support matches the ground-truth cells") {
    Fixture fx;
    Phantom ph = make_phantom({disk_spec(0.3, 0.2, 0.25, 3.0)}, fx.grid, fx.mesh);

    std::vector<double> kappa(fx.mesh.num_triangles());
    for (int t = 0; t < fx.mesh.num_triangles(); ++t) kappa[t] = ph.sigma[t] - 1.0;

    CHECK(support(kappa, fx.grid, 0.5) == ph.d_plus);
    CHECK(inner_support(kappa, fx.grid, 0.5) == ph.d_plus);
}

TEST_CASE("contrast bounds and separation are enforced") {
    Fixture fx;
    CHECK_THROWS_AS(make_phantom({disk_spec(0.4, 0.0, 0.2, 1.0)}, fx.grid, fx.mesh),
                    parameter_error);
    CHECK_THROWS_AS(make_phantom({disk_spec(0.4, 0.0, 0.2, 5.0)}, fx.grid, fx.mesh),
                    parameter_error);
    CHECK_THROWS_AS(make_phantom({disk_spec(0.4, 0.0, 0.2, 0.1)}, fx.grid, fx.mesh),
                    parameter_error);

    // Opposite-sign shapes in adjacent cells violate the separation requirement.
    CHECK_THROWS_AS(make_phantom({disk_spec(0.15, 0.0, 0.2, 2.0), disk_spec(-0.15, 0.0, 0.2, 0.5)},
                                 fx.grid, fx.mesh),
                    parameter_error);

    // A shape spilling outside the disk hits non-interior cells: the corner
    // center (0.875, 0.625) has norm above 1 and lies inside this disk.
    CHECK_THROWS_AS(make_phantom({disk_spec(0.9, 0.6, 0.2, 2.0)}, fx.grid, fx.mesh),
                    parameter_error);

    // Same-sign overlap is fine; the first shape wins on shared cells.
    CHECK_NOTHROW(
        make_phantom({disk_spec(0.2, 0.0, 0.2, 2.0), disk_spec(0.35, 0.0, 0.2, 3.0)}, fx.grid,
                     fx.mesh));
}

TEST_CASE("noise has exact spectral norm and is reproducible") {
    Fixture fx;
    auto basis = std::make_shared<CurrentBasis>(CurrentBasis::fourier(fx.mesh, 3));
    NtDMatrix clean = assemble_ntd(fx.mesh, Conductivity::uniform(fx.mesh, 1.0), basis);

    const double delta = 1e-3;
    NoisyMeasurement noisy = add_noise(clean, delta, 17);

    Eigen::MatrixXd e = noisy.measurement.m - clean.m;
    CHECK((e - e.transpose()).norm() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(delta).epsilon(1e-12));
    CHECK((noisy.perturbation - e).norm() < 1e-15);
    CHECK(noisy.delta == delta);
    CHECK(noisy.seed == 17);

    NoisyMeasurement again = add_noise(clean, delta, 17);
    CHECK((again.measurement.m - noisy.measurement.m).norm() == 0.0);

    NoisyMeasurement other = add_noise(clean, delta, 18);
    CHECK((other.measurement.m - noisy.measurement.m).norm() > 0.0);
}

TEST_CASE("zero noise returns the measurement unchanged") {
    Fixture fx;
    auto basis = std::make_shared<CurrentBasis>(CurrentBasis::fourier(fx.mesh, 3));
    NtDMatrix clean = assemble_ntd(fx.mesh, Conductivity::uniform(fx.mesh, 1.0), basis);

    NoisyMeasurement noisy = add_noise(clean, 0.0, 99);
    CHECK((noisy.measurement.m - clean.m).norm() == 0.0);
    CHECK(noisy.perturbation.norm() == 0.0);
    CHECK_THROWS_AS(add_noise(clean, -1e-3, 1), parameter_error);
}

TEST_CASE("noisy eigenvalues stay within delta of the clean ones") {
    Fixture fx;
    auto basis = std::make_shared<CurrentBasis>(CurrentBasis::fourier(fx.mesh, 3));
    NtDMatrix clean = assemble_ntd(fx.mesh, Conductivity::uniform(fx.mesh, 1.0), basis);

    const double delta = 5e-3;
    NoisyMeasurement noisy = add_noise(clean, delta, 4);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(clean.m, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(noisy.measurement.m, Eigen::EigenvaluesOnly);
    for (int i = 0; i < clean.size(); ++i)
        CHECK(std::abs(a.eigenvalues()[i] - b.eigenvalues()[i]) <= delta + 1e-14);
}
