#include "doctest.h"

#include "eit/locpot.hpp"
#include "eit/mesh.hpp"

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <sstream>

using namespace eit;

namespace {

struct Fixture {
    Mesh mesh;
    CurrentBasis basis;
    Conductivity one;
    Fixture()
        : mesh(build_disk_mesh(3)),
          basis(CurrentBasis::fourier(mesh, 4)),
          one(Conductivity::uniform(mesh, 1.0)) {}
};

std::vector<int> ball(const Mesh& mesh, double cx, double cy, double r) {
    return ball_to_region(mesh, Eigen::Vector2d(cx, cy), r);
}

std::vector<int> all_triangles(const Mesh& mesh) {
    std::vector<int> out(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) out[t] = t;
    return out;
}

} // namespace

TEST_CASE("energy form over the empty region vanishes") {
    Mesh mesh = build_disk_mesh(2);
    CurrentBasis basis = CurrentBasis::fourier(mesh, 3);
    Conductivity one = Conductivity::uniform(mesh, 1.0);
    EnergyForm f = energy_form(mesh, one, basis, {});
    CHECK(f.a.rows() == basis.size());
    CHECK(f.a.norm() == 0.0);
    CHECK_THROWS_AS(energy_form(mesh, one, basis, {mesh.num_triangles()}), parameter_error);
}

TEST_CASE("full-region energy form reproduces the homogeneous NtD form") {
    Mesh mesh = build_disk_mesh(3);
    CurrentBasis basis = CurrentBasis::fourier(mesh, 4);
    Conductivity one = Conductivity::uniform(mesh, 1.0);
    auto shared = std::make_shared<CurrentBasis>(basis);

    EnergyForm f = energy_form(mesh, one, basis, all_triangles(mesh));
    NtDMatrix ntd = assemble_ntd(mesh, one, shared);
    double scale = ntd.m.norm();
    CHECK((f.a - ntd.m).norm() / scale < 1e-9);
}

TEST_CASE("energy forms add over disjoint regions and stay PSD") {
    Mesh mesh = build_disk_mesh(3);
    CurrentBasis basis = CurrentBasis::fourier(mesh, 3);
    Conductivity one = Conductivity::uniform(mesh, 1.0);

    std::vector<int> r1 = ball(mesh, 0.4, 0.0, 0.3);
    std::vector<int> r2 = ball(mesh, -0.4, 0.0, 0.3);
    REQUIRE(!r1.empty());
    REQUIRE(!r2.empty());
    std::vector<int> both = r1;
    both.insert(both.end(), r2.begin(), r2.end());

    EnergyForm f1 = energy_form(mesh, one, basis, r1);
    EnergyForm f2 = energy_form(mesh, one, basis, r2);
    EnergyForm f12 = energy_form(mesh, one, basis, both);
    CHECK((f12.a - (f1.a + f2.a)).norm() < 1e-13 * (1.0 + f12.a.norm()));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f1.a, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * f1.a.trace());
}

TEST_CASE("boundary data reproduces the sigma-weighted interior energy") {
    Mesh mesh = build_disk_mesh(3);
    auto basis = std::make_shared<CurrentBasis>(CurrentBasis::fourier(mesh, 4));
    std::vector<int> d = ball(mesh, 0.3, 0.1, 0.3);
    Conductivity sigma = Conductivity::uniform(mesh, 1.0).perturbed(mesh, d, 1.5);
    NtDMatrix ntd = assemble_ntd(mesh, sigma, basis);

    for (int j = 0; j < basis->size(); ++j) {
        SolutionField u = solve_neumann(mesh, sigma, *basis, j);
        double weighted = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t)
            weighted += sigma[t] * mesh.areas[t] * u.gradients.row(t).squaredNorm();
        CHECK(weighted == doctest::Approx(ntd.m(j, j)).epsilon(1e-9));
    }
}

TEST_CASE("identical forms give a ratio at most one") {
    Fixture fx;
    EnergyForm f = energy_form(fx.mesh, fx.one, fx.basis, all_triangles(fx.mesh));

    LocalizedPotential lp = localized_potential(f, f, 1e-8);
    CHECK(lp.ratio <= 1.0 + 1e-12);
    CHECK(lp.ratio > 0.99);

    // Normalization in the constraint metric.
    Eigen::MatrixXd b =
        f.a + 1e-8 * Eigen::MatrixXd::Identity(f.a.rows(), f.a.cols());
    CHECK(lp.g.dot(b * lp.g) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a zero target form gives a zero ratio") {
    Fixture fx;
    EnergyForm zero = energy_form(fx.mesh, fx.one, fx.basis, {});
    EnergyForm full = energy_form(fx.mesh, fx.one, fx.basis, all_triangles(fx.mesh));
    LocalizedPotential lp = localized_potential(zero, full, 1e-8);
    CHECK(std::abs(lp.ratio) < 1e-12);
}

TEST_CASE("localized potential validates its inputs") {
    Fixture fx;
    EnergyForm f = energy_form(fx.mesh, fx.one, fx.basis, all_triangles(fx.mesh));
    CHECK_THROWS_AS(localized_potential(f, f, 0.0), parameter_error);
    CHECK_THROWS_AS(localized_potential(f, f, -1e-8), parameter_error);

    CurrentBasis smaller = CurrentBasis::fourier(fx.mesh, 2);
    EnergyForm g = energy_form(fx.mesh, fx.one, smaller, all_triangles(fx.mesh));
    CHECK_THROWS_AS(localized_potential(f, g, 1e-8), parameter_error);

    CurrentBasis twin = CurrentBasis::fourier(fx.mesh, 4);
    EnergyForm h = energy_form(fx.mesh, fx.one, twin, all_triangles(fx.mesh));
    CHECK_THROWS_AS(localized_potential(f, h, 1e-8), parameter_error);
}

TEST_CASE("the achieved ratio is invariant under congruent recombination") {
    Fixture fx;
    std::vector<int> d1 = ball(fx.mesh, 0.5, 0.0, 0.25);
    std::vector<int> d2 = ball(fx.mesh, -0.4, 0.0, 0.3);
    EnergyForm a1 = energy_form(fx.mesh, fx.one, fx.basis, d1);
    EnergyForm a2 = energy_form(fx.mesh, fx.one, fx.basis, d2);
    const double eps = 1e-8;
    double base = localized_potential(a1, a2, eps).ratio;

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = static_cast<int>(a1.a.rows());
    Eigen::MatrixXd t(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = u(rng);
    t += 3.0 * Eigen::MatrixXd::Identity(n, n); // keep it comfortably invertible

    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    EnergyForm b1{t.transpose() * a1.a * t, {}, nullptr};
    EnergyForm b2{t.transpose() * (a2.a + eps * id) * t - eps * id, {}, nullptr};
    double transformed = localized_potential(b1, b2, eps).ratio;
    CHECK(transformed == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("the ratio does not increase with stronger regularization") {
    Fixture fx;
    std::vector<int> d1 = ball(fx.mesh, 0.5, 0.0, 0.25);
    std::vector<int> d2 = ball(fx.mesh, -0.4, 0.0, 0.3);
    EnergyForm a1 = energy_form(fx.mesh, fx.one, fx.basis, d1);
    EnergyForm a2 = energy_form(fx.mesh, fx.one, fx.basis, d2);

    double loose = localized_potential(a1, a2, 1e-8).ratio;
    double tight = localized_potential(a1, a2, 1e-2).ratio;
    CHECK(loose >= tight - 1e-12);
}

TEST_CASE("classification thresholds on the ratio sequence") {
    LocalizedPotentialResult r;
    CHECK(r.classification() == "indeterminate");

    r.ratio = {1.0, 5.0, 15.0};
    CHECK(r.classification() == "blow-up");

    r.ratio = {1.0, 1.5, 1.8};
    CHECK(r.classification() == "bounded");

    r.ratio = {1.0, 3.0, 5.0};
    CHECK(r.classification() == "indeterminate");
}

TEST_CASE("dichotomy sweep records consistent energies per order") {
    Mesh mesh = build_disk_mesh(3);
    Conductivity one = Conductivity::uniform(mesh, 1.0);
    std::vector<int> d1 = ball(mesh, 0.5, 0.0, 0.25);
    std::vector<int> d2 = ball(mesh, -0.4, 0.0, 0.3);
    std::vector<int> orders = {2, 4, 6};
    const double eps = 1e-8;

    LocalizedPotentialResult r = locpot_dichotomy_sweep(mesh, one, d1, d2, orders, eps);
    REQUIRE(r.orders == orders);
    REQUIRE(r.e1.size() == orders.size());
    REQUIRE(r.e2.size() == orders.size());
    REQUIRE(r.currents.size() == orders.size());
    for (std::size_t k = 0; k < orders.size(); ++k) {
        CHECK(r.e1[k] >= 0.0);
        CHECK(r.e2[k] >= -1e-14);
        CHECK(r.ratio[k] == doctest::Approx(r.e1[k] / (r.e2[k] + eps)).epsilon(1e-12));
        CHECK(r.currents[k].size() == 2 * orders[k]);
    }

    CHECK_THROWS_AS(locpot_dichotomy_sweep(mesh, one, d1, d2, {}, eps), parameter_error);
    CHECK_THROWS_AS(locpot_dichotomy_sweep(mesh, one, {-1}, d2, orders, eps), parameter_error);
}

TEST_CASE("independence check with identical conductivities is exact") {
    Mesh mesh = build_disk_mesh(3);
    Conductivity one = Conductivity::uniform(mesh, 1.0);
    std::vector<int> d1 = ball(mesh, 0.5, 0.0, 0.25);
    std::vector<int> d2 = ball(mesh, -0.4, 0.0, 0.3);
    std::vector<int> orders = {2, 4};

    IndependenceReport rep = conductivity_independence_check(mesh, one, one, d1, d2, orders, 1e-8);
    REQUIRE(rep.e1_tau.size() == orders.size());
    for (std::size_t k = 0; k < orders.size(); ++k) {
        CHECK(rep.e1_tau[k] == doctest::Approx(rep.with_sigma.e1[k]).epsilon(1e-9));
        CHECK(rep.e2_tau[k] == doctest::Approx(rep.with_sigma.e2[k]).epsilon(1e-9));
    }
    CHECK(rep.mutual_bound >= 1.0);
    CHECK(rep.mutual_bound <= 1.0 + 1e-9);
    CHECK(rep.classification_agrees);
    CHECK(rep.classification_sigma == rep.classification_tau);
}

TEST_CASE("independence check rejects contrasts outside the shielding region") {
    Mesh mesh = build_disk_mesh(3);
    Conductivity one = Conductivity::uniform(mesh, 1.0);
    std::vector<int> d1 = ball(mesh, 0.5, 0.0, 0.25);
    std::vector<int> d2 = ball(mesh, -0.4, 0.0, 0.3);
    Conductivity tau = one.perturbed(mesh, d1, 1.0); // differs on d1, not inside d2

    CHECK_THROWS_AS(conductivity_independence_check(mesh, one, tau, d1, d2, {2, 4}, 1e-8),
                    parameter_error);
}

TEST_CASE("sweep csv carries a header and one row per order") {
    LocalizedPotentialResult r;
    r.orders = {4, 8};
    r.e1 = {1.5, 12.0};
    r.e2 = {0.25, 0.125};
    r.ratio = {6.0, 96.0};
    r.eps = 1e-8;

    std::ostringstream out;
    write_locpot_csv(out, r);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "order,E1,E2,ratio");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "4,");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "8,");
    CHECK(!std::getline(in, line));
}
