#include "eit/phantom.hpp"

#include <cmath>
#include <random>

namespace eit {

bool ShapeSpec::contains(const Eigen::Vector2d& p) const {
    switch (kind) {
        case Kind::disk:
            return (p - center).norm() < radius;
        case Kind::rect:
            return p.x() >= lo.x() && p.x() < hi.x() && p.y() >= lo.y() && p.y() < hi.y();
        case Kind::lshape: {
            if (!(p.x() >= lo.x() && p.x() < hi.x() && p.y() >= lo.y() && p.y() < hi.y()))
                return false;
            Eigen::Vector2d mid = 0.5 * (lo + hi);
            return !(p.x() >= mid.x() && p.y() >= mid.y());
        }
    }
    return false;
}

Phantom make_phantom(const std::vector<ShapeSpec>& shapes, const PixelGrid& grid,
                     const Mesh& mesh, const std::string& name) {
    for (const auto& s : shapes) {
        if (!(s.contrast >= 0.25 && s.contrast <= 4.0) || s.contrast == 1.0)
            throw parameter_error("shape contrast must lie in [1/4, 4] and differ from 1");
        if (s.kind == ShapeSpec::Kind::disk && !(s.radius > 0.0))
            throw parameter_error("disk shape needs positive radius");
        if (s.kind != ShapeSpec::Kind::disk &&
            !(s.lo.x() < s.hi.x() && s.lo.y() < s.hi.y()))
            throw parameter_error("rect/lshape needs lo < hi corners");
    }

    // rasterize: cell value = contrast of the first shape containing its center
    std::vector<double> cell_value(grid.num_cells(), 1.0);
    for (int c = 0; c < grid.num_cells(); ++c) {
        Eigen::Vector2d p = grid.cell_center(c);
        for (const auto& s : shapes) {
            if (s.contains(p)) {
                if (!grid.is_interior(c))
                    throw parameter_error("shape reaches outside the disk interior");
                if (cell_value[c] != 1.0 && cell_value[c] != s.contrast)
                    throw parameter_error("shapes with different contrasts overlap");
                cell_value[c] = s.contrast;
                break;
            }
        }
    }

    Phantom ph{Conductivity::uniform(mesh, 1.0), IndicatorField(grid), IndicatorField(grid),
               name, {}};
    for (const auto& s : shapes) ph.contrasts.push_back(s.contrast);

    for (int c = 0; c < grid.num_cells(); ++c) {
        if (cell_value[c] > 1.0) ph.d_plus.set(c, true);
        if (cell_value[c] < 1.0) ph.d_minus.set(c, true);
    }

    // separation: no D+ cell within Chebyshev distance 1 of a D- cell
    for (int c : ph.d_plus.cells()) {
        int x = grid.cell_x(c), y = grid.cell_y(c);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= grid.resolution || ny >= grid.resolution) continue;
                if (ph.d_minus.get(grid.cell_index(nx, ny)))
                    throw parameter_error(
                        "opposite-sign shapes must be separated by at least one cell");
            }
    }

    std::vector<double> tri_value(mesh.num_triangles(), 1.0);
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (cell_value[c] == 1.0) continue;
        for (int t : grid.cell_triangles(c)) tri_value[t] = cell_value[c];
    }
    ph.sigma = Conductivity(mesh, std::move(tri_value));
    return ph;
}

NoisyMeasurement add_noise(const NtDMatrix& a, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) throw parameter_error("noise level must be nonnegative");
    const int n = a.size();
    NoisyMeasurement out;
    out.delta = delta;
    out.seed = seed;
    out.perturbation = Eigen::MatrixXd::Zero(n, n);
    if (delta > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = uni(rng);
                out.perturbation(i, j) = v;
                out.perturbation(j, i) = v;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.perturbation,
                                                          Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw numerical_error("noise eigensolve failed");
        double norm = es.eigenvalues().cwiseAbs().maxCoeff();
        if (norm == 0.0) throw numerical_error("degenerate noise draw");
        out.perturbation *= delta / norm;
    }
    out.measurement.m = a.m + out.perturbation;
    out.measurement.basis = a.basis;
    return out;
}

} // namespace eit
