#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eit/forward.hpp"
#include "eit/geometry.hpp"

namespace eit {

/// One inclusion shape with its conductivity contrast. Contrast is the
/// absolute conductivity value on the shape (background is 1); allowed range
/// [1/4, 4], never 1.
struct ShapeSpec {
    enum class Kind { disk, rect, lshape };
    Kind kind = Kind::disk;
    Eigen::Vector2d center{0, 0}; // disk
    double radius = 0.0;          // disk
    Eigen::Vector2d lo{0, 0};     // rect / lshape bounding box corners
    Eigen::Vector2d hi{0, 0};
    double contrast = 2.0;

    /// Point membership; the lshape is its bounding box minus the upper-right quadrant.
    bool contains(const Eigen::Vector2d& p) const;
};

/// Cell-aligned ground-truth scenario: the shapes are rasterized to grid cells
/// (cell in shape iff its center is), and the conductivity contrast is applied
/// to exactly the triangles of those cells, so the ground-truth cell sets and
/// the conductivity support coincide by construction.
struct Phantom {
    Conductivity sigma;
    IndicatorField d_plus;  // cells with sigma > 1
    IndicatorField d_minus; // cells with sigma < 1
    std::string name;
    std::vector<double> contrasts;
};

/// Build a phantom. Opposite-sign shapes must be separated by at least one
/// cell (Chebyshev distance > 1 between any D+ and D- cell), and every shape
/// cell must be interior.
Phantom make_phantom(const std::vector<ShapeSpec>& shapes, const PixelGrid& grid,
                     const Mesh& mesh, const std::string& name = "");

/// Symmetric perturbation with exact spectral norm delta, seeded.
struct NoisyMeasurement {
    NtDMatrix measurement;
    Eigen::MatrixXd perturbation;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

NoisyMeasurement add_noise(const NtDMatrix& a, double delta, std::uint64_t seed);

} // namespace eit
