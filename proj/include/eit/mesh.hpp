#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "eit/errors.hpp"

namespace eit {

/// Conforming triangulation of the unit disk.
///
/// Built only by build_disk_mesh(): a hexagonal fan around the origin,
/// refined `level` times by midpoint subdivision with boundary midpoints
/// projected back onto the unit circle. Boundary vertices stay equally
/// spaced, so the triangulated domain is exactly the inscribed regular
/// polygon with 6*2^level sides.
///
/// Invariants established at construction:
///  - every triangle has positive signed area (counterclockwise vertices)
///  - every interior edge is shared by exactly two triangles
///  - boundary vertices lie on the unit circle to within 1e-12
///  - boundary edges form a single closed counterclockwise curve
///  - vertices of level L are a bit-identical prefix of level L+1 vertices
struct Mesh {
    int level = 0;

    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> triangles;

    /// Counterclockwise boundary loop: edge k joins boundary_vertices[k] and
    /// boundary_vertices[(k+1) % K].
    std::vector<int> boundary_vertices;
    /// Angle of each boundary vertex in [0, 2*pi), same order as boundary_vertices.
    std::vector<double> boundary_angles;

    /// Per-triangle area and P1 shape-function gradients, cached at build time.
    std::vector<double> areas;
    std::vector<std::array<Eigen::Vector2d, 3>> shape_gradients;

    /// Per-triangle centroid, cached for region assignment.
    std::vector<Eigen::Vector2d> centroids;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_boundary() const { return static_cast<int>(boundary_vertices.size()); }

    /// Chord length of boundary edge k.
    double boundary_edge_length(int k) const;

    /// Trapezoidal weight of boundary vertex k (half the two adjacent chord
    /// lengths); sums to the polygon perimeter.
    double boundary_weight(int k) const;

    double total_area() const;
};

/// Build the level-`level` disk mesh. level must lie in [0, 8].
Mesh build_disk_mesh(int level);

/// Plain-text mesh export:
///   vertices N triangles M boundary K
///   N lines "x y", M lines "i j k" (0-based), K lines "i j" (boundary edges).
void export_mesh(const Mesh& mesh, std::ostream& out);

/// Uniform pixel grid over the bounding box [-1,1]^2.
///
/// A cell is interior when its center lies strictly inside the unit disk.
/// Every triangle of the mesh is assigned to exactly one cell, the one
/// containing its centroid.
struct PixelGrid {
    PixelGrid(const Mesh& mesh, int resolution);

    int resolution = 0;
    double pitch = 0.0; // cell side length, 2/resolution

    int num_cells() const { return resolution * resolution; }
    int cell_index(int ix, int iy) const { return iy * resolution + ix; }
    int cell_x(int cell) const { return cell % resolution; }
    int cell_y(int cell) const { return cell / resolution; }

    Eigen::Vector2d cell_center(int cell) const;
    bool is_interior(int cell) const { return interior_[cell] != 0; }
    int num_interior() const { return num_interior_; }

    /// Triangles whose centroid lies in the cell. Cells partition all
    /// centroids; a non-interior cell straddling the boundary may be nonempty.
    const std::vector<int>& cell_triangles(int cell) const { return cell_triangles_[cell]; }

    /// Cell containing a point of the open bounding box, or -1 outside.
    int cell_of_point(const Eigen::Vector2d& p) const;

private:
    std::vector<std::uint8_t> interior_;
    std::vector<std::vector<int>> cell_triangles_;
    int num_interior_ = 0;
};

/// Triangle indices whose centroid lies in the open ball.
std::vector<int> ball_to_region(const Mesh& mesh, const Eigen::Vector2d& center, double radius);

/// Triangle indices whose centroid radius lies in [inner, outer).
std::vector<int> annulus_to_region(const Mesh& mesh, const Eigen::Vector2d& center,
                                   double inner, double outer);

/// Union of cell_triangles over the given cells (cells given as flat indices).
std::vector<int> pixel_region(const PixelGrid& grid, const std::vector<int>& cells);

} // namespace eit
