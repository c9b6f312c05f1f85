#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "eit/mesh.hpp"

namespace eit {

/// Piecewise-constant conductivity, one value per triangle.
/// Values are clamped-checked against sigma_min at construction; a value at or
/// below zero or below sigma_min is a parameter error, never silently fixed.
class Conductivity {
public:
    static constexpr double sigma_min = 1e-6;

    Conductivity(const Mesh& mesh, std::vector<double> values);
    static Conductivity uniform(const Mesh& mesh, double value);

    double operator[](int t) const { return values_[t]; }
    int size() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }

    /// Returns a copy with values[t] += delta for t in region.
    Conductivity perturbed(const Mesh& mesh, const std::vector<int>& region, double delta) const;

private:
    std::vector<double> values_;
};

/// CSV export/import: one line "triangle_index,value" per triangle.
void export_conductivity(const Conductivity& sigma, std::ostream& out);
Conductivity import_conductivity(const Mesh& mesh, std::istream& in);

/// Finite family of boundary currents, stored as nodal values on the boundary
/// vertices (column j = basis function j).
///
/// Invariants: every function has zero weighted boundary mean (trapezoidal
/// weights) to within 1e-10; the weighted Gram matrix is symmetric positive
/// definite (linear independence). If an arc is set, every function vanishes
/// on boundary vertices outside the arc.
class CurrentBasis {
public:
    /// Real Fourier basis, functions pi^{-1/2} cos(n theta), pi^{-1/2} sin(n theta)
    /// for n = 1..order; N = 2*order functions. Orthonormal under the weighted
    /// boundary product (equispaced trapezoid is exact for these modes).
    static CurrentBasis fourier(const Mesh& mesh, int order);

    /// Per-boundary-edge indicator basis on the arc S = {theta in [arc_start, arc_end]}
    /// (angles in radians; the arc is traversed counterclockwise from arc_start,
    /// wrapping allowed). Each indicator has its weighted mean removed inside S
    /// so it vanishes outside S and has zero global mean; if S is the full
    /// boundary, one function is dropped to keep the set independent.
    static CurrentBasis edge_indicators(const Mesh& mesh, double arc_start, double arc_end);

    int size() const { return static_cast<int>(nodal_.cols()); }
    int num_boundary() const { return static_cast<int>(nodal_.rows()); }

    /// Nodal values: row k = boundary vertex k (mesh boundary order), column j = function j.
    const Eigen::MatrixXd& nodal() const { return nodal_; }
    /// Trapezoidal boundary weights, row k matching nodal().
    const Eigen::VectorXd& weights() const { return weights_; }
    /// Weighted boundary Gram matrix G_ij = sum_k w_k g_i(k) g_j(k).
    const Eigen::MatrixXd& gram() const { return gram_; }
    bool gram_is_identity() const { return gram_identity_; }

    /// Half-open angular arc [start, end) in radians, empty if full boundary.
    std::optional<std::pair<double, double>> arc() const { return arc_; }

private:
    CurrentBasis() = default;
    void finalize(const Mesh& mesh);

    Eigen::MatrixXd nodal_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd gram_;
    bool gram_identity_ = false;
    std::optional<std::pair<double, double>> arc_;
};

/// FEM solution of one Neumann problem: nodal potential with zero weighted
/// boundary mean, plus cached per-triangle gradients.
struct SolutionField {
    Eigen::VectorXd nodal;       // size = num_vertices
    Eigen::MatrixXd gradients;   // num_triangles x 2
    double residual = 0.0;       // relative residual of the saddle solve

    /// sum over region triangles of area * |grad u|^2 (whole mesh if region empty).
    double energy(const Mesh& mesh, const std::vector<int>& region) const;
};

/// Direct factorization of the P1 stiffness system for one conductivity with
/// the zero-boundary-mean constraint attached as a single Lagrange multiplier
/// row/column (trapezoidal boundary weights). Factor once, solve many.
class NeumannFactorization {
public:
    NeumannFactorization(const Mesh& mesh, const Conductivity& sigma);

    /// Solve with boundary current given by nodal values on boundary vertices.
    SolutionField solve(const Eigen::VectorXd& boundary_current) const;

    /// Solve for basis column j.
    SolutionField solve(const CurrentBasis& basis, int j) const;

private:
    const Mesh* mesh_;
    Eigen::SparseMatrix<double> system_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    bool use_lu_ = false;
    Eigen::VectorXd boundary_weights_; // size num_vertices, zero off-boundary
};

SolutionField solve_neumann(const Mesh& mesh, const Conductivity& sigma,
                            const CurrentBasis& basis, int j);

/// Discrete Neumann-to-Dirichlet matrix on a current basis:
/// M_ij = weighted boundary pairing of g_i with the trace of u^{g_j}.
/// Symmetrized after an asymmetry check (raw asymmetry beyond 1e-8 relative is
/// a numerical error).
struct NtDMatrix {
    Eigen::MatrixXd m;
    std::shared_ptr<const CurrentBasis> basis; // may be null for imported matrices

    int size() const { return static_cast<int>(m.rows()); }
};

NtDMatrix assemble_ntd(const Mesh& mesh, const Conductivity& sigma,
                       const std::shared_ptr<const CurrentBasis>& basis);

/// CSV: first line N, then N comma-separated rows with >= 12 significant digits.
void export_ntd(const NtDMatrix& ntd, std::ostream& out);
NtDMatrix import_ntd(std::istream& in);

/// Frechet derivative of the NtD map at sigma == 1, stored as per-triangle
/// gradient factors of the background solutions: row block t holds the N x 2
/// matrix U_t with rows grad u^{g_i}|_t, so the triangle contribution is
/// G_t = area_t * U_t U_t^T and apply(kappa) = -sum_t kappa_t G_t.
class FrechetOperator {
public:
    FrechetOperator(const Mesh& mesh, const std::shared_ptr<const CurrentBasis>& basis);

    int size() const { return n_; }
    const std::shared_ptr<const CurrentBasis>& basis() const { return basis_; }

    /// N x N contribution matrix G_t of one triangle (positive semidefinite).
    Eigen::MatrixXd triangle_matrix(int t) const;

    /// Derivative applied to a per-triangle density kappa: -sum_t kappa_t G_t.
    Eigen::MatrixXd apply(const std::vector<double>& kappa) const;

    /// Background energy form of a region: sum over region of G_t. Equals the
    /// quadratic form of -apply(indicator of region).
    Eigen::MatrixXd region_form(const std::vector<int>& region) const;

    /// Sum over all triangles; must reproduce the NtD(1) matrix to 1e-9 relative.
    Eigen::MatrixXd total_form() const;

private:
    const Mesh* mesh_;
    std::shared_ptr<const CurrentBasis> basis_;
    int n_ = 0;
    Eigen::MatrixXd factors_; // (num_triangles * N) x 2, row block per triangle
};

/// FEM-error scale of a mesh/basis pair: twice the largest absolute deviation
/// between the eigenvalues of the assembled NtD(1) on the Fourier basis of the
/// given order and the analytic values 1/n (each twice). Used as the
/// discretization part of the regularization level.
struct FemCalibration {
    double eps_fem = 0.0;
    double max_deviation = 0.0;
    std::vector<double> fem_eigenvalues;      // descending
    std::vector<double> analytic_eigenvalues; // descending
};

FemCalibration calibrate_fem_tolerance(const Mesh& mesh, int fourier_order);

/// Analytic NtD eigenvalue of the unit-contrast disk for Fourier mode n: 1/n.
double analytic_ntd_eigenvalue_unit(int n);

/// Analytic NtD eigenvalue for a concentric inclusion of radius rho and
/// contrast k: (1/n) (1 - mu rho^{2n}) / (1 + mu rho^{2n}), mu = (k-1)/(k+1).
double analytic_ntd_eigenvalue_concentric(int n, double rho, double contrast);

} // namespace eit
