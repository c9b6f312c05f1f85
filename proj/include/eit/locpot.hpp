#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eit/forward.hpp"

namespace eit {

/// Gram form of interior gradient energy on a triangle region:
/// g^T a g = sum over region triangles of area * |grad u^g_sigma|^2,
/// where u^g solves the Neumann problem for the basis current with
/// coefficients g. Keeps the region and provenance it was built from.
struct EnergyForm {
    Eigen::MatrixXd a;
    std::vector<int> region;
    const CurrentBasis* basis = nullptr; // identity for compatibility checks
};

EnergyForm energy_form(const Mesh& mesh, const Conductivity& sigma,
                       const CurrentBasis& basis, const std::vector<int>& region);

/// Maximize g^T A1 g subject to g^T (A2 + eps I) g = 1: the top eigenpair of
/// the symmetric pencil (A1, A2 + eps I). `ratio` is that top generalized
/// eigenvalue; `g` is the maximizer normalized in the constraint metric.
struct LocalizedPotential {
    Eigen::VectorXd g;
    double ratio = 0.0;
};

LocalizedPotential localized_potential(const EnergyForm& a1, const EnergyForm& a2, double eps);

/// Sweep over Fourier orders: per order the optimal current and its energies
/// E1 (target region) and E2 (shielding region), with ratio = E1/(E2+eps).
struct LocalizedPotentialResult {
    std::vector<int> orders;
    std::vector<Eigen::VectorXd> currents; // normalized g^T(A2+eps I)g = 1
    std::vector<double> e1, e2, ratio;
    double eps = 0.0;

    /// "bounded" when max ratio <= 2x the first-order ratio, else "blow-up"
    /// when the last ratio >= 10x the first, else "indeterminate". The
    /// thresholds are pinned to the fixture geometries, not universal claims.
    std::string classification() const;
};

LocalizedPotentialResult locpot_dichotomy_sweep(const Mesh& mesh, const Conductivity& sigma,
                                                const std::vector<int>& d1,
                                                const std::vector<int>& d2,
                                                const std::vector<int>& orders, double eps);

/// Reuse the sigma-optimal currents against the tau-forward map. Requires
/// supp(sigma - tau) inside d2's triangles; reports both energy sequences,
/// the empirical mutual bound on the shielded energies, and whether the
/// blow-up/bounded classification agrees.
struct IndependenceReport {
    LocalizedPotentialResult with_sigma;
    std::vector<double> e1_tau, e2_tau, ratio_tau;
    double mutual_bound = 0.0;
    std::string classification_sigma, classification_tau;
    bool classification_agrees = false;
};

IndependenceReport conductivity_independence_check(const Mesh& mesh, const Conductivity& sigma,
                                                   const Conductivity& tau,
                                                   const std::vector<int>& d1,
                                                   const std::vector<int>& d2,
                                                   const std::vector<int>& orders, double eps);

/// CSV with header "order,E1,E2,ratio".
void write_locpot_csv(std::ostream& out, const LocalizedPotentialResult& r);

} // namespace eit
