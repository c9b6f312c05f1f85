#include "eit/locpot.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "eit/errors.hpp"

namespace eit {

namespace {

// Rows 2t, 2t+1 hold sqrt(area_t) * grad u|_t, so that for region gradients
// stacked into B the form B^T B sums area * grad.grad exactly symmetrically.
Eigen::MatrixXd scaled_gradients(const Mesh& mesh, const NeumannFactorization& fac,
                                 const CurrentBasis& basis) {
    const int n = basis.size();
    const int nt = static_cast<int>(mesh.triangles.size());
    Eigen::MatrixXd g(2 * nt, n);
    for (int j = 0; j < n; ++j) {
        SolutionField u = fac.solve(basis, j);
        for (int t = 0; t < nt; ++t) {
            const double s = std::sqrt(mesh.areas[t]);
            g(2 * t, j) = s * u.gradients(t, 0);
            g(2 * t + 1, j) = s * u.gradients(t, 1);
        }
    }
    return g;
}

Eigen::MatrixXd region_form(const Eigen::MatrixXd& grads, const std::vector<int>& region) {
    const int n = static_cast<int>(grads.cols());
    Eigen::MatrixXd b(2 * region.size(), n);
    for (std::size_t k = 0; k < region.size(); ++k) {
        b.row(2 * k) = grads.row(2 * region[k]);
        b.row(2 * k + 1) = grads.row(2 * region[k] + 1);
    }
    Eigen::MatrixXd a = b.transpose() * b;
    return 0.5 * (a + a.transpose());
}

void check_region(const Mesh& mesh, const std::vector<int>& region) {
    const int nt = static_cast<int>(mesh.triangles.size());
    for (int t : region) {
        if (t < 0 || t >= nt) throw parameter_error("region triangle index out of range");
    }
}

} // namespace

EnergyForm energy_form(const Mesh& mesh, const Conductivity& sigma,
                       const CurrentBasis& basis, const std::vector<int>& region) {
    check_region(mesh, region);
    NeumannFactorization fac(mesh, sigma);
    Eigen::MatrixXd grads = scaled_gradients(mesh, fac, basis);
    EnergyForm form;
    form.a = region_form(grads, region);
    form.region = region;
    form.basis = &basis;
    return form;
}

LocalizedPotential localized_potential(const EnergyForm& a1, const EnergyForm& a2, double eps) {
    if (!(eps > 0)) throw parameter_error("localized_potential: eps must be positive");
    if (a1.a.rows() != a2.a.rows())
        throw parameter_error("localized_potential: forms have different sizes");
    if (a1.basis && a2.basis && a1.basis != a2.basis)
        throw parameter_error("localized_potential: forms built from different bases");

    const int n = static_cast<int>(a1.a.rows());
    Eigen::MatrixXd b = a2.a + eps * Eigen::MatrixXd::Identity(n, n);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a1.a, b);
    if (es.info() != Eigen::Success)
        throw numerical_error("localized_potential: generalized eigensolver failed");

    LocalizedPotential lp;
    lp.g = es.eigenvectors().col(n - 1);
    lp.ratio = es.eigenvalues()(n - 1);
    const double norm2 = lp.g.dot(b * lp.g);
    if (!(norm2 > 0) || !std::isfinite(norm2))
        throw numerical_error("localized_potential: degenerate constraint norm");
    lp.g /= std::sqrt(norm2);
    return lp;
}

std::string LocalizedPotentialResult::classification() const {
    if (ratio.empty()) return "indeterminate";
    const double first = ratio.front();
    double maxr = first;
    for (double r : ratio) maxr = std::max(maxr, r);
    if (maxr <= 2.0 * first) return "bounded";
    if (ratio.back() >= 10.0 * first) return "blow-up";
    return "indeterminate";
}

LocalizedPotentialResult locpot_dichotomy_sweep(const Mesh& mesh, const Conductivity& sigma,
                                                const std::vector<int>& d1,
                                                const std::vector<int>& d2,
                                                const std::vector<int>& orders, double eps) {
    if (orders.empty()) throw parameter_error("locpot_dichotomy_sweep: no orders given");
    check_region(mesh, d1);
    check_region(mesh, d2);

    NeumannFactorization fac(mesh, sigma);
    LocalizedPotentialResult result;
    result.eps = eps;
    for (int order : orders) {
        CurrentBasis basis = CurrentBasis::fourier(mesh, order);
        Eigen::MatrixXd grads = scaled_gradients(mesh, fac, basis);
        EnergyForm a1{region_form(grads, d1), d1, &basis};
        EnergyForm a2{region_form(grads, d2), d2, &basis};
        LocalizedPotential lp = localized_potential(a1, a2, eps);
        const double e1 = lp.g.dot(a1.a * lp.g);
        const double e2 = lp.g.dot(a2.a * lp.g);
        result.orders.push_back(order);
        result.currents.push_back(lp.g);
        result.e1.push_back(e1);
        result.e2.push_back(e2);
        result.ratio.push_back(e1 / (e2 + eps));
    }
    return result;
}

IndependenceReport conductivity_independence_check(const Mesh& mesh, const Conductivity& sigma,
                                                   const Conductivity& tau,
                                                   const std::vector<int>& d1,
                                                   const std::vector<int>& d2,
                                                   const std::vector<int>& orders, double eps) {
    if (sigma.size() != tau.size())
        throw parameter_error("conductivity_independence_check: size mismatch");
    std::vector<char> in_d2(mesh.triangles.size(), 0);
    for (int t : d2) in_d2[t] = 1;
    for (int t = 0; t < sigma.size(); ++t) {
        if (sigma[t] != tau[t] && !in_d2[t])
            throw parameter_error(
                "conductivity_independence_check: sigma and tau differ outside the shielding region");
    }

    IndependenceReport report;
    report.with_sigma = locpot_dichotomy_sweep(mesh, sigma, d1, d2, orders, eps);

    NeumannFactorization fac_tau(mesh, tau);
    for (std::size_t k = 0; k < report.with_sigma.orders.size(); ++k) {
        CurrentBasis basis = CurrentBasis::fourier(mesh, report.with_sigma.orders[k]);
        Eigen::MatrixXd grads = scaled_gradients(mesh, fac_tau, basis);
        const Eigen::MatrixXd a1 = region_form(grads, d1);
        const Eigen::MatrixXd a2 = region_form(grads, d2);
        const Eigen::VectorXd& g = report.with_sigma.currents[k];
        const double e1 = g.dot(a1 * g);
        const double e2 = g.dot(a2 * g);
        report.e1_tau.push_back(e1);
        report.e2_tau.push_back(e2);
        report.ratio_tau.push_back(e1 / (e2 + eps));
    }

    double bound = 0.0;
    for (std::size_t k = 0; k < report.e2_tau.size(); ++k) {
        const double a = report.with_sigma.e2[k] + eps;
        const double b = report.e2_tau[k] + eps;
        bound = std::max(bound, std::max(a / b, b / a));
    }
    report.mutual_bound = bound;

    LocalizedPotentialResult tau_result;
    tau_result.orders = report.with_sigma.orders;
    tau_result.ratio = report.ratio_tau;
    tau_result.eps = eps;
    report.classification_sigma = report.with_sigma.classification();
    report.classification_tau = tau_result.classification();
    report.classification_agrees = report.classification_sigma == report.classification_tau;
    return report;
}

void write_locpot_csv(std::ostream& out, const LocalizedPotentialResult& r) {
    out << "order,E1,E2,ratio\n";
    const auto old = out.precision(15);
    for (std::size_t k = 0; k < r.orders.size(); ++k) {
        out << r.orders[k] << ',' << r.e1[k] << ',' << r.e2[k] << ',' << r.ratio[k] << '\n';
    }
    out.precision(old);
}

} // namespace eit
