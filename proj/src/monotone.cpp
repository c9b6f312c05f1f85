#include "eit/monotone.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace eit {

void write_outcome_csv(std::ostream& out, const std::string& region_id, const TestOutcome& o) {
    out.precision(15);
    out << region_id << "," << o.alpha << "," << o.alpha_reg << "," << o.lambda_min << ","
        << (o.pass ? 1 : 0) << "\n";
}

double smallest_eigenvalue(const Eigen::MatrixXd& a, const Eigen::MatrixXd* gram) {
    Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    if (gram == nullptr) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw numerical_error("symmetric eigensolve failed");
        return es.eigenvalues().minCoeff();
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, *gram,
                                                                 Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw numerical_error("generalized eigensolve failed");
    return es.eigenvalues().minCoeff();
}

TestOutcome regularized_definiteness_test(const Eigen::MatrixXd& a, double alpha_reg,
                                          const Eigen::MatrixXd* gram) {
    if (a.rows() != a.cols()) throw parameter_error("definiteness test needs a square matrix");
    if (!(alpha_reg >= 0.0)) throw parameter_error("alpha_reg must be nonnegative");
    TestOutcome o;
    o.alpha_reg = alpha_reg;
    o.lambda_min = smallest_eigenvalue(a, gram);
    o.pass = o.lambda_min >= -alpha_reg;
    o.tested = "A >= 0";
    return o;
}

namespace {

const Eigen::MatrixXd* gram_or_null(const CurrentBasis& basis) {
    return basis.gram_is_identity() ? nullptr : &basis.gram();
}

std::vector<double> region_indicator(const Mesh& mesh, const std::vector<int>& region) {
    std::vector<double> chi(mesh.num_triangles(), 0.0);
    for (int t : region) {
        if (t < 0 || t >= mesh.num_triangles())
            throw parameter_error("region triangle index out of range");
        chi[t] = 1.0;
    }
    return chi;
}

void check_measured(const NtDMatrix& measured, int n) {
    if (measured.size() != n)
        throw parameter_error("measured NtD size does not match basis size");
}

} // namespace

TestOutcome definite_test_full(const NtDMatrix& measured, const Mesh& mesh,
                               const std::shared_ptr<const CurrentBasis>& basis,
                               const std::vector<int>& region, double alpha, double alpha_reg,
                               int sign) {
    if (!basis) throw parameter_error("definite_test_full: null basis");
    if (sign != 1 && sign != -1) throw parameter_error("sign must be +1 or -1");
    if (!(alpha > 0.0)) throw parameter_error("alpha must be positive");
    if (sign == -1 && !(alpha < 1.0))
        throw parameter_error("negative-direction full test requires alpha in (0,1)");
    check_measured(measured, basis->size());

    Conductivity test =
        Conductivity::uniform(mesh, 1.0).perturbed(mesh, region, sign * alpha);
    NtDMatrix test_ntd = assemble_ntd(mesh, test, basis);

    TestOutcome o;
    o.alpha = alpha;
    o.alpha_reg = alpha_reg;
    o.lambda_min =
        smallest_eigenvalue(sign * (test_ntd.m - measured.m), gram_or_null(*basis));
    o.pass = o.lambda_min >= -alpha_reg;
    o.tested = sign > 0 ? "NtD(1+a*chi) >= measured" : "NtD(1-a*chi) <= measured";
    return o;
}

TestOutcome definite_test_linearized(const NtDMatrix& measured, const FrechetOperator& f,
                                     const std::vector<int>& region, double alpha,
                                     double alpha_reg, int sign) {
    if (sign != 1 && sign != -1) throw parameter_error("sign must be +1 or -1");
    if (!(alpha > 0.0)) throw parameter_error("alpha must be positive");
    check_measured(measured, f.size());

    // NtD(1) reproduced from the stored background factors; avoids a second assembly
    Eigen::MatrixXd ntd1 = f.total_form();
    Eigen::MatrixXd test = ntd1 - sign * alpha * f.region_form(region);

    TestOutcome o;
    o.alpha = alpha;
    o.alpha_reg = alpha_reg;
    o.lambda_min = smallest_eigenvalue(sign * (test - measured.m), gram_or_null(*f.basis()));
    o.pass = o.lambda_min >= -alpha_reg;
    o.tested = sign > 0 ? "NtD(1)+a*F(chi) >= measured" : "NtD(1)-a*F(chi) <= measured";
    return o;
}

TestOutcome indefinite_test_full(const NtDMatrix& measured, const Mesh& mesh,
                                 const std::shared_ptr<const CurrentBasis>& basis,
                                 const TestSet& c, double alpha, double alpha_reg) {
    if (!basis) throw parameter_error("indefinite_test_full: null basis");
    if (!c.valid) throw parameter_error("test set is not valid (C = out C violated)");
    if (!(alpha > 1.0)) throw parameter_error("indefinite full test requires alpha > 1");
    check_measured(measured, basis->size());

    std::vector<int> region = pixel_region(c.field.grid(), c.field.cells());
    Conductivity upper = Conductivity::uniform(mesh, 1.0).perturbed(mesh, region, alpha);
    Conductivity lower = Conductivity::uniform(mesh, 1.0).perturbed(mesh, region, -1.0 / alpha);
    NtDMatrix upper_ntd = assemble_ntd(mesh, upper, basis);
    NtDMatrix lower_ntd = assemble_ntd(mesh, lower, basis);

    const Eigen::MatrixXd* gram = gram_or_null(*basis);
    double lam1 = smallest_eigenvalue(measured.m - upper_ntd.m, gram); // NtD(1+a chi) <= measured
    double lam2 = smallest_eigenvalue(lower_ntd.m - measured.m, gram); // measured <= NtD(1-chi/a)

    TestOutcome o;
    o.alpha = alpha;
    o.alpha_reg = alpha_reg;
    o.lambda_min = std::min(lam1, lam2);
    o.pass = o.lambda_min >= -alpha_reg;
    o.tested = "NtD(1+a*chi) <= measured <= NtD(1-chi/a)";
    return o;
}

TestOutcome indefinite_test_linearized(const NtDMatrix& measured, const FrechetOperator& f,
                                       const TestSet& c, double alpha, double alpha_reg) {
    if (!c.valid) throw parameter_error("test set is not valid (C = out C violated)");
    if (!(alpha > 0.0)) throw parameter_error("indefinite linearized test requires alpha > 0");
    check_measured(measured, f.size());

    std::vector<int> region = pixel_region(c.field.grid(), c.field.cells());
    Eigen::MatrixXd ntd1 = f.total_form();
    Eigen::MatrixXd shift = alpha * f.region_form(region); // = -alpha * apply_frechet(chi_C)

    const Eigen::MatrixXd* gram = gram_or_null(*f.basis());
    double lam1 = smallest_eigenvalue(measured.m - (ntd1 - shift), gram);
    double lam2 = smallest_eigenvalue((ntd1 + shift) - measured.m, gram);

    TestOutcome o;
    o.alpha = alpha;
    o.alpha_reg = alpha_reg;
    o.lambda_min = std::min(lam1, lam2);
    o.pass = o.lambda_min >= -alpha_reg;
    o.tested = "NtD(1)+a*F(chi) <= measured <= NtD(1)-a*F(chi)";
    return o;
}

SandwichReport sandwich_check(const Mesh& mesh, const std::shared_ptr<const CurrentBasis>& basis,
                              const Conductivity& sigma1, const Conductivity& sigma2) {
    if (!basis) throw parameter_error("sandwich_check: null basis");
    NtDMatrix ntd1 = assemble_ntd(mesh, sigma1, basis);
    NtDMatrix ntd2 = assemble_ntd(mesh, sigma2, basis);
    NeumannFactorization fact2(mesh, sigma2);

    SandwichReport rep;
    rep.worst_upper_slack = std::numeric_limits<double>::infinity();
    rep.worst_lower_slack = std::numeric_limits<double>::infinity();
    for (int j = 0; j < basis->size(); ++j) {
        SolutionField u2 = fact2.solve(*basis, j);
        double upper = 0.0, lower = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            double e = mesh.areas[t] * u2.gradients.row(t).squaredNorm();
            upper += (sigma1[t] - sigma2[t]) * e;
            lower += (sigma2[t] / sigma1[t]) * (sigma1[t] - sigma2[t]) * e;
        }
        double middle = ntd2.m(j, j) - ntd1.m(j, j);
        rep.worst_upper_slack = std::min(rep.worst_upper_slack, upper - middle);
        rep.worst_lower_slack = std::min(rep.worst_lower_slack, middle - lower);
    }
    return rep;
}

} // namespace eit
