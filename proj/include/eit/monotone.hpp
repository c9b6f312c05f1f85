#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eit/forward.hpp"
#include "eit/geometry.hpp"

namespace eit {

/// Result of a regularized Loewner-order test.
struct TestOutcome {
    bool pass = false;
    double lambda_min = 0.0; // smallest eigenvalue over all tested inequalities
    double alpha = 0.0;      // test level
    double alpha_reg = 0.0;  // regularization level
    std::string tested;      // which inequality/inequalities were evaluated
};

/// CSV row "region_id,alpha,alpha_reg,lambda_min,pass".
void write_outcome_csv(std::ostream& out, const std::string& region_id, const TestOutcome& o);

/// Smallest eigenvalue of a symmetric matrix, optionally generalized against a
/// positive-definite Gram matrix so the value means the operator inequality on
/// the current space rather than a coefficient-space artifact.
double smallest_eigenvalue(const Eigen::MatrixXd& a, const Eigen::MatrixXd* gram = nullptr);

/// Regularized definiteness test: pass iff lambda_min(sym(A)) >= -alpha_reg.
TestOutcome regularized_definiteness_test(const Eigen::MatrixXd& a, double alpha_reg,
                                          const Eigen::MatrixXd* gram = nullptr);

/// Definite-case ball test with a freshly assembled test conductivity:
/// sign +1 tests NtD(1 + alpha chi_region) >= measured (up to alpha_reg),
/// sign -1 tests NtD(1 - alpha chi_region) <= measured (alpha must be < 1).
TestOutcome definite_test_full(const NtDMatrix& measured, const Mesh& mesh,
                               const std::shared_ptr<const CurrentBasis>& basis,
                               const std::vector<int>& region, double alpha, double alpha_reg,
                               int sign);

/// Definite-case ball test against the linearized operator:
/// sign +1 tests NtD(1) + alpha F(chi_region) >= measured (up to alpha_reg).
TestOutcome definite_test_linearized(const NtDMatrix& measured, const FrechetOperator& f,
                                     const std::vector<int>& region, double alpha,
                                     double alpha_reg, int sign);

/// Indefinite-case two-sided test with assembled bracket conductivities
/// 1 + alpha chi_C and 1 - (1/alpha) chi_C; requires alpha > 1 and C = out C.
TestOutcome indefinite_test_full(const NtDMatrix& measured, const Mesh& mesh,
                                 const std::shared_ptr<const CurrentBasis>& basis,
                                 const TestSet& c, double alpha, double alpha_reg);

/// Indefinite-case two-sided linearized test with bracket operators
/// NtD(1) +- alpha F(chi_C); requires alpha > 0 and C = out C.
TestOutcome indefinite_test_linearized(const NtDMatrix& measured, const FrechetOperator& f,
                                       const TestSet& c, double alpha, double alpha_reg);

/// Worst-case slack of the two-sided energy bound
///   int (s1-s2)|grad u2|^2  >=  <g,(NtD(s2)-NtD(s1))g>  >=  int (s2/s1)(s1-s2)|grad u2|^2
/// evaluated per basis current. Positive slack means the inequality holds.
struct SandwichReport {
    double worst_upper_slack = 0.0;
    double worst_lower_slack = 0.0;
};

SandwichReport sandwich_check(const Mesh& mesh, const std::shared_ptr<const CurrentBasis>& basis,
                              const Conductivity& sigma1, const Conductivity& sigma2);

} // namespace eit
