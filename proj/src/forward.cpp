#include "eit/forward.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace eit {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd boundary_weight_vector(const Mesh& mesh) {
    Eigen::VectorXd w(mesh.num_boundary());
    for (int k = 0; k < mesh.num_boundary(); ++k) w[k] = mesh.boundary_weight(k);
    return w;
}

} // namespace

Conductivity::Conductivity(const Mesh& mesh, std::vector<double> values)
    : values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != mesh.num_triangles())
        throw parameter_error("conductivity needs one value per triangle");
    for (std::size_t t = 0; t < values_.size(); ++t)
        if (!(values_[t] >= sigma_min))
            throw parameter_error("conductivity value " + std::to_string(values_[t]) +
                                  " at triangle " + std::to_string(t) + " is below sigma_min");
}

Conductivity Conductivity::uniform(const Mesh& mesh, double value) {
    return Conductivity(mesh, std::vector<double>(mesh.num_triangles(), value));
}

Conductivity Conductivity::perturbed(const Mesh& mesh, const std::vector<int>& region,
                                     double delta) const {
    std::vector<double> v = values_;
    for (int t : region) {
        if (t < 0 || t >= static_cast<int>(v.size()))
            throw parameter_error("region triangle index out of range");
        v[t] += delta;
    }
    return Conductivity(mesh, std::move(v));
}

void export_conductivity(const Conductivity& sigma, std::ostream& out) {
    out.precision(15);
    for (int t = 0; t < sigma.size(); ++t) out << t << "," << sigma[t] << "\n";
}

Conductivity import_conductivity(const Mesh& mesh, std::istream& in) {
    std::vector<double> v(mesh.num_triangles(),
                          std::numeric_limits<double>::quiet_NaN());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw parameter_error("conductivity CSV: missing comma");
        int t = std::stoi(line.substr(0, comma));
        if (t < 0 || t >= mesh.num_triangles())
            throw parameter_error("conductivity CSV: triangle index out of range");
        v[t] = std::stod(line.substr(comma + 1));
    }
    for (double x : v)
        if (std::isnan(x)) throw parameter_error("conductivity CSV: missing triangle");
    return Conductivity(mesh, std::move(v));
}

void CurrentBasis::finalize(const Mesh& mesh) {
    weights_ = boundary_weight_vector(mesh);

    // Zero weighted mean within 1e-10. Arc-restricted functions are exactly
    // zero-mean by construction and may not be shifted globally (that would
    // break the vanish-outside-arc invariant), so they are only verified.
    const double wsum = weights_.sum();
    for (int j = 0; j < nodal_.cols(); ++j) {
        double mean = weights_.dot(nodal_.col(j)) / wsum;
        if (arc_) {
            if (std::abs(mean) * wsum > 1e-10)
                throw numerical_error("arc basis function has nonzero boundary mean");
        } else {
            nodal_.col(j).array() -= mean;
        }
    }

    gram_ = nodal_.transpose() * weights_.asDiagonal() * nodal_;
    gram_ = 0.5 * (gram_ + gram_.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("basis Gram eigensolve failed");
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-10 * hi))
        throw numerical_error("basis functions are numerically dependent (Gram min/max " +
                              std::to_string(lo) + "/" + std::to_string(hi) + ")");
    gram_identity_ = (gram_ - Eigen::MatrixXd::Identity(size(), size())).cwiseAbs().maxCoeff() < 1e-8;
}

CurrentBasis CurrentBasis::fourier(const Mesh& mesh, int order) {
    const int nb = mesh.num_boundary();
    if (order < 1 || 4 * order > nb)
        throw parameter_error("fourier order must satisfy 1 <= order <= boundary_count/4");
    CurrentBasis b;
    b.nodal_.resize(nb, 2 * order);
    for (int k = 0; k < nb; ++k) {
        double th = mesh.boundary_angles[k];
        for (int n = 1; n <= order; ++n) {
            b.nodal_(k, 2 * (n - 1)) = std::cos(n * th);
            b.nodal_(k, 2 * (n - 1) + 1) = std::sin(n * th);
        }
    }
    // Normalize against the discrete weighted norm (chord-length trapezoid),
    // not the continuum 1/sqrt(pi): distinct modes are exactly orthogonal
    // under the equal boundary weights, so this makes the Gram exactly the
    // identity.
    Eigen::VectorXd w = boundary_weight_vector(mesh);
    for (int j = 0; j < b.nodal_.cols(); ++j) {
        double nrm = std::sqrt(b.nodal_.col(j).dot(w.asDiagonal() * b.nodal_.col(j)));
        b.nodal_.col(j) /= nrm;
    }
    b.finalize(mesh);
    return b;
}

CurrentBasis CurrentBasis::edge_indicators(const Mesh& mesh, double arc_start, double arc_end) {
    const int nb = mesh.num_boundary();
    const bool full = (arc_end - arc_start) >= 2.0 * kPi - 1e-12;

    auto in_arc = [&](double th) {
        if (full) return true;
        double span = arc_end - arc_start;
        if (!(span > 0.0)) throw parameter_error("arc must have positive angular span");
        double d = std::fmod(th - arc_start, 2.0 * kPi);
        if (d < 0) d += 2.0 * kPi;
        return d <= span + 1e-12;
    };

    std::vector<std::uint8_t> vin(nb, 0);
    for (int k = 0; k < nb; ++k) vin[k] = in_arc(mesh.boundary_angles[k]) ? 1 : 0;

    std::vector<int> edges; // edge k joins boundary slots k and (k+1)%nb
    for (int k = 0; k < nb; ++k)
        if (vin[k] && vin[(k + 1) % nb]) edges.push_back(k);
    if (edges.size() < 2) throw parameter_error("arc too small: fewer than two boundary edges");

    Eigen::VectorXd w = boundary_weight_vector(mesh);
    Eigen::VectorXd chi_s = Eigen::VectorXd::Zero(nb);
    for (int k = 0; k < nb; ++k) chi_s[k] = vin[k] ? 1.0 : 0.0;
    const double ws = w.dot(chi_s);

    auto build = [&](const std::vector<int>& kept) {
        Eigen::MatrixXd nodal = Eigen::MatrixXd::Zero(nb, static_cast<int>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j) {
            int k = kept[j];
            Eigen::VectorXd chi_e = Eigen::VectorXd::Zero(nb);
            chi_e[k] = 1.0;
            chi_e[(k + 1) % nb] = 1.0;
            double we = w.dot(chi_e);
            nodal.col(static_cast<int>(j)) = chi_e - (we / ws) * chi_s;
        }
        return nodal;
    };

    // Mean removal against the arc indicator introduces up to two linear
    // relations (one for the closed loop, one for the equal-weight alternating
    // combination on paths with an odd edge count). Drop trailing edges until
    // the Gram is numerically nonsingular.
    std::vector<int> kept = edges;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Eigen::MatrixXd nodal = build(kept);
        Eigen::MatrixXd gram = nodal.transpose() * w.asDiagonal() * nodal;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        if (es.info() == Eigen::Success &&
            es.eigenvalues().minCoeff() > 1e-10 * es.eigenvalues().maxCoeff()) {
            CurrentBasis b;
            b.nodal_ = std::move(nodal);
            if (!full) b.arc_ = std::make_pair(arc_start, arc_end);
            b.finalize(mesh);
            return b;
        }
        kept.pop_back();
        if (kept.size() < 2) break;
    }
    throw numerical_error("edge-indicator basis could not be made independent");
}

double SolutionField::energy(const Mesh& mesh, const std::vector<int>& region) const {
    if (region.empty()) {
        double s = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t)
            s += mesh.areas[t] * gradients.row(t).squaredNorm();
        return s;
    }
    double s = 0.0;
    for (int t : region) {
        if (t < 0 || t >= mesh.num_triangles())
            throw parameter_error("region triangle index out of range");
        s += mesh.areas[t] * gradients.row(t).squaredNorm();
    }
    return s;
}

NeumannFactorization::NeumannFactorization(const Mesh& mesh, const Conductivity& sigma)
    : mesh_(&mesh) {
    const int nv = mesh.num_vertices();
    if (sigma.size() != mesh.num_triangles())
        throw parameter_error("conductivity does not match mesh");

    boundary_weights_ = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < mesh.num_boundary(); ++k)
        boundary_weights_[mesh.boundary_vertices[k]] = mesh.boundary_weight(k);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.num_triangles() + 2 * mesh.num_boundary());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& g = mesh.shape_gradients[t];
        double coef = sigma[t] * mesh.areas[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tri[i], tri[j], coef * g[i].dot(g[j]));
    }
    for (int k = 0; k < mesh.num_boundary(); ++k) {
        int v = mesh.boundary_vertices[k];
        trip.emplace_back(v, nv, boundary_weights_[v]);
        trip.emplace_back(nv, v, boundary_weights_[v]);
    }
    system_.resize(nv + 1, nv + 1);
    system_.setFromTriplets(trip.begin(), trip.end());
    system_.makeCompressed();

    ldlt_.compute(system_);
    if (ldlt_.info() != Eigen::Success) {
        lu_.compute(system_);
        if (lu_.info() != Eigen::Success)
            throw numerical_error("stiffness factorization failed (LDLT and LU)");
        use_lu_ = true;
    }
}

SolutionField NeumannFactorization::solve(const Eigen::VectorXd& boundary_current) const {
    const Mesh& mesh = *mesh_;
    const int nv = mesh.num_vertices();
    if (boundary_current.size() != mesh.num_boundary())
        throw parameter_error("boundary current size does not match boundary vertex count");

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + 1);
    for (int k = 0; k < mesh.num_boundary(); ++k) {
        int v = mesh.boundary_vertices[k];
        rhs[v] = boundary_weights_[v] * boundary_current[k];
    }
    double mean = rhs.head(nv).sum();
    double scale = boundary_current.cwiseAbs().maxCoeff();
    if (scale > 0 && std::abs(mean) > 1e-8 * scale)
        throw parameter_error("boundary current has nonzero weighted mean");

    Eigen::VectorXd x = use_lu_ ? lu_.solve(rhs).eval() : ldlt_.solve(rhs).eval();

    SolutionField f;
    f.nodal = x.head(nv);
    double rnorm = (system_ * x - rhs).norm();
    double bnorm = std::max(rhs.norm(), 1e-300);
    f.residual = rnorm / bnorm;
    if (!(f.residual < 1e-8))
        throw numerical_error("saddle solve residual " + std::to_string(f.residual) +
                              " exceeds tolerance (system near-singular)");
    double bmean = boundary_weights_.dot(f.nodal);
    double unorm = std::max(f.nodal.cwiseAbs().maxCoeff(), 1e-300);
    if (std::abs(bmean) > 1e-8 * std::max(1.0, unorm))
        throw numerical_error("solution boundary mean " + std::to_string(bmean) +
                              " beyond tolerance");

    f.gradients.resize(mesh.num_triangles(), 2);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& g = mesh.shape_gradients[t];
        Eigen::Vector2d grad = f.nodal[tri[0]] * g[0] + f.nodal[tri[1]] * g[1] +
                               f.nodal[tri[2]] * g[2];
        f.gradients.row(t) = grad.transpose();
    }
    return f;
}

SolutionField NeumannFactorization::solve(const CurrentBasis& basis, int j) const {
    if (j < 0 || j >= basis.size()) throw parameter_error("basis index out of range");
    return solve(basis.nodal().col(j));
}

SolutionField solve_neumann(const Mesh& mesh, const Conductivity& sigma,
                            const CurrentBasis& basis, int j) {
    return NeumannFactorization(mesh, sigma).solve(basis, j);
}

NtDMatrix assemble_ntd(const Mesh& mesh, const Conductivity& sigma,
                       const std::shared_ptr<const CurrentBasis>& basis) {
    if (!basis) throw parameter_error("assemble_ntd: null basis");
    if (basis->num_boundary() != mesh.num_boundary())
        throw parameter_error("basis does not match mesh boundary");
    const int n = basis->size();
    NeumannFactorization fact(mesh, sigma);

    // pairing matrix P = W * nodal, so column j of traces paired against g_i is
    // (P^T trace_j)_i
    Eigen::MatrixXd paired(n, n);
    Eigen::MatrixXd p = basis->weights().asDiagonal() * basis->nodal();
    for (int j = 0; j < n; ++j) {
        SolutionField u = fact.solve(*basis, j);
        Eigen::VectorXd trace(mesh.num_boundary());
        for (int k = 0; k < mesh.num_boundary(); ++k)
            trace[k] = u.nodal[mesh.boundary_vertices[k]];
        paired.col(j) = p.transpose() * trace;
    }

    double scale = paired.cwiseAbs().maxCoeff();
    double asym = (paired - paired.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0 && asym > 1e-8 * scale)
        throw numerical_error("NtD asymmetry " + std::to_string(asym / scale) +
                              " relative exceeds 1e-8");

    NtDMatrix ntd;
    ntd.m = 0.5 * (paired + paired.transpose());
    ntd.basis = basis;
    return ntd;
}

void export_ntd(const NtDMatrix& ntd, std::ostream& out) {
    const int n = ntd.size();
    out << n << "\n";
    out.precision(15);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j) out << ",";
            out << ntd.m(i, j);
        }
        out << "\n";
    }
}

NtDMatrix import_ntd(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw parameter_error("NtD CSV: empty input");
    int n = std::stoi(line);
    if (n <= 0 || n > 100000) throw parameter_error("NtD CSV: bad size line");
    NtDMatrix ntd;
    ntd.m.resize(n, n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw parameter_error("NtD CSV: truncated");
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < n; ++j) {
            if (!std::getline(ss, cell, ',')) throw parameter_error("NtD CSV: short row");
            ntd.m(i, j) = std::stod(cell);
        }
    }
    return ntd;
}

FrechetOperator::FrechetOperator(const Mesh& mesh,
                                 const std::shared_ptr<const CurrentBasis>& basis)
    : mesh_(&mesh), basis_(basis) {
    if (!basis) throw parameter_error("assemble_frechet: null basis");
    n_ = basis->size();
    NeumannFactorization fact(mesh, Conductivity::uniform(mesh, 1.0));
    factors_.resize(static_cast<long>(mesh.num_triangles()) * n_, 2);
    for (int j = 0; j < n_; ++j) {
        SolutionField u = fact.solve(*basis, j);
        for (int t = 0; t < mesh.num_triangles(); ++t)
            factors_.row(static_cast<long>(t) * n_ + j) = u.gradients.row(t);
    }
}

Eigen::MatrixXd FrechetOperator::triangle_matrix(int t) const {
    if (t < 0 || t >= mesh_->num_triangles()) throw parameter_error("triangle index out of range");
    auto block = factors_.middleRows(static_cast<long>(t) * n_, n_);
    return mesh_->areas[t] * (block * block.transpose());
}

Eigen::MatrixXd FrechetOperator::apply(const std::vector<double>& kappa) const {
    if (static_cast<int>(kappa.size()) != mesh_->num_triangles())
        throw parameter_error("apply_frechet: kappa needs one value per triangle");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        if (kappa[t] == 0.0) continue;
        auto block = factors_.middleRows(static_cast<long>(t) * n_, n_);
        a.noalias() -= (kappa[t] * mesh_->areas[t]) * (block * block.transpose());
    }
    return 0.5 * (a + a.transpose()).eval();
}

Eigen::MatrixXd FrechetOperator::region_form(const std::vector<int>& region) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int t : region) {
        if (t < 0 || t >= mesh_->num_triangles())
            throw parameter_error("region triangle index out of range");
        auto block = factors_.middleRows(static_cast<long>(t) * n_, n_);
        a.noalias() += mesh_->areas[t] * (block * block.transpose());
    }
    return 0.5 * (a + a.transpose()).eval();
}

Eigen::MatrixXd FrechetOperator::total_form() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
        auto block = factors_.middleRows(static_cast<long>(t) * n_, n_);
        a.noalias() += mesh_->areas[t] * (block * block.transpose());
    }
    return 0.5 * (a + a.transpose()).eval();
}

double analytic_ntd_eigenvalue_unit(int n) {
    if (n < 1) throw parameter_error("mode must be >= 1");
    return 1.0 / n;
}

double analytic_ntd_eigenvalue_concentric(int n, double rho, double contrast) {
    if (n < 1) throw parameter_error("mode must be >= 1");
    if (!(rho > 0.0 && rho < 1.0)) throw parameter_error("inclusion radius must lie in (0,1)");
    if (!(contrast > 0.0)) throw parameter_error("contrast must be positive");
    double mu = (contrast - 1.0) / (contrast + 1.0);
    double r2n = std::pow(rho, 2 * n);
    return (1.0 / n) * (1.0 - mu * r2n) / (1.0 + mu * r2n);
}

FemCalibration calibrate_fem_tolerance(const Mesh& mesh, int fourier_order) {
    auto basis = std::make_shared<CurrentBasis>(CurrentBasis::fourier(mesh, fourier_order));
    NtDMatrix ntd = assemble_ntd(mesh, Conductivity::uniform(mesh, 1.0), basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ntd.m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("NtD eigensolve failed");

    FemCalibration cal;
    cal.fem_eigenvalues.assign(es.eigenvalues().data(),
                               es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(cal.fem_eigenvalues.rbegin(), cal.fem_eigenvalues.rend());
    for (int n = 1; n <= fourier_order; ++n) {
        cal.analytic_eigenvalues.push_back(1.0 / n);
        cal.analytic_eigenvalues.push_back(1.0 / n);
    }
    std::sort(cal.analytic_eigenvalues.rbegin(), cal.analytic_eigenvalues.rend());
    for (std::size_t i = 0; i < cal.fem_eigenvalues.size(); ++i)
        cal.max_deviation = std::max(cal.max_deviation,
                                     std::abs(cal.fem_eigenvalues[i] - cal.analytic_eigenvalues[i]));
    cal.eps_fem = 2.0 * cal.max_deviation;
    return cal;
}

} // namespace eit
