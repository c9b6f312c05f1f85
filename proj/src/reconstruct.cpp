#include "eit/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "eit/parallel.hpp"

namespace eit {

std::string to_string(TestMode mode) {
    return mode == TestMode::full ? "full" : "linearized";
}

namespace {

void check_alphas(const std::vector<double>& alphas) {
    if (alphas.empty()) throw parameter_error("alpha grid must be nonempty");
    for (double a : alphas) {
        if (!(a > 0.0)) throw parameter_error("alpha values must be positive");
    }
}

std::vector<int> interior_cells(const PixelGrid& grid) {
    std::vector<int> cells;
    cells.reserve(grid.num_interior());
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (grid.is_interior(c)) cells.push_back(c);
    }
    return cells;
}

} // namespace

DefiniteReconstruction reconstruct_definite_sweep(const NtDMatrix& measured, const Mesh& mesh,
                                                  const std::shared_ptr<const CurrentBasis>& basis,
                                                  const PixelGrid& grid,
                                                  const std::vector<double>& alphas,
                                                  double alpha_reg, TestMode mode, int sign,
                                                  int threads) {
    if (!basis) throw parameter_error("reconstruct_definite: null basis");
    check_alphas(alphas);
    if (measured.size() != basis->size())
        throw parameter_error("measured NtD size does not match basis size");

    std::unique_ptr<FrechetOperator> f;
    if (mode == TestMode::linearized) f = std::make_unique<FrechetOperator>(mesh, basis);

    const std::vector<int> cells = interior_cells(grid);
    const double ball_radius = grid.pitch * std::sqrt(0.5); // cell circumradius
    const double inf = std::numeric_limits<double>::infinity();

    DefiniteReconstruction result{IndicatorField(grid), {}, inf};
    result.outcomes.resize(cells.size());

    parallel_for(static_cast<int>(cells.size()), threads, [&](int i) {
        const int cell = cells[i];
        CellOutcome rec;
        rec.cell = cell;
        rec.margin = inf;
        const std::vector<int> region = ball_to_region(mesh, grid.cell_center(cell), ball_radius);
        if (region.empty()) {
            rec.outcome.tested = "empty-region";
            rec.outcome.alpha_reg = alpha_reg;
        } else {
            for (double alpha : alphas) {
                TestOutcome o =
                    mode == TestMode::full
                        ? definite_test_full(measured, mesh, basis, region, alpha, alpha_reg, sign)
                        : definite_test_linearized(measured, *f, region, alpha, alpha_reg, sign);
                rec.outcome = o;
                rec.margin = std::min(rec.margin, std::abs(o.lambda_min + alpha_reg));
                if (o.pass) break;
            }
        }
        result.outcomes[i] = rec;
    });

    for (const CellOutcome& rec : result.outcomes) {
        if (rec.outcome.pass) result.cells.set(rec.cell, true);
        result.min_margin = std::min(result.min_margin, rec.margin);
    }
    return result;
}

IndicatorField reconstruct_definite(const NtDMatrix& measured, const Mesh& mesh,
                                    const std::shared_ptr<const CurrentBasis>& basis,
                                    const PixelGrid& grid, const std::vector<double>& alphas,
                                    double alpha_reg, TestMode mode, int sign, int threads) {
    return reconstruct_definite_sweep(measured, mesh, basis, grid, alphas, alpha_reg, mode, sign,
                                      threads)
        .cells;
}

IndefiniteReconstruction reconstruct_indefinite_family_sweep(
    const NtDMatrix& measured, const Mesh& mesh,
    const std::shared_ptr<const CurrentBasis>& basis, const std::vector<TestSet>& family,
    const std::vector<double>& alphas, double alpha_reg, TestMode mode, int threads) {
    if (!basis) throw parameter_error("reconstruct_indefinite_family: null basis");
    if (family.empty()) throw parameter_error("test-set family must be nonempty");
    check_alphas(alphas);
    for (const TestSet& c : family) {
        if (!c.valid) throw parameter_error("family member is not a valid test set");
        if (!c.field.same_grid(family.front().field))
            throw parameter_error("family members live on different grids");
    }

    std::unique_ptr<FrechetOperator> f;
    if (mode == TestMode::linearized) f = std::make_unique<FrechetOperator>(mesh, basis);

    const int n = static_cast<int>(family.size());
    IndefiniteReconstruction result{IndicatorField(family.front().field.grid()), {}, {}, 0};
    result.outcomes.resize(n);
    result.passed.assign(n, 0);

    parallel_for(n, threads, [&](int i) {
        for (double alpha : alphas) {
            TestOutcome o = mode == TestMode::full
                                ? indefinite_test_full(measured, mesh, basis, family[i], alpha,
                                                       alpha_reg)
                                : indefinite_test_linearized(measured, *f, family[i], alpha,
                                                             alpha_reg);
            result.outcomes[i] = o;
            if (o.pass) {
                result.passed[i] = 1;
                break;
            }
        }
    });

    IndicatorField cells = full_interior(family.front().field.grid());
    int num_passed = 0;
    for (int i = 0; i < n; ++i) {
        if (result.passed[i]) {
            cells = set_intersection(cells, family[i].field);
            ++num_passed;
        }
    }
    if (num_passed == 0) cells = full_interior(family.front().field.grid());
    result.cells = cells;
    result.num_passed = num_passed;
    return result;
}

IndicatorField reconstruct_indefinite_family(const NtDMatrix& measured, const Mesh& mesh,
                                             const std::shared_ptr<const CurrentBasis>& basis,
                                             const std::vector<TestSet>& family,
                                             const std::vector<double>& alphas, double alpha_reg,
                                             TestMode mode, int threads) {
    return reconstruct_indefinite_family_sweep(measured, mesh, basis, family, alphas, alpha_reg,
                                               mode, threads)
        .cells;
}

IndicatorField reconstruct_indefinite_shrink(const NtDMatrix& measured, const Mesh& mesh,
                                             const std::shared_ptr<const CurrentBasis>& basis,
                                             const PixelGrid& grid, double alpha,
                                             double alpha_reg, TestMode mode) {
    if (!basis) throw parameter_error("reconstruct_indefinite_shrink: null basis");
    if (measured.size() != basis->size())
        throw parameter_error("measured NtD size does not match basis size");

    std::unique_ptr<FrechetOperator> f;
    Eigen::MatrixXd ntd1;
    std::vector<Eigen::MatrixXd> cell_forms;
    Eigen::MatrixXd e_current;
    const Eigen::MatrixXd* gram = nullptr;
    if (mode == TestMode::linearized) {
        if (!(alpha > 0.0)) throw parameter_error("indefinite linearized test requires alpha > 0");
        f = std::make_unique<FrechetOperator>(mesh, basis);
        ntd1 = f->total_form();
        gram = basis->gram_is_identity() ? nullptr : &basis->gram();
        cell_forms.resize(grid.num_cells());
        e_current = Eigen::MatrixXd::Zero(basis->size(), basis->size());
        for (int c = 0; c < grid.num_cells(); ++c) {
            if (!grid.is_interior(c)) continue;
            cell_forms[c] = f->region_form(grid.cell_triangles(c));
            e_current += cell_forms[c];
        }
    } else if (!(alpha > 1.0)) {
        throw parameter_error("indefinite full test requires alpha > 1");
    }

    // Mirrors indefinite_test_linearized with the region form maintained
    // incrementally; the full mode assembles the brackets each time.
    auto passes = [&](const IndicatorField& c, const Eigen::MatrixXd& e) {
        if (mode == TestMode::full) {
            TestSet ts{c, true};
            return indefinite_test_full(measured, mesh, basis, ts, alpha, alpha_reg).pass;
        }
        const Eigen::MatrixXd shift = alpha * e;
        const double lam1 = smallest_eigenvalue(measured.m - (ntd1 - shift), gram);
        const double lam2 = smallest_eigenvalue((ntd1 + shift) - measured.m, gram);
        return std::min(lam1, lam2) >= -alpha_reg;
    };

    IndicatorField current = full_interior(grid);
    if (!passes(current, e_current))
        throw numerical_error("phantom inconsistent with alpha: all-cells test set fails");

    bool changed = true;
    while (changed) {
        changed = false;
        for (int cell : current.cells()) {
            IndicatorField trial = current;
            trial.set(cell, false);
            if (!(outer_closure(trial) == trial)) continue;
            Eigen::MatrixXd e_trial;
            if (mode == TestMode::linearized) e_trial = e_current - cell_forms[cell];
            if (!passes(trial, e_trial)) continue;
            current = trial;
            if (mode == TestMode::linearized) e_current = std::move(e_trial);
            changed = true;
            break;
        }
    }
    return current;
}

double jaccard(const IndicatorField& a, const IndicatorField& b) {
    if (!a.same_grid(b)) throw parameter_error("jaccard: fields on different grids");
    int inter = 0, uni = 0;
    for (int c = 0; c < a.grid().num_cells(); ++c) {
        const bool in_a = a.get(c), in_b = b.get(c);
        if (in_a && in_b) ++inter;
        if (in_a || in_b) ++uni;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<TestSet> default_indefinite_family(const PixelGrid& grid, bool with_channels) {
    std::vector<TestSet> family;
    family.push_back(TestSet{full_interior(grid), true});

    auto push_unique = [&family](TestSet&& ts) {
        if (!ts.valid || ts.field.empty()) return;
        for (const TestSet& existing : family) {
            if (existing.field == ts.field) return;
        }
        family.push_back(std::move(ts));
    };

    const double pi = 3.14159265358979323846;
    for (int k = 0; k < 8; ++k) {
        const double angle = k * pi / 4.0;
        const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
        for (int j = 0; j <= 16; ++j) {
            const double offset = -1.0 + 0.125 * j;
            push_unique(make_halfspace_set(dir, offset, grid));
        }
    }

    if (with_channels) {
        const double radius = 2.0 * grid.pitch;
        for (int iy = 0; iy < 8; ++iy) {
            for (int ix = 0; ix < 8; ++ix) {
                const Eigen::Vector2d center(-0.875 + 0.25 * ix, -0.875 + 0.25 * iy);
                if (center.norm() >= 1.0) continue;
                try {
                    push_unique(make_channel_complement(center, radius, grid));
                } catch (const parameter_error&) {
                    // lattice point whose channel cannot form a valid set
                }
            }
        }
    }
    return family;
}

void write_metrics_csv(std::ostream& out, const std::string& phantom, TestMode mode,
                       double alpha_reg, double jaccard_value, int cells_in, int cells_truth) {
    out << "phantom,mode,alpha_reg,jaccard,cells_in,cells_truth\n";
    out.precision(12);
    out << phantom << ',' << to_string(mode) << ',' << alpha_reg << ',' << jaccard_value << ','
        << cells_in << ',' << cells_truth << "\n";
}

} // namespace eit
