#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "eit/forward.hpp"
#include "eit/geometry.hpp"
#include "eit/monotone.hpp"

namespace eit {

/// Whether tests assemble the test conductivity's NtD (full) or use the
/// background derivative operator (linearized).
enum class TestMode { full, linearized };

std::string to_string(TestMode mode);

/// Record of the test sweep at one interior cell: the outcome at the first
/// passing alpha (or the last failing one), and the cell's spectral margin,
/// the minimum over evaluated alphas of |lambda_min + alpha_reg|. The margin
/// bounds the noise level under which the cell's decision is stable.
struct CellOutcome {
    int cell = -1;
    TestOutcome outcome;
    double margin = 0.0;
};

struct DefiniteReconstruction {
    IndicatorField cells;
    std::vector<CellOutcome> outcomes; // one per interior cell, ascending cell index
    double min_margin = 0.0;           // min margin over all evaluated tests
};

/// Ball test at every interior cell (ball = the cell's circumscribed disk),
/// union over the alpha grid with per-cell short-circuit on the first pass.
DefiniteReconstruction reconstruct_definite_sweep(const NtDMatrix& measured, const Mesh& mesh,
                                                  const std::shared_ptr<const CurrentBasis>& basis,
                                                  const PixelGrid& grid,
                                                  const std::vector<double>& alphas,
                                                  double alpha_reg, TestMode mode, int sign,
                                                  int threads = 1);

IndicatorField reconstruct_definite(const NtDMatrix& measured, const Mesh& mesh,
                                    const std::shared_ptr<const CurrentBasis>& basis,
                                    const PixelGrid& grid, const std::vector<double>& alphas,
                                    double alpha_reg, TestMode mode, int sign, int threads = 1);

struct IndefiniteReconstruction {
    IndicatorField cells;
    std::vector<TestOutcome> outcomes; // one per family member
    std::vector<char> passed;          // one per family member
    int num_passed = 0;
};

/// Two-sided test on every family member (any alpha passing marks the member);
/// result is the intersection of passing members, or the full interior when
/// none passes. Every member must be valid (C = outer_closure(C)) and live on
/// the same grid.
IndefiniteReconstruction reconstruct_indefinite_family_sweep(
    const NtDMatrix& measured, const Mesh& mesh,
    const std::shared_ptr<const CurrentBasis>& basis, const std::vector<TestSet>& family,
    const std::vector<double>& alphas, double alpha_reg, TestMode mode, int threads = 1);

IndicatorField reconstruct_indefinite_family(const NtDMatrix& measured, const Mesh& mesh,
                                             const std::shared_ptr<const CurrentBasis>& basis,
                                             const std::vector<TestSet>& family,
                                             const std::vector<double>& alphas, double alpha_reg,
                                             TestMode mode, int threads = 1);

/// Greedy minimal passing set: start from all interior cells, repeatedly
/// remove the first cell (row-major scan, restart after each removal) whose
/// removal keeps the set equal to its outer closure and keeps the two-sided
/// test passing. Deterministic. Throws a numerical error "phantom
/// inconsistent with alpha" when the all-cells set already fails.
IndicatorField reconstruct_indefinite_shrink(const NtDMatrix& measured, const Mesh& mesh,
                                             const std::shared_ptr<const CurrentBasis>& basis,
                                             const PixelGrid& grid, double alpha,
                                             double alpha_reg, TestMode mode);

/// |a intersect b| / |a union b|; 1 when both are empty.
double jaccard(const IndicatorField& a, const IndicatorField& b);

/// Default test-set family: the full interior, 8 half-space directions x 17
/// offsets, and (when with_channels) channel complements on a coarse 8x8
/// lattice of centers with ball radius = 2 cells. Invalid, empty, and
/// duplicate members are dropped; the full interior is always first.
std::vector<TestSet> default_indefinite_family(const PixelGrid& grid, bool with_channels = true);

/// CSV row "phantom,mode,alpha_reg,jaccard,cells_in,cells_truth" (with header).
void write_metrics_csv(std::ostream& out, const std::string& phantom, TestMode mode,
                       double alpha_reg, double jaccard_value, int cells_in, int cells_truth);

} // namespace eit
