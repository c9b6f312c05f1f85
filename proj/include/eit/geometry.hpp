#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "eit/mesh.hpp"

namespace eit {

/// Boolean labeling of the interior cells of a PixelGrid.
/// Labels are stored for all cells but may be set only on interior ones.
class IndicatorField {
public:
    explicit IndicatorField(const PixelGrid& grid);

    const PixelGrid& grid() const { return *grid_; }
    bool get(int cell) const { return labels_[cell] != 0; }
    void set(int cell, bool value);

    int count() const;
    bool empty() const { return count() == 0; }
    std::vector<int> cells() const; // labeled cells, ascending

    bool same_grid(const IndicatorField& other) const { return grid_ == other.grid_; }

    friend bool operator==(const IndicatorField& a, const IndicatorField& b) {
        return a.grid_ == b.grid_ && a.labels_ == b.labels_;
    }

private:
    const PixelGrid* grid_;
    std::vector<std::uint8_t> labels_;
};

/// Candidate set C for the indefinite tests, with the C = out C validity flag.
struct TestSet {
    IndicatorField field;
    bool valid = false;
};

/// Discrete outer support operator: fills every complement component (4-adjacency
/// over interior cells) that is not connected to the boundary layer, where the
/// boundary layer is the set of interior cells adjacent to a non-interior cell.
IndicatorField outer_closure(const IndicatorField& set);

/// Cells that contain at least one triangle and all of whose triangles satisfy
/// |kappa| >= threshold.
IndicatorField inner_support(const std::vector<double>& kappa, const PixelGrid& grid,
                             double threshold = 1e-6);

/// Cells containing at least one triangle with |kappa| >= threshold.
IndicatorField support(const std::vector<double>& kappa, const PixelGrid& grid,
                       double threshold = 1e-6);

/// Interior cells with center . direction <= offset; validity checked via outer_closure.
TestSet make_halfspace_set(const Eigen::Vector2d& direction, double offset,
                           const PixelGrid& grid);

/// Complement of (ball union straight channel to the nearest boundary point);
/// channel direction tie-break at the origin is +x. Validity checked via
/// outer_closure.
TestSet make_channel_complement(const Eigen::Vector2d& center, double radius,
                                const PixelGrid& grid);

// Set algebra on matching grids (grid mismatch is a parameter error).
IndicatorField set_union(const IndicatorField& a, const IndicatorField& b);
IndicatorField set_intersection(const IndicatorField& a, const IndicatorField& b);
IndicatorField set_difference(const IndicatorField& a, const IndicatorField& b);
bool is_subset(const IndicatorField& a, const IndicatorField& b);

/// All interior cells labeled.
IndicatorField full_interior(const PixelGrid& grid);

/// Morphological dilation by `cells` steps of 8-neighborhood growth, clipped to
/// interior cells.
IndicatorField dilate(const IndicatorField& a, int cells);

/// PGM (P2 ASCII): one pixel per cell, 255 = in, 0 = out or non-interior.
/// Rows run from the top of the domain (y = +1) downward.
void export_pgm(const IndicatorField& field, std::ostream& out);

/// CSV rows "cell_x,cell_y,label" over all cells.
void export_indicator_csv(const IndicatorField& field, std::ostream& out);

} // namespace eit
