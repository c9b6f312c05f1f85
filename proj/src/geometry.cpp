#include "eit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace eit {

IndicatorField::IndicatorField(const PixelGrid& grid)
    : grid_(&grid), labels_(grid.num_cells(), 0) {}

void IndicatorField::set(int cell, bool value) {
    if (cell < 0 || cell >= grid_->num_cells()) throw parameter_error("cell index out of range");
    if (value && !grid_->is_interior(cell))
        throw parameter_error("cannot label a non-interior cell");
    labels_[cell] = value ? 1 : 0;
}

int IndicatorField::count() const {
    int c = 0;
    for (auto v : labels_) c += v;
    return c;
}

std::vector<int> IndicatorField::cells() const {
    std::vector<int> out;
    for (int c = 0; c < static_cast<int>(labels_.size()); ++c)
        if (labels_[c]) out.push_back(c);
    return out;
}

namespace {

void check_same_grid(const IndicatorField& a, const IndicatorField& b) {
    if (!a.same_grid(b)) throw parameter_error("indicator fields live on different grids");
}

/// 4-neighbors of a cell within the grid, -1 when off the edge.
std::array<int, 4> neighbors4(const PixelGrid& g, int cell) {
    int x = g.cell_x(cell), y = g.cell_y(cell), r = g.resolution;
    return {x > 0 ? g.cell_index(x - 1, y) : -1, x < r - 1 ? g.cell_index(x + 1, y) : -1,
            y > 0 ? g.cell_index(x, y - 1) : -1, y < r - 1 ? g.cell_index(x, y + 1) : -1};
}

bool is_boundary_layer(const PixelGrid& g, int cell) {
    if (!g.is_interior(cell)) return false;
    for (int nb : neighbors4(g, cell))
        if (nb < 0 || !g.is_interior(nb)) return true;
    return false;
}

} // namespace

IndicatorField outer_closure(const IndicatorField& set) {
    const PixelGrid& g = set.grid();
    // BFS through complement cells (interior, unlabeled) seeded at the boundary layer.
    std::vector<std::uint8_t> reached(g.num_cells(), 0);
    std::vector<int> queue;
    for (int c = 0; c < g.num_cells(); ++c)
        if (g.is_interior(c) && !set.get(c) && is_boundary_layer(g, c)) {
            reached[c] = 1;
            queue.push_back(c);
        }
    for (std::size_t h = 0; h < queue.size(); ++h) {
        for (int nb : neighbors4(g, queue[h])) {
            if (nb < 0 || reached[nb] || !g.is_interior(nb) || set.get(nb)) continue;
            reached[nb] = 1;
            queue.push_back(nb);
        }
    }
    IndicatorField out(g);
    for (int c = 0; c < g.num_cells(); ++c)
        if (g.is_interior(c) && !reached[c]) out.set(c, true);
    return out;
}

IndicatorField inner_support(const std::vector<double>& kappa, const PixelGrid& grid,
                             double threshold) {
    if (!(threshold > 0.0)) throw parameter_error("support threshold must be positive");
    IndicatorField out(grid);
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.is_interior(c)) continue;
        const auto& tris = grid.cell_triangles(c);
        if (tris.empty()) continue;
        bool all = true;
        for (int t : tris) {
            if (t >= static_cast<int>(kappa.size()))
                throw parameter_error("kappa shorter than triangle count");
            if (std::abs(kappa[t]) < threshold) {
                all = false;
                break;
            }
        }
        if (all) out.set(c, true);
    }
    return out;
}

IndicatorField support(const std::vector<double>& kappa, const PixelGrid& grid,
                       double threshold) {
    if (!(threshold > 0.0)) throw parameter_error("support threshold must be positive");
    IndicatorField out(grid);
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.is_interior(c)) continue;
        for (int t : grid.cell_triangles(c)) {
            if (t >= static_cast<int>(kappa.size()))
                throw parameter_error("kappa shorter than triangle count");
            if (std::abs(kappa[t]) >= threshold) {
                out.set(c, true);
                break;
            }
        }
    }
    return out;
}

TestSet make_halfspace_set(const Eigen::Vector2d& direction, double offset,
                           const PixelGrid& grid) {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw parameter_error("halfspace direction must be a unit vector");
    TestSet ts{IndicatorField(grid), false};
    for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.is_interior(c) && grid.cell_center(c).dot(direction) <= offset)
            ts.field.set(c, true);
    ts.valid = (outer_closure(ts.field) == ts.field);
    return ts;
}

TestSet make_channel_complement(const Eigen::Vector2d& center, double radius,
                                const PixelGrid& grid) {
    if (!(radius > 0.0)) throw parameter_error("channel ball radius must be positive");
    if (center.norm() >= 1.0)
        throw parameter_error("channel ball center must lie inside the disk");

    Eigen::Vector2d dir = center.norm() > 1e-12 ? center.normalized() : Eigen::Vector2d(1.0, 0.0);
    Eigen::Vector2d tip = 1.5 * dir; // well past the rim so the channel reaches the boundary layer
    // width floor keeps the rasterized channel 4-connected at any radius
    double half_width = std::max(radius, 0.75 * grid.pitch);

    auto dist_to_segment = [&](const Eigen::Vector2d& p) {
        Eigen::Vector2d d = tip - center;
        double t = (p - center).dot(d) / d.squaredNorm();
        t = std::clamp(t, 0.0, 1.0);
        return (p - (center + t * d)).norm();
    };

    TestSet ts{IndicatorField(grid), false};
    for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.is_interior(c)) continue;
        Eigen::Vector2d p = grid.cell_center(c);
        bool removed = (p - center).norm() <= radius || dist_to_segment(p) <= half_width;
        if (!removed) ts.field.set(c, true);
    }
    ts.valid = (outer_closure(ts.field) == ts.field);
    if (!ts.valid)
        throw parameter_error("channel construction failed: complement not boundary-connected");
    return ts;
}

IndicatorField set_union(const IndicatorField& a, const IndicatorField& b) {
    check_same_grid(a, b);
    IndicatorField out(a.grid());
    for (int c = 0; c < a.grid().num_cells(); ++c)
        if (a.get(c) || b.get(c)) out.set(c, true);
    return out;
}

IndicatorField set_intersection(const IndicatorField& a, const IndicatorField& b) {
    check_same_grid(a, b);
    IndicatorField out(a.grid());
    for (int c = 0; c < a.grid().num_cells(); ++c)
        if (a.get(c) && b.get(c)) out.set(c, true);
    return out;
}

IndicatorField set_difference(const IndicatorField& a, const IndicatorField& b) {
    check_same_grid(a, b);
    IndicatorField out(a.grid());
    for (int c = 0; c < a.grid().num_cells(); ++c)
        if (a.get(c) && !b.get(c)) out.set(c, true);
    return out;
}

bool is_subset(const IndicatorField& a, const IndicatorField& b) {
    check_same_grid(a, b);
    for (int c = 0; c < a.grid().num_cells(); ++c)
        if (a.get(c) && !b.get(c)) return false;
    return true;
}

IndicatorField full_interior(const PixelGrid& grid) {
    IndicatorField out(grid);
    for (int c = 0; c < grid.num_cells(); ++c)
        if (grid.is_interior(c)) out.set(c, true);
    return out;
}

IndicatorField dilate(const IndicatorField& a, int cells) {
    if (cells < 0) throw parameter_error("dilation count must be nonnegative");
    const PixelGrid& g = a.grid();
    IndicatorField cur = a;
    for (int step = 0; step < cells; ++step) {
        IndicatorField next = cur;
        for (int c = 0; c < g.num_cells(); ++c) {
            if (!cur.get(c)) continue;
            int x = g.cell_x(c), y = g.cell_y(c);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= g.resolution || ny >= g.resolution) continue;
                    int nc = g.cell_index(nx, ny);
                    if (g.is_interior(nc)) next.set(nc, true);
                }
        }
        cur = next;
    }
    return cur;
}

void export_pgm(const IndicatorField& field, std::ostream& out) {
    const PixelGrid& g = field.grid();
    out << "P2\n" << g.resolution << " " << g.resolution << "\n255\n";
    for (int y = g.resolution - 1; y >= 0; --y) {
        for (int x = 0; x < g.resolution; ++x) {
            if (x) out << " ";
            out << (field.get(g.cell_index(x, y)) ? 255 : 0);
        }
        out << "\n";
    }
}

void export_indicator_csv(const IndicatorField& field, std::ostream& out) {
    const PixelGrid& g = field.grid();
    for (int y = 0; y < g.resolution; ++y)
        for (int x = 0; x < g.resolution; ++x)
            out << x << "," << y << "," << (field.get(g.cell_index(x, y)) ? 1 : 0) << "\n";
}

} // namespace eit
