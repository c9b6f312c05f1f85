#include "eit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace eit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

struct MeshBuilder {
    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::uint8_t> on_boundary;

    int add_vertex(const Eigen::Vector2d& p, bool boundary) {
        vertices.push_back(p);
        on_boundary.push_back(boundary ? 1 : 0);
        return static_cast<int>(vertices.size()) - 1;
    }
};

/// One midpoint-subdivision pass. Midpoints of edges with both endpoints on
/// the boundary are radially projected onto the unit circle; all existing
/// vertices are kept verbatim, which gives the level-nesting property.
void refine(MeshBuilder& b) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int i, int j) {
        auto key = std::minmax(i, j);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Eigen::Vector2d m = 0.5 * (b.vertices[i] + b.vertices[j]);
        bool bnd = b.on_boundary[i] && b.on_boundary[j];
        if (bnd) m.normalize();
        int v = b.add_vertex(m, bnd);
        midpoint.emplace(key, v);
        return v;
    };

    std::vector<std::array<int, 3>> next;
    next.reserve(4 * b.triangles.size());
    for (const auto& t : b.triangles) {
        int m01 = mid(t[0], t[1]);
        int m12 = mid(t[1], t[2]);
        int m02 = mid(t[0], t[2]);
        next.push_back({t[0], m01, m02});
        next.push_back({m01, t[1], m12});
        next.push_back({m02, m12, t[2]});
        next.push_back({m01, m12, m02});
    }
    b.triangles = std::move(next);
}

} // namespace

double Mesh::boundary_edge_length(int k) const {
    int kk = (k + 1) % num_boundary();
    return (vertices[boundary_vertices[kk]] - vertices[boundary_vertices[k]]).norm();
}

double Mesh::boundary_weight(int k) const {
    int prev = (k + num_boundary() - 1) % num_boundary();
    return 0.5 * (boundary_edge_length(prev) + boundary_edge_length(k));
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : areas) s += a;
    return s;
}

Mesh build_disk_mesh(int level) {
    if (level < 0 || level > 8)
        throw parameter_error("mesh level must lie in [0, 8], got " + std::to_string(level));

    MeshBuilder b;
    b.add_vertex(Eigen::Vector2d::Zero(), false);
    for (int k = 0; k < 6; ++k) {
        double th = 2.0 * kPi * k / 6.0;
        b.add_vertex(Eigen::Vector2d(std::cos(th), std::sin(th)), true);
    }
    for (int k = 0; k < 6; ++k) b.triangles.push_back({0, 1 + k, 1 + (k + 1) % 6});

    for (int l = 0; l < level; ++l) refine(b);

    Mesh mesh;
    mesh.level = level;
    mesh.vertices = std::move(b.vertices);
    mesh.triangles = std::move(b.triangles);

    const int nv = mesh.num_vertices();
    const int nt = mesh.num_triangles();

    mesh.areas.resize(nt);
    mesh.shape_gradients.resize(nt);
    mesh.centroids.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector2d& p0 = mesh.vertices[tri[0]];
        const Eigen::Vector2d& p1 = mesh.vertices[tri[1]];
        const Eigen::Vector2d& p2 = mesh.vertices[tri[2]];
        double a = signed_area(p0, p1, p2);
        if (!(a > 0.0))
            throw numerical_error("non-positive triangle area at triangle " + std::to_string(t));
        mesh.areas[t] = a;
        mesh.centroids[t] = (p0 + p1 + p2) / 3.0;
        // grad of P1 shape function at vertex i: rotate the opposite edge by 90 degrees
        mesh.shape_gradients[t][0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2.0 * a);
        mesh.shape_gradients[t][1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / (2.0 * a);
        mesh.shape_gradients[t][2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / (2.0 * a);
    }

    // Boundary extraction: edges incident to exactly one triangle.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            auto key = std::minmax(tri[e], tri[(e + 1) % 3]);
            ++edge_count[key];
        }
    std::map<int, int> next_on_boundary; // CCW successor along the boundary
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            int i = tri[e], j = tri[(e + 1) % 3];
            auto key = std::minmax(i, j);
            int c = edge_count.at(key);
            if (c == 1) {
                next_on_boundary[i] = j; // triangle orientation is CCW, so (i,j) walks CCW
            } else if (c != 2) {
                throw numerical_error("non-conforming mesh: edge shared by " + std::to_string(c) +
                                      " triangles");
            }
        }
    if (next_on_boundary.empty()) throw numerical_error("mesh has no boundary");

    // Walk the loop starting at the vertex closest to angle 0.
    int start = -1;
    double best = 1e300;
    for (const auto& [v, _] : next_on_boundary) {
        double d = std::abs(std::atan2(mesh.vertices[v].y(), mesh.vertices[v].x()));
        if (d < best) {
            best = d;
            start = v;
        }
    }
    int cur = start;
    do {
        const Eigen::Vector2d& p = mesh.vertices[cur];
        if (std::abs(p.norm() - 1.0) > 1e-12)
            throw numerical_error("boundary vertex off the unit circle");
        mesh.boundary_vertices.push_back(cur);
        double th = std::atan2(p.y(), p.x());
        if (th < 0) th += 2.0 * kPi;
        mesh.boundary_angles.push_back(th);
        cur = next_on_boundary.at(cur);
    } while (cur != start && static_cast<int>(mesh.boundary_vertices.size()) <= nv);
    if (cur != start) throw numerical_error("boundary curve does not close");
    if (static_cast<int>(mesh.boundary_vertices.size()) != static_cast<int>(next_on_boundary.size()))
        throw numerical_error("boundary is not a single closed curve");

    return mesh;
}

void export_mesh(const Mesh& mesh, std::ostream& out) {
    out.precision(17);
    out << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles()
        << " boundary " << mesh.num_boundary() << "\n";
    for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
    for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    const int K = mesh.num_boundary();
    for (int k = 0; k < K; ++k)
        out << mesh.boundary_vertices[k] << " " << mesh.boundary_vertices[(k + 1) % K] << "\n";
}

PixelGrid::PixelGrid(const Mesh& mesh, int resolution) : resolution(resolution) {
    if (resolution < 2 || resolution > 4096)
        throw parameter_error("pixel grid resolution must lie in [2, 4096]");
    pitch = 2.0 / resolution;
    interior_.assign(num_cells(), 0);
    cell_triangles_.assign(num_cells(), {});
    for (int c = 0; c < num_cells(); ++c) {
        if (cell_center(c).norm() < 1.0) {
            interior_[c] = 1;
            ++num_interior_;
        }
    }
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        int c = cell_of_point(mesh.centroids[t]);
        if (c < 0) throw numerical_error("triangle centroid outside the bounding box");
        cell_triangles_[c].push_back(t);
    }
}

Eigen::Vector2d PixelGrid::cell_center(int cell) const {
    return {-1.0 + (cell_x(cell) + 0.5) * pitch, -1.0 + (cell_y(cell) + 0.5) * pitch};
}

int PixelGrid::cell_of_point(const Eigen::Vector2d& p) const {
    if (p.x() < -1.0 || p.x() >= 1.0 || p.y() < -1.0 || p.y() >= 1.0) return -1;
    int ix = static_cast<int>((p.x() + 1.0) / pitch);
    int iy = static_cast<int>((p.y() + 1.0) / pitch);
    ix = std::min(ix, resolution - 1);
    iy = std::min(iy, resolution - 1);
    return cell_index(ix, iy);
}

std::vector<int> ball_to_region(const Mesh& mesh, const Eigen::Vector2d& center, double radius) {
    if (!(radius > 0.0)) throw parameter_error("ball radius must be positive");
    std::vector<int> region;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        if ((mesh.centroids[t] - center).norm() < radius) region.push_back(t);
    return region;
}

std::vector<int> annulus_to_region(const Mesh& mesh, const Eigen::Vector2d& center,
                                   double inner, double outer) {
    if (!(0.0 <= inner && inner < outer)) throw parameter_error("bad annulus radii");
    std::vector<int> region;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double r = (mesh.centroids[t] - center).norm();
        if (r >= inner && r < outer) region.push_back(t);
    }
    return region;
}

std::vector<int> pixel_region(const PixelGrid& grid, const std::vector<int>& cells) {
    std::vector<int> region;
    for (int c : cells) {
        if (c < 0 || c >= grid.num_cells()) throw parameter_error("cell index out of range");
        const auto& tris = grid.cell_triangles(c);
        region.insert(region.end(), tris.begin(), tris.end());
    }
    std::sort(region.begin(), region.end());
    return region;
}

} // namespace eit
