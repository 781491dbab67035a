#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include "gucrns/common.hpp"

namespace gucrns {

enum class Side : std::uint8_t { left, right, bottom, top };

constexpr Vec2 outward_normal(Side side) {
    switch (side) {
        case Side::left: return {-1.0, 0.0};
        case Side::right: return {1.0, 0.0};
        case Side::bottom: return {0.0, -1.0};
        case Side::top: return {0.0, 1.0};
    }
    return {};
}

struct BoundaryEdge {
    std::array<Index, 2> vertices;
    Side side;
    Vec2 normal;
};

/// Area and the (constant) gradients of the three barycentric functions.
struct ElementGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad{};
};

struct BoundaryVertex {
    std::vector<Side> sides;
    std::vector<Vec2> normals;
};

/// Conforming triangulation of an axis-aligned rectangle [0,lx]x[0,ly].
/// Immutable after construction.
class TriMesh {
public:
    TriMesh(double lx, double ly, std::vector<Vec2> vertices, std::vector<std::array<Index, 3>> triangles,
            std::vector<BoundaryEdge> boundary_edges)
        : lx_(lx),
          ly_(ly),
          vertices_(std::move(vertices)),
          triangles_(std::move(triangles)),
          boundary_edges_(std::move(boundary_edges)) {
        geometry_.reserve(triangles_.size());
        for (const auto& t : triangles_) {
            const Vec2 p0 = vertices_[t[0]], p1 = vertices_[t[1]], p2 = vertices_[t[2]];
            const double twice_area = cross(p1 - p0, p2 - p0);
            if (!(twice_area > 0.0)) throw std::invalid_argument("TriMesh: triangle not counter-clockwise");
            ElementGeometry g;
            g.area = 0.5 * twice_area;
            g.grad[0] = Vec2{p1.y - p2.y, p2.x - p1.x} * (1.0 / twice_area);
            g.grad[1] = Vec2{p2.y - p0.y, p0.x - p2.x} * (1.0 / twice_area);
            g.grad[2] = Vec2{p0.y - p1.y, p1.x - p0.x} * (1.0 / twice_area);
            h_ = std::max({h_, norm(p1 - p0), norm(p2 - p1), norm(p0 - p2)});
            geometry_.push_back(g);
        }
    }

    Index vertex_count() const { return static_cast<Index>(vertices_.size()); }
    Index triangle_count() const { return static_cast<Index>(triangles_.size()); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    const std::vector<ElementGeometry>& geometry() const { return geometry_; }

    const Vec2& vertex(Index v) const { return vertices_[v]; }
    const std::array<Index, 3>& triangle(Index e) const { return triangles_[e]; }
    const ElementGeometry& element(Index e) const { return geometry_[e]; }

    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double area() const { return lx_ * ly_; }
    /// Largest element diameter.
    double h() const { return h_; }

    /// Physical point of a barycentric coordinate triple on element e.
    Vec2 map_point(Index e, const std::array<double, 3>& bary) const {
        const auto& t = triangles_[e];
        return bary[0] * vertices_[t[0]] + bary[1] * vertices_[t[1]] + bary[2] * vertices_[t[2]];
    }

private:
    double lx_;
    double ly_;
    double h_ = 0.0;
    std::vector<Vec2> vertices_;
    std::vector<std::array<Index, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<ElementGeometry> geometry_;
};

/// Uniform nx-by-ny grid on [0,lx]x[0,ly]; every cell is split along its
/// lower-left to upper-right diagonal. Vertex (i,j) has index j*(nx+1)+i.
inline TriMesh build_rect_mesh(double lx, double ly, Index nx, Index ny) {
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("build_rect_mesh: lx and ly must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: nx and ny must be >= 1");

    const auto id = [nx](Index i, Index j) { return j * (nx + 1) + i; };

    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (Index j = 0; j <= ny; ++j)
        for (Index i = 0; i <= nx; ++i)
            vertices.push_back({lx * i / nx, ly * j / ny});

    std::vector<std::array<Index, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(2) * nx * ny);
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const Index a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            triangles.push_back({a, b, c});
            triangles.push_back({a, c, d});
        }
    }

    std::vector<BoundaryEdge> edges;
    edges.reserve(static_cast<std::size_t>(2) * (nx + ny));
    for (Index i = 0; i < nx; ++i) {
        edges.push_back({{id(i, 0), id(i + 1, 0)}, Side::bottom, outward_normal(Side::bottom)});
        edges.push_back({{id(i + 1, ny), id(i, ny)}, Side::top, outward_normal(Side::top)});
    }
    for (Index j = 0; j < ny; ++j) {
        edges.push_back({{id(nx, j), id(nx, j + 1)}, Side::right, outward_normal(Side::right)});
        edges.push_back({{id(0, j + 1), id(0, j)}, Side::left, outward_normal(Side::left)});
    }
    return TriMesh(lx, ly, std::move(vertices), std::move(triangles), std::move(edges));
}

/// Side membership of every boundary vertex. Corners carry two sides.
inline std::map<Index, BoundaryVertex> boundary_vertex_info(const TriMesh& mesh) {
    std::map<Index, BoundaryVertex> info;
    for (const auto& edge : mesh.boundary_edges()) {
        for (Index v : edge.vertices) {
            auto& entry = info[v];
            if (std::find(entry.sides.begin(), entry.sides.end(), edge.side) == entry.sides.end()) {
                entry.sides.push_back(edge.side);
                entry.normals.push_back(edge.normal);
            }
        }
    }
    return info;
}

}  // namespace gucrns
