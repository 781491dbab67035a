#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "gucrns/block_system.hpp"
#include "gucrns/mesh.hpp"
#include "gucrns/quadrature.hpp"
#include "gucrns/sparse.hpp"

namespace gucrns {

/// ScalarP1: continuous P1 (cell density, concentration).
/// VectorP1: continuous vector P1 with zero normal trace (auxiliary gradient).
/// MiniVelocity: vector P1 plus one cubic bubble per element and component,
///   zero on the boundary.
/// PressureP1: continuous P1; the zero-mean condition is imposed at solve time.
enum class SpaceKind { ScalarP1, VectorP1, MiniVelocity, PressureP1 };

inline constexpr int max_local_dofs = 8;

/// Constrained dof; the prescribed value is component `component` of the
/// boundary data at `vertex`.
struct EssentialDof {
    Index dof;
    Index vertex;
    int component;
};

struct LocalDofs {
    std::array<Index, max_local_dofs> index{};
    int count = 0;
};

/// Degree-of-freedom layout of one discrete space.
///
/// Vector spaces number vertex dofs as 2*v + c. MiniVelocity appends the
/// bubble dofs after all vertex dofs as 2*V + 2*e + c. Local numbering on an
/// element is 2*i + c for the element's i-th vertex and 6 + c for the bubble.
class FESpace {
public:
    FESpace(std::shared_ptr<const TriMesh> mesh, SpaceKind kind) : mesh_(std::move(mesh)), kind_(kind) {
        if (!mesh_) throw std::invalid_argument("FESpace: null mesh");
        const Index nv = mesh_->vertex_count(), nt = mesh_->triangle_count();
        switch (kind_) {
            case SpaceKind::ScalarP1:
            case SpaceKind::PressureP1: dof_count_ = nv; break;
            case SpaceKind::VectorP1: dof_count_ = 2 * nv; break;
            case SpaceKind::MiniVelocity: dof_count_ = 2 * nv + 2 * nt; break;
        }
        if (kind_ == SpaceKind::MiniVelocity) {
            for (const auto& [v, info] : boundary_vertex_info(*mesh_))
                for (int c = 0; c < 2; ++c) essential_.push_back({2 * v + c, v, c});
        } else if (kind_ == SpaceKind::VectorP1) {
            // normal component on each side; both components at corners
            for (const auto& [v, info] : boundary_vertex_info(*mesh_)) {
                bool fix[2] = {false, false};
                for (const Vec2& n : info.normals) fix[std::abs(n.x) > std::abs(n.y) ? 0 : 1] = true;
                for (int c = 0; c < 2; ++c)
                    if (fix[c]) essential_.push_back({2 * v + c, v, c});
            }
        }
    }

    SpaceKind kind() const { return kind_; }
    const TriMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
    Index dof_count() const { return dof_count_; }
    bool is_vector() const { return kind_ == SpaceKind::VectorP1 || kind_ == SpaceKind::MiniVelocity; }
    bool has_bubble() const { return kind_ == SpaceKind::MiniVelocity; }
    int local_count() const { return kind_ == SpaceKind::MiniVelocity ? 8 : (is_vector() ? 6 : 3); }

    const std::vector<EssentialDof>& essential_dofs() const { return essential_; }

    Index vertex_dof(Index v, int c) const { return is_vector() ? 2 * v + c : v; }
    Index bubble_dof(Index e, int c) const { return 2 * mesh_->vertex_count() + 2 * e + c; }

    LocalDofs local_dofs(Index e) const {
        LocalDofs out;
        const auto& t = mesh_->triangle(e);
        if (!is_vector()) {
            out.count = 3;
            for (int i = 0; i < 3; ++i) out.index[i] = t[i];
            return out;
        }
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < 2; ++c) out.index[2 * i + c] = 2 * t[i] + c;
        out.count = 6;
        if (has_bubble()) {
            out.index[6] = bubble_dof(e, 0);
            out.index[7] = bubble_dof(e, 1);
            out.count = 8;
        }
        return out;
    }

private:
    std::shared_ptr<const TriMesh> mesh_;
    SpaceKind kind_;
    Index dof_count_ = 0;
    std::vector<EssentialDof> essential_;
};

inline std::shared_ptr<const FESpace> build_space(std::shared_ptr<const TriMesh> mesh, SpaceKind kind) {
    return std::make_shared<const FESpace>(std::move(mesh), kind);
}

/// Local shape functions at one point. For vector spaces `component[k]` is
/// the component carried by the k-th local basis function (value * e_c).
struct BasisValues {
    int count = 0;
    std::array<double, max_local_dofs> value{};
    std::array<Vec2, max_local_dofs> grad{};
    std::array<int, max_local_dofs> component{};
};

inline BasisValues eval_basis(const FESpace& space, Index e, const std::array<double, 3>& bary) {
    const auto& g = space.mesh().element(e).grad;
    BasisValues out;
    if (!space.is_vector()) {
        out.count = 3;
        for (int i = 0; i < 3; ++i) {
            out.value[i] = bary[i];
            out.grad[i] = g[i];
            out.component[i] = -1;
        }
        return out;
    }
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c) {
            out.value[2 * i + c] = bary[i];
            out.grad[2 * i + c] = g[i];
            out.component[2 * i + c] = c;
        }
    out.count = 6;
    if (space.has_bubble()) {
        const double b = 27.0 * bary[0] * bary[1] * bary[2];
        const Vec2 db = 27.0 * (bary[1] * bary[2] * g[0] + bary[0] * bary[2] * g[1] + bary[0] * bary[1] * g[2]);
        for (int c = 0; c < 2; ++c) {
            out.value[6 + c] = b;
            out.grad[6 + c] = db;
            out.component[6 + c] = c;
        }
        out.count = 8;
    }
    return out;
}

/// Coefficient vector in one space.
class Field {
public:
    Field() = default;
    explicit Field(std::shared_ptr<const FESpace> space)
        : space_(std::move(space)), coeffs_(static_cast<std::size_t>(space_->dof_count()), 0.0) {}
    Field(std::shared_ptr<const FESpace> space, Vector coeffs) : space_(std::move(space)), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != static_cast<std::size_t>(space_->dof_count()))
            throw std::invalid_argument("Field: coefficient count does not match space");
    }

    const FESpace& space() const { return *space_; }
    const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
    const Vector& coeffs() const { return coeffs_; }
    Vector& coeffs() { return coeffs_; }
    double operator[](Index i) const { return coeffs_[i]; }

    double scalar(Index e, const std::array<double, 3>& bary) const {
        const auto& t = space_->mesh().triangle(e);
        return bary[0] * coeffs_[t[0]] + bary[1] * coeffs_[t[1]] + bary[2] * coeffs_[t[2]];
    }
    Vec2 gradient(Index e) const {
        const auto& t = space_->mesh().triangle(e);
        const auto& g = space_->mesh().element(e).grad;
        return coeffs_[t[0]] * g[0] + coeffs_[t[1]] * g[1] + coeffs_[t[2]] * g[2];
    }

    Vec2 vector(Index e, const std::array<double, 3>& bary) const {
        const BasisValues b = eval_basis(*space_, e, bary);
        const LocalDofs d = space_->local_dofs(e);
        Vec2 out;
        for (int k = 0; k < b.count; ++k) out[b.component[k]] += b.value[k] * coeffs_[d.index[k]];
        return out;
    }
    double divergence(Index e, const std::array<double, 3>& bary) const {
        const BasisValues b = eval_basis(*space_, e, bary);
        const LocalDofs d = space_->local_dofs(e);
        double out = 0.0;
        for (int k = 0; k < b.count; ++k) out += b.grad[k][b.component[k]] * coeffs_[d.index[k]];
        return out;
    }

    Field& operator+=(const Field& o) {
        check(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        return *this;
    }
    Field& operator*=(double s) {
        for (double& c : coeffs_) c *= s;
        return *this;
    }

private:
    void check(const Field& o) const {
        if (space_ != o.space_) throw std::invalid_argument("Field: arithmetic across different spaces");
    }

    std::shared_ptr<const FESpace> space_;
    Vector coeffs_;
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double s, Field a) { return a *= s; }

/// u = hat + grad(rho): hat in the MINI velocity space, rho continuous P1.
/// grad(rho) is constant on each element and jumps across edges.
struct CompositeVelocity {
    Field hat;
    Field rho;

    Vec2 value(Index e, const std::array<double, 3>& bary) const { return hat.vector(e, bary) + rho.gradient(e); }
    /// Elementwise divergence; grad(rho) contributes nothing inside an element.
    double divergence(Index e, const std::array<double, 3>& bary) const { return hat.divergence(e, bary); }

    CompositeVelocity& operator+=(const CompositeVelocity& o) {
        hat += o.hat;
        rho += o.rho;
        return *this;
    }
    CompositeVelocity& operator*=(double s) {
        hat *= s;
        rho *= s;
        return *this;
    }
};

inline CompositeVelocity operator+(CompositeVelocity a, const CompositeVelocity& b) { return a += b; }
inline CompositeVelocity operator*(double s, CompositeVelocity a) { return a *= s; }

using LocalMatrix = std::array<std::array<double, max_local_dofs>, max_local_dofs>;

/// Element loop for a bilinear form. The kernel receives the quadrature
/// weight times |T| and the test/trial basis at the point and accumulates
/// into the local matrix (test index first). Every element couples all its
/// local dofs, so the pattern does not depend on coefficient values.
template <class Kernel>
CsrMatrix assemble_bilinear(const FESpace& test, const FESpace& trial, const QuadratureRule& rule, Kernel&& kernel) {
    if (test.mesh_ptr() != trial.mesh_ptr()) throw std::invalid_argument("assemble: spaces live on different meshes");
    const TriMesh& mesh = test.mesh();
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(mesh.triangle_count()) * test.local_count() * trial.local_count());
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        LocalMatrix local{};
        const double area = mesh.element(e).area;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const BasisValues tb = eval_basis(test, e, rule.points[q]);
            const BasisValues sb = &test == &trial ? tb : eval_basis(trial, e, rule.points[q]);
            kernel(e, rule.points[q], rule.weights[q] * area, tb, sb, local);
        }
        const LocalDofs td = test.local_dofs(e), sd = trial.local_dofs(e);
        for (int i = 0; i < td.count; ++i)
            for (int j = 0; j < sd.count; ++j) entries.push_back({td.index[i], sd.index[j], local[i][j]});
    }
    return CsrMatrix::from_triplets(test.dof_count(), trial.dof_count(), entries);
}

/// Load vector (f, phi_i). `f(e, bary, x)` returns a scalar for scalar spaces
/// and a Vec2 for vector spaces.
template <class F>
Vector assemble_load(const FESpace& test, const QuadratureRule& rule, F&& f) {
    const TriMesh& mesh = test.mesh();
    Vector out(test.dof_count(), 0.0);
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        std::array<double, max_local_dofs> local{};
        const double area = mesh.element(e).area;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& bary = rule.points[q];
            const BasisValues tb = eval_basis(test, e, bary);
            const auto value = f(e, bary, mesh.map_point(e, bary));
            const double w = rule.weights[q] * area;
            for (int i = 0; i < tb.count; ++i) {
                if constexpr (std::is_same_v<std::decay_t<decltype(value)>, Vec2>)
                    local[i] += w * value[tb.component[i]] * tb.value[i];
                else
                    local[i] += w * value * tb.value[i];
            }
        }
        const LocalDofs td = test.local_dofs(e);
        for (int i = 0; i < td.count; ++i) out[td.index[i]] += local[i];
    }
    return out;
}

/// (phi_j, phi_i); component-matched for vector spaces.
inline CsrMatrix assemble_mass(const FESpace& space, const QuadratureRule& rule) {
    return assemble_bilinear(space, space, rule,
                             [](Index, const auto&, double w, const BasisValues& t, const BasisValues& s, LocalMatrix& a) {
                                 for (int i = 0; i < t.count; ++i)
                                     for (int j = 0; j < s.count; ++j)
                                         if (t.component[i] == s.component[j]) a[i][j] += w * t.value[i] * s.value[j];
                             });
}

using ScalarFunction = std::function<double(Vec2)>;
using VectorFunction = std::function<Vec2(Vec2)>;

/// Imposes the essential dofs of `space` (offset by the block's position)
/// with values taken from g at the constrained vertices; g == nullptr means
/// homogeneous data.
inline void apply_dirichlet(BlockSystem& system, int block, const FESpace& space, const VectorFunction& g = nullptr) {
    const Index offset = system.offset(block);
    std::vector<Index> rows;
    std::vector<double> values;
    for (const auto& ed : space.essential_dofs()) {
        rows.push_back(offset + ed.dof);
        values.push_back(g ? g(space.mesh().vertex(ed.vertex))[ed.component] : 0.0);
    }
    system.constrain(rows, values);
}

namespace detail {

inline Field solve_projection(const std::shared_ptr<const FESpace>& space, const QuadratureRule& rule, Vector load,
                              const VectorFunction& boundary) {
    BlockSystem system({"field"}, {space->dof_count()});
    system.add_block(0, 0, assemble_mass(*space, rule));
    std::copy(load.begin(), load.end(), system.rhs(0).begin());
    system.compose();
    apply_dirichlet(system, 0, *space, boundary);
    return Field(space, lu_solve(system.matrix(), system.rhs()));
}

}  // namespace detail

/// L2 projection of a scalar function. On PressureP1 the result is shifted to
/// zero mean, which is the projection onto the mean-free subspace.
inline Field l2_project(const std::shared_ptr<const FESpace>& space, const ScalarFunction& f,
                        const QuadratureRule& rule = rule_for_degree(default_quadrature_degree)) {
    if (space->is_vector()) throw std::invalid_argument("l2_project: scalar data for a vector space");
    Vector load = assemble_load(*space, rule, [&](Index, const auto&, Vec2 x) { return f(x); });
    Field out = detail::solve_projection(space, rule, std::move(load), nullptr);
    if (space->kind() == SpaceKind::PressureP1) {
        const Vector ones(space->dof_count(), 1.0);
        const Vector m1 = assemble_mass(*space, rule).multiply(ones);
        const double mean = dot(m1, out.coeffs()) / space->mesh().area();
        for (double& c : out.coeffs()) c -= mean;
    }
    return out;
}

/// L2 projection of a vector function onto the constrained space: essential
/// dofs take the nodal values of `boundary` (defaults to f itself for the
/// MINI space and to zero normal trace for VectorP1).
inline Field l2_project(const std::shared_ptr<const FESpace>& space, const VectorFunction& f,
                        const QuadratureRule& rule = rule_for_degree(default_quadrature_degree),
                        VectorFunction boundary = nullptr) {
    if (!space->is_vector()) throw std::invalid_argument("l2_project: vector data for a scalar space");
    if (!boundary && space->kind() == SpaceKind::MiniVelocity) boundary = f;
    Vector load = assemble_load(*space, rule, [&](Index, const auto&, Vec2 x) { return f(x); });
    return detail::solve_projection(space, rule, std::move(load), boundary);
}

}  // namespace gucrns
