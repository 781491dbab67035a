#pragma once

#include <random>

#include "gucrns/gucrns.hpp"

namespace testing_support {

using namespace gucrns;

inline std::shared_ptr<const TriMesh> unit_mesh(Index n) {
    return std::make_shared<const TriMesh>(build_rect_mesh(1.0, 1.0, n, n));
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Vector v(n);
    for (double& x : v) x = d(rng);
    return v;
}

inline Field random_field(const std::shared_ptr<const FESpace>& space, std::mt19937_64& rng) {
    return Field(space, random_vector(static_cast<std::size_t>(space->dof_count()), rng));
}

// Zeroes the essential (boundary) dofs of a vector field.
inline Field with_zero_trace(Field f) {
    for (const auto& ed : f.space().essential_dofs()) f.coeffs()[ed.dof] = 0.0;
    return f;
}

// Dense row-major copy of a CSR matrix.
inline std::vector<std::vector<double>> dense(const CsrMatrix& a) {
    std::vector<std::vector<double>> d(a.rows(), std::vector<double>(a.cols(), 0.0));
    for (Index r = 0; r < a.rows(); ++r)
        for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) d[r][a.col_idx()[k]] += a.values()[k];
    return d;
}

// Gaussian elimination with partial pivoting: the brute-force oracle.
inline Vector dense_solve(std::vector<std::vector<double>> a, Vector b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        std::swap(a[k], a[p]);
        std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

inline double rel_diff(const Vector& a, const Vector& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// Random sparse, diagonally dominant (hence nonsingular) n x n matrix.
inline CsrMatrix random_sparse(Index n, std::mt19937_64& rng, bool symmetric = false, double density = 0.2) {
    std::uniform_real_distribution<double> d(-1.0, 1.0), coin(0.0, 1.0);
    std::vector<Triplet> t;
    std::vector<double> rowsum(n, 0.0);
    for (Index i = 0; i < n; ++i)
        for (Index j = symmetric ? i + 1 : 0; j < n; ++j) {
            if (i == j || coin(rng) > density) continue;
            const double v = d(rng);
            t.push_back({i, j, v});
            rowsum[i] += std::abs(v);
            if (symmetric) {
                t.push_back({j, i, v});
                rowsum[j] += std::abs(v);
            }
        }
    for (Index i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + 1.0 + coin(rng)});
    return CsrMatrix::from_triplets(n, n, t);
}

}  // namespace testing_support
