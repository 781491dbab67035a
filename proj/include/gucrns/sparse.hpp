#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "gucrns/common.hpp"

namespace gucrns {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row. Explicit zeros are kept so that assembled patterns do not
/// depend on coefficient values.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}
    CsrMatrix(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
        if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || row_ptr_.front() != 0 ||
            static_cast<std::size_t>(row_ptr_.back()) != col_idx_.size() || col_idx_.size() != values_.size())
            throw std::invalid_argument("CsrMatrix: inconsistent storage");
    }

    /// Duplicate (i,j) entries are summed.
    static CsrMatrix from_triplets(Index rows, Index cols, std::span<const Triplet> entries) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("from_triplets: negative shape");
        std::vector<Index> count(static_cast<std::size_t>(rows) + 1, 0);
        for (const auto& t : entries) {
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
                std::ostringstream msg;
                msg << "from_triplets: index (" << t.row << "," << t.col << ") out of range for " << rows << "x"
                    << cols;
                throw std::invalid_argument(msg.str());
            }
            ++count[t.row + 1];
        }
        std::partial_sum(count.begin(), count.end(), count.begin());

        // bucket by row, then sort and merge each row
        std::vector<std::pair<Index, double>> bucket(entries.size());
        {
            std::vector<Index> fill(count.begin(), count.end() - 1);
            for (const auto& t : entries) bucket[fill[t.row]++] = {t.col, t.value};
        }
        std::vector<Index> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
        std::vector<Index> col_idx;
        std::vector<double> values;
        col_idx.reserve(entries.size());
        values.reserve(entries.size());
        for (Index r = 0; r < rows; ++r) {
            auto first = bucket.begin() + count[r], last = bucket.begin() + count[r + 1];
            std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
            for (auto it = first; it != last; ++it) {
                if (!col_idx.empty() && static_cast<Index>(col_idx.size()) > row_ptr[r] && col_idx.back() == it->first)
                    values.back() += it->second;
                else {
                    col_idx.push_back(it->first);
                    values.push_back(it->second);
                }
            }
            row_ptr[r + 1] = static_cast<Index>(col_idx.size());
        }
        return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    static CsrMatrix identity(Index n) {
        std::vector<Index> rp(static_cast<std::size_t>(n) + 1), ci(n);
        std::iota(rp.begin(), rp.end(), 0);
        std::iota(ci.begin(), ci.end(), 0);
        return CsrMatrix(n, n, std::move(rp), std::move(ci), Vector(n, 1.0));
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index nnz() const { return static_cast<Index>(values_.size()); }

    const std::vector<Index>& row_ptr() const { return row_ptr_; }
    const std::vector<Index>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Storage position of (i,j), or -1 when (i,j) is not in the pattern.
    Index find(Index i, Index j) const {
        auto first = col_idx_.begin() + row_ptr_[i], last = col_idx_.begin() + row_ptr_[i + 1];
        auto it = std::lower_bound(first, last, j);
        return (it != last && *it == j) ? static_cast<Index>(it - col_idx_.begin()) : -1;
    }

    double at(Index i, Index j) const {
        const Index k = find(i, j);
        return k < 0 ? 0.0 : values_[k];
    }

    bool same_pattern(const CsrMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ && col_idx_ == o.col_idx_;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        check_size(x.size(), cols_, "multiply");
        check_size(y.size(), rows_, "multiply");
        for (Index r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
            y[r] = s;
        }
    }
    Vector multiply(std::span<const double> x) const {
        Vector y(rows_);
        multiply(x, y);
        return y;
    }

    Vector multiply_transpose(std::span<const double> x) const {
        check_size(x.size(), rows_, "multiply_transpose");
        Vector y(cols_, 0.0);
        for (Index r = 0; r < rows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_idx_[k]] += values_[k] * x[r];
        return y;
    }

    CsrMatrix transpose() const {
        std::vector<Triplet> t;
        t.reserve(values_.size());
        for (Index r = 0; r < rows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({col_idx_[k], r, values_[k]});
        return from_triplets(cols_, rows_, t);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    static void check_size(std::size_t got, Index want, const char* where) {
        if (got != static_cast<std::size_t>(want))
            throw std::invalid_argument(std::string(where) + ": vector length mismatch");
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> row_ptr_{0};
    std::vector<Index> col_idx_;
    std::vector<double> values_;
};

/// Relative residual ||Ax - b|| / ||b|| (absolute when b = 0).
inline double relative_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
    Vector r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const double nb = norm2(b);
    return nb > 0.0 ? norm2(r) / nb : norm2(r);
}

inline constexpr double direct_residual_tolerance = 1e-10;

/// Sparse LU with partial pivoting and a fill-reducing column ordering.
/// The symbolic analysis is reused while the sparsity pattern is unchanged.
class SparseLu {
public:
    void factorize(const CsrMatrix& a) {
        if (a.rows() != a.cols()) throw std::invalid_argument("SparseLu: matrix must be square");
        matrix_ = a;
        Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, Index>> view(
            a.rows(), a.cols(), a.nnz(), a.row_ptr().data(), a.col_idx().data(), a.values().data());
        colmajor_ = view;
        colmajor_.makeCompressed();
        if (!analyzed_ || !a.same_pattern(pattern_)) {
            solver_.analyzePattern(colmajor_);
            pattern_ = a;
            analyzed_ = true;
        }
        solver_.factorize(colmajor_);
        if (solver_.info() != Eigen::Success)
            throw SolverFailure("sparse LU: factorization failed (" + solver_.lastErrorMessage() + ")", 0,
                                std::numeric_limits<double>::infinity());
        factored_ = true;
    }

    /// Solves and re-checks the residual independently of the factorization;
    /// up to two steps of iterative refinement are applied when needed.
    Vector solve(std::span<const double> b, double tolerance = direct_residual_tolerance) const {
        if (!factored_) throw std::logic_error("SparseLu: solve before factorize");
        if (b.size() != static_cast<std::size_t>(matrix_.rows()))
            throw std::invalid_argument("SparseLu: rhs length mismatch");
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
        Eigen::VectorXd x = solver_.solve(rhs);
        Vector out(x.data(), x.data() + x.size());
        double res = relative_residual(matrix_, out, b);
        for (int pass = 0; pass < 2 && !(res <= tolerance); ++pass) {
            Vector r = matrix_.multiply(out);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
            Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
            Eigen::VectorXd dx = solver_.solve(rv);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += dx[static_cast<Eigen::Index>(i)];
            res = relative_residual(matrix_, out, b);
        }
        if (!(res <= tolerance)) {
            std::ostringstream msg;
            msg << "sparse LU: residual " << res << " exceeds tolerance " << tolerance;
            throw SolverFailure(msg.str(), 1, res);
        }
        return out;
    }

private:
    CsrMatrix matrix_;
    CsrMatrix pattern_;
    Eigen::SparseMatrix<double, Eigen::ColMajor, Index> colmajor_;
    Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, Index>, Eigen::COLAMDOrdering<Index>> solver_;
    bool analyzed_ = false;
    bool factored_ = false;
};

inline Vector lu_solve(const CsrMatrix& a, std::span<const double> b) {
    SparseLu lu;
    lu.factorize(a);
    return lu.solve(b);
}

struct KrylovResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Conjugate gradients for a caller-asserted SPD matrix.
inline KrylovResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int maxit) {
    const Index n = a.rows();
    KrylovResult out{Vector(n, 0.0), 0, 0.0};
    const double nb = norm2(b);
    if (nb == 0.0) return out;

    Vector r(b.begin(), b.end()), p = r, ap(n);
    double rr = dot(r, r);
    for (int it = 1; it <= maxit; ++it) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw SolverFailure("cg: matrix not positive definite along search direction", it,
                                std::sqrt(rr) / nb);
        }
        const double alpha = rr / pap;
        for (Index i = 0; i < n; ++i) {
            out.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        out.iterations = it;
        if (std::sqrt(rr_new) <= tol * nb) break;
        const double beta = rr_new / rr;
        for (Index i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
    }
    out.relative_residual = relative_residual(a, out.x, b);
    if (!(out.relative_residual <= tol)) {
        std::ostringstream msg;
        msg << "cg: no convergence after " << out.iterations << " iterations, relative residual "
            << out.relative_residual;
        throw SolverFailure(msg.str(), out.iterations, out.relative_residual);
    }
    return out;
}

/// Restarted GMRES with right Jacobi preconditioning, so the monitored
/// residual is the true residual of the original system.
inline KrylovResult gmres_solve(const CsrMatrix& a, std::span<const double> b, double tol, int restart, int maxit) {
    if (a.rows() != a.cols()) throw std::invalid_argument("gmres: matrix must be square");
    if (restart < 1) throw std::invalid_argument("gmres: restart must be >= 1");
    const Index n = a.rows();
    KrylovResult out{Vector(n, 0.0), 0, 0.0};
    const double nb = norm2(b);
    if (nb == 0.0) return out;

    Vector inv_diag(n, 1.0);
    for (Index i = 0; i < n; ++i) {
        const double d = a.at(i, i);
        if (d != 0.0) inv_diag[i] = 1.0 / d;
    }

    const int m = restart;
    std::vector<Vector> v(m + 1, Vector(n));
    std::vector<Vector> hess(m + 1, Vector(m, 0.0));
    Vector cs(m), sn(m), g(m + 1), w(n), z(n);
    int total = 0;

    while (total < maxit) {
        Vector r = a.multiply(out.x);
        for (Index i = 0; i < n; ++i) r[i] = b[i] - r[i];
        double beta = norm2(r);
        if (beta <= tol * nb) break;
        for (Index i = 0; i < n; ++i) v[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int k = 0;
        for (; k < m && total < maxit; ++k, ++total) {
            for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * v[k][i];
            a.multiply(z, w);
            for (int j = 0; j <= k; ++j) {
                hess[j][k] = dot(w, v[j]);
                for (Index i = 0; i < n; ++i) w[i] -= hess[j][k] * v[j][i];
            }
            hess[k + 1][k] = norm2(w);
            if (hess[k + 1][k] > 0.0)
                for (Index i = 0; i < n; ++i) v[k + 1][i] = w[i] / hess[k + 1][k];
            for (int j = 0; j < k; ++j) {
                const double t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            const double denom = std::hypot(hess[k][k], hess[k + 1][k]);
            cs[k] = denom > 0.0 ? hess[k][k] / denom : 1.0;
            sn[k] = denom > 0.0 ? hess[k + 1][k] / denom : 0.0;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (std::abs(g[k + 1]) <= tol * nb || hess[k][k] == 0.0) {
                ++k;
                ++total;
                break;
            }
        }
        // back substitution on the k x k triangle
        Vector y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= hess[i][j] * y[j];
            y[i] = hess[i][i] != 0.0 ? s / hess[i][i] : 0.0;
        }
        for (Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += v[j][i] * y[j];
            out.x[i] += inv_diag[i] * s;
        }
        out.iterations = total;
        if (relative_residual(a, out.x, b) <= tol) break;
        if (k == 0) break;
    }
    out.relative_residual = relative_residual(a, out.x, b);
    if (!(out.relative_residual <= tol)) {
        std::ostringstream msg;
        msg << "gmres: no convergence after " << out.iterations << " iterations, relative residual "
            << out.relative_residual;
        throw SolverFailure(msg.str(), out.iterations, out.relative_residual);
    }
    return out;
}

}  // namespace gucrns
