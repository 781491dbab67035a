#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gucrns/sparse.hpp"

namespace gucrns {

/// Monolithic sparsity pattern of a block system plus, for every block term,
/// the position of each of its stored entries inside the monolithic storage.
/// Built once and reused while the block patterns stay the same.
struct ScatterPlan {
    CsrMatrix pattern;
    std::vector<std::vector<Index>> term_maps;
    std::vector<CsrMatrix> term_patterns;
    std::vector<std::pair<int, int>> term_blocks;
};

/// Block-structured linear system. Terms scale(i,j) * A_ij are added per
/// (row block, column block); compose() scatters them into one CSR matrix.
/// Optional Lagrange-multiplier rows are appended after the last block.
class BlockSystem {
public:
    BlockSystem(std::vector<std::string> names, std::vector<Index> sizes)
        : names_(std::move(names)), sizes_(std::move(sizes)) {
        if (names_.size() != sizes_.size()) throw std::invalid_argument("BlockSystem: names/sizes mismatch");
        offsets_.push_back(0);
        for (Index s : sizes_) offsets_.push_back(offsets_.back() + s);
        rhs_.assign(offsets_.back(), 0.0);
    }

    int block_count() const { return static_cast<int>(sizes_.size()); }
    Index offset(int block) const { return offsets_.at(block); }
    Index block_size(int block) const { return sizes_.at(block); }
    const std::string& name(int block) const { return names_.at(block); }
    int block_index(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("BlockSystem: unknown block " + name);
    }
    /// Total unknowns including multipliers.
    Index size() const { return offsets_.back() + static_cast<Index>(constraints_.size()); }

    void add_block(int row, int col, CsrMatrix matrix, double scale = 1.0) {
        if (composed_) throw std::logic_error("BlockSystem: add_block after compose");
        if (matrix.rows() != sizes_.at(row) || matrix.cols() != sizes_.at(col))
            throw std::invalid_argument("BlockSystem: block " + names_[row] + "," + names_[col] +
                                        " has inconsistent shape");
        if (scale != 1.0)
            for (double& v : matrix.values()) v *= scale;
        terms_.push_back({row, col, std::move(matrix)});
    }

    /// Appends the constraint coefficients . x_block = 0 as a multiplier
    /// row and its transpose column.
    void add_constraint(int block, std::vector<double> coefficients) {
        if (composed_) throw std::logic_error("BlockSystem: add_constraint after compose");
        if (coefficients.size() != static_cast<std::size_t>(sizes_.at(block)))
            throw std::invalid_argument("BlockSystem: constraint length mismatch");
        constraints_.push_back({block, std::move(coefficients)});
    }

    std::span<double> rhs(int block) { return {rhs_.data() + offsets_.at(block), static_cast<std::size_t>(sizes_.at(block))}; }
    std::span<const double> rhs() const { return rhs_; }

    /// Builds the monolithic matrix. A plan from an earlier system with the
    /// same block patterns avoids recomputing the sparsity structure.
    const CsrMatrix& compose(std::shared_ptr<ScatterPlan>* plan_cache = nullptr) {
        if (composed_) return matrix_;
        std::shared_ptr<ScatterPlan> plan = plan_cache ? *plan_cache : nullptr;
        if (!plan || !plan_matches(*plan)) {
            plan = build_plan();
            if (plan_cache) *plan_cache = plan;
        }
        matrix_ = plan->pattern;
        std::fill(matrix_.values().begin(), matrix_.values().end(), 0.0);
        auto& vals = matrix_.values();
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const auto& map = plan->term_maps[t];
            const auto& tv = terms_[t].matrix.values();
            for (std::size_t k = 0; k < tv.size(); ++k) vals[map[k]] += tv[k];
        }
        const Index base = offsets_.back();
        for (std::size_t c = 0; c < constraints_.size(); ++c) {
            const auto& [block, coeff] = constraints_[c];
            const Index m = base + static_cast<Index>(c);
            for (Index i = 0; i < sizes_[block]; ++i) {
                vals[matrix_.find(offsets_[block] + i, m)] += coeff[i];
                vals[matrix_.find(m, offsets_[block] + i)] += coeff[i];
            }
        }
        rhs_.resize(size(), 0.0);
        composed_ = true;
        return matrix_;
    }

    const CsrMatrix& matrix() const {
        if (!composed_) throw std::logic_error("BlockSystem: matrix before compose");
        return matrix_;
    }

    /// Imposes x[g] = value for the given global rows: the known values are
    /// eliminated from every other row's right-hand side and each constrained
    /// row becomes an identity row.
    void constrain(std::span<const Index> global_rows, std::span<const double> values) {
        if (!composed_) throw std::logic_error("BlockSystem: constrain before compose");
        if (global_rows.size() != values.size()) throw std::invalid_argument("constrain: size mismatch");
        std::vector<double> fixed(size(), 0.0);
        std::vector<char> is_fixed(size(), 0);
        for (std::size_t i = 0; i < global_rows.size(); ++i) {
            is_fixed.at(global_rows[i]) = 1;
            fixed[global_rows[i]] = values[i];
        }
        const auto& rp = matrix_.row_ptr();
        const auto& ci = matrix_.col_idx();
        auto& v = matrix_.values();
        for (Index r = 0; r < matrix_.rows(); ++r) {
            if (is_fixed[r]) continue;
            for (Index k = rp[r]; k < rp[r + 1]; ++k) {
                if (is_fixed[ci[k]]) {
                    rhs_[r] -= v[k] * fixed[ci[k]];
                    v[k] = 0.0;
                }
            }
        }
        for (Index r : global_rows) {
            bool has_diag = false;
            for (Index k = rp[r]; k < rp[r + 1]; ++k) {
                v[k] = ci[k] == r ? 1.0 : 0.0;
                has_diag |= ci[k] == r;
            }
            if (!has_diag) throw std::logic_error("constrain: row " + std::to_string(r) + " lacks a diagonal entry");
            rhs_[r] = fixed[r];
        }
    }

    /// Splits a monolithic solution vector back into the named blocks.
    std::vector<Vector> split(std::span<const double> x) const {
        std::vector<Vector> out;
        for (int b = 0; b < block_count(); ++b)
            out.emplace_back(x.begin() + offsets_[b], x.begin() + offsets_[b] + sizes_[b]);
        return out;
    }

private:
    struct Term {
        int row;
        int col;
        CsrMatrix matrix;
    };
    struct Constraint {
        int block;
        std::vector<double> coefficients;
    };

    bool plan_matches(const ScatterPlan& plan) const {
        if (plan.term_patterns.size() != terms_.size() || plan.pattern.rows() != size()) return false;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            if (plan.term_blocks[t] != std::pair{terms_[t].row, terms_[t].col}) return false;
            if (!plan.term_patterns[t].same_pattern(terms_[t].matrix)) return false;
        }
        return true;
    }

    std::shared_ptr<ScatterPlan> build_plan() const {
        auto plan = std::make_shared<ScatterPlan>();
        std::vector<Triplet> entries;
        for (const auto& term : terms_) {
            const auto& a = term.matrix;
            for (Index r = 0; r < a.rows(); ++r)
                for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
                    entries.push_back({offsets_[term.row] + r, offsets_[term.col] + a.col_idx()[k], 0.0});
        }
        const Index base = offsets_.back();
        for (std::size_t c = 0; c < constraints_.size(); ++c) {
            const int block = constraints_[c].block;
            const Index m = base + static_cast<Index>(c);
            for (Index i = 0; i < sizes_[block]; ++i) {
                entries.push_back({offsets_[block] + i, m, 0.0});
                entries.push_back({m, offsets_[block] + i, 0.0});
            }
            entries.push_back({m, m, 0.0});
        }
        plan->pattern = CsrMatrix::from_triplets(size(), size(), entries);
        for (const auto& term : terms_) {
            const auto& a = term.matrix;
            std::vector<Index> map(a.nnz());
            for (Index r = 0; r < a.rows(); ++r)
                for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
                    map[k] = plan->pattern.find(offsets_[term.row] + r, offsets_[term.col] + a.col_idx()[k]);
            plan->term_maps.push_back(std::move(map));
            CsrMatrix shape = a;
            std::fill(shape.values().begin(), shape.values().end(), 0.0);
            plan->term_patterns.push_back(std::move(shape));
            plan->term_blocks.emplace_back(term.row, term.col);
        }
        return plan;
    }

    std::vector<std::string> names_;
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    std::vector<Term> terms_;
    std::vector<Constraint> constraints_;
    Vector rhs_;
    CsrMatrix matrix_;
    bool composed_ = false;
};

}  // namespace gucrns
