#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace atpo {

/// One non-zero entry of a stochastic kernel row.
struct KernelEntry {
    std::size_t col;
    double prob;

    bool operator==(const KernelEntry&) const = default;
};

/// A family of row-stochastic matrices K[a][row][col], one per action,
/// stored row-compressed. Rows are sorted by column with no duplicates and
/// no explicit zeros.
class StochasticKernel {
public:
    StochasticKernel() = default;

    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_rows() const { return num_rows_; }
    std::size_t num_cols() const { return num_cols_; }
    std::size_t num_nonzeros() const { return entries_.size(); }

    std::span<const KernelEntry> row(std::size_t action, std::size_t r) const {
        const std::size_t i = action * num_rows_ + r;
        return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    /// Element lookup (binary search within the row).
    double at(std::size_t action, std::size_t r, std::size_t c) const;

    /// Largest deviation of any row sum from 1, and whether every entry is
    /// non-negative and finite.
    double max_row_sum_error() const;
    bool entries_valid() const;

    /// Row-major dense copy, layout [action][row][col].
    std::vector<double> to_dense() const;

    static StochasticKernel from_dense(std::size_t num_actions, std::size_t num_rows,
                                       std::size_t num_cols, std::span<const double> dense);

    bool operator==(const StochasticKernel&) const = default;

    class Builder;

private:
    std::size_t num_actions_ = 0;
    std::size_t num_rows_ = 0;
    std::size_t num_cols_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<KernelEntry> entries_;
};

/// Accumulates rows in (action, row) order. Entries added to a row may be
/// unsorted and repeated; they are merged by summation when the row closes.
class StochasticKernel::Builder {
public:
    Builder(std::size_t num_actions, std::size_t num_rows, std::size_t num_cols);

    void add(std::size_t col, double prob);
    /// Closes the current row; rows must be closed in (action, row) order.
    void end_row();
    StochasticKernel finish() &&;

private:
    StochasticKernel kernel_;
    std::vector<KernelEntry> pending_;
};

}  // namespace atpo
