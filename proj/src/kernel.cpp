#include "atpo/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace atpo {

double StochasticKernel::at(std::size_t action, std::size_t r, std::size_t c) const {
    const auto entries = row(action, r);
    const auto it = std::lower_bound(entries.begin(), entries.end(), c,
                                     [](const KernelEntry& e, std::size_t col) { return e.col < col; });
    return (it != entries.end() && it->col == c) ? it->prob : 0.0;
}

double StochasticKernel::max_row_sum_error() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < num_actions_; ++a) {
        for (std::size_t r = 0; r < num_rows_; ++r) {
            double sum = 0.0;
            for (const auto& e : row(a, r)) sum += e.prob;
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    }
    return worst;
}

bool StochasticKernel::entries_valid() const {
    return std::all_of(entries_.begin(), entries_.end(), [this](const KernelEntry& e) {
        return std::isfinite(e.prob) && e.prob >= 0.0 && e.col < num_cols_;
    });
}

std::vector<double> StochasticKernel::to_dense() const {
    std::vector<double> dense(num_actions_ * num_rows_ * num_cols_, 0.0);
    for (std::size_t a = 0; a < num_actions_; ++a) {
        for (std::size_t r = 0; r < num_rows_; ++r) {
            for (const auto& e : row(a, r)) dense[(a * num_rows_ + r) * num_cols_ + e.col] = e.prob;
        }
    }
    return dense;
}

StochasticKernel StochasticKernel::from_dense(std::size_t num_actions, std::size_t num_rows,
                                              std::size_t num_cols, std::span<const double> dense) {
    if (dense.size() != num_actions * num_rows * num_cols) {
        throw std::invalid_argument("dense kernel has " + std::to_string(dense.size()) +
                                    " entries, expected " +
                                    std::to_string(num_actions * num_rows * num_cols));
    }
    Builder builder(num_actions, num_rows, num_cols);
    for (std::size_t a = 0; a < num_actions; ++a) {
        for (std::size_t r = 0; r < num_rows; ++r) {
            for (std::size_t c = 0; c < num_cols; ++c) {
                const double p = dense[(a * num_rows + r) * num_cols + c];
                if (p != 0.0) builder.add(c, p);
            }
            builder.end_row();
        }
    }
    return std::move(builder).finish();
}

StochasticKernel::Builder::Builder(std::size_t num_actions, std::size_t num_rows,
                                   std::size_t num_cols) {
    kernel_.num_actions_ = num_actions;
    kernel_.num_rows_ = num_rows;
    kernel_.num_cols_ = num_cols;
    kernel_.offsets_.reserve(num_actions * num_rows + 1);
}

void StochasticKernel::Builder::add(std::size_t col, double prob) {
    if (col >= kernel_.num_cols_) {
        throw std::out_of_range("kernel column " + std::to_string(col) + " out of range");
    }
    pending_.push_back({col, prob});
}

void StochasticKernel::Builder::end_row() {
    if (kernel_.offsets_.size() > kernel_.num_actions_ * kernel_.num_rows_) {
        throw std::logic_error("kernel builder: too many rows");
    }
    std::sort(pending_.begin(), pending_.end(),
              [](const KernelEntry& l, const KernelEntry& r) { return l.col < r.col; });
    for (std::size_t i = 0; i < pending_.size();) {
        KernelEntry merged = pending_[i];
        std::size_t j = i + 1;
        for (; j < pending_.size() && pending_[j].col == merged.col; ++j) merged.prob += pending_[j].prob;
        if (merged.prob != 0.0) kernel_.entries_.push_back(merged);
        i = j;
    }
    pending_.clear();
    kernel_.offsets_.push_back(kernel_.entries_.size());
}

StochasticKernel StochasticKernel::Builder::finish() && {
    if (kernel_.offsets_.size() != kernel_.num_actions_ * kernel_.num_rows_ + 1) {
        throw std::logic_error("kernel builder: " + std::to_string(kernel_.offsets_.size() - 1) +
                               " rows closed, expected " +
                               std::to_string(kernel_.num_actions_ * kernel_.num_rows_));
    }
    return std::move(kernel_);
}

}  // namespace atpo
