// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/errors.hpp"

namespace lsmt {

/// Chart descriptor for the overlapping parametrization: m outputs
/// (= inputs) and one Kronecker index per output block.
class KroneckerStructure {
public:
    KroneckerStructure(int m, std::vector<int> nu) : m_(m), nu_(std::move(nu)) {
        if (m_ < 1) fail(ErrorCode::dim, "m must be >= 1");
        if (static_cast<int>(nu_.size()) != m_)
            fail(ErrorCode::dim, "nu must have exactly m entries");
        for (int ni : nu_)
            if (ni < 1) fail(ErrorCode::dim, "every Kronecker index must be >= 1");
        starts_.resize(m_);
        int acc = 0;
        for (int i = 0; i < m_; ++i) {
            starts_[i] = acc;
            acc += nu_[i];
        }
        n_ = acc;
    }

    int m() const { return m_; }
    const std::vector<int>& nu() const { return nu_; }
    int n() const { return n_; }
    int p() const { return *std::max_element(nu_.begin(), nu_.end()); }

    /// First state index of block i (0-based).
    int block_start(int i) const { return starts_[i]; }
    /// Row index of the free terminal row of block i.
    int terminal_row(int i) const { return starts_[i] + nu_[i] - 1; }
    /// Block that owns state column j, and the offset of j within it.
    int block_of_state(int j) const {
        for (int i = m_ - 1; i >= 0; --i)
            if (j >= starts_[i]) return i;
        fail(ErrorCode::range, "state index out of range");
    }

    int param_count() const { return 2 * m_ * n_; }

    bool operator==(const KroneckerStructure& o) const {
        return m_ == o.m_ && nu_ == o.nu_;
    }

private:
    int m_;
    std::vector<int> nu_;
    std::vector<int> starts_;
    int n_ = 0;
};

/// Parameter vector theta in R^{2mn}: group I (the m free terminal rows of A,
/// row-major by block) followed by group J (the entries of B, row-major).
class ParamVector {
public:
    ParamVector(KroneckerStructure structure, Eigen::VectorXd values)
        : structure_(std::move(structure)), values_(std::move(values)) {
        if (values_.size() != structure_.param_count())
            fail(ErrorCode::dim, "theta must have 2mn entries");
    }

    const KroneckerStructure& structure() const { return structure_; }
    const Eigen::VectorXd& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }

    /// Group membership is positional: the first mn entries are group I.
    bool in_group_I(int k) const { return k < structure_.m() * structure_.n(); }

    ParamVector with_values(Eigen::VectorXd v) const {
        return ParamVector(structure_, std::move(v));
    }

private:
    KroneckerStructure structure_;
    Eigen::VectorXd values_;
};

}  // namespace lsmt
