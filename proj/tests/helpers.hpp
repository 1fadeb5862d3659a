// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lsmt/state_space.hpp"

namespace lsmt::testing {

inline ParamVector sc1() {
    KroneckerStructure st(1, {1});
    Eigen::VectorXd v(2);
    v << 0.5, 1.0;
    return ParamVector(st, v);
}

inline ParamVector fir() {
    KroneckerStructure st(1, {1});
    Eigen::VectorXd v(2);
    v << 0.0, 1.0;
    return ParamVector(st, v);
}

inline std::vector<KroneckerStructure> test_structures() {
    return {KroneckerStructure(1, {1}), KroneckerStructure(1, {2}),
            KroneckerStructure(2, {1, 1}), KroneckerStructure(2, {2, 1})};
}

inline Eigen::MatrixXd observability_matrix(const StateSpaceModel& model) {
    const int n = model.structure.n(), m = model.structure.m();
    Eigen::MatrixXd O(m * n, n);
    Eigen::MatrixXd CAk = model.C;
    for (int k = 0; k < n; ++k) {
        O.middleRows(k * m, m) = CAk;
        CAk = (CAk * model.A).eval();
    }
    return O;
}

// Deterministic well-conditioned chart change built from a seeded rotation
// plus a bounded diagonal scaling.
inline Eigen::MatrixXd random_chart(int d, unsigned seed, double max_scale = 3.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = unif(gen);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd scale(d);
    for (int i = 0; i < d; ++i)
        scale[i] = 1.0 + (max_scale - 1.0) * std::abs(unif(gen));
    return Q * scale.asDiagonal();
}

}  // namespace lsmt::testing
