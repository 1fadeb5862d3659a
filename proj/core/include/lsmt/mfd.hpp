// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/state_space.hpp"

namespace lsmt {

/// Matrix polynomial with real coefficients, stored dense by ascending degree.
struct PolyMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<Eigen::MatrixXd> coeffs;  // coeffs[d] multiplies z^d

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }

    static PolyMatrix zero(int rows, int cols, int degree);
};

/// Left matrix-fraction data: H(z) = A^{-1}(z) B(z) with B(z) = A(z) + M(z) K.
struct MfdPair {
    PolyMatrix Apoly;  // m x m, row i has degree n_i
    PolyMatrix Mpoly;  // m x n, degree <= p - 1
    Eigen::MatrixXd K; // n x m, equal to the state-space B
};

/// Constant coefficient derivatives of (A(z), M(z)) along a group-I direction.
struct MfdDerivative {
    PolyMatrix dApoly;
    PolyMatrix dMpoly;
};

Eigen::MatrixXcd poly_eval(const PolyMatrix& P, std::complex<double> z);

MfdPair left_mfd(const ParamVector& theta);

MfdDerivative mfd_derivative(const KroneckerStructure& structure, int i);

/// Max over sampled z on |z| = 1.5 of the defect in A(z)C(zI-A)^{-1} = M(z)
/// and H(z) = A^{-1}(z)B(z).
double verify_mfd(const StateSpaceModel& model, const MfdPair& pair, int num_samples);

/// B(z) = A(z) + M(z) K.
PolyMatrix numerator_poly(const MfdPair& pair);

}  // namespace lsmt
