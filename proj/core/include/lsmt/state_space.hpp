// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/kronecker.hpp"

namespace lsmt {

/// Structured realization of H(z) = I + C(zI - A)^{-1}B. The shift rows of A,
/// the selection rows of C and the unit feedthrough are fixed by the chart;
/// only the m terminal rows of A and all of B carry parameters.
struct StateSpaceModel {
    Eigen::MatrixXd A;  // n x n
    Eigen::MatrixXd B;  // n x m
    Eigen::MatrixXd C;  // m x n
    KroneckerStructure structure;
};

/// Truncated impulse response h_0 = I, h_k = C A^{k-1} B.
struct MarkovSequence {
    std::vector<Eigen::MatrixXd> coefficients;  // h_0 ... h_N
    int truncation = 0;
    double tail_bound = 0.0;
};

/// Result of pulling theta' back through an invertible chart change L.
struct Reparam {
    ParamVector theta;         // L^{-1} theta', in the base chart
    Eigen::MatrixXd jacobian;  // J = L^{-1}; gradients map by J^T, tensors by J^T G J
};

StateSpaceModel build_state_space(const ParamVector& theta);

/// The constant matrix dA/dtheta_k (n x n, k in group I) or dB/dtheta_k
/// (n x m, k in group J). Exactly one entry equals 1.
Eigen::MatrixXd structural_derivative(const KroneckerStructure& structure, int k);

Eigen::MatrixXcd eval_transfer(const StateSpaceModel& model, std::complex<double> z);

MarkovSequence markov_parameters(const StateSpaceModel& model, int N);

double spectral_radius(const StateSpaceModel& model);

/// Stability margin used across all engines: rho(A) <= 1 - 1e-9.
bool is_stable(const StateSpaceModel& model);
void require_stable(const StateSpaceModel& model);

/// Deterministic stable sample: 2mn i.i.d. standard normals from mt19937_64
/// via Box-Muller, group-I entries rescaled by 0.9 until rho(A) <= rho_max.
ParamVector sample_stable(const KroneckerStructure& structure, std::uint64_t seed,
                          double rho_max);

Reparam apply_linear_reparam(const Eigen::MatrixXd& L, const Eigen::VectorXd& theta_prime,
                             const KroneckerStructure& structure);

/// Geometric tail bound c * rho^{N+1} / (1 - rho) fitted on the last up-to-10
/// positive norms; +inf when the fit gives rho >= 1, 0 when the tail is
/// identically zero. Shared by the Markov, series and covariance truncations.
double fit_tail_bound(const std::vector<double>& norms, int N);

}  // namespace lsmt
