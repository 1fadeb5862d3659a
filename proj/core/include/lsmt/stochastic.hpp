// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/metric.hpp"
#include "lsmt/state_space.hpp"

namespace lsmt {

/// Innovation covariance of the white-noise input.
struct NoiseModel {
    Eigen::MatrixXd R;
};

void validate_noise(const NoiseModel& noise, int m);

/// Output autocovariances of the innovation-form model:
/// P = A P A^T + B R B^T, Gamma_0 = C P C^T + R, Gamma_k = C A^{k-1} Ncross.
struct CovarianceSequence {
    std::vector<Eigen::MatrixXd> Gamma;  // Gamma_0 ... Gamma_K
    Eigen::MatrixXd P;                   // stationary state covariance
    Eigen::MatrixXd Ncross;              // A P C^T + B R
    int truncation = 0;
    double tail_bound = 0.0;
};

CovarianceSequence stationary_covariances(const StateSpaceModel& model,
                                          const NoiseModel& noise, int K);

/// dGamma_0 ... dGamma_K along parameter direction k.
std::vector<Eigen::MatrixXd> covariance_derivatives(const StateSpaceModel& model,
                                                    const NoiseModel& noise, int k,
                                                    int K);

/// Tensor from U(z) = sum_{k>=0} Gamma_k z^{-k}. `tol` bounds the fitted
/// series tail relative to the largest accumulated entry.
MetricTensor metric_U(const StateSpaceModel& model, const NoiseModel& noise, double tol);

/// Tensor from the spectral density T(z) = sum_{k in Z} Gamma_k z^{-k},
/// evaluated by the two-sided covariance series.
MetricTensor metric_T(const StateSpaceModel& model, const NoiseModel& noise, double tol);

/// Same tensor by unit-circle quadrature of dT_i = D_i R H^* + H R D_i^*;
/// the independent second route for metric_T.
MetricTensor metric_T_quadrature(const StateSpaceModel& model, const NoiseModel& noise,
                                 int N);

/// T(z) = H(z) R H(z)^* on the unit circle.
Eigen::MatrixXcd spectral_density(const StateSpaceModel& model, const NoiseModel& noise,
                                  std::complex<double> z);

}  // namespace lsmt
