// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/mfd.hpp"
#include "lsmt/state_space.hpp"

namespace lsmt {

enum class Engine { stein, series, quadrature, arma };

const char* engine_name(Engine e);
std::optional<Engine> engine_from_name(const std::string& name);

/// The 2mn x 2mn metric tensor G(theta), symmetrized on output.
struct MetricTensor {
    Eigen::MatrixXd G;
    Engine engine = Engine::stein;
    std::optional<int> truncation;  // series length / grid size, when applicable
    double est_error = 0.0;
};

/// Strictly proper realization of dH/dtheta_k: n states for k in J
/// (A, dB/dtheta_k, C), 2n states for k in I (block-triangular form).
struct SensitivityRealization {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    int param = 0;
};

/// Solves X = A1 X A2^T + Q, the sum of A1^k Q (A2^T)^k over k >= 0.
Eigen::MatrixXd stein_solve(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
                            const Eigen::MatrixXd& Q);

/// W_o = A^T W_o A + C^T C.
Eigen::MatrixXd observability_gramian(const StateSpaceModel& model);

SensitivityRealization sensitivity_realization(const StateSpaceModel& model, int k);

MetricTensor metric_stein(const StateSpaceModel& model);
MetricTensor metric_series(const StateSpaceModel& model, double tol);
MetricTensor metric_quadrature(const StateSpaceModel& model, int N, int threads = 1);
MetricTensor metric_arma(const ParamVector& theta, int N, int threads = 1);

struct EnginePairDiscrepancy {
    Engine a;
    Engine b;
    double max_abs_diff;
};

struct CrossValidateReport {
    std::vector<EnginePairDiscrepancy> pairs;
    double tol = 0.0;
    bool pass = false;
};

CrossValidateReport cross_validate(const ParamVector& theta, double tol);

}  // namespace lsmt
