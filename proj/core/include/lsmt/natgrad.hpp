// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/metric.hpp"
#include "lsmt/state_space.hpp"

namespace lsmt {

/// Configuration of the damped natural-gradient prediction-error fit.
/// When `chart` is set, the loop runs in coordinates theta' = L theta and all
/// quantities are pulled back through L; theta0 is then given in the chart.
struct FitConfig {
    KroneckerStructure structure;
    Eigen::VectorXd theta0;
    int max_iters = 100;
    double grad_tol = 1e-8;
    double lambda0 = 0.0;
    Engine engine = Engine::stein;
    double series_tol = 1e-10;  // used by the series engine
    int grid = 1024;            // used by the quadrature/arma engines
    std::optional<Eigen::MatrixXd> chart;  // L, 2mn x 2mn invertible
};

enum class FitStatus { converged, max_iters, stalled };

struct FitRecord {
    Eigen::VectorXd theta;
    double cost = 0.0;
    double grad_inf = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0;
    double rho = 0.0;
};

struct FitTrace {
    std::vector<FitRecord> iterations;
    FitStatus status = FitStatus::max_iters;
    Eigen::VectorXd theta_final;
};

/// y_t = C x_t + u_t with x_{t+1} = A x_t + B u_t. u is T x m; returns T x m.
Eigen::MatrixXd simulate(const StateSpaceModel& model, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& x0);

struct CostGrad {
    double cost = 0.0;
    Eigen::VectorXd grad;
};

/// Prediction-error cost (1/2T) sum_t |y_t - yhat_t|^2 with exact
/// sensitivity-recursion gradient; the predictor starts from xhat_0 = 0.
CostGrad pem_cost_grad(const ParamVector& theta, const Eigen::MatrixXd& u,
                       const Eigen::MatrixXd& y);

/// delta = -(G + lambda I)^{-1} grad via Cholesky.
Eigen::VectorXd natural_step(const Eigen::VectorXd& grad, const MetricTensor& G,
                             double lambda);

FitTrace fit(const FitConfig& config, const Eigen::MatrixXd& u, const Eigen::MatrixXd& y);

}  // namespace lsmt
