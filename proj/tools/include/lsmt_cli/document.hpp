// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsmt/kronecker.hpp"
#include "lsmt/stochastic.hpp"

namespace lsmt::cli {

/// On-disk description of theta and its chart, plus an optional noise
/// covariance. JSON object with exactly the keys m, nu, theta_I, theta_J
/// and optionally R (row-major m*m list).
struct ModelDocument {
    int m = 0;
    std::vector<int> nu;
    std::vector<double> theta_I;
    std::vector<double> theta_J;
    std::optional<std::vector<double>> R;

    ParamVector to_param_vector() const;
    std::optional<NoiseModel> noise() const;
};

ModelDocument parse_model_document(const std::string& text);
std::string serialize_model_document(const ModelDocument& doc);

ModelDocument document_from_theta(const ParamVector& theta,
                                  const std::optional<Eigen::MatrixXd>& R = std::nullopt);

/// Matrix CSV: no header, row-major, 17 significant digits.
std::string format_matrix_csv(const Eigen::MatrixXd& M);

/// Series CSV with header t,u1..um[,y1..ym], t ascending from 0.
std::string format_series_csv(const Eigen::MatrixXd& u, const Eigen::MatrixXd* y);
void parse_series_csv(const std::string& text, int m, Eigen::MatrixXd& u,
                      Eigen::MatrixXd* y);

std::string format_double(double x);  // %.17g

}  // namespace lsmt::cli
