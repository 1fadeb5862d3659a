// SPDX-License-Identifier: Apache-2.0
#include "lsmt/natgrad.hpp"

#include <cmath>

namespace lsmt {

Eigen::MatrixXd simulate(const StateSpaceModel& model, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& x0) {
    const int m = model.structure.m(), n = model.structure.n();
    const int T = static_cast<int>(u.rows());
    if (T < 1 || u.cols() != m) fail(ErrorCode::dim, "u must be T x m with T >= 1");
    if (x0.size() != n) fail(ErrorCode::dim, "x0 must have n entries");

    Eigen::MatrixXd y(T, m);
    Eigen::VectorXd x = x0;
    for (int t = 0; t < T; ++t) {
        y.row(t) = (model.C * x).transpose() + u.row(t);
        x = model.A * x + model.B * u.row(t).transpose();
    }
    return y;
}

CostGrad pem_cost_grad(const ParamVector& theta, const Eigen::MatrixXd& u,
                       const Eigen::MatrixXd& y) {
    const StateSpaceModel model = build_state_space(theta);
    require_stable(model);
    const auto& st = theta.structure();
    const int m = st.m(), n = st.n(), d = st.param_count();
    const int T = static_cast<int>(u.rows());
    if (u.rows() != y.rows() || u.cols() != m || y.cols() != m)
        fail(ErrorCode::dim, "u and y must both be T x m");

    std::vector<Eigen::MatrixXd> dP;  // structural derivatives, cached
    dP.reserve(d);
    for (int k = 0; k < d; ++k) dP.push_back(structural_derivative(st, k));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, d);  // column k = dxhat/dtheta_k
    double cost = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);

    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd ut = u.row(t).transpose();
        const Eigen::VectorXd e = y.row(t).transpose() - (model.C * x + ut);
        cost += e.squaredNorm();
        grad -= (e.transpose() * model.C * dx).transpose();

        // State and sensitivity recursions.
        dx = (model.A * dx).eval();
        for (int k = 0; k < m * n; ++k) dx.col(k) += dP[k] * x;
        for (int k = m * n; k < d; ++k) dx.col(k) += dP[k] * ut;
        x = model.A * x + model.B * ut;
    }
    return CostGrad{cost / (2.0 * T), grad / T};
}

Eigen::VectorXd natural_step(const Eigen::VectorXd& grad, const MetricTensor& G,
                             double lambda) {
    if (lambda < 0.0) fail(ErrorCode::range, "lambda must be >= 0");
    Eigen::MatrixXd M = G.G;
    M.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::singular, "G + lambda I is not positive definite");
    return -llt.solve(grad);
}

namespace {

struct ChartContext {
    // theta_base = Jfwd * theta_chart, with Jfwd = L^{-1}; absent chart = identity.
    std::optional<Eigen::MatrixXd> Jfwd;

    Eigen::VectorXd to_base(const Eigen::VectorXd& th) const {
        return Jfwd ? (*Jfwd * th).eval() : th;
    }
    Eigen::VectorXd pull_grad(const Eigen::VectorXd& g) const {
        return Jfwd ? (Jfwd->transpose() * g).eval() : g;
    }
    Eigen::MatrixXd pull_tensor(const Eigen::MatrixXd& G) const {
        return Jfwd ? (Jfwd->transpose() * G * *Jfwd).eval() : G;
    }
};

MetricTensor compute_metric(const FitConfig& cfg, const ParamVector& theta,
                            const StateSpaceModel& model) {
    switch (cfg.engine) {
        case Engine::stein: return metric_stein(model);
        case Engine::series: return metric_series(model, cfg.series_tol);
        case Engine::quadrature: return metric_quadrature(model, cfg.grid);
        case Engine::arma: return metric_arma(theta, cfg.grid);
    }
    fail(ErrorCode::range, "unknown engine");
}

}  // namespace

FitTrace fit(const FitConfig& cfg, const Eigen::MatrixXd& u, const Eigen::MatrixXd& y) {
    if (cfg.max_iters < 1) fail(ErrorCode::range, "max_iters must be >= 1");
    if (!(cfg.grad_tol > 0.0)) fail(ErrorCode::range, "grad_tol must be positive");
    if (cfg.lambda0 < 0.0) fail(ErrorCode::range, "lambda0 must be >= 0");

    ChartContext chart;
    if (cfg.chart) {
        Reparam rp = apply_linear_reparam(*cfg.chart, cfg.theta0, cfg.structure);
        chart.Jfwd = rp.jacobian;
    }

    auto base_theta = [&](const Eigen::VectorXd& th) {
        return ParamVector(cfg.structure, chart.to_base(th));
    };

    Eigen::VectorXd theta = cfg.theta0;
    {
        StateSpaceModel model0 = build_state_space(base_theta(theta));
        if (spectral_radius(model0) > 1.0 - 1e-6)
            fail(ErrorCode::unstable, "theta0 must yield a stable model");
    }

    FitTrace trace;
    double lambda = cfg.lambda0;
    double last_step_norm = 0.0;
    constexpr double armijo_c = 1e-4;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        ParamVector th = base_theta(theta);
        StateSpaceModel model = build_state_space(th);
        CostGrad cg = pem_cost_grad(th, u, y);
        Eigen::VectorXd grad = chart.pull_grad(cg.grad);
        const double grad_inf = grad.lpNorm<Eigen::Infinity>();

        trace.iterations.push_back(FitRecord{theta, cg.cost, grad_inf, lambda,
                                             last_step_norm, spectral_radius(model)});
        if (grad_inf <= cfg.grad_tol) {
            trace.status = FitStatus::converged;
            break;
        }

        MetricTensor Gbase = compute_metric(cfg, th, model);
        MetricTensor G{chart.pull_tensor(Gbase.G), Gbase.engine, Gbase.truncation,
                       Gbase.est_error};

        Eigen::VectorXd delta;
        try {
            delta = natural_step(grad, G, lambda);
        } catch (const Error&) {
            lambda = lambda > 0.0 ? 10.0 * lambda : 1e-4;
            if (lambda > 1e12) {
                trace.status = FitStatus::stalled;
                break;
            }
            continue;
        }

        const double slope = grad.dot(delta);  // negative for a descent direction
        bool accepted = false;
        double alpha = 1.0;
        for (int h = 0; h <= 30; ++h) {
            Eigen::VectorXd cand = theta + alpha * delta;
            ParamVector cand_theta = base_theta(cand);
            StateSpaceModel cand_model = build_state_space(cand_theta);
            if (spectral_radius(cand_model) <= 1.0 - 1e-6) {
                CostGrad cand_cg = pem_cost_grad(cand_theta, u, y);
                if (cand_cg.cost <= cg.cost + armijo_c * alpha * slope &&
                    cand_cg.cost < cg.cost) {
                    theta = cand;
                    last_step_norm = (alpha * delta).norm();
                    accepted = true;
                    break;
                }
            }
            alpha /= 2.0;
        }

        if (accepted) {
            if (lambda > 0.0) lambda = std::max(lambda / 10.0, 1e-12);
        } else {
            lambda = lambda > 0.0 ? 10.0 * lambda : 1e-4;
            if (lambda > 1e12) {
                trace.status = FitStatus::stalled;
                break;
            }
        }
    }

    trace.theta_final = theta;
    return trace;
}

}  // namespace lsmt
