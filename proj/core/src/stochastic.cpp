// SPDX-License-Identifier: Apache-2.0
#include "lsmt/stochastic.hpp"

#include <cmath>
#include <limits>

namespace lsmt {

void validate_noise(const NoiseModel& noise, int m) {
    const auto& R = noise.R;
    if (R.rows() != m || R.cols() != m)
        fail(ErrorCode::badnoise, "R must be m x m");
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff()))
        fail(ErrorCode::badnoise, "R must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        fail(ErrorCode::badnoise, "R must be positive definite");
}

namespace {

struct CovarianceCore {
    Eigen::MatrixXd P;
    Eigen::MatrixXd Ncross;
};

CovarianceCore covariance_core(const StateSpaceModel& model, const NoiseModel& noise) {
    require_stable(model);
    validate_noise(noise, model.structure.m());
    Eigen::MatrixXd P = stein_solve(model.A, model.A,
                                    model.B * noise.R * model.B.transpose());
    P = ((P + P.transpose()) / 2.0).eval();
    Eigen::MatrixXd Ncross = model.A * P * model.C.transpose() + model.B * noise.R;
    return {std::move(P), std::move(Ncross)};
}

// Streaming state for dGamma_k along one parameter direction.
struct DerivStream {
    Eigen::MatrixXd F;       // dA (zero matrix for group J)
    Eigen::MatrixXd dGamma0; // C dP C^T
    Eigen::MatrixXd W;       // d(A^{k-1} Ncross), advanced jointly with Z
    bool is_I = false;
};

struct AllDerivs {
    std::vector<DerivStream> streams;
    Eigen::MatrixXd Z;  // A^{k-1} Ncross, shared
    const StateSpaceModel* model = nullptr;

    void advance() {  // k -> k+1
        for (auto& s : streams) {
            Eigen::MatrixXd W2 = model->A * s.W;
            if (s.is_I) W2 += s.F * Z;
            s.W = std::move(W2);
        }
        Z = (model->A * Z).eval();
    }
};

AllDerivs derivative_streams(const StateSpaceModel& model, const NoiseModel& noise,
                             const CovarianceCore& core) {
    const auto& st = model.structure;
    const int m = st.m(), n = st.n(), d = st.param_count();
    AllDerivs all;
    all.model = &model;
    all.Z = core.Ncross;
    all.streams.resize(d);
    for (int k = 0; k < d; ++k) {
        DerivStream& s = all.streams[k];
        s.is_I = k < m * n;
        Eigen::MatrixXd S;
        if (s.is_I) {
            s.F = structural_derivative(st, k);
            S = s.F * core.P * model.A.transpose() + model.A * core.P * s.F.transpose();
        } else {
            s.F = Eigen::MatrixXd::Zero(n, n);
            Eigen::MatrixXd E = structural_derivative(st, k);
            S = E * noise.R * model.B.transpose() + model.B * noise.R * E.transpose();
        }
        Eigen::MatrixXd dP = stein_solve(model.A, model.A, S);
        dP = ((dP + dP.transpose()) / 2.0).eval();
        s.dGamma0 = model.C * dP * model.C.transpose();
        // dNcross
        s.W = model.A * dP * model.C.transpose();
        if (s.is_I)
            s.W += s.F * core.P * model.C.transpose();
        else
            s.W += structural_derivative(st, k) * noise.R;
    }
    return all;
}

enum class StochasticKind { one_sided, two_sided };

MetricTensor stochastic_series_tensor(const StateSpaceModel& model,
                                      const NoiseModel& noise, double tol,
                                      StochasticKind kind) {
    if (!(tol > 0.0)) fail(ErrorCode::range, "tol must be positive");
    const int d = model.structure.param_count();
    const CovarianceCore core = covariance_core(model, noise);
    AllDerivs all = derivative_streams(model, noise, core);

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    // k = 0 term: single in both conventions.
    for (int r = 0; r < d; ++r)
        for (int s = r; s < d; ++s) {
            const double t = (all.streams[r].dGamma0.array() *
                              all.streams[s].dGamma0.array())
                                 .sum();
            G(r, s) += t;
            if (s != r) G(s, r) += t;
        }

    std::vector<Eigen::MatrixXd> dG(d);
    std::vector<double> term_norms;
    double tail = std::numeric_limits<double>::infinity();
    int K = 0;
    for (int k = 1;; ++k) {
        if (k > 1000000)
            fail(ErrorCode::convergence, "covariance series would exceed 1e6 terms");
        for (int i = 0; i < d; ++i) dG[i] = model.C * all.streams[i].W;

        double term_max = 0.0;
        for (int r = 0; r < d; ++r) {
            for (int s = r; s < d; ++s) {
                // tr[dG_r dG_s^T]; the mirrored term tr[dG_r^T dG_s] of the
                // two-sided sum equals it, so Gamma_{-k} contributes a factor 2.
                double t = (dG[r].array() * dG[s].array()).sum();
                if (kind == StochasticKind::two_sided) t *= 2.0;
                G(r, s) += t;
                if (s != r) G(s, r) += t;
                term_max = std::max(term_max, std::abs(t));
            }
        }
        term_norms.push_back(term_max);
        K = k;
        if (k >= 12) {
            tail = fit_tail_bound(term_norms, k);
            // Relative stop: scaling R scales every term and the accumulated
            // tensor alike, so the truncation point is invariant under R -> cR.
            double scale = G.cwiseAbs().maxCoeff();
            if (scale == 0.0) scale = 1.0;
            if (tail < tol * scale) break;
        }
        all.advance();
    }

    G = ((G + G.transpose()) / 2.0).eval();
    return MetricTensor{std::move(G), Engine::series, K, tail};
}

}  // namespace

CovarianceSequence stationary_covariances(const StateSpaceModel& model,
                                          const NoiseModel& noise, int K) {
    if (K < 0) fail(ErrorCode::range, "K must be >= 0");
    const CovarianceCore core = covariance_core(model, noise);

    CovarianceSequence seq;
    seq.P = core.P;
    seq.Ncross = core.Ncross;
    seq.truncation = K;
    Eigen::MatrixXd g0 = model.C * core.P * model.C.transpose() + noise.R;
    seq.Gamma.push_back(((g0 + g0.transpose()) / 2.0).eval());

    Eigen::MatrixXd Z = core.Ncross;  // A^{k-1} Ncross
    std::vector<double> norms;
    for (int k = 1; k <= K; ++k) {
        seq.Gamma.push_back(model.C * Z);
        norms.push_back(seq.Gamma.back().norm());
        if (k < K) Z = (model.A * Z).eval();
    }
    seq.tail_bound = norms.empty() ? 0.0 : fit_tail_bound(norms, K);
    return seq;
}

std::vector<Eigen::MatrixXd> covariance_derivatives(const StateSpaceModel& model,
                                                    const NoiseModel& noise, int k,
                                                    int K) {
    if (k < 0 || k >= model.structure.param_count())
        fail(ErrorCode::range, "parameter index out of range");
    if (K < 0) fail(ErrorCode::range, "K must be >= 0");
    const CovarianceCore core = covariance_core(model, noise);
    AllDerivs all = derivative_streams(model, noise, core);

    std::vector<Eigen::MatrixXd> out;
    out.reserve(K + 1);
    out.push_back(all.streams[k].dGamma0);
    for (int j = 1; j <= K; ++j) {
        out.push_back(model.C * all.streams[k].W);
        if (j < K) all.advance();
    }
    return out;
}

MetricTensor metric_U(const StateSpaceModel& model, const NoiseModel& noise, double tol) {
    return stochastic_series_tensor(model, noise, tol, StochasticKind::one_sided);
}

MetricTensor metric_T(const StateSpaceModel& model, const NoiseModel& noise, double tol) {
    return stochastic_series_tensor(model, noise, tol, StochasticKind::two_sided);
}

MetricTensor metric_T_quadrature(const StateSpaceModel& model, const NoiseModel& noise,
                                 int N) {
    if (N < 4 || (N & (N - 1)) != 0)
        fail(ErrorCode::range, "grid size must be a power of two >= 4");
    require_stable(model);
    validate_noise(noise, model.structure.m());
    const auto& st = model.structure;
    const int m = st.m(), n = st.n(), d = st.param_count();
    const Eigen::MatrixXcd Rc = noise.R.cast<std::complex<double>>();

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXcd> dT(d);
    for (int s = 0; s < N; ++s) {
        const std::complex<double> z = std::polar(1.0, 2.0 * M_PI * s / N);
        Eigen::MatrixXcd zIA = -model.A.cast<std::complex<double>>();
        zIA.diagonal().array() += z;
        Eigen::MatrixXcd Phi = zIA.partialPivLu().inverse();
        Eigen::MatrixXcd CPhi = model.C.cast<std::complex<double>>() * Phi;
        Eigen::MatrixXcd PhiB = Phi * model.B.cast<std::complex<double>>();
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(m, m) +
                             model.C.cast<std::complex<double>>() * PhiB;

        for (int k = 0; k < d; ++k) {
            Eigen::MatrixXcd D(m, m);
            if (k < m * n) {
                D = CPhi.col(st.terminal_row(k / n)) * PhiB.row(k % n);
            } else {
                const int kj = k - m * n;
                D.setZero();
                D.col(kj % m) = CPhi.col(kj / m);
            }
            dT[k] = D * Rc * H.adjoint() + H * Rc * D.adjoint();
        }
        for (int r = 0; r < d; ++r)
            for (int t = r; t < d; ++t) {
                const double g =
                    (dT[r].array() * dT[t].array().conjugate()).sum().real() / N;
                G(r, t) += g;
                if (t != r) G(t, r) += g;
            }
    }

    G = ((G + G.transpose()) / 2.0).eval();
    return MetricTensor{std::move(G), Engine::quadrature, N, 0.0};
}

Eigen::MatrixXcd spectral_density(const StateSpaceModel& model, const NoiseModel& noise,
                                  std::complex<double> z) {
    require_stable(model);
    validate_noise(noise, model.structure.m());
    Eigen::MatrixXcd H = eval_transfer(model, z);
    return H * noise.R.cast<std::complex<double>>() * H.adjoint();
}

}  // namespace lsmt
