// SPDX-License-Identifier: Apache-2.0
#include "lsmt/metric.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <thread>

namespace lsmt {

const char* engine_name(Engine e) {
    switch (e) {
        case Engine::stein: return "stein";
        case Engine::series: return "series";
        case Engine::quadrature: return "quadrature";
        case Engine::arma: return "arma";
    }
    return "?";
}

std::optional<Engine> engine_from_name(const std::string& name) {
    if (name == "stein") return Engine::stein;
    if (name == "series") return Engine::series;
    if (name == "quadrature") return Engine::quadrature;
    if (name == "arma") return Engine::arma;
    return std::nullopt;
}

namespace {

double spectral_radius_of(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    if (es.info() != Eigen::Success)
        fail(ErrorCode::convergence, "eigenvalue computation did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

void symmetrize(Eigen::MatrixXd& G) { G = ((G + G.transpose()) / 2.0).eval(); }

// Fixed summation order over the work items of one tensor entry; entries are
// independent, so splitting them over threads cannot change any value.
template <typename PerEntry>
void for_each_entry(int d, int threads, PerEntry&& body) {
    std::vector<std::pair<int, int>> entries;
    for (int r = 0; r < d; ++r)
        for (int s = r; s < d; ++s) entries.emplace_back(r, s);
    if (threads <= 1) {
        for (auto [r, s] : entries) body(r, s);
        return;
    }
    std::vector<std::thread> pool;
    const int nt = std::min<int>(threads, static_cast<int>(entries.size()));
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t idx = t; idx < entries.size(); idx += nt)
                body(entries[idx].first, entries[idx].second);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

Eigen::MatrixXd stein_solve(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
                            const Eigen::MatrixXd& Q) {
    const int p = static_cast<int>(A1.rows());
    const int q = static_cast<int>(A2.rows());
    if (A1.cols() != p || A2.cols() != q || Q.rows() != p || Q.cols() != q)
        fail(ErrorCode::dim, "stein_solve shape mismatch");
    if (spectral_radius_of(A1) * spectral_radius_of(A2) >= 1.0 - 1e-9)
        fail(ErrorCode::unstable, "rho(A1) * rho(A2) >= 1 - 1e-9");

    if (p * q <= 4096) {
        // vec(X) - (A2 (x) A1) vec(X) = vec(Q)
        Eigen::MatrixXd S = Eigen::MatrixXd::Identity(p * q, p * q);
        for (int j = 0; j < q; ++j)
            for (int i = 0; i < q; ++i)
                S.block(i * p, j * p, p, p) -= A2(i, j) * A1;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
        if (!lu.isInvertible())
            fail(ErrorCode::singular, "Stein operator is numerically singular");
        Eigen::VectorXd x = lu.solve(Eigen::Map<const Eigen::VectorXd>(Q.data(), p * q));
        return Eigen::Map<Eigen::MatrixXd>(x.data(), p, q);
    }

    // Squared iteration: X <- X + A1^{2^k} X (A2^T)^{2^k}.
    Eigen::MatrixXd X = Q, P1 = A1, P2t = A2.transpose();
    for (int it = 0; it < 200; ++it) {
        Eigen::MatrixXd update = P1 * X * P2t;
        X += update;
        if (update.cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, X.cwiseAbs().maxCoeff()))
            return X;
        P1 = (P1 * P1).eval();
        P2t = (P2t * P2t).eval();
    }
    fail(ErrorCode::convergence, "Stein doubling iteration did not converge");
}

Eigen::MatrixXd observability_gramian(const StateSpaceModel& model) {
    require_stable(model);
    return stein_solve(model.A.transpose(), model.A.transpose(),
                       model.C.transpose() * model.C);
}

SensitivityRealization sensitivity_realization(const StateSpaceModel& model, int k) {
    const auto& st = model.structure;
    const int m = st.m(), n = st.n();
    if (k < 0 || k >= st.param_count())
        fail(ErrorCode::range, "parameter index out of range");
    if (k >= m * n) {
        return SensitivityRealization{model.A, structural_derivative(st, k), model.C, k};
    }
    Eigen::MatrixXd F = structural_derivative(st, k);
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A2.topLeftCorner(n, n) = model.A;
    A2.topRightCorner(n, n) = F;
    A2.bottomRightCorner(n, n) = model.A;
    Eigen::MatrixXd B2 = Eigen::MatrixXd::Zero(2 * n, m);
    B2.bottomRows(n) = model.B;
    Eigen::MatrixXd C2 = Eigen::MatrixXd::Zero(m, 2 * n);
    C2.leftCols(n) = model.C;
    return SensitivityRealization{std::move(A2), std::move(B2), std::move(C2), k};
}

MetricTensor metric_stein(const StateSpaceModel& model) {
    require_stable(model);
    const auto& st = model.structure;
    const int m = st.m(), n = st.n(), d = st.param_count();

    std::vector<SensitivityRealization> sens;
    sens.reserve(d);
    for (int k = 0; k < d; ++k) sens.push_back(sensitivity_realization(model, k));

    Eigen::MatrixXd G(d, d);
    for (int r = 0; r < d; ++r) {
        for (int s = r; s < d; ++s) {
            Eigen::MatrixXd X = stein_solve(sens[r].A, sens[s].A,
                                            sens[r].B * sens[s].B.transpose());
            const double g = (sens[r].C * X * sens[s].C.transpose()).trace();
            G(r, s) = g;
            G(s, r) = g;
        }
    }

    // Independent closed form for the J-J block: g = delta_{cc'} W_o[r', r].
    Eigen::MatrixXd Wo = observability_gramian(model);
    for (int kj = 0; kj < m * n; ++kj) {
        for (int lj = kj; lj < m * n; ++lj) {
            const int r = kj / m, c = kj % m, rp = lj / m, cp = lj % m;
            const double expected = (c == cp) ? Wo(rp, r) : 0.0;
            const double got = G(m * n + kj, m * n + lj);
            if (std::abs(got - expected) > 1e-11 * std::max(1.0, Wo.cwiseAbs().maxCoeff()))
                fail(ErrorCode::convergence,
                     "J-J block disagrees with the Gramian closed form");
        }
    }

    symmetrize(G);
    return MetricTensor{std::move(G), Engine::stein, std::nullopt, 0.0};
}

MetricTensor metric_series(const StateSpaceModel& model, double tol) {
    require_stable(model);
    if (!(tol > 0.0)) fail(ErrorCode::range, "tol must be positive");
    const int d = model.structure.param_count();

    std::vector<SensitivityRealization> sens;
    std::vector<Eigen::MatrixXd> state;  // A_k^{k-1} B_k per parameter
    sens.reserve(d);
    state.reserve(d);
    for (int k = 0; k < d; ++k) {
        sens.push_back(sensitivity_realization(model, k));
        state.push_back(sens.back().B);
    }

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXd> dh(d);
    std::vector<double> term_norms;
    double tail = std::numeric_limits<double>::infinity();
    int N = 0;

    for (int k = 1;; ++k) {
        if (k > 1000000)
            fail(ErrorCode::convergence, "series truncation would exceed 1e6 terms");
        for (int i = 0; i < d; ++i) dh[i] = sens[i].C * state[i];

        double term_max = 0.0;
        for (int r = 0; r < d; ++r) {
            for (int s = r; s < d; ++s) {
                const double t = (dh[r].array() * dh[s].array()).sum();
                G(r, s) += t;
                if (s != r) G(s, r) += t;
                term_max = std::max(term_max, std::abs(t));
            }
        }
        term_norms.push_back(term_max);
        N = k;

        if (k >= 12) {
            tail = fit_tail_bound(term_norms, k);
            if (tail < tol) break;
        }
        for (int i = 0; i < d; ++i) state[i] = (sens[i].A * state[i]).eval();
    }

    symmetrize(G);
    return MetricTensor{std::move(G), Engine::series, N, tail};
}

namespace {

// Per grid point, every dH/dtheta_k is rank one: u_k v_k^T with
// u from columns of C*Phi and v from rows of Phi*B (group I) or a basis
// row (group J).
struct GridFactors {
    std::vector<Eigen::VectorXcd> u;  // m-vectors
    std::vector<Eigen::RowVectorXcd> v;
};

GridFactors transfer_derivative_factors(const StateSpaceModel& model,
                                        std::complex<double> z) {
    const auto& st = model.structure;
    const int m = st.m(), n = st.n(), d = st.param_count();
    Eigen::MatrixXcd zIA = -model.A.cast<std::complex<double>>();
    zIA.diagonal().array() += z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(zIA);
    Eigen::MatrixXcd Phi = lu.inverse();
    Eigen::MatrixXcd PhiB = Phi * model.B.cast<std::complex<double>>();
    Eigen::MatrixXcd CPhi = model.C.cast<std::complex<double>>() * Phi;

    GridFactors f;
    f.u.resize(d);
    f.v.resize(d);
    for (int i = 0; i < m * n; ++i) {
        const int bi = i / n, col = i % n;
        f.u[i] = CPhi.col(st.terminal_row(bi));
        f.v[i] = PhiB.row(col);
    }
    for (int j = 0; j < m * n; ++j) {
        const int r = j / m, c = j % m;
        f.u[m * n + j] = CPhi.col(r);
        f.v[m * n + j] = Eigen::RowVectorXcd::Zero(m);
        f.v[m * n + j](c) = 1.0;
    }
    return f;
}

Eigen::MatrixXd quadrature_sum(const std::vector<GridFactors>& grid, int d, int stride,
                               int threads) {
    const int N = static_cast<int>(grid.size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for_each_entry(d, threads, [&](int r, int s) {
        double acc = 0.0;
        for (int t = 0; t < N; t += stride) {
            const auto& f = grid[t];
            // tr[(u_r v_r^T)(u_s v_s^T)^H] = (u_s^H u_r)(v_r v_s^H)
            const std::complex<double> a = f.u[s].dot(f.u[r]);
            const std::complex<double> b = f.v[s].dot(f.v[r]);
            acc += (a * b).real();
        }
        const double g = acc / (N / stride);
        G(r, s) = g;
        G(s, r) = g;
    });
    return G;
}

void check_grid_size(int N) {
    if (N < 4 || (N & (N - 1)) != 0)
        fail(ErrorCode::range, "grid size must be a power of two >= 4");
}

}  // namespace

MetricTensor metric_quadrature(const StateSpaceModel& model, int N, int threads) {
    check_grid_size(N);
    require_stable(model);
    const int d = model.structure.param_count();

    std::vector<GridFactors> grid;
    grid.reserve(N);
    for (int s = 0; s < N; ++s) {
        const double w = 2.0 * M_PI * s / N;
        grid.push_back(transfer_derivative_factors(model, std::polar(1.0, w)));
    }
    Eigen::MatrixXd G = quadrature_sum(grid, d, 1, threads);
    Eigen::MatrixXd Ghalf = quadrature_sum(grid, d, 2, threads);
    const double est = (G - Ghalf).cwiseAbs().maxCoeff();

    symmetrize(G);
    return MetricTensor{std::move(G), Engine::quadrature, N, est};
}

MetricTensor metric_arma(const ParamVector& theta, int N, int threads) {
    check_grid_size(N);
    const StateSpaceModel model = build_state_space(theta);
    require_stable(model);

    const auto& st = theta.structure();
    const int m = st.m(), n = st.n(), d = st.param_count();
    const MfdPair pair = left_mfd(theta);
    std::vector<MfdDerivative> deriv;
    deriv.reserve(m * n);
    for (int i = 0; i < m * n; ++i) deriv.push_back(mfd_derivative(st, i));

    // Per grid point, the three printed case integrands share the factors
    // V_i = A^{-1}(dM_i K + dA_i (I - H)) for i in I and
    // D_j = A^{-1} M dK_j       for j in J (a column of A^{-1}M times a basis row).
    std::vector<std::vector<Eigen::MatrixXcd>> X(N);
    for (int s = 0; s < N; ++s) {
        const std::complex<double> z = std::polar(1.0, 2.0 * M_PI * s / N);
        Eigen::MatrixXcd Az = poly_eval(pair.Apoly, z);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Az);
        if (std::abs(lu.determinant()) < 1e-300)
            fail(ErrorCode::singular, "A(z) singular on the unit circle");
        Eigen::MatrixXcd W = lu.solve(poly_eval(pair.Mpoly, z));  // A^{-1} M
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(m, m) +
                             W * pair.K.cast<std::complex<double>>();
        X[s].resize(d);
        for (int i = 0; i < m * n; ++i) {
            Eigen::MatrixXcd rhs =
                poly_eval(deriv[i].dMpoly, z) * pair.K.cast<std::complex<double>>() +
                poly_eval(deriv[i].dApoly, z) *
                    (Eigen::MatrixXcd::Identity(m, m) - H);
            X[s][i] = lu.solve(rhs);
        }
        for (int j = 0; j < m * n; ++j) {
            const int r = j / m, c = j % m;
            Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(m, m);
            D.col(c) = W.col(r);
            X[s][m * n + j] = std::move(D);
        }
    }

    Eigen::MatrixXd G(d, d);
    for_each_entry(d, threads, [&](int r, int s) {
        double acc = 0.0;
        for (int t = 0; t < N; ++t)
            acc += (X[t][r].array() * X[t][s].array().conjugate()).sum().real();
        G(r, s) = acc / N;
        G(s, r) = G(r, s);
    });

    symmetrize(G);
    return MetricTensor{std::move(G), Engine::arma, N, 0.0};
}

CrossValidateReport cross_validate(const ParamVector& theta, double tol) {
    const StateSpaceModel model = build_state_space(theta);
    require_stable(model);

    std::vector<MetricTensor> tensors;
    tensors.push_back(metric_stein(model));
    tensors.push_back(metric_series(model, tol * 1e-2));
    tensors.push_back(metric_quadrature(model, 2048));
    tensors.push_back(metric_arma(theta, 2048));

    CrossValidateReport report;
    report.tol = tol;
    report.pass = true;
    for (std::size_t a = 0; a < tensors.size(); ++a) {
        for (std::size_t b = a + 1; b < tensors.size(); ++b) {
            const double diff = (tensors[a].G - tensors[b].G).cwiseAbs().maxCoeff();
            report.pairs.push_back({tensors[a].engine, tensors[b].engine, diff});
            if (diff > tol) report.pass = false;
        }
    }
    return report;
}

}  // namespace lsmt
