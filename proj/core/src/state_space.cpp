// SPDX-License-Identifier: Apache-2.0
#include "lsmt/state_space.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace lsmt {

StateSpaceModel build_state_space(const ParamVector& theta) {
    const auto& st = theta.structure();
    const int m = st.m(), n = st.n();
    const Eigen::VectorXd& v = theta.values();

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, n);

    for (int i = 0; i < m; ++i) {
        C(i, st.block_start(i)) = 1.0;
        for (int r = st.block_start(i); r < st.terminal_row(i); ++r)
            A(r, r + 1) = 1.0;
        A.row(st.terminal_row(i)) = v.segment(i * n, n).transpose();
    }
    for (int r = 0; r < n; ++r)
        B.row(r) = v.segment(m * n + r * m, m).transpose();

    return StateSpaceModel{std::move(A), std::move(B), std::move(C), st};
}

Eigen::MatrixXd structural_derivative(const KroneckerStructure& st, int k) {
    const int m = st.m(), n = st.n();
    if (k < 0 || k >= st.param_count())
        fail(ErrorCode::range, "parameter index out of range");
    if (k < m * n) {
        Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(n, n);
        dA(st.terminal_row(k / n), k % n) = 1.0;
        return dA;
    }
    const int kj = k - m * n;
    Eigen::MatrixXd dB = Eigen::MatrixXd::Zero(n, m);
    dB(kj / m, kj % m) = 1.0;
    return dB;
}

Eigen::MatrixXcd eval_transfer(const StateSpaceModel& model, std::complex<double> z) {
    const int n = model.structure.n(), m = model.structure.m();
    Eigen::MatrixXcd zIA = -model.A.cast<std::complex<double>>();
    zIA.diagonal().array() += z;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(zIA);
    if (!lu.isInvertible())
        fail(ErrorCode::singular, "zI - A is numerically singular");
    Eigen::MatrixXcd H = model.C.cast<std::complex<double>>() *
                         lu.solve(model.B.cast<std::complex<double>>());
    H += Eigen::MatrixXcd::Identity(m, m);
    return H;
}

double fit_tail_bound(const std::vector<double>& norms, int N) {
    // Collect the last up-to-10 samples; indices are absolute (k values).
    const int have = static_cast<int>(norms.size());
    if (norms.back() == 0.0) return 0.0;  // series has terminated exactly
    const int use = std::min(10, have);
    std::vector<std::pair<int, double>> pts;
    bool all_zero = true;
    for (int j = have - use; j < have; ++j) {
        const int k = N - (have - 1 - j);
        if (norms[j] > 0.0) {
            pts.emplace_back(k, std::log(norms[j]));
            all_zero = false;
        }
    }
    if (all_zero) return 0.0;
    if (pts.size() < 2) return std::numeric_limits<double>::infinity();

    // Least squares log|h_k| ~ log c + k log rho.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [k, ln] : pts) {
        sx += k;
        sy += ln;
        sxx += double(k) * k;
        sxy += k * ln;
    }
    const double np = static_cast<double>(pts.size());
    const double denom = np * sxx - sx * sx;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    const double slope = (np * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / np;
    const double rho = std::exp(slope);
    if (!(rho < 1.0)) return std::numeric_limits<double>::infinity();
    const double c = std::exp(intercept);
    return c * std::pow(rho, N + 1) / (1.0 - rho);
}

MarkovSequence markov_parameters(const StateSpaceModel& model, int N) {
    const int m = model.structure.m();
    MarkovSequence seq;
    seq.truncation = N;
    seq.coefficients.reserve(N + 1);
    seq.coefficients.push_back(Eigen::MatrixXd::Identity(m, m));

    Eigen::MatrixXd Ak_B = model.B;  // A^{k-1} B
    std::vector<double> norms;
    for (int k = 1; k <= N; ++k) {
        seq.coefficients.push_back(model.C * Ak_B);
        norms.push_back(seq.coefficients.back().norm());
        if (k < N) Ak_B = model.A * Ak_B;
    }
    if (spectral_radius(model) >= 1.0)
        seq.tail_bound = std::numeric_limits<double>::infinity();
    else
        seq.tail_bound = fit_tail_bound(norms, N);
    return seq;
}

double spectral_radius(const StateSpaceModel& model) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        fail(ErrorCode::convergence, "eigenvalue computation did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const StateSpaceModel& model) {
    return spectral_radius(model) <= 1.0 - 1e-9;
}

void require_stable(const StateSpaceModel& model) {
    if (!is_stable(model))
        fail(ErrorCode::unstable, "model is not stable (rho(A) > 1 - 1e-9)");
}

namespace {

// Deterministic standard normals: mt19937_64 -> uniform doubles in (0,1)
// -> Box-Muller. Fixed here so sampled instances are reproducible anywhere.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    double uniform01() {
        // 53-bit mantissa, strictly inside (0,1): (x >> 11) + 1 over 2^53 + 2.
        const std::uint64_t x = gen_() >> 11;
        return (static_cast<double>(x) + 1.0) / 9007199254740994.0;
    }
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace

ParamVector sample_stable(const KroneckerStructure& st, std::uint64_t seed,
                          double rho_max) {
    if (!(rho_max > 0.0 && rho_max < 1.0))
        fail(ErrorCode::range, "rho_max must lie in (0, 1)");
    NormalSource rng(seed);
    Eigen::VectorXd v(st.param_count());
    for (int k = 0; k < v.size(); ++k) v[k] = rng.next();

    const int mn = st.m() * st.n();
    for (int iter = 0; iter <= 100; ++iter) {
        ParamVector theta(st, v);
        if (spectral_radius(build_state_space(theta)) <= rho_max) return theta;
        v.head(mn) *= 0.9;
        if (iter == 100)
            fail(ErrorCode::convergence, "rescaling loop exceeded 100 iterations");
    }
    fail(ErrorCode::convergence, "unreachable");
}

Reparam apply_linear_reparam(const Eigen::MatrixXd& L, const Eigen::VectorXd& theta_prime,
                             const KroneckerStructure& st) {
    const int d = st.param_count();
    if (L.rows() != d || L.cols() != d || theta_prime.size() != d)
        fail(ErrorCode::dim, "L must be 2mn x 2mn and theta' of length 2mn");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
        fail(ErrorCode::singular, "L is numerically singular");
    Eigen::MatrixXd J = L.partialPivLu().solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd theta = J * theta_prime;
    return Reparam{ParamVector(st, std::move(theta)), std::move(J)};
}

}  // namespace lsmt
