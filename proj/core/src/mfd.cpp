// SPDX-License-Identifier: Apache-2.0
#include "lsmt/mfd.hpp"

#include <cmath>

namespace lsmt {

PolyMatrix PolyMatrix::zero(int rows, int cols, int degree) {
    PolyMatrix P;
    P.rows = rows;
    P.cols = cols;
    P.coeffs.assign(degree + 1, Eigen::MatrixXd::Zero(rows, cols));
    return P;
}

Eigen::MatrixXcd poly_eval(const PolyMatrix& P, std::complex<double> z) {
    // Horner, highest degree first.
    Eigen::MatrixXcd acc = P.coeffs.back().cast<std::complex<double>>();
    for (int d = P.degree() - 1; d >= 0; --d)
        acc = acc * z + P.coeffs[d].cast<std::complex<double>>();
    return acc;
}

MfdPair left_mfd(const ParamVector& theta) {
    const auto& st = theta.structure();
    const int m = st.m(), n = st.n(), p = st.p();
    const Eigen::VectorXd& v = theta.values();

    PolyMatrix Apoly = PolyMatrix::zero(m, m, p);
    PolyMatrix Mpoly = PolyMatrix::zero(m, n, std::max(p - 1, 0));

    for (int i = 0; i < m; ++i) {
        const auto trow = v.segment(i * n, n);  // terminal row of block i
        Apoly.coeffs[st.nu()[i]](i, i) += 1.0;
        for (int l = 0; l < m; ++l) {
            const int s = st.block_start(l), nl = st.nu()[l];
            for (int k = 0; k < nl; ++k)
                Apoly.coeffs[k](i, l) -= trow[s + k];
            for (int j = 0; j < nl; ++j) {
                if (l == i) Mpoly.coeffs[st.nu()[i] - 1 - j](i, s + j) += 1.0;
                for (int k = j + 1; k < nl; ++k)
                    Mpoly.coeffs[k - 1 - j](i, s + j) -= trow[s + k];
            }
        }
    }

    Eigen::MatrixXd K(n, m);
    for (int r = 0; r < n; ++r)
        K.row(r) = v.segment(m * n + r * m, m).transpose();

    return MfdPair{std::move(Apoly), std::move(Mpoly), std::move(K)};
}

MfdDerivative mfd_derivative(const KroneckerStructure& st, int i) {
    const int m = st.m(), n = st.n(), p = st.p();
    if (i < 0 || i >= m * n)
        fail(ErrorCode::range, "index must belong to group I");
    const int bi = i / n;         // which terminal row
    const int col = i % n;        // which state column it multiplies
    const int l = st.block_of_state(col);
    const int k = col - st.block_start(l);

    PolyMatrix dA = PolyMatrix::zero(m, m, p);
    PolyMatrix dM = PolyMatrix::zero(m, n, std::max(p - 1, 0));
    dA.coeffs[k](bi, l) = -1.0;
    for (int j = 0; j < k; ++j)
        dM.coeffs[k - 1 - j](bi, st.block_start(l) + j) = -1.0;
    return MfdDerivative{std::move(dA), std::move(dM)};
}

PolyMatrix numerator_poly(const MfdPair& pair) {
    const int m = pair.Apoly.rows;
    PolyMatrix B = pair.Apoly;
    for (int d = 0; d <= pair.Mpoly.degree(); ++d) {
        if (d > B.degree()) B.coeffs.push_back(Eigen::MatrixXd::Zero(m, m));
        B.coeffs[d] += pair.Mpoly.coeffs[d] * pair.K;
    }
    return B;
}

double verify_mfd(const StateSpaceModel& model, const MfdPair& pair, int num_samples) {
    const int m = model.structure.m();
    const PolyMatrix Bpoly = numerator_poly(pair);
    double worst = 0.0;
    for (int s = 0; s < num_samples; ++s) {
        double phi = 2.0 * M_PI * (s + 0.37) / num_samples;
        Eigen::MatrixXcd H;
        std::complex<double> z;
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
            z = std::polar(1.5, phi);
            try {
                H = eval_transfer(model, z);
                ok = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::singular) throw;
                phi += 1e-3 * (attempt + 1);
            }
        }
        if (!ok) fail(ErrorCode::singular, "could not find non-eigenvalue sample point");

        Eigen::MatrixXcd Az = poly_eval(pair.Apoly, z);
        Eigen::MatrixXcd Mz = poly_eval(pair.Mpoly, z);
        Eigen::MatrixXcd zIA = -model.A.cast<std::complex<double>>();
        zIA.diagonal().array() += z;
        Eigen::MatrixXcd CzIAinv =
            model.C.cast<std::complex<double>>() * zIA.partialPivLu().inverse();
        const double res_M = (Az * CzIAinv - Mz).norm();
        Eigen::MatrixXcd Bz = poly_eval(Bpoly, z);
        const double res_H = (Az.partialPivLu().solve(Bz) - H).norm();
        worst = std::max({worst, res_M, res_H});
    }
    return worst;
}

}  // namespace lsmt
