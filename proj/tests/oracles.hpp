#pragma once

// Dense reference computations for the tridiagonal code paths.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <random>

#include "semires/discretize.hpp"
#include "semires/resolvent_probe.hpp"

namespace oracle {

using semires::cplx;

inline Eigen::MatrixXcd dense(const semires::DiscreteOperator& op, double z) {
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, i) = op.diag[i] - z;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = op.offdiag[i];
    }
    return A;
}

/// Largest singular value of chi (op - z)^-1 chi: sparse LU for the columns on the
/// cutoff support, then a dense SVD of the support block.
inline double cutoff_norm(const semires::DiscreteOperator& op, double z, const semires::CutoffSpec& chi) {
    const auto n = static_cast<Eigen::Index>(op.size());
    const auto c = chi.sample(op.grid);
    std::vector<Eigen::Index> S;
    for (Eigen::Index i = 0; i < n; ++i)
        if (c[i] != 0.0) S.push_back(i);
    if (S.empty()) return 0.0;
    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, i, op.diag[i] - z);
        if (i + 1 < n) {
            trip.emplace_back(i, i + 1, op.offdiag[i]);
            trip.emplace_back(i + 1, i, op.offdiag[i]);
        }
    }
    Eigen::SparseMatrix<std::complex<double>> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu(A);
    const auto m = static_cast<Eigen::Index>(S.size());
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, m);
    for (Eigen::Index k = 0; k < m; ++k) E(S[k], k) = c[S[k]];
    const Eigen::MatrixXcd X = lu.solve(E);
    Eigen::MatrixXcd B(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index k = 0; k < m; ++k) B(i, k) = c[S[i]] * X(S[i], k);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(B);
    return svd.singularValues()(0);
}

/// Real symmetric eigenvalues of the CAP-free operator, ascending.
inline Eigen::VectorXd sym_eigenvalues(const semires::SymTridiagonal& T) {
    const auto n = static_cast<Eigen::Index>(T.d.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, i) = T.d[i];
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = T.e[i];
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
}

struct ProbeCase {
    semires::DiscreteOperator op;
    double z = 0.0;
    semires::CutoffSpec chi;
};

/// Fixed-seed family of small CAP operators with barrier potentials and interior cutoffs.
inline std::vector<ProbeCase> probe_cases(std::size_t count, unsigned long long seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<ProbeCase> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto n = static_cast<std::size_t>(40 + 360 * U(rng));
        const double L = 3.0 + 5.0 * U(rng);
        const semires::Grid g(-L, L, n);
        const double h = std::max(0.05, 2.0 * L / static_cast<double>(n) * (2.0 + 6.0 * U(rng)));
        const double height = 0.5 + U(rng), width = 0.5 + 1.5 * U(rng);
        const int m = 1 + static_cast<int>(3 * U(rng));
        std::vector<double> V(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.x(i) / width;
            V[i] = height / std::pow(1.0 + std::pow(x, 2 * m), 1.0 / m);
        }
        semires::CapProfile cap;
        cap.strength = 0.5 + 2.0 * U(rng);
        ProbeCase c;
        c.op = semires::build_operator(V, h, g, cap);
        c.z = height * (0.6 + 0.8 * U(rng));
        const double inner = L * (1.0 - 2.0 * cap.width_fraction);
        c.chi = {0.0, inner * (0.2 + 0.4 * U(rng)), inner * 0.2 * U(rng)};
        out.push_back(std::move(c));
    }
    return out;
}

/// Constant, harmonic and step potentials at several sizes.
inline std::vector<ProbeCase> structured_cases() {
    std::vector<ProbeCase> out;
    const semires::CapProfile cap;
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = 100 + 15 * static_cast<std::size_t>(k);
        const double L = 4.0 + 0.2 * k;
        const semires::Grid g(-L, L, n);
        std::vector<double> V(n);
        ProbeCase c;
        double h = 0.1;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.x(i);
            switch (k % 4) {
            case 0: V[i] = 1.0; break;
            case 1: V[i] = 0.25 * x * x; break;
            case 2: V[i] = x < 0.0 ? 0.8 : 0.2; break;
            default: V[i] = 1.0 / (1.0 + x * x); break;
            }
        }
        c.z = k % 4 == 0 ? 0.0 : (k % 4 == 1 ? 0.35 : (k % 4 == 2 ? 0.5 : 1.0));
        if (k % 4 == 1) h = 0.2;
        c.op = semires::build_operator(V, h, g, cap);
        c.chi = {0.0, 0.3 * L, 0.2 * L};
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace oracle
