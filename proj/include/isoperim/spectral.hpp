#pragma once

#include "isoperim/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace isoperim {

struct SpectralReport {
    double lambda1 = 0.0;
    std::vector<double> eigenvalues; // nondecreasing, constant mode removed
    int multiplicity_estimate = 0;   // eigenvalues within 1% of lambda1
    double chavel_bound = 0.0;       // n/(n+1)^2 (P/V)^2
    double gamma = 0.0;              // chavel_bound / lambda1 - 1
    double rho_omega = 0.0;          // (n+1) V / P
    int iterations = 0;
    double residual = 0.0;
    double perimeter = 0.0;
    double volume = 0.0;
    double deficit = 0.0;
};

/// Cotangent stiffness and lumped (diagonal) mass. 2D curves use the
/// second-difference operator with edge-length weights. The stiffness
/// annihilates constants exactly; the mass diagonal sums to P.
inline void assemble_laplacian(const BoundaryMesh& mesh, Eigen::SparseMatrix<double>& stiffness,
                               Eigen::VectorXd& mass)
{
    const int nv = static_cast<int>(mesh.vertices.size());
    std::vector<Eigen::Triplet<double>> trips;
    mass = Eigen::VectorXd::Zero(nv);

    if (mesh.ambient_dim == 3) {
        trips.reserve(mesh.triangles.size() * 12);
        for (const auto& t : mesh.triangles) {
            const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
                       &c = mesh.vertices[t[2]];
            const double area = triangle_area(a, b, c);
            for (int k = 0; k < 3; ++k) mass(t[k]) += area / 3.0;
            // negative cotangents of obtuse triangles are kept as-is
            const double cots[3] = {
                (b - a).dot(c - a) / std::max((b - a).cross(c - a).norm(), 1e-300),
                (a - b).dot(c - b) / std::max((a - b).cross(c - b).norm(), 1e-300),
                (a - c).dot(b - c) / std::max((a - c).cross(b - c).norm(), 1e-300)};
            const int opp[3][2] = {{t[1], t[2]}, {t[0], t[2]}, {t[0], t[1]}};
            for (int k = 0; k < 3; ++k) {
                const double w = 0.5 * cots[k];
                const int i = opp[k][0], j = opp[k][1];
                trips.emplace_back(i, i, w);
                trips.emplace_back(j, j, w);
                trips.emplace_back(i, j, -w);
                trips.emplace_back(j, i, -w);
            }
        }
    } else {
        trips.reserve(mesh.segments.size() * 4);
        for (const auto& s : mesh.segments) {
            const double len = (mesh.vertices[s[1]] - mesh.vertices[s[0]]).norm();
            const double w = 1.0 / len;
            trips.emplace_back(s[0], s[0], w);
            trips.emplace_back(s[1], s[1], w);
            trips.emplace_back(s[0], s[1], -w);
            trips.emplace_back(s[1], s[0], -w);
            mass(s[0]) += 0.5 * len;
            mass(s[1]) += 0.5 * len;
        }
    }
    stiffness.resize(nv, nv);
    stiffness.setFromTriplets(trips.begin(), trips.end());
}

namespace detail {

/// Smallest nonzero eigenvalues of S x = lambda M x by shift-invert subspace
/// iteration with the constant mode deflated. Deterministic start.
inline std::vector<double> smallest_nonzero_eigenvalues(const Eigen::SparseMatrix<double>& S,
                                                        const Eigen::VectorXd& M, int k,
                                                        double tol, int& iterations,
                                                        double& residual)
{
    const int nv = static_cast<int>(M.size());
    const int m = std::min(nv - 1, k + 8);

    const double scale = S.diagonal().sum() / M.sum();
    const double sigma = 1e-3 * scale;
    Eigen::SparseMatrix<double> shifted = S;
    for (int i = 0; i < nv; ++i) shifted.coeffRef(i, i) += sigma * M(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success)
        throw numeric_error("laplace_spectrum: factorization failed");

    const Eigen::VectorXd csqrt = M.cwiseSqrt();
    Eigen::VectorXd constant = Eigen::VectorXd::Ones(nv);
    constant /= std::sqrt(M.sum());

    const CounterRng rng(0x5eed);
    Eigen::MatrixXd X(nv, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < nv; ++i) X(i, j) = rng.uniform(j, i) - 0.5;

    auto project_and_orthonormalize = [&](Eigen::MatrixXd& Y) {
        const Eigen::VectorXd proj = constant.cwiseProduct(M).transpose() * Y;
        Y.noalias() -= constant * proj.transpose();
        Eigen::MatrixXd G = Y.transpose() * M.asDiagonal() * Y;
        const Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) throw numeric_error("subspace lost rank");
        Y = llt.matrixL().solve(Y.transpose()).transpose();
    };

    project_and_orthonormalize(X);
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(m, -1.0);
    std::vector<double> out;
    iterations = 0;
    residual = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
        ++iterations;
        Eigen::MatrixXd Y = solver.solve((M.asDiagonal() * X).eval());
        project_and_orthonormalize(Y);
        const Eigen::MatrixXd A = Y.transpose() * (S * Y);
        const Eigen::MatrixXd B = Y.transpose() * M.asDiagonal() * Y;
        const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(A, B);
        X = Y * ritz.eigenvectors();
        const Eigen::VectorXd lam = ritz.eigenvalues();

        bool done = true;
        for (int j = 0; j < k; ++j)
            if (std::abs(lam(j) - prev(j)) > tol * std::max(std::abs(lam(j)), 1e-300))
                done = false;
        prev = lam;
        if (done && iter >= 3) {
            // residual of the first pair as the reported diagnostic
            const Eigen::VectorXd v = X.col(0);
            const Eigen::VectorXd r = S * v - lam(0) * M.asDiagonal() * v;
            residual = r.norm() / std::max(lam(0) * (M.asDiagonal() * v).norm(), 1e-300);
            out.assign(lam.data(), lam.data() + k);
            return out;
        }
    }
    const Eigen::VectorXd v = X.col(0);
    const Eigen::VectorXd r = S * v - prev(0) * M.asDiagonal() * v;
    residual = r.norm() / std::max(prev(0), 1e-300);
    throw numeric_error("laplace_spectrum did not converge; residual " + format_g(residual));
}

} // namespace detail

inline SpectralReport laplace_spectrum(const BoundaryMesh& mesh, int k_eigs = 8,
                                       double tol = 1e-8)
{
    require_valid(mesh);
    const int comps = component_count(mesh);
    if (comps != 1)
        throw input_error("laplace_spectrum needs a connected boundary, got " +
                          std::to_string(comps) + " components (lambda_1 would be spurious)");
    if (k_eigs < 1) throw input_error("k_eigs must be positive");

    const auto summary = isoperimetric_summary(mesh);
    Eigen::SparseMatrix<double> S;
    Eigen::VectorXd M;
    assemble_laplacian(mesh, S, M);

    SpectralReport rep;
    rep.perimeter = summary.perimeter;
    rep.volume = summary.volume;
    rep.deficit = summary.deficit;
    rep.eigenvalues = detail::smallest_nonzero_eigenvalues(S, M, k_eigs, tol, rep.iterations,
                                                           rep.residual);
    rep.lambda1 = rep.eigenvalues.front();
    for (double l : rep.eigenvalues)
        rep.multiplicity_estimate += std::abs(l - rep.lambda1) <= 0.01 * rep.lambda1;

    const double n = mesh.ambient_dim - 1.0;
    rep.chavel_bound = n / ((n + 1.0) * (n + 1.0)) *
                       std::pow(summary.perimeter / summary.volume, 2.0);
    rep.gamma = rep.chavel_bound / rep.lambda1 - 1.0;
    rep.rho_omega = (n + 1.0) * summary.volume / summary.perimeter;
    return rep;
}

/// Full report (including gamma) after recentring at the boundary moment.
inline SpectralReport chavel_deficit(const BoundaryMesh& mesh, int k_eigs = 8, double tol = 1e-8)
{
    const Vec3 moment = boundary_moment(mesh);
    return laplace_spectrum(translated(mesh, -moment), k_eigs, tol);
}

} // namespace isoperim
