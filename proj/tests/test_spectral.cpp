#include "isoperim/generators.hpp"
#include "isoperim/spectral.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace isoperim;

TEST_CASE("assembly invariants: constants annihilated, mass sums to P")
{
    const auto mesh = nearly_spherical(GraphFunction::harmonic(3, -2, 0.07), 3);
    Eigen::SparseMatrix<double> S;
    Eigen::VectorXd M;
    assemble_laplacian(mesh, S, M);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(M.size());
    CHECK((S * ones).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(M.sum() == Catch::Approx(perimeter(mesh)).epsilon(1e-12));
    CHECK(M.minCoeff() > 0.0);
}

TEST_CASE("unit sphere spectrum: lambda_1 = 2 with multiplicity 3")
{
    const auto sph = icosphere(Vec3::Zero(), 1.0, 4);
    const auto rep = laplace_spectrum(sph, 8, 1e-8);
    CHECK(rep.lambda1 == Catch::Approx(2.0).epsilon(0.02));
    CHECK(rep.multiplicity_estimate == 3);
    // next cluster is l = 2: lambda = 6
    CHECK(rep.eigenvalues[3] == Catch::Approx(6.0).epsilon(0.03));
    for (std::size_t i = 0; i + 1 < rep.eigenvalues.size(); ++i)
        CHECK(rep.eigenvalues[i] <= rep.eigenvalues[i + 1] + 1e-12);
    CHECK(rep.eigenvalues.front() > 0.0);
    CHECK(rep.gamma > -5e-3);
    CHECK(rep.gamma < 5e-3);
    const double R = std::pow(rep.volume / unit_ball_volume(3), 1.0 / 3.0);
    CHECK(rep.rho_omega == Catch::Approx(R / (1.0 + rep.deficit)).epsilon(1e-9));
}

TEST_CASE("unit circle spectrum: lambda_1 = 1 with multiplicity 2")
{
    const auto poly = circle(Vec3::Zero(), 1.0, 4096);
    const auto rep = laplace_spectrum(poly, 6, 1e-10);
    CHECK(rep.lambda1 == Catch::Approx(1.0).margin(1e-4));
    CHECK(rep.multiplicity_estimate == 2);
    CHECK(rep.eigenvalues[2] == Catch::Approx(4.0).margin(1e-3));
    CHECK(rep.gamma == Catch::Approx(0.0).margin(5e-3));
}

TEST_CASE("spectrum scaling and rigid-motion invariance")
{
    const auto mesh = ellipsoid(1.0, 1.0, 1.15, 3);
    const auto rep = laplace_spectrum(mesh, 4, 1e-10);
    const auto rep2 = laplace_spectrum(scaled(mesh, 2.0), 4, 1e-10);
    CHECK(rep2.lambda1 == Catch::Approx(rep.lambda1 / 4.0).epsilon(1e-8));
    CHECK(rep2.gamma == Catch::Approx(rep.gamma).margin(1e-8));

    const CounterRng rng(2);
    const auto moved = transformed(mesh, random_rigid_motion(rng, 44));
    const auto rep3 = laplace_spectrum(moved, 4, 1e-10);
    CHECK(rep3.lambda1 == Catch::Approx(rep.lambda1).epsilon(1e-8));
}

TEST_CASE("disconnected meshes are rejected")
{
    const auto two = disjoint_union({icosphere(Vec3::Zero(), 1.0, 2),
                                     icosphere(Vec3(4, 0, 0), 1.0, 2)});
    CHECK_THROWS_AS(laplace_spectrum(two, 4, 1e-8), Error);
}

TEST_CASE("chavel deficit and the rho identity")
{
    const auto sph = icosphere(Vec3(0.5, -0.2, 0.9), 1.0, 4);
    const auto rep = chavel_deficit(sph);
    CHECK(rep.gamma > -5e-3);
    CHECK(rep.gamma < 5e-3);
    // rho = R / (1 + deficit)
    const double R = std::pow(rep.volume / unit_ball_volume(3), 1.0 / 3.0);
    CHECK(rep.rho_omega == Catch::Approx(R / (1.0 + rep.deficit)).epsilon(1e-9));

    // ellipsoids have positive gamma growing with the eccentricity
    const auto e1 = chavel_deficit(ellipsoid(1.0, 1.0, 1.1, 4));
    CHECK(e1.gamma > 0.0);
    const auto e2 = chavel_deficit(ellipsoid(1.0, 1.0, 1.2, 4));
    CHECK(e2.gamma > e1.gamma);
}

TEST_CASE("coordinate rayleigh quotients bound lambda_1 from above")
{
    for (const auto& mesh : {icosphere(Vec3::Zero(), 1.0, 3), ellipsoid(1.0, 1.1, 1.2, 3)}) {
        Eigen::SparseMatrix<double> S;
        Eigen::VectorXd M;
        assemble_laplacian(mesh, S, M);
        const int nv = static_cast<int>(mesh.vertices.size());
        double num = 0.0, den = 0.0;
        for (int c = 0; c < 3; ++c) {
            Eigen::VectorXd x(nv);
            for (int i = 0; i < nv; ++i) x(i) = mesh.vertices[i][c];
            const double mean = (M.asDiagonal() * x).sum() / M.sum();
            x.array() -= mean;
            num += x.dot(S * x);
            den += x.dot(M.asDiagonal() * x);
        }
        const auto rep = laplace_spectrum(mesh, 4, 1e-9);
        CHECK(rep.lambda1 <= num / den + 1e-9);
    }
}
