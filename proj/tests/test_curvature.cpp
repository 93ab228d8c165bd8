#include "isoperim/curvature.hpp"
#include "isoperim/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace isoperim;

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST_CASE("sphere curvature: H = 1/R, principal curvatures close")
{
    for (double R : {1.0, 2.5}) {
        const auto sph = icosphere(Vec3::Zero(), R, 4);
        const auto f = curvature_field(sph, {1.0, 2.0});
        CHECK(median(f.mean) == Catch::Approx(1.0 / R).epsilon(0.02));
        CHECK(median(f.kappa1) == Catch::Approx(1.0 / R).epsilon(0.05));
        CHECK(median(f.kappa2) == Catch::Approx(1.0 / R).epsilon(0.05));
        // area weights partition the surface
        CHECK(f.perimeter == Catch::Approx(perimeter(sph)).epsilon(1e-9));
        // unit normals, radial
        for (std::size_t v = 0; v < sph.vertices.size(); v += 97) {
            CHECK(f.normal[v].norm() == Catch::Approx(1.0).margin(1e-12));
            CHECK(f.normal[v].dot(sph.vertices[v].normalized()) > 0.999);
        }
    }
}

TEST_CASE("curvature scaling and norm monotonicity")
{
    const auto mesh = nearly_spherical(GraphFunction::harmonic(2, 0, 0.05), 3);
    const auto f1 = curvature_field(mesh, {1.0, 2.0, 4.0});
    const auto f2 = curvature_field(scaled(mesh, 3.0), {1.0, 2.0, 4.0});
    for (std::size_t v = 0; v < mesh.vertices.size(); v += 53)
        CHECK(f2.mean[v] == Catch::Approx(f1.mean[v] / 3.0).margin(1e-9));
    CHECK(f2.h_norms.at(2.0) == Catch::Approx(f1.h_norms.at(2.0) / 3.0).epsilon(1e-9));
    // K = P ||H||_p^2 is scale invariant
    CHECK(f2.budgets.at(2.0) == Catch::Approx(f1.budgets.at(2.0)).epsilon(1e-9));
    // Jensen with the probability normalization
    CHECK(f1.h_norms.at(1.0) <= f1.h_norms.at(2.0) + 1e-12);
    CHECK(f1.h_norms.at(2.0) <= f1.h_norms.at(4.0) + 1e-12);
}

TEST_CASE("tube interior curvature: H = 1/(2 eps)")
{
    const double eps = 0.01, L = 0.5;
    const auto dom = spiky_ball(1.0, 4, {{Vec3(0, 0, 1), L}}, eps);
    const auto f = curvature_field(dom, {1.0});
    // collect vertices in the middle band of the tube
    std::vector<double> h_mid, k1_mid, k2_mid;
    for (std::size_t v = 0; v < dom.vertices.size(); ++v) {
        const Vec3& p = dom.vertices[v];
        const double axial = p.z() - 1.0;
        const double rad = std::hypot(p.x(), p.y());
        if (axial > 0.3 * L && axial < 0.7 * L && rad < 1.5 * eps) {
            h_mid.push_back(f.mean[v]);
            k1_mid.push_back(f.kappa1[v]);
            k2_mid.push_back(f.kappa2[v]);
        }
    }
    REQUIRE(h_mid.size() > 16);
    CHECK(median(h_mid) == Catch::Approx(1.0 / (2.0 * eps)).epsilon(0.05));
    CHECK(median(k1_mid) == Catch::Approx(1.0 / eps).epsilon(0.08));
    CHECK(std::abs(median(k2_mid)) < 0.1 / eps);
}

TEST_CASE("gauss-bonnet: angle defects sum to 2 pi chi")
{
    const auto sph = icosphere(Vec3::Zero(), 1.0, 3);
    CHECK(euler_characteristic(sph) == 2);
    CHECK(total_angle_defect(sph) == Catch::Approx(4.0 * kPi).margin(1e-9));

    const auto two = disjoint_union({icosphere(Vec3::Zero(), 1.0, 2),
                                     icosphere(Vec3(5, 0, 0), 0.5, 2)});
    CHECK(euler_characteristic(two) == 4);
    CHECK(total_angle_defect(two) == Catch::Approx(8.0 * kPi).margin(1e-9));

    const auto tube = spiky_ball(1.0, 4, {{Vec3(0, 0, 1), 0.4}}, 0.02);
    CHECK(euler_characteristic(tube) == 2);
    CHECK(total_angle_defect(tube) == Catch::Approx(4.0 * kPi).margin(1e-9));
}

TEST_CASE("small components carry a fixed curvature quantum")
{
    // union of a unit ball and tiny balls: each tiny sphere contributes
    // int H^2 dA = 4 pi with the mean convention
    std::vector<BoundaryMesh> parts = {icosphere(Vec3::Zero(), 1.0, 3)};
    for (int k = 1; k <= 3; ++k)
        parts.push_back(icosphere(Vec3(0, 0, 2.0 + 1.2 * k), 0.1 / k, 3));
    const auto family = disjoint_union(parts);
    const auto f = curvature_field(family, {2.0});
    const auto labels = element_components(family);

    // integrate H^2 per component via vertex areas
    std::vector<double> integral(4, 0.0);
    std::vector<int> vertex_comp(family.vertices.size(), -1);
    for (std::size_t e = 0; e < family.triangles.size(); ++e)
        for (int k = 0; k < 3; ++k) vertex_comp[family.triangles[e][k]] = labels[e];
    for (std::size_t v = 0; v < family.vertices.size(); ++v)
        integral[vertex_comp[v]] += f.vertex_area[v] * f.mean[v] * f.mean[v];
    for (int comp = 0; comp < 4; ++comp)
        CHECK(integral[comp] == Catch::Approx(4.0 * kPi).epsilon(0.05));
}

TEST_CASE("polyline curvature basics")
{
    // regular m-gon: total turning is exactly 2 pi
    for (int m : {7, 64}) {
        const auto poly = circle(Vec3::Zero(), 1.0, m);
        const auto f = curve_curvature(poly, {1.0});
        double total = 0.0;
        for (std::size_t v = 0; v < poly.vertices.size(); ++v)
            total += f.mean[v] * f.vertex_area[v];
        CHECK(total == Catch::Approx(2.0 * kPi).margin(1e-12));
    }

    // fine circle: kappa = 1/R with O(1/m^2) error
    const auto fine = circle(Vec3::Zero(), 2.0, 1024);
    const auto f = curve_curvature(fine, {1.0, 2.0});
    CHECK(median(f.mean) == Catch::Approx(0.5).epsilon(1e-4));

    // square: curvature concentrated at corners, integral 2 pi
    BoundaryMesh sq;
    sq.ambient_dim = 2;
    sq.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    sq.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    const auto fsq = curve_curvature(sq, {1.0});
    double total = 0.0;
    for (std::size_t v = 0; v < 4; ++v) total += fsq.mean[v] * fsq.vertex_area[v];
    CHECK(total == Catch::Approx(2.0 * kPi).margin(1e-12));
}

TEST_CASE("z field on spheres and graphs")
{
    const auto sph = icosphere(Vec3::Zero(), 1.0, 4);
    const auto f = curvature_field(sph, {2.0});
    const auto fit = fit_sphere(sph, FitMethod::boundary_least_squares);
    const auto z = z_field(sph, f, fit);
    CHECK(z.linf < 2e-2);
    for (const auto& zz : z.z) CHECK(zz.norm() <= 2.0 + 1e-12);

    // ||Z||_2 = Theta(a) on the harmonic family
    std::vector<double> l2s;
    for (double a : {0.0125, 0.025, 0.05}) {
        const auto mesh = nearly_spherical(GraphFunction::harmonic(2, 0, a), 4);
        const auto fm = curvature_field(mesh, {2.0});
        const auto fitm = fit_sphere(mesh, FitMethod::boundary_least_squares);
        l2s.push_back(z_field(mesh, fm, fitm).l2);
    }
    CHECK(l2s[1] / l2s[0] == Catch::Approx(2.0).epsilon(0.15));
    CHECK(l2s[2] / l2s[1] == Catch::Approx(2.0).epsilon(0.15));

    // sphere about a shifted centre: |Z| peaks near |c|/R
    SphereFit shifted = fit;
    const double off = 0.05;
    shifted.center = Vec3(off, 0, 0);
    const auto zs = z_field(sph, f, shifted);
    CHECK(zs.linf == Catch::Approx(off / fit.radius).epsilon(0.2));
}

TEST_CASE("curvature integral outside an annulus")
{
    const auto sph = icosphere(Vec3::Zero(), 1.0, 4);
    const auto f = curvature_field(sph, {1.0});
    const auto fit = fit_sphere(sph, FitMethod::boundary_least_squares);
    CHECK(outside_annulus_curvature_integral(sph, f, fit.annulus(0.01), 1.0) == 0.0);

    const double eps = 0.01, L = 0.5;
    const auto dom = spiky_ball(1.0, 4, {{Vec3(0, 0, 1), L}}, eps);
    const auto fd = curvature_field(dom, {1.0});
    const auto fitd = fit_sphere(dom, FitMethod::boundary_least_squares);
    const auto ann = fitd.annulus(0.05);
    const double integral = outside_annulus_curvature_integral(dom, fd, ann, 1.0);
    CHECK(integral == Catch::Approx(kPi * L).epsilon(0.15));

    // q = 0 reproduces the outside area bit-for-bit
    const double area = annulus_outside_area(dom, ann);
    CHECK(outside_annulus_curvature_integral(dom, fd, ann, 0.0) ==
          Catch::Approx(area).margin(1e-9 * area));
}
