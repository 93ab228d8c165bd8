#include "isoperim/generators.hpp"
#include "isoperim/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace isoperim;

namespace {

BoundaryMesh unit_cube()
{
    BoundaryMesh m;
    m.ambient_dim = 3;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    // outward-oriented faces, two triangles each
    m.triangles = {{0, 2, 1}, {0, 3, 2},  // bottom (z=0), normal -z
                   {4, 5, 6}, {4, 6, 7},  // top
                   {0, 1, 5}, {0, 5, 4},  // y=0
                   {2, 3, 7}, {2, 7, 6},  // y=1
                   {1, 2, 6}, {1, 6, 5},  // x=1
                   {3, 0, 4}, {3, 4, 7}}; // x=0
    return m;
}

BoundaryMesh unit_square()
{
    BoundaryMesh m;
    m.ambient_dim = 2;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    return m;
}

} // namespace

TEST_CASE("cube surface validates and measures exactly")
{
    const auto cube = unit_cube();
    CHECK(validate(cube).empty());
    CHECK(enclosed_volume(cube) == Catch::Approx(1.0).margin(1e-14));
    CHECK(perimeter(cube) == Catch::Approx(6.0).margin(1e-14));
    CHECK(component_count(cube) == 1);

    const auto s = isoperimetric_summary(cube);
    CHECK(s.deficit > 0.0);
    CHECK(s.radius == Catch::Approx(std::pow(3.0 / (4.0 * kPi), 1.0 / 3.0)));
}

TEST_CASE("flipped triangle produces non-manifold edge defects")
{
    auto cube = unit_cube();
    std::swap(cube.triangles[0][1], cube.triangles[0][2]);
    const auto defects = validate(cube);
    int non_manifold = 0;
    for (const auto& d : defects) non_manifold += d.kind == "non_manifold_edge";
    CHECK(non_manifold == 3);
}

TEST_CASE("open polyline reports open-curve defects")
{
    auto sq = unit_square();
    sq.segments.pop_back();
    const auto defects = validate(sq);
    int open = 0;
    for (const auto& d : defects) open += d.kind == "open_curve";
    CHECK(open == 2);
}

TEST_CASE("unit square measures")
{
    const auto sq = unit_square();
    CHECK(validate(sq).empty());
    CHECK(enclosed_volume(sq) == Catch::Approx(1.0).margin(1e-15));
    CHECK(perimeter(sq) == Catch::Approx(4.0).margin(1e-15));
    const auto s = isoperimetric_summary(sq);
    CHECK(s.deficit == Catch::Approx(2.0 / std::sqrt(kPi) - 1.0).margin(1e-12));
}

TEST_CASE("regular icosahedron volume matches the closed form")
{
    const auto ico = icosphere(Vec3::Zero(), 1.0, 0);
    // circumradius-1 icosahedron: V = (5/12)(3+sqrt 5) a^3, a = 4/sqrt(10+2 sqrt 5)
    const double a = 4.0 / std::sqrt(10.0 + 2.0 * std::sqrt(5.0));
    const double v_exact = 5.0 / 12.0 * (3.0 + std::sqrt(5.0)) * a * a * a;
    CHECK(enclosed_volume(ico) == Catch::Approx(v_exact).margin(1e-12));
    CHECK(v_exact == Catch::Approx(2.53615).margin(1e-5));
}

TEST_CASE("volume is translation and rotation invariant")
{
    const CounterRng rng(20260809);
    const auto base = icosphere(Vec3(0.3, -0.2, 0.1), 1.3, 3);
    const double v0 = enclosed_volume(base);
    const double p0 = perimeter(base);
    for (int k = 0; k < 5; ++k) {
        const auto moved = transformed(base, random_rigid_motion(rng, 100 + k));
        CHECK(enclosed_volume(moved) == Catch::Approx(v0).epsilon(1e-12));
        CHECK(perimeter(moved) == Catch::Approx(p0).epsilon(1e-12));
    }
}

TEST_CASE("deficit is scale invariant and nearly zero for fine polygons")
{
    const auto poly = circle(Vec3::Zero(), 1.0, 4096);
    const auto s = isoperimetric_summary(poly);
    CHECK(s.deficit >= 0.0);
    CHECK(s.deficit < 1e-6);

    const auto big = scaled(poly, 37.5);
    CHECK(isoperimetric_summary(big).deficit == Catch::Approx(s.deficit).margin(1e-12));

    const auto tri = circle(Vec3::Zero(), 1.0, 3);
    CHECK(isoperimetric_summary(tri).deficit ==
          Catch::Approx(std::pow(3.0, 0.75) / std::sqrt(kPi) - 1.0).margin(1e-12));
}

TEST_CASE("two far unit balls: deficit has the closed form of a split ball")
{
    const auto b1 = icosphere(Vec3::Zero(), 1.0, 4);
    const auto b2 = icosphere(Vec3(8, 0, 0), 1.0, 4);
    const auto u = disjoint_union({b1, b2});
    CHECK(component_count(u) == 2);
    const auto s = isoperimetric_summary(u);
    CHECK(s.deficit == Catch::Approx(std::pow(2.0, 1.0 / 3.0) - 1.0).epsilon(0.01));
}

TEST_CASE("boundary moment and volume centroid")
{
    const Vec3 q(0.7, -1.1, 0.4);
    const auto sph = icosphere(q, 1.0, 3);
    CHECK((boundary_moment(sph) - q).norm() < 1e-12);
    CHECK((volume_centroid(sph) - q).norm() < 1e-12);

    auto cube = unit_cube();
    for (auto& v : cube.vertices) v -= Vec3(0.5, 0.5, 0.5);
    CHECK(boundary_moment(cube).norm() < 1e-12);

    // mirror-symmetric mesh keeps its moment on the mirror plane
    const auto sq = unit_square();
    CHECK(boundary_moment(sq).x() == Catch::Approx(0.5).margin(1e-14));
}
