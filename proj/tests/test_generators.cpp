#include "isoperim/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace isoperim;

TEST_CASE("icosphere combinatorics and projection")
{
    const auto ico = icosphere(Vec3::Zero(), 1.0, 0);
    CHECK(ico.vertices.size() == 12);
    CHECK(ico.triangles.size() == 20);
    CHECK(validate(ico).empty());

    for (int level : {1, 2, 3}) {
        const auto s = icosphere(Vec3::Zero(), 1.0, level);
        CHECK(s.triangles.size() == 20u << (2 * level));
        CHECK(validate(s).empty());
    }

    const auto s3 = icosphere(Vec3::Zero(), 1.0, 3);
    for (const auto& v : s3.vertices) CHECK(std::abs(v.norm() - 1.0) < 1e-12);

    CHECK_THROWS_AS(icosphere(Vec3::Zero(), 1.0, 9), Error);
    CHECK_THROWS_AS(circle(Vec3::Zero(), 1.0, 2), Error);
}

TEST_CASE("icosphere area approaches the sphere area from below")
{
    const auto s = icosphere(Vec3::Zero(), 2.0, 4);
    const double area = perimeter(s);
    const double exact = 4.0 * kPi * 4.0;
    const double e = 1.0 - area / exact;
    CHECK(e > 0.0);
    CHECK(e < 1e-2);
}

TEST_CASE("spherical harmonics are orthonormal on the sphere")
{
    // quasi Monte Carlo over a dense Fibonacci set
    const auto dirs = fibonacci_sphere(20000);
    auto dot = [&](int l1, int m1, int l2, int m2) {
        double s = 0.0;
        for (const auto& d : dirs)
            s += real_spherical_harmonic(l1, m1, d) * real_spherical_harmonic(l2, m2, d);
        return s * 4.0 * kPi / dirs.size();
    };
    CHECK(dot(2, 0, 2, 0) == Catch::Approx(1.0).margin(2e-3));
    CHECK(dot(3, 2, 3, 2) == Catch::Approx(1.0).margin(2e-3));
    CHECK(dot(4, -3, 4, -3) == Catch::Approx(1.0).margin(2e-3));
    CHECK(dot(2, 0, 3, 0) == Catch::Approx(0.0).margin(2e-3));
    CHECK(dot(2, 1, 2, -1) == Catch::Approx(0.0).margin(2e-3));
}

TEST_CASE("nearly spherical graphs")
{
    const auto base = icosphere(Vec3::Zero(), 1.0, 3);
    const auto zero = nearly_spherical(GraphFunction::harmonic(2, 0, 0.0), 3);
    REQUIRE(zero.vertices.size() == base.vertices.size());
    for (std::size_t i = 0; i < base.vertices.size(); ++i)
        CHECK((zero.vertices[i] - base.vertices[i]).norm() < 1e-15);

    const auto bumped = nearly_spherical(GraphFunction::harmonic(2, 0, 0.05), 3);
    CHECK(validate(bumped).empty());
    CHECK(isoperimetric_summary(bumped).deficit >
          isoperimetric_summary(base).deficit);

    CHECK_THROWS_AS(nearly_spherical(GraphFunction::harmonic(2, 0, 3.0), 3), Error);
}

TEST_CASE("sharpness profile values")
{
    const auto g = GraphFunction::sharpness_profile(4.0, 1e-4);
    const double r = g.profile_support_radius();
    CHECK(r == Catch::Approx(std::pow(1e-4, 1.0 / 3.0)).epsilon(1e-12));
    CHECK(r == Catch::Approx(0.04642).margin(5e-5));
    CHECK(g.profile_value(0.0) ==
          Catch::Approx(2.0 / 3.0 * std::pow(r / 2.0, 1.5)).epsilon(1e-12));
    CHECK(g.profile_value(0.0) == Catch::Approx(2.36e-3).margin(2e-5));
    CHECK(g.profile_value(r) == 0.0);
    CHECK(g.profile_value(2 * r) == 0.0);
    // C^1 join at r/2
    const double h = 1e-7;
    const double left = (g.profile_value(r / 2) - g.profile_value(r / 2 - h)) / h;
    const double right = (g.profile_value(r / 2 + h) - g.profile_value(r / 2)) / h;
    CHECK(left == Catch::Approx(right).margin(1e-4));
}

TEST_CASE("polar graded sphere is a valid sphere mesh")
{
    const auto g = GraphFunction::sharpness_profile(4.0, 1e-3);
    const auto ref = nearly_spherical_reference(g, 0);
    CHECK(validate(ref).empty());
    const auto s = isoperimetric_summary(ref);
    CHECK(s.deficit >= 0.0);
    CHECK(s.deficit < 5e-3);
    CHECK(s.volume == Catch::Approx(4.0 * kPi / 3.0).epsilon(0.01));

    const auto dom = nearly_spherical(g, 0);
    CHECK(validate(dom).empty());
    CHECK(isoperimetric_summary(dom).deficit > s.deficit);
}

TEST_CASE("ellipsoid and unions")
{
    const auto e = ellipsoid(1.0, 1.0, 1.0, 3);
    const auto s = icosphere(Vec3::Zero(), 1.0, 3);
    for (std::size_t i = 0; i < e.vertices.size(); ++i)
        CHECK((e.vertices[i] - s.vertices[i]).norm() < 1e-15);

    const auto stretched = ellipsoid(1.0, 1.0, 1.3, 3);
    CHECK(validate(stretched).empty());
    CHECK(enclosed_volume(stretched) ==
          Catch::Approx(1.3 * enclosed_volume(s)).epsilon(1e-12));

    CHECK_THROWS_AS(disjoint_union({s, translated(s, Vec3(1.5, 0, 0))}), Error);
}

TEST_CASE("tube tree domains are watertight")
{
    TreeSpec tree;
    tree.tube_radius = 0.02;
    tree.segments = {{Vec3(1, 0, 0), Vec3(1.5, 0, 0)}};
    const auto dom = tube_tree_domain(1.0, tree, 4);
    CHECK(validate(dom).empty());

    // perimeter tracks sphere + lateral tube + cap area
    const double p = perimeter(dom);
    const double lateral = 2.0 * kPi * 0.02 * 0.5;
    const double cap = 2.0 * kPi * 0.02 * 0.02;
    CHECK(p == Catch::Approx(4.0 * kPi + lateral + cap).epsilon(0.02));

    // empty tree falls back to the sphere
    TreeSpec empty;
    const auto ball = tube_tree_domain(1.0, empty, 3);
    CHECK(ball.triangles.size() == icosphere(Vec3::Zero(), 1.0, 3).triangles.size());
}

TEST_CASE("bent chains and free capsules")
{
    TreeSpec bent;
    bent.tube_radius = 0.02;
    bent.segments = {{Vec3(0, 0, 1), Vec3(0, 0, 1.4)}, {Vec3(0, 0, 1.4), Vec3(0.25, 0, 1.7)}};
    const auto dom = tube_tree_domain(1.0, bent, 4);
    CHECK(validate(dom).empty());

    TreeSpec free_caps;
    free_caps.tube_radius = 0.05;
    free_caps.attach_to_ball = false;
    free_caps.segments = {{Vec3(0, 0, 2.0), Vec3(0, 0, 2.5)}};
    const auto dom2 = tube_tree_domain(1.0, free_caps, 3);
    CHECK(validate(dom2).empty());
    CHECK(component_count(dom2) == 2);
    // capsule volume: cylinder + sphere
    const double cap_vol = kPi * 0.05 * 0.05 * 0.5 + 4.0 * kPi / 3.0 * std::pow(0.05, 3);
    CHECK(enclosed_volume(dom2) ==
          Catch::Approx(enclosed_volume(icosphere(Vec3::Zero(), 1.0, 3)) + cap_vol)
              .epsilon(0.02));
}

TEST_CASE("spiky ball rejects bad configurations")
{
    const auto ok = spiky_ball(1.0, 4, {{Vec3(0, 0, 1), 0.5}}, 0.02);
    CHECK(validate(ok).empty());

    const auto plain = spiky_ball(1.0, 3, {{Vec3(0, 0, 1), 0.0}}, 0.02);
    CHECK(plain.triangles.size() == icosphere(Vec3::Zero(), 1.0, 3).triangles.size());

    TreeSpec crossing;
    crossing.tube_radius = 0.05;
    crossing.segments = {{Vec3(1, 0, 0), Vec3(1.6, 0, 0)},
                         {Vec3(1.02, 0.04, 0), Vec3(1.62, 0.04, 0)}};
    CHECK_THROWS_AS(tube_tree_domain(1.0, crossing, 4), Error);
}
