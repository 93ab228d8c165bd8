#include "isoperim/experiments.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace isoperim;

TEST_CASE("exponent table closed forms")
{
    CHECK(ExponentTable::beta(2) == 0.125);
    CHECK(ExponentTable::beta(4) == 1.0 / 16.0);
    CHECK(ExponentTable::hausdorff_exp(2, 4.0) == Catch::Approx(6.0 / 12.0).margin(1e-15));
    CHECK(ExponentTable::lipschitz_exp(2, 4.0) == Catch::Approx(4.0 / 12.0).margin(1e-15));
    CHECK(ExponentTable::curvature_exp(2, 4.0) == Catch::Approx(3.0 / 16.0).margin(1e-15));
    CHECK(ExponentTable::cardinal_exp(2, 4.0) == Catch::Approx(2.0 / 16.0).margin(1e-15));
    CHECK(ExponentTable::planar_diam_constant() ==
          Catch::Approx(std::sqrt(3.0 * kPi) / 4.0).margin(1e-15));
    CHECK(ExponentTable::planar_bonnesen_constant() == Catch::Approx(16.0 * kPi).margin(1e-12));
}

TEST_CASE("fit_exponent on exact and noisy power laws")
{
    std::vector<double> xs, ys;
    for (double x : {0.01, 0.02, 0.05, 0.1, 0.4}) {
        xs.push_back(x);
        ys.push_back(3.0 * std::pow(x, 0.7));
    }
    auto f = fit_exponent(xs, ys);
    CHECK(f.slope == Catch::Approx(0.7).margin(1e-12));
    CHECK(f.intercept == Catch::Approx(std::log(3.0)).margin(1e-12));
    CHECK(f.stderr_slope < 1e-12);

    // rescaling either axis leaves the slope unchanged
    std::vector<double> xs2 = xs, ys2 = ys;
    for (auto& x : xs2) x *= 17.0;
    for (auto& y : ys2) y *= 0.003;
    CHECK(fit_exponent(xs2, ys2).slope == Catch::Approx(0.7).margin(1e-12));

    // log-corrected model
    ys.clear();
    for (double x : xs) ys.push_back(std::sqrt(x) * std::sqrt(-std::log(x)));
    f = fit_exponent(xs, ys, LogCorrection::sqrt_neg_log);
    CHECK(f.slope == Catch::Approx(0.5).margin(1e-10));

    // noisy quadratic: the reported interval contains 2
    const CounterRng rng(123);
    xs.clear();
    ys.clear();
    for (int i = 0; i < 12; ++i) {
        const double x = std::pow(10.0, -3.0 + 0.25 * i);
        xs.push_back(x);
        ys.push_back(x * x * (1.0 + 0.01 * (2.0 * rng.uniform(5, i) - 1.0)));
    }
    f = fit_exponent(xs, ys);
    CHECK(std::abs(f.slope - 2.0) <= 3.0 * std::max(f.stderr_slope, 1e-3));

    CHECK_THROWS_AS(fit_exponent({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), Error);
    CHECK_THROWS_AS(fit_exponent({1.0, 2.0, 3.0, -4.0}, {1.0, 2.0, 3.0, 4.0}), Error);
}

TEST_CASE("check catalog")
{
    const auto checks = registered_checks();
    CHECK(checks.size() >= 10);
    for (const auto& c : checks) {
        CHECK(!c.theorem.empty());
        CHECK(!c.id.empty());
    }
    CHECK_THROWS_AS(find_check("nope"), Error);
}

TEST_CASE("planar bonnesen check on the exact square")
{
    BoundaryMesh sq;
    sq.ambient_dim = 2;
    sq.vertices = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
    sq.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};

    const auto pc = planar_circle_hausdorff(sq);
    // best annulus: centre at the middle, radii 1/2 and sqrt(2)/2
    CHECK(pc.hausdorff == Catch::Approx(0.25 * (std::sqrt(2.0) - 1.0)).margin(1e-6));

    SampleRecord rec;
    rec.param = 0;
    rec.values["dh_circle"] = pc.hausdorff;
    rec.values["iso_gap"] = 16.0 - 4.0 * kPi;
    rec.values["deficit"] = 2.0 / std::sqrt(kPi) - 1.0;
    rec.values["diameter"] = std::sqrt(2.0);

    auto v = evaluate_check(find_check("C1"), {rec});
    CHECK(v.verdict == "holds");
    // margin: 16 pi d_H^2 well below the gap
    CHECK(16.0 * kPi * pc.hausdorff * pc.hausdorff < 16.0 - 4.0 * kPi);

    v = evaluate_check(find_check("C2"), {rec});
    CHECK(v.verdict == "holds");
}

TEST_CASE("power-bound verdicts: stable versus blow-up")
{
    std::vector<SampleRecord> stable, blowup;
    for (int i = 0; i < 12; ++i) {
        const double rhs = std::pow(10.0, -4.0 + 0.3 * i);
        SampleRecord a;
        a.param = i;
        a.values["z_l2_sq"] = 0.7 * std::sqrt(rhs); // exactly the right power
        a.values["deficit"] = rhs;
        stable.push_back(a);
        SampleRecord b;
        b.param = i;
        b.values["z_l2_sq"] = 0.7 * std::pow(rhs, 0.1); // far too heavy for sqrt
        b.values["deficit"] = rhs;
        blowup.push_back(b);
    }
    const auto spec = find_check("C6");
    auto v = evaluate_check(spec, stable);
    CHECK(v.verdict == "holds");
    CHECK(v.c_fit == Catch::Approx(0.7).epsilon(1e-9));
    CHECK(v.stability == Catch::Approx(1.0).epsilon(1e-9));

    v = evaluate_check(spec, blowup);
    CHECK(v.verdict == "inconclusive");
    CHECK(v.stability > 10.0);
}

TEST_CASE("empty measurement list produces records only")
{
    SweepConfig cfg;
    cfg.family = "regular_polygon";
    cfg.grid = {8, 16, 32};
    const auto result = run_sweep(cfg);
    REQUIRE(result.records.size() == 3);
    for (const auto& r : result.records) {
        CHECK_FALSE(r.failed);
        CHECK(r.values.empty());
    }
    CHECK(result.verdicts.empty());
}

TEST_CASE("harmonic sweep: fuglede gradient check and quadratic slope")
{
    SweepConfig cfg;
    cfg.family = "harmonic";
    cfg.level = 3;
    cfg.grid = {0.00625, 0.0125, 0.025, 0.05};
    cfg.measurements = {"deficit", "deficit_excess", "du_l2_sq"};
    cfg.checks = {"fuglede_gradient"};
    cfg.fits.push_back({"param", "deficit_excess", LogCorrection::none});
    // param is not a measurement; fit over the recorded values directly
    cfg.fits.back().x_key = "du_l2_sq";
    cfg.fits.back().y_key = "deficit_excess";

    const auto result = run_sweep(cfg);
    REQUIRE(result.records.size() == 4);
    for (const auto& r : result.records) CHECK_FALSE(r.failed);
    REQUIRE(result.verdicts.size() == 1);
    CHECK(result.verdicts[0].verdict == "holds");
    CHECK(result.verdicts[0].c_fit < 0.5); // ratio is about 1/3.3

    // du ~ a^2 and excess ~ a^2: slope of one against the other is 1
    REQUIRE(result.fits.size() == 1);
    REQUIRE(result.fits[0].ok);
    CHECK(result.fits[0].fit.slope == Catch::Approx(1.0).margin(0.02));

    // amplitude slope: excess deficit is quadratic
    std::vector<double> xs, ys;
    for (const auto& r : result.records) {
        xs.push_back(r.param);
        ys.push_back(r.values.at("deficit_excess"));
    }
    CHECK(fit_exponent(xs, ys).slope == Catch::Approx(2.0).margin(0.02));
}

TEST_CASE("sweep verdicts are reproducible from the records alone")
{
    SweepConfig cfg;
    cfg.family = "spiky_ball";
    cfg.level = 3;
    cfg.grid = {0.04, 0.02};
    cfg.checks = {"C3"};
    const auto result = run_sweep(cfg);
    const auto again = verdicts_from_records(cfg.checks, result.records);
    REQUIRE(again.size() == result.verdicts.size());
    CHECK(again[0].verdict == result.verdicts[0].verdict);
    CHECK(again[0].c_fit == result.verdicts[0].c_fit);

    // CSV has param plus the auto-added check columns
    const auto csv = sweep_csv(result);
    CHECK(csv.find("param") == 0);
    CHECK(csv.find("outside_fraction") != std::string::npos);
    CHECK(csv.find("deficit") != std::string::npos);
}

TEST_CASE("sweeps tolerate partial failures but not majorities")
{
    SweepConfig cfg;
    cfg.family = "regular_polygon";
    cfg.grid = {8, 2};
    const auto result = run_sweep(cfg); // one invalid polygon out of two
    CHECK(result.records[1].failed);

    cfg.grid = {2, 2, 8};
    CHECK_THROWS_AS(run_sweep(cfg), Error);
}
