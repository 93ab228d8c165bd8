#pragma once

#include "isoperim/curvature.hpp"
#include "isoperim/io.hpp"
#include "isoperim/spectral.hpp"

#include <bit>
#include <set>

namespace isoperim {

// ---------------------------------------------------------------------------
// Named exponents from the stability statements.

struct ExponentTable {
    static double beta(int n) { return std::min(1.0 / (4.0 * n), 0.125); }
    static double hausdorff_exp(int n, double p)
    {
        return (2.0 * p - n) / (2.0 * p - 2.0 * n + n * p);
    }
    static double lipschitz_exp(int n, double p)
    {
        return 2.0 * (p - n) / (p * (n + 2.0) - 2.0 * n);
    }
    static double curvature_exp(int n, double p) { return (p - n + 1.0) / (4.0 * p); }
    static double cardinal_exp(int n, double p) { return (p - n) / (4.0 * p); }
    static double planar_diam_constant() { return std::sqrt(3.0 * kPi) / 4.0; }
    static double planar_bonnesen_constant() { return 16.0 * kPi; }
    static double planar_area_constant() { return 4.0 * kPi; }
};

// ---------------------------------------------------------------------------
// Log-log exponent fit, optionally with the sqrt(-log) correction used for the
// two-dimensional Hausdorff rate.

enum class LogCorrection { none, sqrt_neg_log };

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

inline ExponentFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys,
                                LogCorrection correction = LogCorrection::none)
{
    if (xs.size() != ys.size()) throw input_error("fit_exponent: size mismatch");
    if (xs.size() < 4) throw input_error("fit_exponent needs at least 4 points");
    const int n = static_cast<int>(xs.size());
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw input_error("fit_exponent needs positive values");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        if (correction == LogCorrection::sqrt_neg_log) {
            if (!(xs[i] < 1.0)) throw input_error("sqrt_neg_log correction needs x < 1");
            ly[i] -= 0.5 * std::log(-std::log(xs[i]));
        }
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw input_error("fit_exponent: degenerate abscissae");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += r * r;
    }
    fit.stderr_slope = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Check catalog. Power bounds lhs <= C * rhs^q are evaluated with a single
// fitted constant C_fit = max(lhs / rhs^q); "holds" additionally requires that
// per-dyadic-bin constants do not blow up toward the small-rhs end (the
// falsifiable content of a non-explicit constant).

struct CheckSpec {
    std::string id;
    std::string theorem; // classical name of the inequality exercised
    enum Kind {
        power_bound,     // lhs <= C rhs^q with fitted C
        planar_bonnesen, // 16 pi d_H^2 <= P^2 - 4 pi A
        planar_diam,     // d_H/diam <= sqrt(3 pi)/4 deficit^{1/2}
        band,            // lhs/rhs within [band_lo, band_hi]
        absolute_factor  // lhs <= factor * rhs, explicit constant
    } kind = power_bound;
    std::string lhs_key;
    std::string rhs_key;
    double exponent = 0.5;
    double band_lo = 0.5, band_hi = 2.0; // band kind: lhs/rhs within [lo, hi]
    double factor = 1.0;                 // absolute_factor kind
};

inline std::vector<CheckSpec> registered_checks()
{
    std::vector<CheckSpec> c;
    c.push_back({"C1", "planar Bonnesen inequality (16 pi d_H^2 <= P^2 - 4 pi A)",
                 CheckSpec::planar_bonnesen, "dh_circle", "iso_gap", 1.0, 0, 0});
    c.push_back({"C2", "planar isodiametric ratio (d_H/diam <= sqrt(3 pi)/4 sqrt(deficit))",
                 CheckSpec::planar_diam, "dh_circle", "deficit", 0.5, 0, 0});
    c.push_back({"C3", "annulus concentration (outside fraction <= C deficit^{1/2 - alpha})",
                 CheckSpec::power_bound, "outside_fraction", "deficit", 0.25, 0, 0});
    c.push_back({"C4", "sphere density estimate (cap-fraction discrepancy <= C deficit^{1/4})",
                 CheckSpec::power_bound, "equidense_discrepancy", "deficit", 0.25, 0, 0});
    c.push_back({"C5", "boundary-vs-sphere test functions (discrepancy <= C deficit^{1/2})",
                 CheckSpec::power_bound, "bump_discrepancy", "deficit", 0.5, 0, 0});
    c.push_back({"C6", "normal oscillation (||Z||_2^2 <= C deficit^{1/2})",
                 CheckSpec::power_bound, "z_l2_sq", "deficit", 0.5, 0, 0});
    c.push_back({"C7", "Chavel stability (deficit <= C gamma^{1/2})",
                 CheckSpec::power_bound, "deficit", "gamma", 0.5, 0, 0});
    c.push_back({"C8", "measure distance (d_P <= C deficit^{1/2})",
                 CheckSpec::power_bound, "preiss", "deficit", 0.5, 0, 0});
    c.push_back({"C9", "tube curvature tracking (integral within a factor 2 of pi length)",
                 CheckSpec::band, "curvature_outside", "tree_length_pi", 1.0, 0.5, 2.0});
    c.push_back({"C10", "asymmetry bound (A <= C deficit^{1/2})",
                 CheckSpec::power_bound, "asymmetry", "deficit", 0.5, 0, 0});
    CheckSpec gradu{"fuglede_gradient",
                    "nearly spherical gradient bound (||du||_2^2 <= 10 deficit)",
                    CheckSpec::absolute_factor,
                    "du_l2_sq",
                    "deficit_excess",
                    1.0,
                    0,
                    0};
    gradu.factor = 10.0;
    c.push_back(gradu);
    return c;
}

inline CheckSpec find_check(const std::string& id)
{
    for (const auto& c : registered_checks())
        if (c.id == id) return c;
    throw input_error("unknown check id: " + id);
}

// ---------------------------------------------------------------------------
// Sweep records and verdicts. Verdicts are reproducible from the records
// alone; the stored values are the sufficient statistics.

struct SampleRecord {
    double param = 0.0;
    std::map<std::string, double> values;
    std::map<std::string, double> errors; // standard errors of sampled values
    bool failed = false;
    std::string failure;
};

struct CheckVerdict {
    std::string check_id;
    std::string theorem;
    std::string verdict; // holds | violated | inconclusive
    double c_fit = 0.0;
    double stability = 0.0;
    double witness_param = 0.0;
    std::string reason;
};

inline CheckVerdict evaluate_check(const CheckSpec& check,
                                   const std::vector<SampleRecord>& records)
{
    CheckVerdict v;
    v.check_id = check.id;
    v.theorem = check.theorem;

    std::vector<const SampleRecord*> usable;
    for (const auto& r : records) {
        if (r.failed) continue;
        if (!r.values.count(check.lhs_key) || !r.values.count(check.rhs_key)) continue;
        usable.push_back(&r);
    }
    if (usable.empty()) {
        v.verdict = "inconclusive";
        v.reason = "no samples carry " + check.lhs_key + " and " + check.rhs_key;
        return v;
    }

    if (check.kind == CheckSpec::planar_bonnesen) {
        for (const auto* r : usable) {
            const double lhs = ExponentTable::planar_bonnesen_constant() *
                               r->values.at(check.lhs_key) * r->values.at(check.lhs_key);
            const double rhs = r->values.at(check.rhs_key);
            if (lhs > rhs + 1e-12 * (1.0 + std::abs(rhs))) {
                v.verdict = "violated";
                v.witness_param = r->param;
                v.reason = "16 pi d_H^2 = " + format_g(lhs) + " > gap = " + format_g(rhs);
                return v;
            }
        }
        v.verdict = "holds";
        return v;
    }

    if (check.kind == CheckSpec::planar_diam) {
        int used = 0;
        for (const auto* r : usable) {
            const double deficit = r->values.at(check.rhs_key);
            if (deficit > 1.0) continue; // hypothesis of the inequality
            ++used;
            const double lhs = r->values.at(check.lhs_key) / r->values.at("diameter");
            const double rhs =
                ExponentTable::planar_diam_constant() * std::sqrt(std::max(deficit, 0.0));
            if (lhs > rhs + 1e-12) {
                v.verdict = "violated";
                v.witness_param = r->param;
                v.reason = "d_H/diam = " + format_g(lhs) + " > bound " + format_g(rhs);
                return v;
            }
        }
        v.verdict = used > 0 ? "holds" : "inconclusive";
        if (used == 0) v.reason = "all samples above the deficit <= 1 hypothesis";
        return v;
    }

    if (check.kind == CheckSpec::absolute_factor) {
        for (const auto* r : usable) {
            const double lhs = r->values.at(check.lhs_key);
            const double rhs = check.factor * r->values.at(check.rhs_key);
            v.c_fit = std::max(v.c_fit, lhs / std::max(rhs, 1e-300));
            if (lhs > rhs + 1e-12) {
                v.verdict = "violated";
                v.witness_param = r->param;
                v.reason = check.lhs_key + " = " + format_g(lhs) + " > " +
                           format_g(check.factor) + " * " + check.rhs_key + " = " +
                           format_g(rhs);
                return v;
            }
        }
        v.verdict = "holds";
        return v;
    }

    if (check.kind == CheckSpec::band) {
        for (const auto* r : usable) {
            const double ratio = r->values.at(check.lhs_key) / r->values.at(check.rhs_key);
            v.c_fit = std::max(v.c_fit, ratio);
            if (ratio < check.band_lo || ratio > check.band_hi) {
                v.verdict = "violated";
                v.witness_param = r->param;
                v.reason = "ratio " + format_g(ratio) + " outside [" +
                           format_g(check.band_lo) + ", " + format_g(check.band_hi) + "]";
                return v;
            }
        }
        v.verdict = "holds";
        return v;
    }

    // power bound: C_fit = max lhs / rhs^q over samples; stability compares
    // per-dyadic-bin constants against the largest-rhs bin
    struct Pt {
        double lhs, rhs, param;
    };
    std::vector<Pt> pts;
    for (const auto* r : usable) {
        const double rhs = r->values.at(check.rhs_key);
        if (!(rhs > 0.0)) continue;
        pts.push_back({r->values.at(check.lhs_key), rhs, r->param});
    }
    if (pts.size() < 2) {
        v.verdict = "inconclusive";
        v.reason = "fewer than 2 samples with positive " + check.rhs_key;
        return v;
    }
    double rhs_max = 0.0;
    for (const auto& p : pts) rhs_max = std::max(rhs_max, p.rhs);
    std::map<int, double> bin_c;
    for (const auto& p : pts) {
        const double ratio = p.lhs / std::pow(p.rhs, check.exponent);
        if (ratio > v.c_fit) {
            v.c_fit = ratio;
            v.witness_param = p.param;
        }
        const int bin = static_cast<int>(std::floor(std::log2(p.rhs / rhs_max)));
        bin_c[bin] = std::max(bin_c[bin], ratio);
    }
    const double c_ref = bin_c.rbegin()->second; // largest-rhs bin
    v.stability = 0.0;
    for (const auto& [bin, c] : bin_c) v.stability = std::max(v.stability, c / c_ref);
    if (!std::isfinite(v.c_fit)) {
        v.verdict = "violated";
        v.reason = "unbounded ratio";
    } else if (v.stability < 10.0) {
        v.verdict = "holds";
    } else {
        v.verdict = "inconclusive";
        v.reason = "per-bin constant grows " + format_g(v.stability) +
                   "x toward the small-" + check.rhs_key + " end";
    }
    return v;
}

// ---------------------------------------------------------------------------
// Sweep configuration and the family registry.

struct FitRequest {
    std::string x_key, y_key;
    LogCorrection correction = LogCorrection::none;
};

struct SweepConfig {
    std::string family;
    std::vector<double> grid;
    std::vector<std::string> measurements;
    std::vector<std::string> checks;
    std::vector<FitRequest> fits;
    std::uint64_t seed = 20260809;
    int level = 4;
    long samples = 150000;
    double alpha = 0.25;       // concentration exponent
    double eta = 0.05;         // fixed annulus width for curvature tracking
    double spike_length = 0.5;
    double profile_p = 4.0;
    double max_deficit = 0.5;  // samples above are discarded
    int harmonic_l = 2, harmonic_m = 0;
    int preiss_imax = 8;
};

struct FamilySample {
    double param = 0.0;
    BoundaryMesh mesh;
    std::optional<BoundaryMesh> reference;  // same grid, zero perturbation
    std::optional<GraphFunction> graph;
    std::vector<std::pair<Vec3, Vec3>> tree;
    double tree_length = 0.0;
    double tube_eps = 0.0;
};

/// Random star-shaped polygon: radius 1 + low-order Fourier modes, bounded
/// away from zero, up to 512 vertices.
inline BoundaryMesh random_star_polygon(std::uint64_t seed, int index)
{
    const CounterRng rng(seed);
    const std::uint64_t s = 1000 + static_cast<std::uint64_t>(index);
    const int m = 64 + static_cast<int>(rng.uniform(s, 0) * 448);
    double amp[6], phase[6];
    double total = 0.0;
    for (int k = 0; k < 6; ++k) {
        amp[k] = rng.uniform(s, 10 + k);
        phase[k] = 2.0 * kPi * rng.uniform(s, 20 + k);
        total += amp[k];
    }
    for (double& a : amp) a *= 0.42 / std::max(total, 1e-9);
    BoundaryMesh mesh;
    mesh.ambient_dim = 2;
    for (int i = 0; i < m; ++i) {
        const double th = 2.0 * kPi * i / m;
        double r = 1.0;
        for (int k = 0; k < 6; ++k) r += amp[k] * std::cos((k + 1) * th + phase[k]);
        mesh.vertices.emplace_back(r * std::cos(th), r * std::sin(th), 0.0);
        mesh.segments.push_back({i, (i + 1) % m});
    }
    return mesh;
}

inline FamilySample make_family_sample(const SweepConfig& cfg, double param)
{
    FamilySample s;
    s.param = param;
    if (cfg.family == "icosphere") {
        s.mesh = icosphere(Vec3::Zero(), 1.0, static_cast<int>(param));
    } else if (cfg.family == "harmonic") {
        const auto g = GraphFunction::harmonic(cfg.harmonic_l, cfg.harmonic_m, param);
        s.mesh = nearly_spherical(g, cfg.level);
        s.reference = nearly_spherical_reference(g, cfg.level);
        s.graph = g;
    } else if (cfg.family == "ellipsoid") {
        s.mesh = ellipsoid(1.0, 1.0, param, cfg.level);
        s.reference = icosphere(Vec3::Zero(), 1.0, cfg.level);
    } else if (cfg.family == "spiky_ball" || cfg.family == "tube_tree") {
        const double eps = param;
        s.mesh = spiky_ball(1.0, cfg.level, {{Vec3(0, 0, 1), cfg.spike_length}}, eps);
        s.reference = icosphere(Vec3::Zero(), 1.0, cfg.level);
        s.tree = {{Vec3(0, 0, 1), Vec3(0, 0, 1 + cfg.spike_length)}};
        s.tree_length = cfg.spike_length;
        s.tube_eps = eps;
    } else if (cfg.family == "sharpness_profile") {
        const auto g = GraphFunction::sharpness_profile(cfg.profile_p, param);
        s.mesh = nearly_spherical(g, cfg.level);
        s.reference = nearly_spherical_reference(g, cfg.level);
        s.graph = g;
    } else if (cfg.family == "ball_cluster") {
        // unit ball plus k satellite balls of radius r_i / k at distance 2(i+1)
        const int k = static_cast<int>(param);
        std::vector<BoundaryMesh> parts = {icosphere(Vec3::Zero(), 1.0, cfg.level)};
        for (int i = 0; i < k; ++i) {
            const double r = 0.4 / (1.0 + i) / std::max(1, k);
            parts.push_back(icosphere(Vec3(2.0 * (i + 1), 0, 0), r,
                                      std::max(2, cfg.level - 2)));
        }
        s.mesh = disjoint_union(parts);
    } else if (cfg.family == "random_star_polygon") {
        s.mesh = random_star_polygon(cfg.seed, static_cast<int>(param));
    } else if (cfg.family == "regular_polygon") {
        s.mesh = circle(Vec3::Zero(), 1.0, static_cast<int>(param));
    } else {
        throw input_error("unknown family: " + cfg.family);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Planar best-circle Hausdorff distance (exact per probe; the centre search
// stays inside the kernel so both directions reduce to the annulus halfwidth).

struct PlanarCircleFit {
    double hausdorff = 0.0;
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
};

inline PlanarCircleFit planar_circle_hausdorff(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 2) throw input_error("planar_circle_hausdorff needs a 2D curve");

    auto kernel_violation = [&](const Vec3& c) {
        double worst = 0.0;
        for (const auto& seg : mesh.segments) {
            const Vec3 &a = mesh.vertices[seg[0]], &b = mesh.vertices[seg[1]];
            const double cross =
                (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
            worst = std::max(worst, -cross / (b - a).norm());
        }
        return worst; // 0 inside the kernel, else the worst signed distance
    };
    auto annulus_halfwidth = [&](const Vec3& c) {
        double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
        for (const auto& v : mesh.vertices) rmax = std::max(rmax, (v - c).norm());
        for (const auto& seg : mesh.segments) {
            const Vec3 &a = mesh.vertices[seg[0]], &b = mesh.vertices[seg[1]];
            const Vec3 ab = b - a;
            const double t = std::clamp((c - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            rmin = std::min(rmin, (c - (a + t * ab)).norm());
        }
        return std::make_pair(0.5 * (rmax - rmin), 0.5 * (rmax + rmin));
    };

    const Vec3 centroid = volume_centroid(mesh);
    const auto res = nelder_mead(
        [&](const Eigen::VectorXd& x) {
            const Vec3 c(x(0), x(1), 0.0);
            const double pen = kernel_violation(c);
            return annulus_halfwidth(c).first + 100.0 * pen;
        },
        Eigen::Vector2d(centroid.x(), centroid.y()), 0.05, 2000);

    PlanarCircleFit fit;
    fit.center = Vec3(res.x(0), res.x(1), 0.0);
    if (kernel_violation(fit.center) > 0.0) fit.center = centroid;
    const auto [halfwidth, radius] = annulus_halfwidth(fit.center);
    fit.hausdorff = halfwidth;
    fit.radius = radius;
    return fit;
}

inline double polygon_diameter(const BoundaryMesh& mesh)
{
    double d = 0.0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        for (std::size_t j = i + 1; j < mesh.vertices.size(); ++j)
            d = std::max(d, (mesh.vertices[i] - mesh.vertices[j]).norm());
    return d;
}

// ---------------------------------------------------------------------------
// Measurement registry

namespace detail {

/// (1/P) integral of |grad u|^2 for the graph perturbation, P1 elements on the
/// unit sphere grid of the reference mesh.
inline double graph_dirichlet_energy(const BoundaryMesh& unit_ref, const GraphFunction& g)
{
    double energy = 0.0, area_total = 0.0;
    for (const auto& t : unit_ref.triangles) {
        const Vec3 a = unit_ref.vertices[t[0]].normalized(),
                   b = unit_ref.vertices[t[1]].normalized(),
                   c = unit_ref.vertices[t[2]].normalized();
        const double ua = g.eval(a), ub = g.eval(b), uc = g.eval(c);
        const double area = triangle_area(a, b, c);
        if (area <= 0) continue;
        const Vec3 n = triangle_normal(a, b, c);
        // P1 gradient: sum u_i * (n x opposite_edge) / (2A)
        const Vec3 grad =
            (ua * n.cross(c - b) + ub * n.cross(a - c) + uc * n.cross(b - a)) / (2.0 * area);
        energy += area * grad.squaredNorm();
        area_total += area;
    }
    return energy / area_total;
}

inline double bump_dictionary_discrepancy(const BoundaryMesh& mesh, const SphereFit& fit)
{
    const auto w = lumped_vertex_weights(mesh);
    const double P = std::accumulate(w.begin(), w.end(), 0.0);
    const double R = fit.radius;
    const auto quad = fibonacci_sphere(20000);
    double worst = 0.0;
    const std::vector<Vec3> dirs = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                    {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& d : dirs) {
        const Vec3 y = fit.center + R * d;
        const double width = 0.5 * R;
        auto bump = [&](const Vec3& x) {
            const double t = (x - y).norm() / width;
            return t < 1.0 ? (1.0 - t * t) * (1.0 - t * t) : 0.0;
        };
        double mesh_avg = 0.0;
        for (std::size_t v = 0; v < w.size(); ++v) mesh_avg += w[v] * bump(mesh.vertices[v]);
        mesh_avg /= P;
        double sphere_avg = 0.0;
        for (const auto& q : quad) sphere_avg += bump(fit.center + R * q);
        sphere_avg /= quad.size();
        worst = std::max(worst, std::abs(mesh_avg - sphere_avg));
    }
    return worst;
}

inline double equidense_discrepancy(const BoundaryMesh& mesh, const SphereFit& fit, double P)
{
    double worst = 0.0;
    for (const auto& dir : icosahedral_directions())
        for (double rr : {0.1, 0.3, 0.6}) {
            const Vec3 x = fit.center + fit.radius * dir;
            const double rho = rr * fit.radius;
            const double cap_fraction = rho * rho / (4.0 * fit.radius * fit.radius);
            const double mesh_fraction = boundary_area_in_ball(mesh, x, rho, 1e-3) / P;
            worst = std::max(worst, std::abs(cap_fraction - mesh_fraction));
        }
    return worst;
}

} // namespace detail

/// Computes the requested measurement keys for one family sample. Expensive
/// intermediates (fit, curvature, spectrum) are computed once and shared.
inline SampleRecord measure_sample(const FamilySample& fs, const SweepConfig& cfg,
                                   const std::set<std::string>& keys)
{
    SampleRecord rec;
    rec.param = fs.param;
    const auto summary = isoperimetric_summary(fs.mesh);
    auto put = [&](const std::string& k, double v) {
        if (keys.count(k)) rec.values[k] = v;
    };

    put("volume", summary.volume);
    put("perimeter", summary.perimeter);
    put("deficit", summary.deficit);
    put("radius", summary.radius);
    put("component_count", summary.component_count);

    if (keys.count("deficit_excess")) {
        double ref = 0.0;
        if (fs.reference) ref = isoperimetric_summary(*fs.reference).deficit;
        rec.values["deficit_excess"] = summary.deficit - ref;
    }

    const bool need_fit =
        keys.count("outside_fraction") || keys.count("equidense_discrepancy") ||
        keys.count("bump_discrepancy") || keys.count("z_l2_sq") || keys.count("z_linf") ||
        keys.count("hausdorff_model") || keys.count("hausdorff_tree") ||
        keys.count("hausdorff_restricted") || keys.count("lipschitz") ||
        keys.count("curvature_outside") || keys.count("preiss") || keys.count("l1_gap");
    std::optional<SphereFit> fit;
    if (need_fit && fs.mesh.ambient_dim == 3)
        fit = fit_sphere(fs.mesh, FitMethod::boundary_least_squares);
    if (fit) put("l1_gap", fit->l1_boundary_gap);

    std::optional<CurvatureField> curv;
    const bool need_curv = keys.count("z_l2_sq") || keys.count("z_linf") ||
                           keys.count("curvature_outside") || keys.count("h_norm_p2") ||
                           keys.count("curvature_budget_p2");
    if (need_curv && fs.mesh.ambient_dim == 3) curv = curvature_field(fs.mesh, {1.0, 2.0});
    if (curv) {
        put("h_norm_p2", curv->h_norms.at(2.0));
        put("curvature_budget_p2", curv->budgets.at(2.0));
    }

    if (keys.count("outside_fraction") && fit) {
        const double eta = std::pow(std::max(summary.deficit, 1e-300), cfg.alpha);
        rec.values["outside_fraction"] =
            annulus_outside_area(fs.mesh, fit->annulus(eta)) / summary.perimeter;
    }
    if (keys.count("curvature_outside") && fit && curv)
        rec.values["curvature_outside"] =
            outside_annulus_curvature_integral(fs.mesh, *curv, fit->annulus(cfg.eta), 1.0);
    if (keys.count("tree_length_pi")) rec.values["tree_length_pi"] = kPi * fs.tree_length;
    if (keys.count("tree_length")) rec.values["tree_length"] = fs.tree_length;

    if ((keys.count("z_l2_sq") || keys.count("z_linf")) && fit && curv) {
        const auto z = z_field(fs.mesh, *curv, *fit);
        put("z_l2_sq", z.l2 * z.l2);
        put("z_linf", z.linf);
    }

    if (keys.count("du_l2_sq") && fs.graph && fs.reference)
        rec.values["du_l2_sq"] = detail::graph_dirichlet_energy(*fs.reference, *fs.graph);

    if (keys.count("equidense_discrepancy") && fit)
        rec.values["equidense_discrepancy"] =
            detail::equidense_discrepancy(fs.mesh, *fit, summary.perimeter);
    if (keys.count("bump_discrepancy") && fit)
        rec.values["bump_discrepancy"] = detail::bump_dictionary_discrepancy(fs.mesh, *fit);

    if (keys.count("hausdorff_model") && fit) {
        const ModelSet model{fit->center, fit->radius, {}, {}};
        rec.values["hausdorff_model"] = hausdorff_to_model(fs.mesh, model, 2e-3, 6e-3).value;
    }
    if (keys.count("hausdorff_tree") && fit) {
        ModelSet model{fit->center, fit->radius, {}, fs.tree};
        rec.values["hausdorff_tree"] = hausdorff_to_model(fs.mesh, model, 2e-3, 6e-3).value;
    }
    if (keys.count("hausdorff_restricted") && fit) {
        const ModelSet model{fit->center, fit->radius, {}, {}};
        const AnnulusSpec ann =
            fit->annulus(std::pow(std::max(summary.deficit, 1e-300), 0.25));
        rec.values["hausdorff_restricted"] =
            hausdorff_to_model(fs.mesh, model, 4e-3, 8e-3, &ann).value;
    }
    if (keys.count("tube_reach")) rec.values["tube_reach"] = fs.tree_length + fs.tube_eps;

    if (keys.count("lipschitz") && fit)
        rec.values["lipschitz"] =
            lipschitz_distance_to_sphere(fs.mesh, fit->center, fit->radius).value;

    if (keys.count("asymmetry")) {
        SamplerConfig scfg;
        scfg.samples = cfg.samples;
        scfg.seed = splitmix64(cfg.seed ^ std::bit_cast<std::uint64_t>(fs.param));
        const auto a = fraenkel_asymmetry(fs.mesh, scfg);
        rec.values["asymmetry"] = a.value;
        rec.errors["asymmetry"] = a.standard_error;
    }

    if (keys.count("lambda1") || keys.count("gamma") || keys.count("gamma_excess") ||
        keys.count("rho_omega") || keys.count("multiplicity")) {
        const auto rep = chavel_deficit(fs.mesh);
        put("lambda1", rep.lambda1);
        put("gamma", rep.gamma);
        put("rho_omega", rep.rho_omega);
        put("multiplicity", rep.multiplicity_estimate);
        if (keys.count("gamma_excess")) {
            double ref = 0.0;
            if (fs.reference) ref = chavel_deficit(*fs.reference).gamma;
            rec.values["gamma_excess"] = rep.gamma - ref;
        }
    }

    if (keys.count("preiss") && fit) {
        const auto mu = boundary_measure(fs.mesh);
        const auto nu = sphere_measure(fit->center, fit->radius);
        rec.values["preiss"] =
            preiss_distance(mu, nu, cfg.preiss_imax, fit->center).value;
    }

    if (fs.mesh.ambient_dim == 2) {
        if (keys.count("dh_circle") || keys.count("iso_gap") || keys.count("diameter")) {
            const auto pc = planar_circle_hausdorff(fs.mesh);
            put("dh_circle", pc.hausdorff);
            put("diameter", polygon_diameter(fs.mesh));
            put("iso_gap", summary.perimeter * summary.perimeter -
                               4.0 * kPi * summary.volume);
        }
    }
    return rec;
}

struct SweepResult {
    SweepConfig config;
    std::vector<SampleRecord> records;
    std::vector<CheckVerdict> verdicts;
    struct Fit {
        FitRequest request;
        ExponentFit fit;
        bool ok = false;
        std::string error;
    };
    std::vector<Fit> fits;
};

inline SweepResult run_sweep(const SweepConfig& cfg)
{
    if (cfg.grid.empty()) throw input_error("sweep grid is empty");
    std::set<std::string> keys(cfg.measurements.begin(), cfg.measurements.end());
    for (const auto& id : cfg.checks) {
        const auto check = find_check(id);
        keys.insert(check.lhs_key);
        keys.insert(check.rhs_key);
        if (check.kind == CheckSpec::planar_diam) keys.insert("diameter");
    }
    for (const auto& f : cfg.fits) {
        keys.insert(f.x_key);
        keys.insert(f.y_key);
    }

    SweepResult result;
    result.config = cfg;
    std::size_t failures = 0;
    for (double param : cfg.grid) {
        SampleRecord rec;
        try {
            const auto fs = make_family_sample(cfg, param);
            rec = measure_sample(fs, cfg, keys);
            if (rec.values.count("deficit") && rec.values.at("deficit") > cfg.max_deficit) {
                rec.failed = true;
                rec.failure = "deficit above the smallness threshold " +
                              format_g(cfg.max_deficit);
            }
        } catch (const std::exception& e) {
            rec.param = param;
            rec.failed = true;
            rec.failure = e.what();
        }
        failures += rec.failed;
        result.records.push_back(std::move(rec));
    }
    if (2 * failures > cfg.grid.size())
        throw numeric_error("sweep failed on more than half of the samples");

    for (const auto& id : cfg.checks)
        result.verdicts.push_back(evaluate_check(find_check(id), result.records));

    for (const auto& freq : cfg.fits) {
        SweepResult::Fit f;
        f.request = freq;
        std::vector<double> xs, ys;
        for (const auto& r : result.records) {
            if (r.failed || !r.values.count(freq.x_key) || !r.values.count(freq.y_key))
                continue;
            xs.push_back(r.values.at(freq.x_key));
            ys.push_back(r.values.at(freq.y_key));
        }
        try {
            f.fit = fit_exponent(xs, ys, freq.correction);
            f.ok = true;
        } catch (const std::exception& e) {
            f.error = e.what();
        }
        result.fits.push_back(std::move(f));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization: one CSV row per sample (columns in config order), and a JSON
// verdict document sufficient to re-derive every verdict.

inline std::vector<std::string> sweep_columns(const SweepConfig& cfg,
                                              const std::vector<SampleRecord>& records)
{
    std::vector<std::string> cols = cfg.measurements;
    std::set<std::string> seen(cols.begin(), cols.end());
    for (const auto& r : records)
        for (const auto& [k, v] : r.values)
            if (seen.insert(k).second) cols.push_back(k);
    return cols;
}

inline std::string sweep_csv(const SweepResult& result)
{
    const auto cols = sweep_columns(result.config, result.records);
    std::string out = "param";
    for (const auto& c : cols) {
        out += "," + c;
        bool has_err = false;
        for (const auto& r : result.records) has_err |= r.errors.count(c) > 0;
        if (has_err) out += "," + c + "_se";
    }
    out += ",failed\n";
    for (const auto& r : result.records) {
        out += format_double(r.param);
        for (const auto& c : cols) {
            out += ",";
            if (r.values.count(c)) out += format_double(r.values.at(c));
            bool has_err = false;
            for (const auto& rr : result.records) has_err |= rr.errors.count(c) > 0;
            if (has_err) {
                out += ",";
                if (r.errors.count(c)) out += format_double(r.errors.at(c));
            }
        }
        out += r.failed ? ",1\n" : ",0\n";
    }
    return out;
}

inline Json sweep_to_json(const SweepResult& result)
{
    Json j;
    j["family"] = result.config.family;
    j["grid"] = result.config.grid;
    j["seed"] = result.config.seed;
    j["level"] = result.config.level;
    Json records = Json::array();
    for (const auto& r : result.records) {
        Json jr;
        jr["param"] = r.param;
        Json values;
        for (const auto& [k, v] : r.values) values[k] = v;
        jr["values"] = values;
        if (!r.errors.empty()) {
            Json errors;
            for (const auto& [k, v] : r.errors) errors[k] = v;
            jr["errors"] = errors;
        }
        jr["failed"] = r.failed;
        if (r.failed) jr["failure"] = r.failure;
        records.push_back(jr);
    }
    j["records"] = records;
    Json verdicts = Json::array();
    for (const auto& v : result.verdicts) {
        Json jv;
        jv["check"] = v.check_id;
        jv["theorem"] = v.theorem;
        jv["verdict"] = v.verdict;
        jv["c_fit"] = v.c_fit;
        jv["stability"] = v.stability;
        jv["witness_param"] = v.witness_param;
        if (!v.reason.empty()) jv["reason"] = v.reason;
        verdicts.push_back(jv);
    }
    j["verdicts"] = verdicts;
    Json fits = Json::array();
    for (const auto& f : result.fits) {
        Json jf;
        jf["x"] = f.request.x_key;
        jf["y"] = f.request.y_key;
        jf["correction"] =
            f.request.correction == LogCorrection::none ? "none" : "sqrt_neg_log";
        jf["ok"] = f.ok;
        if (f.ok) {
            jf["slope"] = f.fit.slope;
            jf["intercept"] = f.fit.intercept;
            jf["stderr"] = f.fit.stderr_slope;
        } else {
            jf["error"] = f.error;
        }
        fits.push_back(jf);
    }
    j["fits"] = fits;
    return j;
}

/// Re-derives verdicts from stored records (the records are the sufficient
/// statistics; used by the report subcommand).
inline std::vector<CheckVerdict> verdicts_from_records(const std::vector<std::string>& check_ids,
                                                       const std::vector<SampleRecord>& records)
{
    std::vector<CheckVerdict> out;
    for (const auto& id : check_ids) out.push_back(evaluate_check(find_check(id), records));
    return out;
}

} // namespace isoperim
