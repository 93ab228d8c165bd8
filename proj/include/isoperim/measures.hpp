#pragma once

#include "isoperim/distances.hpp"

#include <optional>

namespace isoperim {

// ---------------------------------------------------------------------------
// Sphere fits. The radius is always volume-pinned; only the centre is fitted.

enum class FitMethod { volume_centroid, boundary_least_squares, asymmetry_refined };

inline const char* fit_method_name(FitMethod m)
{
    switch (m) {
        case FitMethod::volume_centroid: return "volume-centroid";
        case FitMethod::boundary_least_squares: return "boundary-least-squares";
        case FitMethod::asymmetry_refined: return "asymmetry-refined";
    }
    return "?";
}

inline FitMethod fit_method_from_name(const std::string& s)
{
    if (s == "centroid" || s == "volume-centroid") return FitMethod::volume_centroid;
    if (s == "boundary" || s == "boundary-least-squares") return FitMethod::boundary_least_squares;
    if (s == "asymmetry" || s == "asymmetry-refined") return FitMethod::asymmetry_refined;
    throw input_error("unknown fit method: " + s);
}

struct SphereFit {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;          // volume-pinned
    double l1_boundary_gap = 0.0; // (1/P) sum w_i | |v_i - c| - R |
    FitMethod method = FitMethod::boundary_least_squares;

    AnnulusSpec annulus(double width_ratio) const { return {center, radius, width_ratio}; }
};

namespace detail {

inline std::vector<double> lumped_vertex_weights(const BoundaryMesh& mesh)
{
    std::vector<double> w(mesh.vertices.size(), 0.0);
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles) {
            const double a3 = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                            mesh.vertices[t[2]]) / 3.0;
            for (int k = 0; k < 3; ++k) w[t[k]] += a3;
        }
    } else {
        for (const auto& s : mesh.segments) {
            const double l2 = 0.5 * (mesh.vertices[s[1]] - mesh.vertices[s[0]]).norm();
            w[s[0]] += l2;
            w[s[1]] += l2;
        }
    }
    return w;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Symmetric difference against a ball. 2D is exact (polygon/disk clipping with
// analytic arcs); 3D is stratified Monte Carlo over the union bounding box.

struct SamplerConfig {
    long samples = 200000;
    std::uint64_t seed = 20260809;
    double target_se_rel = 0.0; // relative to |Omega|; 0 disables the check
};

struct EstimateWithError {
    double value = 0.0;
    double standard_error = 0.0; // 0 on exact paths
};

namespace detail {

/// Exact area of (CCW polygon) ∩ (disk centred at c with radius R).
inline double polygon_disk_intersection_area(const BoundaryMesh& mesh, const Vec3& c, double R)
{
    auto sector = [&](const Vec2& p, const Vec2& q) {
        const double ang = std::atan2(p.x() * q.y() - p.y() * q.x(), p.dot(q));
        return 0.5 * R * R * ang;
    };
    auto triangle = [](const Vec2& p, const Vec2& q) {
        return 0.5 * (p.x() * q.y() - p.y() * q.x());
    };

    double area = 0.0;
    for (const auto& s : mesh.segments) {
        const Vec2 a(mesh.vertices[s[0]].x() - c.x(), mesh.vertices[s[0]].y() - c.y());
        const Vec2 b(mesh.vertices[s[1]].x() - c.x(), mesh.vertices[s[1]].y() - c.y());
        const bool a_in = a.squaredNorm() <= R * R, b_in = b.squaredNorm() <= R * R;
        if (a_in && b_in) {
            area += triangle(a, b);
            continue;
        }
        const Vec2 d = b - a;
        const double A = d.squaredNorm();
        const double B = 2.0 * a.dot(d);
        const double C = a.squaredNorm() - R * R;
        const double disc = B * B - 4 * A * C;
        if (disc <= 0.0 || A == 0.0) {
            area += sector(a, b);
            continue;
        }
        const double sq = std::sqrt(disc);
        const double t1 = (-B - sq) / (2 * A), t2 = (-B + sq) / (2 * A);
        if (a_in && !b_in) {
            const Vec2 p = a + std::clamp(t2, 0.0, 1.0) * d;
            area += triangle(a, p) + sector(p, b);
        } else if (!a_in && b_in) {
            const Vec2 p = a + std::clamp(t1, 0.0, 1.0) * d;
            area += sector(a, p) + triangle(p, b);
        } else if (t1 > 0.0 && t2 < 1.0 && t1 < t2) {
            const Vec2 p = a + t1 * d, q = a + t2 * d;
            area += sector(a, p) + triangle(p, q) + sector(q, b);
        } else {
            area += sector(a, b);
        }
    }
    return area;
}

} // namespace detail

/// |Omega Δ B_center(R)|; exact in 2D, stratified MC with a standard error in
/// 3D. 3D point classification: ray parity / winding number for the mesh and a
/// norm test for the ball.
inline EstimateWithError symmetric_difference_volume(const BoundaryMesh& mesh,
                                                     const TriangleBvh* bvh, const Vec3& center,
                                                     double R, const SamplerConfig& cfg)
{
    require_valid(mesh);
    if (mesh.ambient_dim == 2) {
        const double poly_area = enclosed_volume_unchecked(mesh);
        const double inter = detail::polygon_disk_intersection_area(mesh, center, R);
        return {poly_area + kPi * R * R - 2.0 * inter, 0.0};
    }

    if (bvh == nullptr) throw input_error("3D symmetric difference needs a BVH");
    // union bounding box
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    lo = lo.cwiseMin(center - Vec3::Constant(R));
    hi = hi.cwiseMax(center + Vec3::Constant(R));
    const Vec3 ext = hi - lo;
    const double box_vol = ext.x() * ext.y() * ext.z();

    const int k = std::max(2, static_cast<int>(std::floor(std::cbrt(cfg.samples / 8.0))));
    const long per = std::max<long>(2, cfg.samples / (static_cast<long>(k) * k * k));
    const CounterRng rng(cfg.seed);

    double total = 0.0, variance = 0.0;
    const double cell_vol = box_vol / (static_cast<double>(k) * k * k);
    for (int sx = 0; sx < k; ++sx)
        for (int sy = 0; sy < k; ++sy)
            for (int sz = 0; sz < k; ++sz) {
                const std::uint64_t stream =
                    (static_cast<std::uint64_t>(sx) * k + sy) * k + sz;
                long hits = 0;
                for (long i = 0; i < per; ++i) {
                    const Vec3 p(
                        lo.x() + ext.x() * (sx + rng.uniform(stream, 3 * i)) / k,
                        lo.y() + ext.y() * (sy + rng.uniform(stream, 3 * i + 1)) / k,
                        lo.z() + ext.z() * (sz + rng.uniform(stream, 3 * i + 2)) / k);
                    const bool in_mesh = bvh->contains(p);
                    const bool in_ball = (p - center).norm() <= R;
                    hits += in_mesh != in_ball;
                }
                const double p_hat = static_cast<double>(hits) / per;
                total += cell_vol * p_hat;
                variance += cell_vol * cell_vol * p_hat * (1.0 - p_hat) / per;
            }

    EstimateWithError out{total, std::sqrt(variance)};
    if (cfg.target_se_rel > 0.0) {
        const double vol = enclosed_volume_unchecked(mesh);
        if (out.standard_error > cfg.target_se_rel * vol)
            throw numeric_error("symmetric-difference sampler above requested tolerance: SE=" +
                                format_g(out.standard_error) + " estimate=" +
                                format_g(out.value));
    }
    return out;
}

inline SphereFit fit_sphere(const BoundaryMesh& mesh, FitMethod method,
                            const SamplerConfig& cfg = {})
{
    require_valid(mesh);
    const auto summary = isoperimetric_summary(mesh);
    const double R = summary.radius;
    const auto w = detail::lumped_vertex_weights(mesh);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    SphereFit fit;
    fit.method = method;
    fit.radius = R;
    fit.center = volume_centroid(mesh);

    if (method != FitMethod::volume_centroid) {
        // area-weighted Gauss-Newton / fixed point for sum w (|v-c| - R)^2
        Vec3 c = fit.center;
        bool converged = false;
        for (int iter = 0; iter < 10000; ++iter) {
            Vec3 acc = Vec3::Zero();
            for (std::size_t i = 0; i < w.size(); ++i) {
                const Vec3 d = mesh.vertices[i] - c;
                const double len = d.norm();
                if (len < 1e-30) continue;
                acc += w[i] * (mesh.vertices[i] - R * d / len);
            }
            const Vec3 next = acc / wsum;
            const double step = (next - c).norm();
            c = next;
            if (step <= 1e-10 * R) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw numeric_error("boundary least-squares fit did not converge; best centre (" +
                                format_g(c.x()) + ", " + format_g(c.y()) + ", " +
                                format_g(c.z()) + ")");
        fit.center = c;
    }

    if (method == FitMethod::asymmetry_refined) {
        TriangleBvh* bvh_ptr = nullptr;
        std::optional<TriangleBvh> bvh;
        if (mesh.ambient_dim == 3) {
            bvh.emplace(mesh);
            bvh_ptr = &*bvh;
        }
        const int dims = mesh.ambient_dim;
        Eigen::VectorXd x0(dims);
        for (int k = 0; k < dims; ++k) x0(k) = fit.center[k];
        const auto res = nelder_mead(
            [&](const Eigen::VectorXd& x) {
                Vec3 c = Vec3::Zero();
                for (int k = 0; k < dims; ++k) c[k] = x(k);
                return symmetric_difference_volume(mesh, bvh_ptr, c, R, cfg).value;
            },
            x0, 0.05 * R, 600);
        for (int k = 0; k < dims; ++k) fit.center[k] = res.x(k);
    }

    for (std::size_t i = 0; i < w.size(); ++i)
        fit.l1_boundary_gap += w[i] * std::abs((mesh.vertices[i] - fit.center).norm() - R);
    fit.l1_boundary_gap /= wsum;
    return fit;
}

// ---------------------------------------------------------------------------
// Fraenkel asymmetry: inf over centres of |Omega Δ B_x(R)| / |Omega|.

struct AsymmetryResult {
    double value = 0.0;
    double standard_error = 0.0;
    Vec3 center = Vec3::Zero();
};

namespace detail {

/// Volume centroid per boundary component (cone decomposition about the
/// component's own mean vertex keeps the signed pieces well conditioned).
inline std::vector<Vec3> component_volume_centroids(const BoundaryMesh& mesh)
{
    const auto labels = element_components(mesh);
    const int n = labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
    std::vector<Vec3> moment(n, Vec3::Zero());
    std::vector<double> vol(n, 0.0);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const int comp = labels[e];
        if (mesh.ambient_dim == 3) {
            const auto& t = mesh.triangles[e];
            const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
                       &c = mesh.vertices[t[2]];
            const double v = a.dot(b.cross(c)) / 6.0;
            moment[comp] += v * (a + b + c) / 4.0;
            vol[comp] += v;
        } else {
            const auto& s = mesh.segments[e];
            const Vec3 &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]];
            const double v = 0.5 * (a.x() * b.y() - b.x() * a.y());
            moment[comp] += v * (a + b) / 3.0;
            vol[comp] += v;
        }
    }
    std::vector<Vec3> out;
    for (int kk = 0; kk < n; ++kk)
        if (std::abs(vol[kk]) > 0) out.push_back(moment[kk] / vol[kk]);
    return out;
}

} // namespace detail

inline AsymmetryResult fraenkel_asymmetry(const BoundaryMesh& mesh, const SamplerConfig& cfg = {})
{
    require_valid(mesh);
    const auto summary = isoperimetric_summary(mesh);
    const double R = summary.radius;
    const double vol = summary.volume;
    const int dims = mesh.ambient_dim;

    std::optional<TriangleBvh> bvh;
    TriangleBvh* bvh_ptr = nullptr;
    if (dims == 3) {
        bvh.emplace(mesh);
        bvh_ptr = &*bvh;
    }

    // multi-start: volume centroid, boundary fit, each component's centroid
    std::vector<Vec3> starts = {volume_centroid(mesh)};
    try {
        starts.push_back(fit_sphere(mesh, FitMethod::boundary_least_squares).center);
    } catch (const Error&) {
    }
    for (const auto& c : detail::component_volume_centroids(mesh)) starts.push_back(c);

    SamplerConfig search_cfg = cfg;
    search_cfg.samples = std::max<long>(cfg.samples / 4, 40000);
    search_cfg.target_se_rel = 0.0;

    Vec3 best_center = starts.front();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        Eigen::VectorXd x0(dims);
        for (int k = 0; k < dims; ++k) x0(k) = s[k];
        const auto res = nelder_mead(
            [&](const Eigen::VectorXd& x) {
                Vec3 c = Vec3::Zero();
                for (int k = 0; k < dims; ++k) c[k] = x(k);
                return symmetric_difference_volume(mesh, bvh_ptr, c, R, search_cfg).value;
            },
            x0, 0.1 * R, dims == 2 ? 500 : 260);
        Vec3 c = Vec3::Zero();
        for (int k = 0; k < dims; ++k) c[k] = res.x(k);
        // deterministic tie-breaking: smallest value, then lexicographic centre
        const bool better =
            res.value < best - 1e-12 ||
            (res.value < best + 1e-12 &&
             std::lexicographical_compare(c.data(), c.data() + 3, best_center.data(),
                                          best_center.data() + 3));
        if (better) {
            best = res.value;
            best_center = c;
        }
    }

    const auto final_est = symmetric_difference_volume(mesh, bvh_ptr, best_center, R, cfg);
    AsymmetryResult out;
    out.value = final_est.value / vol;
    out.standard_error = final_est.standard_error / vol;
    out.center = best_center;
    return out;
}

// ---------------------------------------------------------------------------
// Annulus concentration: boundary measure outside A_eta, resolved by recursive
// subdivision of straddling elements (barycentre classification at the floor).

namespace detail {

template <typename Weight>
double outside_annulus_recursive(const Vec3& a, const Vec3& b, const Vec3& c,
                                 const AnnulusSpec& ann, double floor_diam, const Weight& weight,
                                 int depth = 0)
{
    const double diam = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    const double width = ann.radius * ann.width_ratio;
    auto gap = [&](const Vec3& p) { return std::abs((p - ann.center).norm() - ann.radius); };
    const double ga = gap(a), gb = gap(b), gc = gap(c);
    // | |x-c| - R | is 1-Lipschitz: vertex values +- diam bound the range
    const double gmin = std::min({ga, gb, gc}) - diam;
    const double gmax = std::max({ga, gb, gc}) + diam;
    if (gmin > width) return weight(a, b, c);   // fully outside
    if (gmax <= width) return 0.0;              // fully inside
    if (diam < floor_diam || depth > 30)
        return gap((a + b + c) / 3.0) > width ? weight(a, b, c) : 0.0;
    const Vec3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    return outside_annulus_recursive(a, ab, ca, ann, floor_diam, weight, depth + 1) +
           outside_annulus_recursive(b, bc, ab, ann, floor_diam, weight, depth + 1) +
           outside_annulus_recursive(c, ca, bc, ann, floor_diam, weight, depth + 1) +
           outside_annulus_recursive(ab, bc, ca, ann, floor_diam, weight, depth + 1);
}

} // namespace detail

/// Boundary area outside the annulus (3D) or boundary length outside (2D).
inline double annulus_outside_area(const BoundaryMesh& mesh, const AnnulusSpec& ann)
{
    require_valid(mesh);
    const double floor_diam = ann.radius * 1e-4;
    double total = 0.0;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles)
            total += detail::outside_annulus_recursive(
                mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], ann, floor_diam,
                [](const Vec3& a, const Vec3& b, const Vec3& c) {
                    return triangle_area(a, b, c);
                });
    } else {
        auto gap = [&](const Vec3& p) { return std::abs((p - ann.center).norm() - ann.radius); };
        const double width = ann.radius * ann.width_ratio;
        std::function<double(const Vec3&, const Vec3&, int)> seg =
            [&](const Vec3& a, const Vec3& b, int depth) -> double {
            const double len = (b - a).norm();
            const double ga = gap(a), gb = gap(b);
            if (std::min(ga, gb) - len > width) return len;
            if (std::max(ga, gb) + len <= width) return 0.0;
            if (len < floor_diam || depth > 40)
                return gap(0.5 * (a + b)) > width ? len : 0.0;
            const Vec3 m = 0.5 * (a + b);
            return seg(a, m, depth + 1) + seg(m, b, depth + 1);
        };
        for (const auto& s : mesh.segments)
            total += seg(mesh.vertices[s[0]], mesh.vertices[s[1]], 0);
    }
    return total;
}

/// Boundary area inside the closed ball B_x(rho), with the same straddle
/// subdivision rule as the annulus measures.
inline double boundary_area_in_ball(const BoundaryMesh& mesh, const Vec3& x, double rho,
                                    double floor_rel = 1e-4)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3) throw input_error("boundary_area_in_ball needs a 3D mesh");
    const double floor_diam = rho * floor_rel;
    double total = 0.0;
    std::function<double(const Vec3&, const Vec3&, const Vec3&, int)> rec =
        [&](const Vec3& a, const Vec3& b, const Vec3& c, int depth) -> double {
        const double diam = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
        const double da = (a - x).norm(), db = (b - x).norm(), dc = (c - x).norm();
        if (std::max({da, db, dc}) + diam <= rho) return triangle_area(a, b, c);
        if (std::min({da, db, dc}) - diam > rho) return 0.0;
        if (diam < floor_diam || depth > 30)
            return ((a + b + c) / 3.0 - x).norm() <= rho ? triangle_area(a, b, c) : 0.0;
        const Vec3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
        return rec(a, ab, ca, depth + 1) + rec(b, bc, ab, depth + 1) +
               rec(c, ca, bc, depth + 1) + rec(ab, bc, ca, depth + 1);
    };
    for (const auto& t : mesh.triangles)
        total += rec(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], 0);
    return total;
}

struct ConcentrationRow {
    double alpha = 0.0;
    double eta = 0.0;
    double outside_fraction = 0.0;
};

struct ConcentrationTable {
    std::vector<ConcentrationRow> rows;
    double deficit = 0.0;
};

/// For each alpha: eta = deficit^alpha; outside_fraction = H^n(boundary
/// outside A_eta) / P.
inline ConcentrationTable annulus_concentration(const BoundaryMesh& mesh, const SphereFit& fit,
                                                const std::vector<double>& alphas)
{
    const auto summary = isoperimetric_summary(mesh);
    ConcentrationTable table;
    table.deficit = summary.deficit;
    const double delta = std::max(summary.deficit, 1e-300);
    for (double alpha : alphas) {
        ConcentrationRow row;
        row.alpha = alpha;
        row.eta = std::pow(delta, alpha);
        row.outside_fraction =
            annulus_outside_area(mesh, fit.annulus(row.eta)) / summary.perimeter;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace isoperim
