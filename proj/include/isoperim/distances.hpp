#pragma once

#include "isoperim/bvh.hpp"
#include "isoperim/generators.hpp"
#include "isoperim/transport.hpp"

#include <map>
#include <unordered_map>

namespace isoperim {

// ---------------------------------------------------------------------------
// Sampled sets with a certified sampling radius: every point of the underlying
// continuous set lies within sampling_radius of some sample.

struct SampledSet {
    std::vector<Vec3> points;
    double sampling_radius = 0.0;
};

namespace detail {

template <typename Fn>
void for_each_subdivided(const Vec3& a, const Vec3& b, const Vec3& c, double target_h, Fn&& fn,
                         int depth = 0)
{
    const double d = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    if (d <= target_h || depth > 24) {
        fn(a, b, c);
        return;
    }
    const Vec3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    for_each_subdivided(a, ab, ca, target_h, fn, depth + 1);
    for_each_subdivided(b, bc, ab, target_h, fn, depth + 1);
    for_each_subdivided(c, ca, bc, target_h, fn, depth + 1);
    for_each_subdivided(ab, bc, ca, target_h, fn, depth + 1);
}

} // namespace detail

/// Samples the boundary by midpoint subdivision until element diameter falls
/// below target_h; the emitted corner points then cover the surface within
/// target_h / sqrt(3).
inline SampledSet sample_boundary(const BoundaryMesh& mesh, double target_h)
{
    SampledSet out;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles)
            detail::for_each_subdivided(
                mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], target_h,
                [&](const Vec3& a, const Vec3& b, const Vec3& c) {
                    out.points.push_back(a);
                    out.points.push_back(b);
                    out.points.push_back(c);
                });
        out.sampling_radius = target_h / std::sqrt(3.0);
    } else {
        for (const auto& s : mesh.segments) {
            const Vec3 a = mesh.vertices[s[0]], b = mesh.vertices[s[1]];
            const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / target_h)));
            for (int k = 0; k < n; ++k) out.points.push_back(a + (b - a) * (double(k) / n));
        }
        out.sampling_radius = 0.5 * target_h;
    }
    return out;
}

/// Sphere sample from icosphere vertices; the covering radius of a level-k
/// icosphere vertex set is below 0.65 * edge_arc * R.
inline SampledSet sample_sphere(const Vec3& center, double radius, double target_h)
{
    int level = 0;
    while (level < 8 && 0.65 * radius * 1.1071487177940904 / (1 << level) > target_h) ++level;
    SampledSet out;
    out.points = icosphere(center, radius, level).vertices;
    out.sampling_radius = 0.65 * radius * 1.1071487177940904 / (1 << level);
    return out;
}

inline SampledSet sample_segments(const std::vector<std::pair<Vec3, Vec3>>& segments,
                                  double target_h)
{
    SampledSet out;
    for (const auto& [a, b] : segments) {
        const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / target_h)));
        for (int k = 0; k <= n; ++k) out.points.push_back(a + (b - a) * (double(k) / n));
    }
    out.sampling_radius = 0.5 * target_h;
    return out;
}

// ---------------------------------------------------------------------------
// Point-set Hausdorff distance with a uniform grid.

class PointGrid {
public:
    explicit PointGrid(const std::vector<Vec3>& pts) : pts_(&pts)
    {
        lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo_;
        for (const auto& p : pts) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const double diag = (hi - lo_).norm() + 1e-300;
        const double target_cells = std::cbrt(static_cast<double>(pts.size())) + 1.0;
        cell_ = std::max(diag / (4.0 * target_cells), diag * 1e-9);
        for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i])].push_back(i);
    }

    double nearest_distance(const Vec3& q) const
    {
        const auto [qi, qj, qk] = coords(q);
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0;; ++ring) {
            bool any = false;
            for (int i = qi - ring; i <= qi + ring; ++i)
                for (int j = qj - ring; j <= qj + ring; ++j)
                    for (int k = qk - ring; k <= qk + ring; ++k) {
                        if (std::max({std::abs(i - qi), std::abs(j - qj), std::abs(k - qk)}) !=
                            ring)
                            continue;
                        const auto it = cells_.find(pack(i, j, k));
                        if (it == cells_.end()) continue;
                        any = true;
                        for (const auto idx : it->second)
                            best = std::min(best, ((*pts_)[idx] - q).norm());
                    }
            // certified once the unexplored shell cannot contain closer points
            if (best < (ring)*cell_ || (ring > 2 && !any && best < 1e280 &&
                                        best < (ring - 1) * cell_))
                return best;
            if (best < std::numeric_limits<double>::infinity() && ring * cell_ > best) return best;
            if (ring > 4096) return best;
        }
    }

private:
    static std::int64_t pack(int i, int j, int k)
    {
        return (static_cast<std::int64_t>(i & 0x1fffff) << 42) |
               (static_cast<std::int64_t>(j & 0x1fffff) << 21) |
               static_cast<std::int64_t>(k & 0x1fffff);
    }
    std::tuple<int, int, int> coords(const Vec3& p) const
    {
        return {static_cast<int>(std::floor((p.x() - lo_.x()) / cell_)),
                static_cast<int>(std::floor((p.y() - lo_.y()) / cell_)),
                static_cast<int>(std::floor((p.z() - lo_.z()) / cell_))};
    }
    std::int64_t key(const Vec3& p) const
    {
        const auto [i, j, k] = coords(p);
        return pack(i, j, k);
    }

    const std::vector<Vec3>* pts_;
    Vec3 lo_;
    double cell_ = 1.0;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

struct HausdorffResult {
    double value = 0.0;
    double error_bound = 0.0;
};

/// Exact point-set Hausdorff distance; error_bound adds the certified sampling
/// radii of the two sets against the underlying continuous sets.
inline HausdorffResult hausdorff_distance(const SampledSet& a, const SampledSet& b)
{
    if (a.points.empty() || b.points.empty())
        throw input_error("hausdorff_distance of an empty set");
    const PointGrid ga(a.points), gb(b.points);
    double sup = 0.0;
    for (const auto& p : a.points) sup = std::max(sup, gb.nearest_distance(p));
    for (const auto& q : b.points) sup = std::max(sup, ga.nearest_distance(q));
    return {sup, a.sampling_radius + b.sampling_radius};
}

// ---------------------------------------------------------------------------
// Distance from the boundary to a model set (sphere, optionally with extra
// points / a tree polyline). The boundary-to-model direction streams adaptively
// subdivided surface samples; the model-to-boundary direction uses exact
// point-to-surface queries.

struct ModelSet {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    std::vector<Vec3> extra_points;
    std::vector<std::pair<Vec3, Vec3>> extra_segments;

    double distance(const Vec3& p) const
    {
        double d = std::abs((p - center).norm() - radius);
        for (const auto& q : extra_points) d = std::min(d, (p - q).norm());
        for (const auto& [a, b] : extra_segments) {
            const Vec3 ab = b - a;
            const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            d = std::min(d, (p - (a + t * ab)).norm());
        }
        return d;
    }
};

struct ModelHausdorff {
    double value = 0.0;
    double error_bound = 0.0;
    double boundary_to_model = 0.0;
    double model_to_boundary = 0.0;
};

/// Optional restriction of the boundary side to an annulus.
inline ModelHausdorff hausdorff_to_model(const BoundaryMesh& mesh, const ModelSet& model,
                                         double mesh_h_rel = 1e-3, double sphere_h_rel = 3e-3,
                                         const AnnulusSpec* restrict_annulus = nullptr)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3) throw input_error("hausdorff_to_model needs a 3D mesh");
    const double R = model.radius;
    const double mesh_h = mesh_h_rel * R;

    // boundary -> model: adaptive subdivision; a triangle whose upper distance
    // bound cannot beat the current max is not refined
    double b2m = 0.0;
    std::function<void(const Vec3&, const Vec3&, const Vec3&, int)> visit =
        [&](const Vec3& a, const Vec3& b, const Vec3& c, int depth) {
            const Vec3 bary = (a + b + c) / 3.0;
            const double diam = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
            if (restrict_annulus) {
                // skip pieces fully outside the annulus (1-Lipschitz radial test)
                const double g = std::abs((bary - restrict_annulus->center).norm() -
                                          restrict_annulus->radius);
                if (g - diam > restrict_annulus->radius * restrict_annulus->width_ratio) return;
            }
            const double d = model.distance(bary);
            if (diam <= mesh_h || depth > 24) {
                if (!restrict_annulus || restrict_annulus->contains(bary))
                    b2m = std::max(b2m, d);
                return;
            }
            if (d + diam <= b2m) return; // cannot improve the running max
            const Vec3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
            visit(a, ab, ca, depth + 1);
            visit(b, bc, ab, depth + 1);
            visit(c, ca, bc, depth + 1);
            visit(ab, bc, ca, depth + 1);
        };
    for (const auto& t : mesh.triangles)
        visit(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], 0);

    // model -> boundary (exact surface distance per model sample)
    const TriangleBvh bvh(mesh);
    auto surface_distance = [&](const Vec3& q) {
        if (!restrict_annulus) return bvh.distance(q);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : mesh.triangles)
            detail::for_each_subdivided(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                        mesh.vertices[t[2]], mesh_h,
                                        [&](const Vec3& a, const Vec3& b, const Vec3& c) {
                                            const Vec3 bary = (a + b + c) / 3.0;
                                            if (restrict_annulus->contains(bary))
                                                best = std::min(best, (bary - q).norm());
                                        });
        return best;
    };

    double m2b = 0.0;
    const SampledSet sphere = sample_sphere(model.center, R, sphere_h_rel * R);
    if (restrict_annulus) {
        // the restricted boundary piece lives in a grid instead of the BVH
        std::vector<Vec3> restricted;
        for (const auto& t : mesh.triangles)
            detail::for_each_subdivided(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                        mesh.vertices[t[2]], 4.0 * mesh_h,
                                        [&](const Vec3& a, const Vec3& b, const Vec3& c) {
                                            const Vec3 bary = (a + b + c) / 3.0;
                                            if (restrict_annulus->contains(bary))
                                                restricted.push_back(bary);
                                        });
        if (restricted.empty()) throw numeric_error("annulus restriction is empty");
        const PointGrid grid(restricted);
        for (const auto& q : sphere.points) m2b = std::max(m2b, grid.nearest_distance(q));
    } else {
        for (const auto& q : sphere.points) m2b = std::max(m2b, bvh.distance(q));
        for (const auto& q : model.extra_points) m2b = std::max(m2b, bvh.distance(q));
        if (!model.extra_segments.empty()) {
            const SampledSet tree = sample_segments(model.extra_segments, mesh_h);
            for (const auto& q : tree.points) m2b = std::max(m2b, bvh.distance(q));
        }
    }

    ModelHausdorff out;
    out.boundary_to_model = b2m;
    out.model_to_boundary = m2b;
    out.value = std::max(b2m, m2b);
    out.error_bound = mesh_h / std::sqrt(3.0) + sphere.sampling_radius;
    return out;
}

// ---------------------------------------------------------------------------
// Lipschitz distance through the radial projection F(x) = R (x-c)/|x-c|.

struct LipschitzResult {
    double value = 0.0;
    double dilation = 1.0;         // sup |dF|
    double inverse_dilation = 1.0; // sup |dF^{-1}| = 1 / inf singular value
    double error_order = 0.0;      // O(h) tag: largest element diameter / R
};

inline LipschitzResult lipschitz_distance_to_sphere(const BoundaryMesh& mesh, const Vec3& center,
                                                    double radius)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3) throw input_error("lipschitz distance needs a 3D mesh");
    double sigma_max = 0.0, sigma_min = std::numeric_limits<double>::infinity();
    double h_max = 0.0;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
        const auto& t = mesh.triangles[f];
        const Vec3 a = mesh.vertices[t[0]] - center, b = mesh.vertices[t[1]] - center,
                   c = mesh.vertices[t[2]] - center;
        const Vec3 x = (a + b + c) / 3.0;
        const double r = x.norm();
        if (!(r > 1e-9 * radius))
            throw input_error("element " + std::to_string(f) + " touches the model center");
        const Vec3 n = triangle_normal(a, b, c);
        const Vec3 xhat = x / r;
        if (n.dot(xhat) <= 1e-6)
            throw input_error("mesh is not star-shaped about the center: element " +
                              std::to_string(f) + " fails radial transversality");
        // orthonormal frame in the element plane
        const Vec3 t1 = (b - a).normalized();
        const Vec3 t2 = n.cross(t1);
        auto dF = [&](const Vec3& u) -> Vec3 { return (radius / r) * (u - xhat.dot(u) * xhat); };
        Eigen::Matrix2d g;
        const Vec3 j1 = dF(t1), j2 = dF(t2);
        g << j1.dot(j1), j1.dot(j2), j1.dot(j2), j2.dot(j2);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(g);
        sigma_min = std::min(sigma_min, std::sqrt(std::max(0.0, eig.eigenvalues()(0))));
        sigma_max = std::max(sigma_max, std::sqrt(std::max(0.0, eig.eigenvalues()(1))));
        h_max = std::max(h_max, std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()}));
    }
    LipschitzResult out;
    out.dilation = sigma_max;
    out.inverse_dilation = 1.0 / sigma_min;
    out.value = std::abs(std::log(sigma_max)) + std::abs(std::log(sigma_min));
    out.error_order = h_max / radius;
    return out;
}

// ---------------------------------------------------------------------------
// Discrete measures and the Preiss distance
//   F_i = sup { |mu(f) - nu(f)| : spt f in B_0(i), f >= 0, Lip f <= 1 }
//   d_P = sum_i 2^-i min(1, F_i).
// On atoms the admissible f are exactly { 0 <= f_k <= dist(x_k, S_0(i)),
// |f_j - f_k| <= |x_j - x_k| }; the LP dual is a partial transport with
// disposal at cost dist(., S_0(i)), solved by network simplex.

struct DiscreteMeasure {
    std::vector<Vec3> atoms;
    std::vector<double> masses;

    double total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
};

/// Vertex-area boundary measure, normalized to total mass 1. Meshes with more
/// vertices than max_atoms are clustered onto Fibonacci direction bins about
/// the volume centroid (area-weighted bin centroids keep the measure close in
/// the bounded-Lipschitz sense).
inline DiscreteMeasure boundary_measure(const BoundaryMesh& mesh, int max_atoms = 2000)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3) throw input_error("boundary_measure needs a 3D mesh");
    std::vector<double> vertex_area(mesh.vertices.size(), 0.0);
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const double a3 = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                        mesh.vertices[t[2]]) / 3.0;
        for (int k = 0; k < 3; ++k) vertex_area[t[k]] += a3;
        total += 3.0 * a3;
    }

    DiscreteMeasure mu;
    if (static_cast<int>(mesh.vertices.size()) <= max_atoms) {
        mu.atoms = mesh.vertices;
        mu.masses = vertex_area;
        for (auto& m : mu.masses) m /= total;
        return mu;
    }

    const int bins = std::min(max_atoms, 1280);
    const auto dirs = fibonacci_sphere(bins);
    const Vec3 c = volume_centroid(mesh);
    std::vector<Vec3> acc(bins, Vec3::Zero());
    std::vector<double> mass(bins, 0.0);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const Vec3 d = (mesh.vertices[v] - c).normalized();
        int best = 0;
        double bd = -2.0;
        for (int k = 0; k < bins; ++k) {
            const double dot = d.dot(dirs[k]);
            if (dot > bd) {
                bd = dot;
                best = k;
            }
        }
        acc[best] += vertex_area[v] * mesh.vertices[v];
        mass[best] += vertex_area[v];
    }
    for (int k = 0; k < bins; ++k) {
        if (mass[k] <= 0.0) continue;
        mu.atoms.push_back(acc[k] / mass[k]);
        mu.masses.push_back(mass[k] / total);
    }
    return mu;
}

/// Uniform sphere measure, sampled densely and clustered with the same
/// Fibonacci binning as boundary_measure (so refinement comparisons share the
/// bin structure).
inline DiscreteMeasure sphere_measure(const Vec3& center, double radius, int bins = 1280,
                                      int dense_samples = 20000)
{
    const auto dirs = fibonacci_sphere(bins);
    const auto dense = fibonacci_sphere(dense_samples);
    std::vector<Vec3> acc(bins, Vec3::Zero());
    std::vector<double> mass(bins, 0.0);
    for (const auto& d : dense) {
        int best = 0;
        double bd = -2.0;
        for (int k = 0; k < bins; ++k) {
            const double dot = d.dot(dirs[k]);
            if (dot > bd) {
                bd = dot;
                best = k;
            }
        }
        acc[best] += center + radius * d;
        mass[best] += 1.0;
    }
    DiscreteMeasure mu;
    for (int k = 0; k < bins; ++k) {
        if (mass[k] <= 0.0) continue;
        mu.atoms.push_back(acc[k] / mass[k]);
        mu.masses.push_back(mass[k] / dense_samples);
    }
    return mu;
}

struct PreissResult {
    double value = 0.0;       // truncated series
    double upper_bound = 0.0; // value + tail bound 2^-i_max
    std::vector<double> F;    // F_1 .. F_{i_max}
};

namespace detail {

/// One bounded-Lipschitz value for fixed ball index i (cap = dist to S_0(i)).
/// weights w = mu - nu on the merged support, recentred already.
inline double bounded_lipschitz_lp(const std::vector<Vec3>& pts, const std::vector<double>& w,
                                   double ball_radius)
{
    std::vector<int> sup_idx, dem_idx;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (pts[k].norm() >= ball_radius) continue; // f = 0 outside the ball
        if (w[k] > 0)
            sup_idx.push_back(static_cast<int>(k));
        else if (w[k] < 0)
            dem_idx.push_back(static_cast<int>(k));
    }
    if (sup_idx.empty()) return 0.0;

    const int m = static_cast<int>(sup_idx.size()), n = static_cast<int>(dem_idx.size());
    std::vector<double> supply(m + 1, 0.0), demand(n + 1, 0.0);
    double totS = 0.0, totD = 0.0;
    for (int i = 0; i < m; ++i) {
        supply[i] = w[sup_idx[i]];
        totS += supply[i];
    }
    for (int j = 0; j < n; ++j) {
        demand[j] = -w[dem_idx[j]];
        totD += demand[j];
    }
    supply[m] = totD; // dummy supply feeds unmet demand for free
    demand[n] = totS; // trash absorbs disposed supply at cap cost

    std::vector<double> cost(static_cast<std::size_t>(m + 1) * (n + 1), 0.0);
    for (int i = 0; i < m; ++i) {
        const Vec3& p = pts[sup_idx[i]];
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i) * (n + 1) + j] = (p - pts[dem_idx[j]]).norm();
        cost[static_cast<std::size_t>(i) * (n + 1) + n] = ball_radius - p.norm();
    }
    return transport_min_cost(supply, demand, cost);
}

/// Plain Kantorovich W1 between the positive and negative parts of w.
inline double wasserstein1(const std::vector<Vec3>& pts, const std::vector<double>& w)
{
    std::vector<int> sup_idx, dem_idx;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (w[k] > 0)
            sup_idx.push_back(static_cast<int>(k));
        else if (w[k] < 0)
            dem_idx.push_back(static_cast<int>(k));
    }
    if (sup_idx.empty() || dem_idx.empty()) return 0.0;
    std::vector<double> supply, demand;
    for (int i : sup_idx) supply.push_back(w[i]);
    for (int j : dem_idx) demand.push_back(-w[j]);
    std::vector<double> cost(supply.size() * demand.size());
    for (std::size_t i = 0; i < supply.size(); ++i)
        for (std::size_t j = 0; j < demand.size(); ++j)
            cost[i * demand.size() + j] = (pts[sup_idx[i]] - pts[dem_idx[j]]).norm();
    return transport_min_cost(supply, demand, cost);
}

} // namespace detail

/// Preiss distance between discrete measures, truncated at i_max with the tail
/// bound added to upper_bound. The origin of the balls B_0(i) is a parameter;
/// measures are recentred by it before solving.
inline PreissResult preiss_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    int i_max = 20, const Vec3& origin = Vec3::Zero())
{
    if (mu.atoms.size() > 2000 || nu.atoms.size() > 2000)
        throw input_error("preiss_distance: atom count above the 2000 LP guard");
    if (i_max < 1) throw input_error("preiss_distance: i_max must be positive");

    // merged support (exact coordinate match), weights mu - nu
    std::map<std::array<double, 3>, std::size_t> index;
    std::vector<Vec3> pts;
    std::vector<double> w;
    auto add = [&](const Vec3& p0, double mass) {
        const Vec3 p = p0 - origin;
        const std::array<double, 3> key = {p.x(), p.y(), p.z()};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, pts.size()).first;
            pts.push_back(p);
            w.push_back(0.0);
        }
        w[it->second] += mass;
    };
    for (std::size_t k = 0; k < mu.atoms.size(); ++k) add(mu.atoms[k], mu.masses[k]);
    for (std::size_t k = 0; k < nu.atoms.size(); ++k) add(nu.atoms[k], -nu.masses[k]);

    double max_norm = 0.0;
    for (const auto& p : pts) max_norm = std::max(max_norm, p.norm());
    double diam = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b)
            diam = std::max(diam, (pts[a] - pts[b]).norm());

    PreissResult out;
    out.F.resize(i_max, 0.0);
    double w1 = -1.0;
    for (int i = 1; i <= i_max; ++i) {
        double Fi;
        if (i - max_norm >= diam) {
            // caps cannot bind: disposal costs at least the diameter, so the
            // value equals plain W1 (and is symmetric)
            if (w1 < 0.0) w1 = detail::wasserstein1(pts, w);
            Fi = w1;
        } else {
            std::vector<double> neg(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) neg[k] = -w[k];
            Fi = std::max(detail::bounded_lipschitz_lp(pts, w, i),
                          detail::bounded_lipschitz_lp(pts, neg, i));
        }
        out.F[i - 1] = Fi;
        out.value += std::pow(0.5, i) * std::min(1.0, Fi);
    }
    out.upper_bound = out.value + std::pow(0.5, i_max);
    return out;
}

} // namespace isoperim
