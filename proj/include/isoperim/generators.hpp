#pragma once

#include "isoperim/mesh.hpp"

#include <functional>
#include <map>
#include <optional>

namespace isoperim {

// ---------------------------------------------------------------------------
// Basic families

/// Subdivided icosahedron projected to the sphere. level 0 is the icosahedron;
/// level k has 20*4^k faces. Levels above 8 are rejected (memory guard).
inline BoundaryMesh icosphere(const Vec3& center, double radius, int level)
{
    if (!(radius > 0.0)) throw input_error("icosphere radius must be positive");
    if (level < 0 || level > 8) throw input_error("icosphere level must be in [0, 8]");

    BoundaryMesh mesh;
    mesh.ambient_dim = 3;
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    mesh.vertices = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                     {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                     {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : mesh.vertices) v.normalize();
    mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find({key.first, key.second});
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
            midpoint[{key.first, key.second}] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(mesh.triangles.size() * 4);
        for (const auto& f : mesh.triangles) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        mesh.triangles = std::move(next);
    }
    for (auto& v : mesh.vertices) v = center + radius * v;
    return mesh;
}

/// Regular polygon approximating a circle (counter-clockwise).
inline BoundaryMesh circle(const Vec3& center, double radius, int segments)
{
    if (!(radius > 0.0)) throw input_error("circle radius must be positive");
    if (segments < 3) throw input_error("circle needs at least 3 segments");
    BoundaryMesh mesh;
    mesh.ambient_dim = 2;
    mesh.vertices.reserve(segments);
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * kPi * i / segments;
        mesh.vertices.emplace_back(center.x() + radius * std::cos(a),
                                   center.y() + radius * std::sin(a), 0.0);
        mesh.segments.push_back({i, (i + 1) % segments});
    }
    return mesh;
}

/// Axis-aligned ellipsoid with semi-axes (a, b, c).
inline BoundaryMesh ellipsoid(double a, double b, double c, int level,
                              const Vec3& center = Vec3::Zero())
{
    if (!(a > 0 && b > 0 && c > 0)) throw input_error("ellipsoid axes must be positive");
    BoundaryMesh mesh = icosphere(Vec3::Zero(), 1.0, level);
    for (auto& v : mesh.vertices)
        v = center + Vec3(a * v.x(), b * v.y(), c * v.z());
    return mesh;
}

/// Concatenates meshes into one multi-component boundary. Conservative
/// bounding-sphere test rejects potentially overlapping parts.
inline BoundaryMesh disjoint_union(const std::vector<BoundaryMesh>& parts)
{
    if (parts.empty()) throw input_error("disjoint_union of nothing");
    std::vector<std::pair<Vec3, double>> spheres;
    for (const auto& m : parts) {
        Vec3 c = Vec3::Zero();
        for (const auto& v : m.vertices) c += v;
        c /= static_cast<double>(m.vertices.size());
        double r = 0.0;
        for (const auto& v : m.vertices) r = std::max(r, (v - c).norm());
        spheres.emplace_back(c, r);
    }
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j)
            if ((spheres[i].first - spheres[j].first).norm() <=
                spheres[i].second + spheres[j].second)
                throw input_error("disjoint_union parts may overlap (bounding spheres touch)");

    BoundaryMesh out;
    out.ambient_dim = parts.front().ambient_dim;
    for (const auto& m : parts) {
        if (m.ambient_dim != out.ambient_dim)
            throw input_error("disjoint_union mixes ambient dimensions");
        const int off = static_cast<int>(out.vertices.size());
        out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
        for (auto t : m.triangles) {
            for (auto& k : t) k += off;
            out.triangles.push_back(t);
        }
        for (auto s : m.segments) {
            for (auto& k : s) k += off;
            out.segments.push_back(s);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Real spherical harmonics, l <= 4 (orthonormal on the unit sphere).

inline double real_spherical_harmonic(int l, int m, const Vec3& dir)
{
    if (l < 0 || l > 4 || std::abs(m) > l)
        throw input_error("spherical harmonic degree limited to l <= 4");
    const double x = dir.x(), y = dir.y(), z = dir.z();
    const double ct = z;
    const int am = std::abs(m);

    // associated Legendre P_l^m(cos theta) without the Condon-Shortley phase
    auto plm = [&](int ll, int mm) -> double {
        const double st2 = std::max(0.0, 1.0 - ct * ct);
        const double st = std::sqrt(st2);
        switch (ll * 10 + mm) {
            case 0: return 1.0;
            case 10: return ct;
            case 11: return st;
            case 20: return 0.5 * (3 * ct * ct - 1);
            case 21: return 3 * ct * st;
            case 22: return 3 * st2;
            case 30: return 0.5 * ct * (5 * ct * ct - 3);
            case 31: return 1.5 * (5 * ct * ct - 1) * st;
            case 32: return 15 * ct * st2;
            case 33: return 15 * st2 * st;
            case 40: return 0.125 * (35 * ct * ct * ct * ct - 30 * ct * ct + 3);
            case 41: return 2.5 * ct * (7 * ct * ct - 3) * st;
            case 42: return 7.5 * (7 * ct * ct - 1) * st2;
            case 43: return 105 * ct * st2 * st;
            case 44: return 105 * st2 * st2;
            default: throw input_error("unsupported (l, m)");
        }
    };

    double fact = 1.0;
    for (int k = l - am + 1; k <= l + am; ++k) fact *= k;
    const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) / fact);
    if (m == 0) return norm * plm(l, 0);
    const double phi = std::atan2(y, x);
    const double base = std::sqrt(2.0) * norm * plm(l, am);
    return m > 0 ? base * std::cos(am * phi) : base * std::sin(am * phi);
}

/// Radial graph u over the unit sphere: either a finite sum of spherical
/// harmonics, or the compactly supported sharpness profile transplanted to the
/// sphere through the exponential map at the north pole.
struct GraphFunction {
    struct Term {
        int l = 2;
        int m = 0;
        double coeff = 0.0;
    };
    std::vector<Term> harmonic_terms;

    bool use_profile = false;
    double profile_p = 4.0;
    double profile_delta = 0.0; // target deficit parameter driving the bump width

    static GraphFunction harmonic(int l, int m, double coeff)
    {
        GraphFunction g;
        g.harmonic_terms.push_back({l, m, coeff});
        return g;
    }

    static GraphFunction sharpness_profile(double p, double delta_target)
    {
        if (!(delta_target > 0.0)) throw input_error("profile needs delta_target > 0");
        if (!(p > 2.0)) throw input_error("profile exponent p must exceed the surface dimension");
        GraphFunction g;
        g.use_profile = true;
        g.profile_p = p;
        g.profile_delta = delta_target;
        return g;
    }

    double profile_support_radius() const
    {
        const double n = 2.0; // surface dimension of the 2-sphere
        const double p = profile_p;
        return std::pow(profile_delta, p / (2 * p - 2 * n + p * n));
    }

    /// Bump value at geodesic distance t from the north pole.
    double profile_value(double t) const
    {
        const double n = 2.0;
        const double q = 2.0 - n / profile_p;
        const double r = profile_support_radius();
        if (t >= r) return 0.0;
        if (t >= 0.5 * r) return std::pow(r - t, q) / 3.0;
        return (2.0 * std::pow(0.5 * r, q) - std::pow(t, q)) / 3.0;
    }

    double eval(const Vec3& dir) const
    {
        if (use_profile) return profile_value(std::acos(std::clamp(dir.z(), -1.0, 1.0)));
        double u = 0.0;
        for (const auto& t : harmonic_terms) u += t.coeff * real_spherical_harmonic(t.l, t.m, dir);
        return u;
    }

    double sup_abs() const
    {
        if (use_profile) return profile_value(0.0);
        double bound = 0.0;
        for (const auto& d : fibonacci_sphere(2048))
            bound = std::max(bound, std::abs(eval(d)));
        return bound * 1.05;
    }
};

// ---------------------------------------------------------------------------
// Angle-sorted ring stitching, shared by the polar grid and tube junctions.
// Both loops must wind the same way around the axis; produces |A|+|B| triangles.

namespace detail {

inline std::vector<std::array<int, 3>> zip_rings(const std::vector<int>& ring_a,
                                                 const std::vector<double>& angle_a,
                                                 const std::vector<int>& ring_b,
                                                 const std::vector<double>& angle_b)
{
    const std::size_t na = ring_a.size(), nb = ring_b.size();
    std::vector<std::array<int, 3>> tris;
    tris.reserve(na + nb);
    std::size_t i = 0, j = 0;
    auto next_angle = [](const std::vector<double>& ang, std::size_t k) {
        const std::size_t n = ang.size();
        return k + 1 < n ? ang[k + 1] : ang[(k + 1) % n] + 2.0 * kPi;
    };
    while (i < na || j < nb) {
        const bool advance_a =
            j >= nb || (i < na && next_angle(angle_a, i) <= next_angle(angle_b, j));
        if (advance_a) {
            tris.push_back({ring_a[i % na], ring_a[(i + 1) % na], ring_b[j % nb]});
            ++i;
        } else {
            tris.push_back({ring_a[i % na], ring_b[(j + 1) % nb], ring_b[j % nb]});
            ++j;
        }
    }
    return tris;
}

/// Rotates `indices` so the matching angles start at the minimum angle, and
/// returns the angles unwrapped to an increasing sequence starting there.
inline void sort_ring_by_angle(std::vector<int>& indices, std::vector<double>& angles)
{
    std::vector<std::size_t> order(indices.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return angles[a] < angles[b]; });
    std::vector<int> idx;
    std::vector<double> ang;
    idx.reserve(indices.size());
    ang.reserve(indices.size());
    for (auto k : order) {
        idx.push_back(indices[k]);
        ang.push_back(angles[k]);
    }
    indices = std::move(idx);
    angles = std::move(ang);
}

inline void flip_outward(BoundaryMesh& mesh, std::size_t first_tri, const Vec3& origin)
{
    for (std::size_t f = first_tri; f < mesh.triangles.size(); ++f) {
        auto& t = mesh.triangles[f];
        const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
        const Vec3 centroid = (a + b + c) / 3.0 - origin;
        if (triangle_normal(a, b, c).dot(centroid) < 0.0) std::swap(t[1], t[2]);
    }
}

/// Flips a consistently wound batch as a whole (area-weighted majority vote).
inline void flip_batch_outward(BoundaryMesh& mesh, std::size_t first_tri, const Vec3& origin)
{
    double vote = 0.0;
    for (std::size_t f = first_tri; f < mesh.triangles.size(); ++f) {
        const auto& t = mesh.triangles[f];
        const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
        vote += 0.5 * (b - a).cross(c - a).dot((a + b + c) / 3.0 - origin);
    }
    if (vote < 0.0)
        for (std::size_t f = first_tri; f < mesh.triangles.size(); ++f)
            std::swap(mesh.triangles[f][1], mesh.triangles[f][2]);
}

inline void compact_vertices(BoundaryMesh& mesh)
{
    std::vector<int> remap(mesh.vertices.size(), -1);
    std::vector<Vec3> verts;
    auto touch = [&](int v) {
        if (remap[v] < 0) {
            remap[v] = static_cast<int>(verts.size());
            verts.push_back(mesh.vertices[v]);
        }
        return remap[v];
    };
    for (auto& t : mesh.triangles)
        for (auto& v : t) v = touch(v);
    for (auto& s : mesh.segments)
        for (auto& v : s) v = touch(v);
    mesh.vertices = std::move(verts);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Polar graded sphere: an axisymmetric radial graph (1 + u(theta)) built from
// latitude rings with locally controlled edge length. Used for compactly
// supported profiles that an icosphere cannot resolve.

struct PolarGrid {
    double h_fine = 0.01;
    double theta_fine = 0.1; // fine resolution is kept for theta below this
    double h_coarse = 0.07;
    double radius = 1.0;
};

inline BoundaryMesh polar_graph_sphere(const PolarGrid& grid,
                                       const std::function<double(double)>& u_of_theta)
{
    BoundaryMesh mesh;
    mesh.ambient_dim = 3;

    auto radial = [&](double theta, double phi) {
        const double r = grid.radius * (1.0 + u_of_theta(theta));
        return Vec3(r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi),
                    r * std::cos(theta));
    };

    // latitude stations, graded from h_fine to h_coarse
    std::vector<double> thetas;
    double theta = 0.0, h = grid.h_fine;
    while (true) {
        theta += h;
        if (theta >= kPi - 0.75 * grid.h_coarse) break;
        thetas.push_back(theta);
        if (theta >= grid.theta_fine) h = std::min(grid.h_coarse, h * 1.3);
    }

    mesh.vertices.push_back(radial(0.0, 0.0)); // north pole
    std::vector<std::vector<int>> rings;
    std::vector<std::vector<double>> ring_angles;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double th = thetas[k];
        const double step = k + 1 < thetas.size() ? thetas[k + 1] - th : kPi - th;
        const int m = std::max(6, static_cast<int>(std::lround(2.0 * kPi * std::sin(th) /
                                                               std::max(step, grid.h_fine))));
        const double offset = (k % 2) * kPi / m; // stagger alternate rings
        std::vector<int> ring;
        std::vector<double> angles;
        for (int j = 0; j < m; ++j) {
            const double phi = 2.0 * kPi * j / m + offset;
            ring.push_back(static_cast<int>(mesh.vertices.size()));
            mesh.vertices.push_back(radial(th, phi));
            angles.push_back(std::fmod(phi, 2.0 * kPi));
        }
        detail::sort_ring_by_angle(ring, angles);
        rings.push_back(std::move(ring));
        ring_angles.push_back(std::move(angles));
    }
    const int south = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(radial(kPi, 0.0));

    // pole fans and ring strips; winding fixed afterwards (radial graph)
    for (std::size_t j = 0; j < rings.front().size(); ++j)
        mesh.triangles.push_back({0, rings.front()[j],
                                  rings.front()[(j + 1) % rings.front().size()]});
    for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
        auto tris = detail::zip_rings(rings[k], ring_angles[k], rings[k + 1], ring_angles[k + 1]);
        mesh.triangles.insert(mesh.triangles.end(), tris.begin(), tris.end());
    }
    for (std::size_t j = 0; j < rings.back().size(); ++j)
        mesh.triangles.push_back({south, rings.back()[(j + 1) % rings.back().size()],
                                  rings.back()[j]});

    detail::flip_outward(mesh, 0, Vec3::Zero());
    return mesh;
}

/// Grid parameters resolving a given profile support radius. The coarse edge
/// keeps the sphere's own Hausdorff floor (the face sagitta, about h^2/8)
/// below the smallest bump amplitudes swept.
inline PolarGrid profile_grid(double support_radius, double radius = 1.0)
{
    PolarGrid g;
    g.h_fine = support_radius / 8.0;
    g.theta_fine = 1.8 * support_radius;
    g.h_coarse = 0.04;
    g.radius = radius;
    return g;
}

// ---------------------------------------------------------------------------
// Nearly spherical domains: boundary { (1 + u(x)) x, x in S }.

inline BoundaryMesh nearly_spherical(const GraphFunction& u, int level, double radius = 1.0,
                                     const Vec3& center = Vec3::Zero())
{
    if (!(u.sup_abs() < 0.5))
        throw input_error("graph amplitude too large: |u| must stay below 1/2");
    if (u.use_profile) {
        const PolarGrid grid = profile_grid(u.profile_support_radius(), radius);
        BoundaryMesh mesh =
            polar_graph_sphere(grid, [&](double t) { return u.profile_value(t); });
        for (auto& v : mesh.vertices) v += center;
        return mesh;
    }
    BoundaryMesh mesh = icosphere(Vec3::Zero(), 1.0, level);
    for (auto& v : mesh.vertices) v = center + radius * (1.0 + u.eval(v)) * v;
    return mesh;
}

/// The same discrete grid with u = 0; reference for excess-deficit measurements.
inline BoundaryMesh nearly_spherical_reference(const GraphFunction& u, int level,
                                               double radius = 1.0,
                                               const Vec3& center = Vec3::Zero())
{
    if (u.use_profile) {
        const PolarGrid grid = profile_grid(u.profile_support_radius(), radius);
        BoundaryMesh mesh = polar_graph_sphere(grid, [](double) { return 0.0; });
        for (auto& v : mesh.vertices) v += center;
        return mesh;
    }
    return icosphere(center, radius, level);
}

// ---------------------------------------------------------------------------
// Tube trees: a ball with thin tubular neighbourhoods of segment chains
// attached (or free capsules). Junctions to the ball are stitched watertight.

struct TreeSpec {
    std::vector<std::pair<Vec3, Vec3>> segments;
    double tube_radius = 0.01;
    bool attach_to_ball = true;

    double total_length() const
    {
        double len = 0.0;
        for (const auto& s : segments) len += (s.second - s.first).norm();
        return len;
    }
};

namespace detail {

struct Chain {
    std::vector<Vec3> points;
    bool attached = false;
};

inline double segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1)
{
    // standard closest approach of two segments
    const Vec3 d1 = a1 - a0, d2 = b1 - b0, r = a0 - b0;
    const double A = d1.dot(d1), E = d2.dot(d2), F = d2.dot(r);
    double s = 0, t = 0;
    const double C = d1.dot(r), B = d1.dot(d2);
    const double den = A * E - B * B;
    if (den > 1e-30) s = std::clamp((B * F - C * E) / den, 0.0, 1.0);
    t = E > 1e-30 ? std::clamp((B * s + F) / E, 0.0, 1.0) : 0.0;
    s = A > 1e-30 ? std::clamp((B * t - C) / A, 0.0, 1.0) : 0.0;
    return (a0 + s * d1 - (b0 + t * d2)).norm();
}

/// Groups segments into simple chains (no branching). Throws on branch points.
inline std::vector<Chain> build_chains(const TreeSpec& tree, double ball_radius)
{
    const double tol = 1e-9 * (1.0 + ball_radius);
    std::vector<std::pair<Vec3, Vec3>> segs = tree.segments;
    std::vector<bool> used(segs.size(), false);

    auto same = [&](const Vec3& a, const Vec3& b) { return (a - b).norm() < tol; };
    auto degree = [&](const Vec3& p) {
        int d = 0;
        for (const auto& s : segs) {
            if (same(s.first, p)) ++d;
            if (same(s.second, p)) ++d;
        }
        return d;
    };
    for (const auto& s : segs) {
        if (degree(s.first) > 2 || degree(s.second) > 2)
            throw input_error("tube tree with branch points of degree > 2 is not supported; "
                              "split the tree into chains attached to the ball");
    }

    std::vector<Chain> chains;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        std::vector<Vec3> pts = {segs[i].first, segs[i].second};
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t j = 0; j < segs.size(); ++j) {
                if (used[j]) continue;
                if (same(segs[j].first, pts.back())) {
                    pts.push_back(segs[j].second);
                    used[j] = grew = true;
                } else if (same(segs[j].second, pts.back())) {
                    pts.push_back(segs[j].first);
                    used[j] = grew = true;
                } else if (same(segs[j].second, pts.front())) {
                    pts.insert(pts.begin(), segs[j].first);
                    used[j] = grew = true;
                } else if (same(segs[j].first, pts.front())) {
                    pts.insert(pts.begin(), segs[j].second);
                    used[j] = grew = true;
                }
            }
        }
        Chain c;
        c.points = std::move(pts);
        const double r0 = c.points.front().norm(), r1 = c.points.back().norm();
        if (tree.attach_to_ball && (std::abs(r0 - ball_radius) < 1e-6 * ball_radius ||
                                    std::abs(r1 - ball_radius) < 1e-6 * ball_radius)) {
            c.attached = true;
            if (std::abs(r1 - ball_radius) < std::abs(r0 - ball_radius))
                std::reverse(c.points.begin(), c.points.end());
            c.points.front() *= ball_radius / c.points.front().norm();
        }
        chains.push_back(std::move(c));
    }
    if (tree.attach_to_ball)
        for (const auto& c : chains)
            if (!c.attached)
                throw input_error("attach_to_ball set but a chain does not start on the sphere");
    return chains;
}

struct TubeFrame {
    Vec3 d, e1, e2;
};

inline TubeFrame start_frame(const Vec3& d)
{
    TubeFrame f;
    f.d = d.normalized();
    const Vec3 helper = std::abs(f.d.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    f.e1 = f.d.cross(helper).normalized();
    f.e2 = f.d.cross(f.e1);
    return f;
}

inline TubeFrame transport(const TubeFrame& f, const Vec3& d_new)
{
    TubeFrame g;
    g.d = d_new.normalized();
    const Vec3 axis = f.d.cross(g.d);
    const double s = axis.norm(), c = std::clamp(f.d.dot(g.d), -1.0, 1.0);
    if (s < 1e-14) {
        g.e1 = f.e1;
        g.e2 = f.e2;
        return g;
    }
    const Eigen::AngleAxisd rot(std::atan2(s, c), axis / s);
    g.e1 = rot * f.e1;
    g.e2 = rot * f.e2;
    return g;
}

/// Appends a watertight tube along a chain of points. If `base_ring` is given,
/// the tube starts from those existing vertices (already on the ball); the far
/// end is closed by a hemispherical cap. If `base_ring` is empty a start cap is
/// generated too (free capsule).
inline void append_tube(BoundaryMesh& mesh, const std::vector<Vec3>& pts, double eps, int ring_m,
                        const std::vector<int>& base_ring, const TubeFrame& base_frame)
{
    const int m = ring_m;
    std::vector<int> prev = base_ring;
    TubeFrame frame = base_frame;

    auto add_ring = [&](const Vec3& center, const TubeFrame& f, double radius) {
        std::vector<int> ring(m);
        for (int j = 0; j < m; ++j) {
            const double a = 2.0 * kPi * j / m;
            ring[j] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(center + radius * (std::cos(a) * f.e1 + std::sin(a) * f.e2));
        }
        return ring;
    };
    auto strip = [&](const std::vector<int>& ra, const std::vector<int>& rb) {
        for (int j = 0; j < m; ++j) {
            const int jn = (j + 1) % m;
            mesh.triangles.push_back({ra[j], ra[jn], rb[jn]});
            mesh.triangles.push_back({ra[j], rb[jn], rb[j]});
        }
    };
    auto cap = [&](const Vec3& end, const TubeFrame& f, const std::vector<int>& rim, int sign) {
        const int levels = std::max(3, m / 4);
        std::vector<int> last = rim;
        for (int k = 1; k < levels; ++k) {
            const double phi = 0.5 * kPi * k / levels;
            auto ring = add_ring(end + sign * eps * std::sin(phi) * f.d, f, eps * std::cos(phi));
            if (sign > 0)
                strip(last, ring);
            else
                strip(ring, last);
            last = ring;
        }
        const int pole = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(end + sign * eps * f.d);
        for (int j = 0; j < m; ++j) {
            const int jn = (j + 1) % m;
            if (sign > 0)
                mesh.triangles.push_back({last[j], last[jn], pole});
            else
                mesh.triangles.push_back({last[jn], last[j], pole});
        }
    };

    if (prev.empty()) { // free capsule: start cap about the first point
        prev = add_ring(pts.front(), frame, eps);
        cap(pts.front(), frame, prev, -1);
    }

    double t_used = 0.0;
    if (!base_ring.empty()) {
        for (int v : base_ring)
            t_used = std::max(t_used, (mesh.vertices[v] - pts.front()).dot(frame.d));
    }

    const double step = std::max(2.0 * kPi * eps / m, eps * 0.35);
    for (std::size_t leg = 0; leg + 1 < pts.size(); ++leg) {
        const Vec3 a = pts[leg], b = pts[leg + 1];
        const double len = (b - a).norm();
        const TubeFrame leg_frame = leg == 0 ? frame : transport(frame, b - a);
        if (leg > 0) {
            // miter ring at the joint, normal halfway between leg directions
            const Vec3 bis = (frame.d + leg_frame.d).normalized();
            TubeFrame joint = leg_frame;
            joint.e1 = (leg_frame.e1 - leg_frame.e1.dot(bis) * bis).normalized();
            joint.e2 = bis.cross(joint.e1);
            joint.d = bis;
            auto ring = add_ring(a, joint, eps);
            strip(prev, ring);
            prev = ring;
            t_used = 0.0;
        }
        frame = leg_frame;
        const bool final_leg = leg + 2 == pts.size();
        // stop short of a joint; the miter ring covers the remainder
        const double t_end = final_leg ? len : len - 0.45 * step;
        int steps = std::max(1, static_cast<int>(std::ceil((t_end - t_used) / step)));
        for (int k = 1; k <= steps; ++k) {
            const double t = t_used + (t_end - t_used) * k / steps;
            auto ring = add_ring(a + t * frame.d, frame, eps);
            strip(prev, ring);
            prev = ring;
        }
        t_used = 0.0;
    }
    cap(pts.back(), frame, prev, +1);
}

} // namespace detail

/// Ball with thin tubes along segment chains. Attached chains pierce the
/// sphere; the junction ring lies exactly on the sphere and the crater between
/// the carved hole and the ring is stitched watertight.
inline BoundaryMesh tube_tree_domain(double ball_radius, const TreeSpec& tree, int level)
{
    if (!(ball_radius > 0.0)) throw input_error("ball radius must be positive");
    if (tree.segments.empty()) return icosphere(Vec3::Zero(), ball_radius, level);
    const double eps = tree.tube_radius;
    if (!(eps > 0.0)) throw input_error("tube radius must be positive");

    auto chains = detail::build_chains(tree, ball_radius);

    // conservative clearance checks (tubes may not intersect each other)
    for (std::size_t i = 0; i < tree.segments.size(); ++i)
        for (std::size_t j = i + 1; j < tree.segments.size(); ++j) {
            const auto &a = tree.segments[i], &b = tree.segments[j];
            const double d = detail::segment_distance(a.first, a.second, b.first, b.second);
            const bool adjacent = d < 1e-9;
            if (!adjacent && d < 2.5 * eps)
                throw input_error("self-intersecting tube configuration (segments too close)");
        }
    for (const auto& c : chains) {
        const double len = (c.points[1] - c.points[0]).norm();
        if (len < 4.0 * eps)
            throw input_error("tube segments must be much longer than the tube radius");
        if (c.attached) {
            const Vec3 d0 = (c.points[1] - c.points[0]).normalized();
            if (d0.dot(c.points[0].normalized()) < 0.2)
                throw input_error("attached tube must leave the ball outward");
            for (std::size_t k = 1; k < c.points.size(); ++k)
                if (c.points[k].norm() < ball_radius + 2.0 * eps)
                    throw input_error("attached tube re-enters the ball");
        } else {
            for (const auto& p : c.points)
                if (p.norm() < ball_radius + 2.5 * eps)
                    throw input_error("free tube overlaps the ball");
        }
    }

    BoundaryMesh mesh = icosphere(Vec3::Zero(), ball_radius, level);
    const int ring_m = std::max(16, 1 << level);
    const double h_arc = 1.1071487177940904 / (1 << level);

    std::vector<bool> removed(mesh.triangles.size(), false);

    struct Junction {
        std::vector<int> ring;
        std::vector<double> ring_angle;
        detail::TubeFrame frame;
        Vec3 anchor;
        double theta_cut = 0.0;
        std::vector<Vec3> pts;
    };
    std::vector<Junction> junctions;

    for (const auto& c : chains) {
        if (!c.attached) continue;
        Junction jn;
        jn.pts = c.points;
        jn.anchor = c.points.front();
        jn.frame = detail::start_frame(c.points[1] - c.points[0]);

        double theta_ring = 0.0;
        const Vec3 u0 = jn.anchor.normalized();
        for (int j = 0; j < ring_m; ++j) {
            const double a = 2.0 * kPi * j / ring_m;
            const Vec3 w = std::cos(a) * jn.frame.e1 + std::sin(a) * jn.frame.e2;
            const Vec3 p = jn.anchor + eps * w;
            const double pd = p.dot(jn.frame.d);
            const double disc = pd * pd - (p.squaredNorm() - ball_radius * ball_radius);
            if (disc < 0.0) throw input_error("tube ring does not meet the sphere");
            double t1 = -pd + std::sqrt(disc), t2 = -pd - std::sqrt(disc);
            const double t = std::abs(t1) < std::abs(t2) ? t1 : t2;
            const Vec3 q = p + t * jn.frame.d;
            jn.ring.push_back(static_cast<int>(mesh.vertices.size()));
            mesh.vertices.push_back(q);
            jn.ring_angle.push_back(a);
            theta_ring = std::max(theta_ring,
                                  std::acos(std::clamp(q.normalized().dot(u0), -1.0, 1.0)));
        }
        jn.theta_cut = std::max(theta_ring + 0.45 * h_arc, 0.95 * h_arc);

        // carve every face touching the cap around the anchor direction
        int carved = 0;
        for (std::size_t f = 0; f < removed.size(); ++f) {
            if (removed[f]) continue;
            const auto& t = mesh.triangles[f];
            for (int k = 0; k < 3; ++k) {
                const double ang = std::acos(
                    std::clamp(mesh.vertices[t[k]].normalized().dot(u0), -1.0, 1.0));
                if (ang < jn.theta_cut) {
                    removed[f] = true;
                    ++carved;
                    break;
                }
            }
        }
        if (carved == 0) throw numeric_error("tube junction carved no faces; raise the level");
        junctions.push_back(std::move(jn));
    }

    // keep faces, then stitch each junction hole to its ring
    std::vector<std::array<int, 3>> kept;
    kept.reserve(mesh.triangles.size());
    std::map<std::pair<int, int>, bool> kept_edges;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
        if (removed[f]) continue;
        kept.push_back(mesh.triangles[f]);
        for (int k = 0; k < 3; ++k)
            kept_edges[{mesh.triangles[f][k], mesh.triangles[f][(k + 1) % 3]}] = true;
    }
    std::vector<std::array<int, 3>> dropped;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f)
        if (removed[f]) dropped.push_back(mesh.triangles[f]);
    mesh.triangles = std::move(kept);

    // hole boundary = kept directed edges whose twin is missing
    std::map<int, int> hole_next;
    for (const auto& [edge, _] : kept_edges)
        if (!kept_edges.count({edge.second, edge.first})) hole_next[edge.second] = edge.first;

    for (auto& jn : junctions) {
        // walk the loop nearest to this junction
        int start = -1;
        double best = 1e300;
        for (const auto& [v, _] : hole_next) {
            const double d = (mesh.vertices[v] - jn.anchor).norm();
            if (d < best) {
                best = d;
                start = v;
            }
        }
        if (start < 0) throw numeric_error("tube junction lost its hole boundary");
        std::vector<int> loop;
        std::vector<double> loop_angle;
        int v = start;
        do {
            loop.push_back(v);
            const Vec3 rel = mesh.vertices[v] - jn.anchor;
            double ang = std::atan2(rel.dot(jn.frame.e2), rel.dot(jn.frame.e1));
            if (ang < 0.0) ang += 2.0 * kPi;
            loop_angle.push_back(ang);
            auto it = hole_next.find(v);
            if (it == hole_next.end()) throw numeric_error("tube junction hole is not closed");
            const int nxt = it->second;
            hole_next.erase(it);
            v = nxt;
        } while (v != start && loop.size() <= mesh.vertices.size());

        detail::sort_ring_by_angle(loop, loop_angle);
        std::vector<int> ring = jn.ring;
        std::vector<double> ring_angle = jn.ring_angle;
        detail::sort_ring_by_angle(ring, ring_angle);

        const std::size_t first_new = mesh.triangles.size();
        auto tris = detail::zip_rings(loop, loop_angle, ring, ring_angle);
        mesh.triangles.insert(mesh.triangles.end(), tris.begin(), tris.end());
        detail::flip_batch_outward(mesh, first_new, Vec3::Zero());

        detail::append_tube(mesh, jn.pts, eps, ring_m, jn.ring, jn.frame);
    }

    for (const auto& c : chains) {
        if (c.attached) continue;
        detail::append_tube(mesh, c.points, eps, ring_m, {},
                            detail::start_frame(c.points[1] - c.points[0]));
    }

    detail::compact_vertices(mesh);
    return mesh;
}

/// Ball with radial spikes: directions and lengths give segments
/// [R d, (R + len) d]; a thin wrapper over tube_tree_domain.
inline BoundaryMesh spiky_ball(double ball_radius, int level,
                               const std::vector<std::pair<Vec3, double>>& spikes, double eps)
{
    TreeSpec tree;
    tree.tube_radius = eps;
    tree.attach_to_ball = true;
    for (const auto& [dir, len] : spikes) {
        const Vec3 d = dir.normalized();
        if (len == 0.0) continue;
        tree.segments.emplace_back(ball_radius * d, (ball_radius + len) * d);
    }
    if (tree.segments.empty()) return icosphere(Vec3::Zero(), ball_radius, level);
    return tube_tree_domain(ball_radius, tree, level);
}

} // namespace isoperim
