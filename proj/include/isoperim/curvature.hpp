#pragma once

#include "isoperim/measures.hpp"

namespace isoperim {

/// Per-vertex discrete curvature data. Convention: H is the arithmetic mean of
/// the principal curvatures against the outward normal, so H(S(R)) = 1/R and a
/// convex boundary has H > 0. Switching to the sum convention is the single
/// constant below.
inline constexpr double kMeanCurvatureFactor = 0.5; // H = factor * (k1 + k2)

struct CurvatureField {
    std::vector<Vec3> normal;
    std::vector<double> mean;        // H
    std::vector<double> kappa1, kappa2;
    std::vector<double> vertex_area; // mixed Voronoi weights, sums to P
    std::vector<bool> low_confidence;

    std::map<double, double> h_norms; // p -> ||H||_p, (1/P) normalization
    std::map<double, double> b_norms; // p -> ||B||_p
    std::map<double, double> budgets; // p -> K = P * ||H||_p^n

    double perimeter = 0.0;
    int surface_dim = 2;
};

namespace detail {

inline double cot(const Vec3& a, const Vec3& b) // angle at the common vertex
{
    const double cross = a.cross(b).norm();
    return a.dot(b) / std::max(cross, 1e-300);
}

/// Meyer-style mixed Voronoi areas: exact partition of each triangle.
inline void accumulate_mixed_area(const Vec3& p, const Vec3& q, const Vec3& r, double& ap,
                                  double& aq, double& ar)
{
    const double area = triangle_area(p, q, r);
    const double cp = (q - p).dot(r - p), cq = (p - q).dot(r - q), cr = (p - r).dot(q - r);
    if (cp >= 0 && cq >= 0 && cr >= 0) { // non-obtuse: true Voronoi split
        const double cotq = cot(p - q, r - q), cotr = cot(p - r, q - r);
        const double cotp = cot(q - p, r - p);
        ap += ((r - p).squaredNorm() * cotq + (q - p).squaredNorm() * cotr) / 8.0;
        aq += ((r - q).squaredNorm() * cotp + (p - q).squaredNorm() * cotr) / 8.0;
        ar += ((q - r).squaredNorm() * cotp + (p - r).squaredNorm() * cotq) / 8.0;
    } else if (cp < 0) { // obtuse at p
        ap += area / 2.0;
        aq += area / 4.0;
        ar += area / 4.0;
    } else if (cq < 0) {
        aq += area / 2.0;
        ap += area / 4.0;
        ar += area / 4.0;
    } else {
        ar += area / 2.0;
        ap += area / 4.0;
        aq += area / 4.0;
    }
}

} // namespace detail

/// Cotangent mean curvature with mixed Voronoi areas; principal curvatures
/// from a quadric fit over the 2-ring; norms with the (1/P) probability
/// normalization over the requested exponents.
inline CurvatureField curvature_field(const BoundaryMesh& mesh, const std::vector<double>& p_list)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3) throw input_error("curvature_field needs a 3D mesh");
    const std::size_t nv = mesh.vertices.size();

    CurvatureField field;
    field.surface_dim = 2;
    field.normal.assign(nv, Vec3::Zero());
    field.mean.assign(nv, 0.0);
    field.kappa1.assign(nv, 0.0);
    field.kappa2.assign(nv, 0.0);
    field.vertex_area.assign(nv, 0.0);
    field.low_confidence.assign(nv, false);

    // angle-weighted vertex normals
    for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        const Vec3 n = triangle_normal(a, b, c);
        const double wa = std::acos(std::clamp((b - a).normalized().dot((c - a).normalized()),
                                               -1.0, 1.0));
        const double wb = std::acos(std::clamp((a - b).normalized().dot((c - b).normalized()),
                                               -1.0, 1.0));
        field.normal[t[0]] += wa * n;
        field.normal[t[1]] += wb * n;
        field.normal[t[2]] += (kPi - wa - wb) * n;
    }
    for (auto& n : field.normal) {
        const double len = n.norm();
        if (len > 0) n /= len;
    }

    // cotangent Laplacian of the position field and mixed areas
    std::vector<Vec3> lap(nv, Vec3::Zero());
    for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        detail::accumulate_mixed_area(a, b, c, field.vertex_area[t[0]], field.vertex_area[t[1]],
                                      field.vertex_area[t[2]]);
        const double cot_a = detail::cot(b - a, c - a);
        const double cot_b = detail::cot(a - b, c - b);
        const double cot_c = detail::cot(a - c, b - c);
        // edge (b, c) is opposite a, etc.
        lap[t[1]] += 0.5 * cot_a * (c - b);
        lap[t[2]] += 0.5 * cot_a * (b - c);
        lap[t[0]] += 0.5 * cot_b * (c - a);
        lap[t[2]] += 0.5 * cot_b * (a - c);
        lap[t[0]] += 0.5 * cot_c * (b - a);
        lap[t[1]] += 0.5 * cot_c * (a - b);
    }
    field.perimeter = std::accumulate(field.vertex_area.begin(), field.vertex_area.end(), 0.0);

    // Delta x = 2 H nu with the mean convention (inward Laplacian)
    for (std::size_t v = 0; v < nv; ++v) {
        const double area = std::max(field.vertex_area[v], 1e-300);
        field.mean[v] = (2.0 * kMeanCurvatureFactor) * -lap[v].dot(field.normal[v]) / (2.0 * area);
    }

    // principal curvatures: quadric fit z = q1 x^2 + q2 xy + q3 y^2 + q4 x + q5 y
    // over the 2-ring, height measured along the inward axis so convex is positive
    std::vector<std::vector<int>> ring1(nv);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            ring1[t[k]].push_back(t[(k + 1) % 3]);
            ring1[t[k]].push_back(t[(k + 2) % 3]);
        }
    for (std::size_t v = 0; v < nv; ++v) {
        std::vector<int> nbhd;
        for (int u : ring1[v]) {
            nbhd.push_back(u);
            for (int w : ring1[u]) nbhd.push_back(w);
        }
        std::sort(nbhd.begin(), nbhd.end());
        nbhd.erase(std::unique(nbhd.begin(), nbhd.end()), nbhd.end());
        nbhd.erase(std::remove(nbhd.begin(), nbhd.end(), static_cast<int>(v)), nbhd.end());

        const Vec3 up = -field.normal[v];
        const Vec3 helper = std::abs(up.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
        const Vec3 t1 = up.cross(helper).normalized();
        const Vec3 t2 = up.cross(t1);

        // Gaussian distance weights keep the 1-ring dominant so coarse distant
        // samples do not bias the osculating quadric
        double h1 = 0.0;
        int n1 = 0;
        for (int u : ring1[v]) {
            h1 += (mesh.vertices[u] - mesh.vertices[v]).norm();
            ++n1;
        }
        h1 = n1 > 0 ? h1 / n1 : 1.0;

        Eigen::MatrixXd A(nbhd.size(), 5);
        Eigen::VectorXd z(nbhd.size());
        double scale = 0.0;
        for (std::size_t r = 0; r < nbhd.size(); ++r) {
            const Vec3 d = mesh.vertices[nbhd[r]] - mesh.vertices[v];
            const double x = d.dot(t1), y = d.dot(t2);
            const double wgt = std::exp(-d.squaredNorm() / (h1 * h1));
            A(r, 0) = wgt * x * x;
            A(r, 1) = wgt * x * y;
            A(r, 2) = wgt * y * y;
            A(r, 3) = wgt * x;
            A(r, 4) = wgt * y;
            z(r) = wgt * d.dot(up);
            scale = std::max(scale, std::abs(d.dot(up)));
        }
        if (nbhd.size() < 5 || scale < 1e-12) {
            field.low_confidence[v] = true;
            field.kappa1[v] = field.kappa2[v] = field.mean[v] / (2.0 * kMeanCurvatureFactor);
            continue;
        }
        const Eigen::VectorXd q = A.colPivHouseholderQr().solve(z);
        const double gx = q(3), gy = q(4);
        Eigen::Matrix2d first, second;
        first << 1 + gx * gx, gx * gy, gx * gy, 1 + gy * gy;
        const double norm = std::sqrt(1.0 + gx * gx + gy * gy);
        second << 2 * q(0) / norm, q(1) / norm, q(1) / norm, 2 * q(2) / norm;
        const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> eig(second, first);
        field.kappa1[v] = eig.eigenvalues()(1); // larger
        field.kappa2[v] = eig.eigenvalues()(0);
    }

    for (double p : p_list) {
        double hsum = 0.0, bsum = 0.0;
        for (std::size_t v = 0; v < nv; ++v) {
            const double b = std::sqrt(field.kappa1[v] * field.kappa1[v] +
                                       field.kappa2[v] * field.kappa2[v]);
            hsum += field.vertex_area[v] * std::pow(std::abs(field.mean[v]), p);
            bsum += field.vertex_area[v] * std::pow(b, p);
        }
        field.h_norms[p] = std::pow(hsum / field.perimeter, 1.0 / p);
        field.b_norms[p] = std::pow(bsum / field.perimeter, 1.0 / p);
        field.budgets[p] = field.perimeter * std::pow(field.h_norms[p], 2.0);
    }
    return field;
}

/// Polyline curvature: turning angle over the mean adjacent edge length. The
/// signed integral of kappa over a closed convex loop is exactly 2 pi.
inline CurvatureField curve_curvature(const BoundaryMesh& mesh, const std::vector<double>& p_list)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 2) throw input_error("curve_curvature needs a closed polyline");
    const std::size_t nv = mesh.vertices.size();
    std::vector<int> next(nv, -1), prev(nv, -1);
    for (const auto& s : mesh.segments) {
        next[s[0]] = s[1];
        prev[s[1]] = s[0];
    }
    CurvatureField field;
    field.surface_dim = 1;
    field.normal.assign(nv, Vec3::Zero());
    field.mean.assign(nv, 0.0);
    field.vertex_area.assign(nv, 0.0);
    field.low_confidence.assign(nv, false);
    for (std::size_t v = 0; v < nv; ++v) {
        const Vec3 e_in = mesh.vertices[v] - mesh.vertices[prev[v]];
        const Vec3 e_out = mesh.vertices[next[v]] - mesh.vertices[v];
        const double turn = std::atan2(e_in.x() * e_out.y() - e_in.y() * e_out.x(),
                                       e_in.dot(e_out));
        const double w = 0.5 * (e_in.norm() + e_out.norm());
        field.vertex_area[v] = w;
        field.mean[v] = turn / w;
        const Vec3 tangent = (e_in.normalized() + e_out.normalized()).normalized();
        field.normal[v] = Vec3(tangent.y(), -tangent.x(), 0.0); // outward for CCW loops
    }
    field.perimeter = std::accumulate(field.vertex_area.begin(), field.vertex_area.end(), 0.0);
    for (double p : p_list) {
        double hsum = 0.0;
        for (std::size_t v = 0; v < nv; ++v)
            hsum += field.vertex_area[v] * std::pow(std::abs(field.mean[v]), p);
        field.h_norms[p] = std::pow(hsum / field.perimeter, 1.0 / p);
        field.budgets[p] = field.perimeter * std::pow(field.h_norms[p], 1.0);
    }
    return field;
}

// ---------------------------------------------------------------------------
// Deviation of the unit normal from the radial direction:
// Z = (x - c)/|x - c| - nu.

struct ZField {
    std::vector<Vec3> z;
    double l2 = 0.0;  // ((1/P) int |Z|^2)^{1/2}
    double linf = 0.0;
};

inline ZField z_field(const BoundaryMesh& mesh, const CurvatureField& field, const SphereFit& fit)
{
    const std::size_t nv = mesh.vertices.size();
    ZField out;
    out.z.resize(nv);
    double sq = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
        const Vec3 d = mesh.vertices[v] - fit.center;
        const double len = d.norm();
        if (len < 1e-9 * fit.radius)
            throw input_error("fit centre lies on the boundary; Z is undefined");
        out.z[v] = d / len - field.normal[v];
        sq += field.vertex_area[v] * out.z[v].squaredNorm();
        out.linf = std::max(out.linf, out.z[v].norm());
    }
    out.l2 = std::sqrt(sq / field.perimeter);
    return out;
}

/// Vertex-area weighted integral of |H|^q outside the annulus, resolved with
/// the same straddle-subdivision rule as annulus_outside_area (so q = 0
/// reproduces the outside area bit-for-bit). |H| is interpolated linearly from
/// the parent triangle's vertex values.
inline double outside_annulus_curvature_integral(const BoundaryMesh& mesh,
                                                 const CurvatureField& field,
                                                 const AnnulusSpec& ann, double q)
{
    require_valid(mesh);
    if (mesh.ambient_dim != 3)
        throw input_error("outside_annulus_curvature_integral needs a 3D mesh");
    const double floor_diam = ann.radius * 1e-4;
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3 &pa = mesh.vertices[t[0]], &pb = mesh.vertices[t[1]], &pc = mesh.vertices[t[2]];
        const double ha = std::abs(field.mean[t[0]]), hb = std::abs(field.mean[t[1]]),
                     hc = std::abs(field.mean[t[2]]);
        // affine |H| over the parent triangle, evaluated at piece centroids
        auto interp = [&](const Vec3& p) {
            // barycentric via areas against the parent
            const double full = triangle_area(pa, pb, pc);
            const double wa = triangle_area(p, pb, pc) / full;
            const double wb = triangle_area(pa, p, pc) / full;
            const double wc = std::max(0.0, 1.0 - wa - wb);
            return wa * ha + wb * hb + wc * hc;
        };
        total += detail::outside_annulus_recursive(
            pa, pb, pc, ann, floor_diam, [&](const Vec3& a, const Vec3& b, const Vec3& c) {
                const double area = triangle_area(a, b, c);
                if (q == 0.0) return area;
                return area * std::pow(interp((a + b + c) / 3.0), q);
            });
    }
    return total;
}

/// Angle defects sum to 2 pi times the Euler characteristic; exercised as a
/// connectivity/area sanity check.
inline double total_angle_defect(const BoundaryMesh& mesh)
{
    std::vector<double> angle(mesh.vertices.size(), 0.0);
    for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        angle[t[0]] += std::acos(std::clamp((b - a).normalized().dot((c - a).normalized()),
                                            -1.0, 1.0));
        angle[t[1]] += std::acos(std::clamp((a - b).normalized().dot((c - b).normalized()),
                                            -1.0, 1.0));
        angle[t[2]] += std::acos(std::clamp((a - c).normalized().dot((b - c).normalized()),
                                            -1.0, 1.0));
    }
    double defect = 0.0;
    for (double a : angle) defect += 2.0 * kPi - a;
    return defect;
}

inline int euler_characteristic(const BoundaryMesh& mesh)
{
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const auto key = std::minmax(t[k], t[(k + 1) % 3]);
            edges[{key.first, key.second}] = 1;
        }
    return static_cast<int>(mesh.vertices.size()) - static_cast<int>(edges.size()) +
           static_cast<int>(mesh.triangles.size());
}

} // namespace isoperim
