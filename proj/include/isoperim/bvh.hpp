#pragma once

#include "isoperim/mesh.hpp"

#include <bit>

namespace isoperim {

inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    // Ericson, Real-Time Collision Detection, 5.1.5
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Signed solid angle of triangle (a, b, c) seen from p (van Oosterom-Strackee).
inline double triangle_solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ra = a - p, rb = b - p, rc = c - p;
    const double la = ra.norm(), lb = rb.norm(), lc = rc.norm();
    const double num = ra.dot(rb.cross(rc));
    const double den =
        la * lb * lc + ra.dot(rb) * lc + rb.dot(rc) * la + rc.dot(ra) * lb;
    return 2.0 * std::atan2(num, den);
}

enum class PointClass { inside, outside, boundary };

/// Median-split bounding volume hierarchy over the triangles of a 3D mesh.
/// Supports exact closest-point distance and robust inside/outside queries.
class TriangleBvh {
public:
    explicit TriangleBvh(const BoundaryMesh& mesh) : mesh_(&mesh)
    {
        if (mesh.ambient_dim != 3) throw input_error("TriangleBvh needs a 3D mesh");
        const std::size_t n = mesh.triangles.size();
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0);
        centroids_.reserve(n);
        for (const auto& t : mesh.triangles)
            centroids_.push_back((mesh.vertices[t[0]] + mesh.vertices[t[1]] +
                                  mesh.vertices[t[2]]) / 3.0);
        nodes_.reserve(2 * n);
        root_ = build(0, n);
    }

    double distance(const Vec3& p) const
    {
        double best = std::numeric_limits<double>::infinity();
        nearest(root_, p, best);
        return std::sqrt(best);
    }

    /// Generalized winding number (1 inside, 0 outside for watertight meshes).
    double winding_number(const Vec3& p) const
    {
        double omega = 0.0;
        for (const auto& t : mesh_->triangles)
            omega += triangle_solid_angle(p, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                          mesh_->vertices[t[2]]);
        return omega / (4.0 * kPi);
    }

    /// Fast membership test: ray-crossing parity with deterministic direction
    /// retries; falls back to the winding number when every ray is ambiguous.
    bool contains(const Vec3& p) const
    {
        const std::uint64_t h0 =
            splitmix64(std::bit_cast<std::uint64_t>(p.x()) ^
                       splitmix64(std::bit_cast<std::uint64_t>(p.y()) ^
                                  splitmix64(std::bit_cast<std::uint64_t>(p.z()))));
        for (int attempt = 0; attempt < 8; ++attempt) {
            const std::uint64_t h = splitmix64(h0 + attempt);
            const double z = 2.0 * ((h >> 11) * 0x1.0p-53) - 1.0;
            const double phi = 2.0 * kPi * ((splitmix64(h) >> 11) * 0x1.0p-53);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);
            int crossings = 0;
            if (count_crossings(root_, p, dir, crossings)) return crossings % 2 == 1;
        }
        return winding_number(p) > 0.5;
    }

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;
        int begin = 0, end = 0; // leaf range in order_
    };

    int build(std::size_t begin, std::size_t end)
    {
        Node node;
        node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        node.hi = -node.lo;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& t = mesh_->triangles[order_[i]];
            for (int k = 0; k < 3; ++k) {
                node.lo = node.lo.cwiseMin(mesh_->vertices[t[k]]);
                node.hi = node.hi.cwiseMax(mesh_->vertices[t[k]]);
            }
        }
        const int idx = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= 4) {
            nodes_[idx].begin = static_cast<int>(begin);
            nodes_[idx].end = static_cast<int>(end);
            return idx;
        }
        int axis = 0;
        const Vec3 extent = node.hi - node.lo;
        if (extent.y() > extent.x()) axis = 1;
        if (extent.z() > extent[axis]) axis = 2;
        const std::size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return centroids_[a][axis] < centroids_[b][axis];
                         });
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    static double box_distance_sq(const Node& n, const Vec3& p)
    {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double lo = n.lo[k] - p[k], hi = p[k] - n.hi[k];
            const double g = std::max({lo, hi, 0.0});
            d += g * g;
        }
        return d;
    }

    void nearest(int idx, const Vec3& p, double& best) const
    {
        const Node& n = nodes_[idx];
        if (box_distance_sq(n, p) >= best) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const auto& t = mesh_->triangles[order_[i]];
                const Vec3 q = closest_point_on_triangle(p, mesh_->vertices[t[0]],
                                                         mesh_->vertices[t[1]],
                                                         mesh_->vertices[t[2]]);
                best = std::min(best, (q - p).squaredNorm());
            }
            return;
        }
        const double dl = box_distance_sq(nodes_[n.left], p);
        const double dr = box_distance_sq(nodes_[n.right], p);
        if (dl < dr) {
            nearest(n.left, p, best);
            nearest(n.right, p, best);
        } else {
            nearest(n.right, p, best);
            nearest(n.left, p, best);
        }
    }

    static bool ray_box(const Node& n, const Vec3& o, const Vec3& inv_dir)
    {
        double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            const double t1 = (n.lo[k] - o[k]) * inv_dir[k];
            const double t2 = (n.hi[k] - o[k]) * inv_dir[k];
            tmin = std::max(tmin, std::min(t1, t2));
            tmax = std::min(tmax, std::max(t1, t2));
        }
        return tmax >= tmin;
    }

    /// Returns false on a numerically ambiguous hit (grazing edge/vertex).
    bool count_crossings(int idx, const Vec3& o, const Vec3& dir, int& crossings) const
    {
        const Vec3 inv_dir = dir.cwiseInverse();
        int stack[64];
        int top = 0;
        stack[top++] = idx;
        while (top > 0) {
            const Node& n = nodes_[stack[--top]];
            if (!ray_box(n, o, inv_dir)) continue;
            if (n.left >= 0) {
                stack[top++] = n.left;
                stack[top++] = n.right;
                continue;
            }
            for (int i = n.begin; i < n.end; ++i) {
                const auto& tri = mesh_->triangles[order_[i]];
                const Vec3 &a = mesh_->vertices[tri[0]], &b = mesh_->vertices[tri[1]],
                           &c = mesh_->vertices[tri[2]];
                const Vec3 e1 = b - a, e2 = c - a;
                const Vec3 pv = dir.cross(e2);
                const double det = e1.dot(pv);
                const double scale = e1.norm() * e2.norm();
                if (std::abs(det) < 1e-14 * scale) {
                    if (std::abs((o - a).dot(e1.cross(e2).normalized())) <
                        1e-12 * std::sqrt(scale))
                        return false; // ray nearly in the triangle plane
                    continue;
                }
                const double inv = 1.0 / det;
                const Vec3 tv = o - a;
                const double u = tv.dot(pv) * inv;
                const Vec3 qv = tv.cross(e1);
                const double v = dir.dot(qv) * inv;
                const double t = e2.dot(qv) * inv;
                const double margin = 1e-10;
                if (u > -margin && u < margin) return false;
                if (v > -margin && v < margin) return false;
                if (u + v > 1.0 - margin && u + v < 1.0 + margin) return false;
                if (t > -margin && t < margin) return false;
                if (u > 0 && v > 0 && u + v < 1.0 && t > 0) ++crossings;
            }
        }
        return true;
    }

    const BoundaryMesh* mesh_;
    std::vector<std::size_t> order_;
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Winding-number membership with a boundary band: ambiguous winding or small
/// surface distance classifies as boundary.
inline PointClass point_in_solid(const BoundaryMesh& mesh, const TriangleBvh& bvh, const Vec3& q,
                                 double boundary_tol = 1e-9)
{
    (void)mesh;
    if (bvh.distance(q) < boundary_tol) return PointClass::boundary;
    const double w = bvh.winding_number(q);
    if (std::abs(w - std::lround(w)) > 0.25) return PointClass::boundary;
    return std::lround(w) % 2 != 0 ? PointClass::inside : PointClass::outside;
}

} // namespace isoperim
