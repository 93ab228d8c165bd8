#pragma once

#include "isoperim/core.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <sstream>

namespace isoperim {

/// Closed oriented piecewise-linear boundary: a triangle mesh in 3-space or a
/// set of closed polyline loops in the plane (z = 0). Orientation convention is
/// outward normals, i.e. positive enclosed volume.
struct BoundaryMesh {
    int ambient_dim = 3;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles; // 3D only
    std::vector<std::array<int, 2>> segments;  // 2D only

    std::size_t element_count() const
    {
        return ambient_dim == 3 ? triangles.size() : segments.size();
    }
};

struct MeshDefect {
    std::string kind;
    long element = -1; // element or vertex index, -1 for global defects
    std::string detail;
};

struct IsoperimetricSummary {
    double volume = 0.0;
    double perimeter = 0.0;
    double iso_ratio = 0.0;
    double deficit = 0.0;
    double radius = 0.0;
    int component_count = 0;
};

/// Radial shell { x : | |x-center| - radius | <= radius * width_ratio }.
struct AnnulusSpec {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    double width_ratio = 0.0;

    bool contains(const Vec3& p) const
    {
        return std::abs((p - center).norm() - radius) <= radius * width_ratio;
    }
};

inline double bounding_box_diagonal(const BoundaryMesh& mesh)
{
    if (mesh.vertices.empty()) return 0.0;
    Vec3 lo = mesh.vertices.front(), hi = lo;
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c)
{
    return 0.5 * (b - a).cross(c - a).norm();
}

inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

inline double enclosed_volume_unchecked(const BoundaryMesh& mesh)
{
    double vol = 0.0;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles) {
            const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
                       &c = mesh.vertices[t[2]];
            vol += a.dot(b.cross(c)) / 6.0;
        }
    } else {
        for (const auto& s : mesh.segments) {
            const Vec3 &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]];
            vol += 0.5 * (a.x() * b.y() - b.x() * a.y());
        }
    }
    return vol;
}

inline double perimeter_unchecked(const BoundaryMesh& mesh)
{
    double p = 0.0;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles)
            p += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    } else {
        for (const auto& s : mesh.segments)
            p += (mesh.vertices[s[1]] - mesh.vertices[s[0]]).norm();
    }
    return p;
}

/// Checks all structural invariants. Returns an empty list iff the mesh is a
/// closed, consistently oriented, non-degenerate boundary with positive
/// enclosed volume. Total function: never throws on bad input.
inline std::vector<MeshDefect> validate(const BoundaryMesh& mesh)
{
    std::vector<MeshDefect> defects;
    const long nv = static_cast<long>(mesh.vertices.size());
    const double diag = bounding_box_diagonal(mesh);
    const double area_floor = 1e-14 * diag * diag;

    if (mesh.ambient_dim != 2 && mesh.ambient_dim != 3) {
        defects.push_back({"bad_ambient_dim", -1, "ambient_dim must be 2 or 3"});
        return defects;
    }

    std::vector<int> valence(mesh.vertices.size(), 0);

    if (mesh.ambient_dim == 3) {
        if (!mesh.segments.empty())
            defects.push_back({"mixed_elements", -1, "3D mesh carries 2D segments"});
        // directed edge -> count; opposite traversal means each undirected edge
        // appears once per direction
        std::map<std::pair<int, int>, int> directed;
        for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
            const auto& t = mesh.triangles[f];
            bool in_range = true;
            for (int k = 0; k < 3; ++k)
                if (t[k] < 0 || t[k] >= nv) {
                    defects.push_back({"index_out_of_range", static_cast<long>(f), ""});
                    in_range = false;
                }
            if (!in_range) continue;
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
                defects.push_back({"degenerate_triangle", static_cast<long>(f),
                                   "repeated vertex index"});
                continue;
            }
            for (int k = 0; k < 3; ++k) {
                directed[{t[k], t[(k + 1) % 3]}]++;
                valence[t[k]]++;
            }
            const double area = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                              mesh.vertices[t[2]]);
            if (!(area > area_floor))
                defects.push_back({"zero_area_triangle", static_cast<long>(f), ""});
        }
        std::map<std::pair<int, int>, int> undirected_imbalance;
        for (const auto& [edge, count] : directed) {
            if (count > 1)
                defects.push_back({"duplicated_directed_edge", edge.first,
                                   "edge traversed " + std::to_string(count) + " times in the same direction"});
            auto rev = directed.find({edge.second, edge.first});
            if (rev == directed.end()) {
                const auto key = std::minmax(edge.first, edge.second);
                if (!undirected_imbalance.count({key.first, key.second})) {
                    undirected_imbalance[{key.first, key.second}] = 1;
                    std::ostringstream os;
                    os << "edge (" << edge.first << "," << edge.second
                       << ") lacks an oppositely traversed twin";
                    defects.push_back({"non_manifold_edge", edge.first, os.str()});
                }
            }
        }
    } else {
        if (!mesh.triangles.empty())
            defects.push_back({"mixed_elements", -1, "2D curve carries triangles"});
        std::vector<int> out_deg(mesh.vertices.size(), 0), in_deg(mesh.vertices.size(), 0);
        for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
            const auto& e = mesh.segments[s];
            if (e[0] < 0 || e[0] >= nv || e[1] < 0 || e[1] >= nv) {
                defects.push_back({"index_out_of_range", static_cast<long>(s), ""});
                continue;
            }
            out_deg[e[0]]++;
            in_deg[e[1]]++;
            valence[e[0]]++;
            valence[e[1]]++;
            const double len = (mesh.vertices[e[1]] - mesh.vertices[e[0]]).norm();
            if (!(len > 1e-14 * diag))
                defects.push_back({"zero_length_segment", static_cast<long>(s), ""});
        }
        for (long v = 0; v < nv; ++v) {
            if (out_deg[v] != 1 || in_deg[v] != 1) {
                std::ostringstream os;
                os << "vertex has " << in_deg[v] << " incoming and " << out_deg[v]
                   << " outgoing segments";
                defects.push_back({"open_curve", v, os.str()});
            }
        }
    }

    for (long v = 0; v < nv; ++v)
        if (valence[v] == 0) defects.push_back({"isolated_vertex", v, ""});

    if (mesh.element_count() == 0) {
        defects.push_back({"empty_mesh", -1, ""});
    } else if (!(enclosed_volume_unchecked(mesh) > 0.0)) {
        defects.push_back({"nonpositive_volume", -1, "orientation is not outward"});
    }
    return defects;
}

inline void require_valid(const BoundaryMesh& mesh)
{
    const auto defects = validate(mesh);
    if (defects.empty()) return;
    std::ostringstream os;
    os << "invalid mesh (" << defects.size() << " defects):";
    for (std::size_t i = 0; i < std::min<std::size_t>(defects.size(), 6); ++i)
        os << " [" << defects[i].kind << " @" << defects[i].element << "]";
    throw input_error(os.str());
}

/// Signed polyhedral (or polygonal) enclosed volume via cone volumes from the
/// origin. Exact for closed oriented boundaries; translation invariance is a
/// tested property, not an assumption.
inline double enclosed_volume(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    return enclosed_volume_unchecked(mesh);
}

inline double perimeter(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    return perimeter_unchecked(mesh);
}

/// Connected-component labels over elements (union-find on shared vertices).
inline std::vector<int> element_components(const BoundaryMesh& mesh)
{
    std::vector<int> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    if (mesh.ambient_dim == 3)
        for (const auto& t : mesh.triangles) {
            unite(t[0], t[1]);
            unite(t[1], t[2]);
        }
    else
        for (const auto& s : mesh.segments) unite(s[0], s[1]);

    std::map<int, int> label;
    std::vector<int> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const int root = find(mesh.ambient_dim == 3 ? mesh.triangles[e][0] : mesh.segments[e][0]);
        auto it = label.find(root);
        if (it == label.end()) it = label.emplace(root, static_cast<int>(label.size())).first;
        out[e] = it->second;
    }
    return out;
}

inline int component_count(const BoundaryMesh& mesh)
{
    const auto labels = element_components(mesh);
    return labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
}

inline IsoperimetricSummary isoperimetric_summary(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    IsoperimetricSummary s;
    s.volume = enclosed_volume_unchecked(mesh);
    if (!(s.volume > 0.0)) throw numeric_error("nonpositive enclosed volume");
    s.perimeter = perimeter_unchecked(mesh);
    const int d = mesh.ambient_dim;
    s.iso_ratio = s.perimeter / std::pow(s.volume, (d - 1.0) / d);
    s.deficit = s.iso_ratio / ball_iso_ratio(d) - 1.0;
    s.radius = std::pow(s.volume / unit_ball_volume(d), 1.0 / d);
    s.component_count = component_count(mesh);
    return s;
}

// ---------------------------------------------------------------------------
// Simple geometric helpers shared by several modules.

inline BoundaryMesh transformed(const BoundaryMesh& mesh, const RigidMotion& motion)
{
    BoundaryMesh out = mesh;
    for (auto& v : out.vertices) v = motion(v);
    return out;
}

inline BoundaryMesh scaled(const BoundaryMesh& mesh, double s)
{
    BoundaryMesh out = mesh;
    for (auto& v : out.vertices) v *= s;
    return out;
}

inline BoundaryMesh translated(const BoundaryMesh& mesh, const Vec3& t)
{
    BoundaryMesh out = mesh;
    for (auto& v : out.vertices) v += t;
    return out;
}

/// Area-weighted mean of element centroids; the recentring point for the
/// spectral comparisons.
inline Vec3 boundary_moment(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    Vec3 m = Vec3::Zero();
    double total = 0.0;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles) {
            const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
                       &c = mesh.vertices[t[2]];
            const double w = triangle_area(a, b, c);
            m += w * (a + b + c) / 3.0;
            total += w;
        }
    } else {
        for (const auto& s : mesh.segments) {
            const Vec3 &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]];
            const double w = (b - a).norm();
            m += w * 0.5 * (a + b);
            total += w;
        }
    }
    return m / total;
}

/// Centroid of the enclosed region (first moment by the divergence theorem).
inline Vec3 volume_centroid(const BoundaryMesh& mesh)
{
    require_valid(mesh);
    Vec3 m = Vec3::Zero();
    double vol = 0.0;
    if (mesh.ambient_dim == 3) {
        for (const auto& t : mesh.triangles) {
            const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
                       &c = mesh.vertices[t[2]];
            const double v = a.dot(b.cross(c)) / 6.0;
            m += v * (a + b + c) / 4.0; // tet centroid with the origin apex
            vol += v;
        }
    } else {
        for (const auto& s : mesh.segments) {
            const Vec3 &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]];
            const double v = 0.5 * (a.x() * b.y() - b.x() * a.y());
            m += v * (a + b) / 3.0;
            vol += v;
        }
    }
    return m / vol;
}

} // namespace isoperim
