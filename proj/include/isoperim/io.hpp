#pragma once

#include "isoperim/mesh.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace isoperim {

using Json = nlohmann::ordered_json;

/// 17 significant digits: doubles round-trip exactly through decimal text.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double json_number(const Json& j) { return j.get<double>(); }

// ---------------------------------------------------------------------------
// ASCII OFF (3D triangle meshes)

inline void write_off(const BoundaryMesh& mesh, std::ostream& os)
{
    if (mesh.ambient_dim != 3) throw input_error("OFF files carry 3D meshes only");
    os << "OFF\n" << mesh.vertices.size() << " " << mesh.triangles.size() << " 0\n";
    for (const auto& v : mesh.vertices)
        os << format_double(v.x()) << " " << format_double(v.y()) << " "
           << format_double(v.z()) << "\n";
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

inline BoundaryMesh read_off(std::istream& is)
{
    BoundaryMesh mesh;
    mesh.ambient_dim = 3;
    std::string line;
    long line_no = 0;
    auto next_line = [&]() -> std::string {
        while (std::getline(is, line)) {
            ++line_no;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            return line;
        }
        throw input_error("OFF: unexpected end of file after line " + std::to_string(line_no));
    };

    if (next_line().substr(0, 3) != "OFF")
        throw input_error("OFF: missing header at line " + std::to_string(line_no));
    std::size_t nv = 0, nf = 0, ne = 0;
    {
        std::istringstream ss(next_line());
        if (!(ss >> nv >> nf >> ne))
            throw input_error("OFF: malformed counts at line " + std::to_string(line_no));
    }
    mesh.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        std::istringstream ss(next_line());
        double x, y, z;
        if (!(ss >> x >> y >> z))
            throw input_error("OFF: malformed vertex at line " + std::to_string(line_no));
        mesh.vertices.emplace_back(x, y, z);
    }
    mesh.triangles.reserve(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        std::istringstream ss(next_line());
        int k, a, b, c;
        if (!(ss >> k >> a >> b >> c) || k != 3)
            throw input_error("OFF: face " + std::to_string(i) + " at line " +
                              std::to_string(line_no) + " is not a triangle");
        for (int idx : {a, b, c})
            if (idx < 0 || idx >= static_cast<int>(nv))
                throw input_error("OFF: face " + std::to_string(i) + " at line " +
                                  std::to_string(line_no) + " has vertex index out of range");
        mesh.triangles.push_back({a, b, c});
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// 2D curves: a JSON array of vertex loops, each loop an array of [x, y].

inline Json loops_to_json(const BoundaryMesh& mesh)
{
    if (mesh.ambient_dim != 2) throw input_error("loop JSON carries 2D curves only");
    // walk each closed loop in segment order
    std::vector<int> next(mesh.vertices.size(), -1);
    for (const auto& s : mesh.segments) next[s[0]] = s[1];
    std::vector<bool> seen(mesh.vertices.size(), false);
    Json loops = Json::array();
    for (std::size_t start = 0; start < mesh.vertices.size(); ++start) {
        if (seen[start] || next[start] < 0) continue;
        Json loop = Json::array();
        int v = static_cast<int>(start);
        do {
            seen[v] = true;
            loop.push_back(Json::array({mesh.vertices[v].x(), mesh.vertices[v].y()}));
            v = next[v];
        } while (v >= 0 && v != static_cast<int>(start) && !seen[v]);
        loops.push_back(std::move(loop));
    }
    return loops;
}

inline BoundaryMesh loops_from_json(const Json& loops)
{
    BoundaryMesh mesh;
    mesh.ambient_dim = 2;
    if (!loops.is_array()) throw input_error("loop JSON must be an array of loops");
    for (const auto& loop : loops) {
        if (!loop.is_array() || loop.size() < 3)
            throw input_error("each loop needs at least 3 vertices");
        const int base = static_cast<int>(mesh.vertices.size());
        for (const auto& pt : loop) {
            if (!pt.is_array() || pt.size() != 2)
                throw input_error("loop vertices must be [x, y] pairs");
            mesh.vertices.emplace_back(json_number(pt[0]), json_number(pt[1]), 0.0);
        }
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) mesh.segments.push_back({base + i, base + (i + 1) % n});
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// File-level helpers

inline std::string file_extension(const std::string& path)
{
    const auto dot = path.find_last_of('.');
    return dot == std::string::npos ? "" : path.substr(dot + 1);
}

inline BoundaryMesh read_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw input_error("cannot open " + path);
    const std::string ext = file_extension(path);
    if (ext == "off" || ext == "OFF") return read_off(is);
    if (ext == "json") {
        Json j;
        is >> j;
        return loops_from_json(j);
    }
    throw input_error("unknown mesh format (want .off or .json): " + path);
}

inline void write_mesh(const BoundaryMesh& mesh, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw input_error("cannot write " + path);
    if (mesh.ambient_dim == 3)
        write_off(mesh, os);
    else
        os << loops_to_json(mesh).dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// Run manifest: recorded in every output file so a run can be reproduced.
// With SOURCE_DATE_EPOCH set, reruns are byte-identical.

inline std::uint64_t fnv1a(const std::string& data)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string timestamp;

    static RunManifest make(const std::string& command, const std::string& config_text,
                            std::uint64_t seed)
    {
        RunManifest m;
        m.command = command;
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a(config_text)));
        m.config_hash = hex;
        m.seed = seed;
        if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
            m.timestamp = epoch;
        else
            m.timestamp = std::to_string(static_cast<long long>(std::time(nullptr)));
        return m;
    }

    Json to_json() const
    {
        Json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["tool_version"] = kToolVersion;
        j["timestamp"] = timestamp;
        return j;
    }
};

inline Json summary_to_json(const IsoperimetricSummary& s)
{
    Json j;
    j["volume"] = s.volume;
    j["perimeter"] = s.perimeter;
    j["iso_ratio"] = s.iso_ratio;
    j["deficit"] = s.deficit;
    j["radius"] = s.radius;
    j["component_count"] = s.component_count;
    return j;
}

} // namespace isoperim
