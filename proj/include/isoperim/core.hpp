#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isoperim {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Error with a machine-readable category ("input", "numeric").
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

inline Error input_error(const std::string& msg) { return Error("input", msg); }
inline Error numeric_error(const std::string& msg) { return Error("numeric", msg); }

inline std::string format_g(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Unit-ball volume and isoperimetric ratio of the ball in ambient dimension d (2 or 3).
inline double unit_ball_volume(int d)
{
    if (d == 2) return kPi;
    if (d == 3) return 4.0 * kPi / 3.0;
    throw input_error("ambient dimension must be 2 or 3");
}

inline double ball_iso_ratio(int d)
{
    // I(B) = P(B)/|B|^{(d-1)/d} = d |B|^{1/d}
    return d * std::pow(unit_ball_volume(d), 1.0 / d);
}

// ---------------------------------------------------------------------------
// Counter-based RNG. Every draw is a pure function of (seed, stream, counter),
// so stratified estimators are reproducible for any thread count.

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const
    {
        return splitmix64(seed_ ^ splitmix64(stream ^ splitmix64(counter)));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform(std::uint64_t stream, std::uint64_t counter) const
    {
        return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
    }

    Vec3 unit_vector(std::uint64_t stream, std::uint64_t counter) const
    {
        const double z = 2.0 * uniform(stream, 2 * counter) - 1.0;
        const double phi = 2.0 * kPi * uniform(stream, 2 * counter + 1);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Rigid motions (tests and recentering helpers).

struct RigidMotion {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }
};

/// Deterministic random rotation from two RNG draws (uniform axis, uniform angle).
inline RigidMotion random_rigid_motion(const CounterRng& rng, std::uint64_t stream)
{
    const Vec3 axis = rng.unit_vector(stream, 0);
    const double angle = 2.0 * kPi * rng.uniform(stream, 10);
    RigidMotion m;
    m.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    m.translation = Vec3(rng.uniform(stream, 11) - 0.5, rng.uniform(stream, 12) - 0.5,
                         rng.uniform(stream, 13) - 0.5) *
                    4.0;
    return m;
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex minimizer, dimension 2 or 3. Deterministic.

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double step, int max_eval = 4000,
                                    double xtol = 1e-10, double ftol = 1e-14)
{
    const int n = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return f(x);
    };
    for (int i = 1; i <= n; ++i) pts[i](i - 1) += step;
    for (int i = 0; i <= n; ++i) val[i] = eval(pts[i]);

    auto order = [&] {
        for (int i = 0; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j)
                if (val[j] < val[i]) {
                    std::swap(val[i], val[j]);
                    std::swap(pts[i], pts[j]);
                }
    };

    NelderMeadResult res;
    while (evals < max_eval) {
        order();
        double size = 0.0;
        for (int i = 1; i <= n; ++i) size = std::max(size, (pts[i] - pts[0]).norm());
        if (size < xtol || std::abs(val[n] - val[0]) < ftol) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += pts[i];
        centroid /= n;

        const Eigen::VectorXd xr = centroid + (centroid - pts[n]);
        const double fr = eval(xr);
        if (fr < val[0]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[n] = xe;
                val[n] = fe;
            } else {
                pts[n] = xr;
                val[n] = fr;
            }
        } else if (fr < val[n - 1]) {
            pts[n] = xr;
            val[n] = fr;
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
            const double fc = eval(xc);
            if (fc < val[n]) {
                pts[n] = xc;
                val[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    val[i] = eval(pts[i]);
                }
            }
        }
    }
    order();
    res.x = pts[0];
    res.value = val[0];
    res.evaluations = evals;
    return res;
}

/// Golden-angle point set on the unit sphere (quasi-uniform).
inline std::vector<Vec3> fibonacci_sphere(int count)
{
    std::vector<Vec3> pts;
    pts.reserve(count);
    const double ga = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = ga * i;
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return pts;
}

/// The 12 icosahedral vertex directions.
inline std::vector<Vec3> icosahedral_directions()
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> dirs = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                              {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                              {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
    for (auto& d : dirs) d.normalize();
    return dirs;
}

} // namespace isoperim
