#include "beamxfer/geometry.hpp"

#include <cmath>

namespace beamxfer {

double wrap_azimuth_deg(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    w -= 180.0;
    // fmod rounding can land exactly on +180
    if (w >= 180.0) w -= 360.0;
    return w;
}

Direction direction_of(Vec3 v) {
    const double horizontal = std::hypot(v.x, v.y);
    return {wrap_azimuth_deg(rad2deg(std::atan2(v.y, v.x))),
            rad2deg(std::atan2(v.z, horizontal))};
}

Vec2 reflect_across_line(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double t = dot(p - a, d) / dot(d, d);
    const Vec2 foot = a + t * d;
    return foot + foot - p;
}

double signed_area2(std::span<const Vec2> polygon) {
    double acc = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        acc += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
    }
    return acc;
}

bool is_strictly_convex_ccw(std::span<const Vec2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = polygon[(i + 1) % n] - polygon[i];
        const Vec2 e1 = polygon[(i + 2) % n] - polygon[(i + 1) % n];
        if (norm(e0) == 0.0 || norm(e1) == 0.0) return false;
        const double c = cross(e0, e1);
        if (c <= 0.0) return false;
        turning += std::atan2(c, dot(e0, e1));
    }
    // A star polygon also turns left everywhere but winds more than once.
    return std::abs(turning - 2.0 * std::numbers::pi) < 1e-6;
}

bool inside_convex_strict(Vec2 p, std::span<const Vec2> ccw) {
    const std::size_t n = ccw.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(ccw[(i + 1) % n] - ccw[i], p - ccw[i]) <= 0.0) return false;
    }
    return n >= 3;
}

bool inside_convex_closed(Vec2 p, std::span<const Vec2> ccw) {
    const std::size_t n = ccw.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(ccw[(i + 1) % n] - ccw[i], p - ccw[i]) < 0.0) return false;
    }
    return n >= 3;
}

}  // namespace beamxfer
