#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace beamxfer {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec2 xy() const { return {x, y}; }

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Maps any angle to [-180, 180).
double wrap_azimuth_deg(double deg);

// Azimuth/elevation in degrees of a direction vector; azimuth in [-180, 180).
struct Direction {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
    friend bool operator==(const Direction&, const Direction&) = default;
};
Direction direction_of(Vec3 v);

// Mirror image of p across the infinite line through a and b.
Vec2 reflect_across_line(Vec2 p, Vec2 a, Vec2 b);

// Signed doubled area; positive for counter-clockwise vertex order.
double signed_area2(std::span<const Vec2> polygon);

// True iff every turn is strictly left and the boundary winds exactly once.
bool is_strictly_convex_ccw(std::span<const Vec2> polygon);

// Strict interior test for a counter-clockwise convex polygon.
bool inside_convex_strict(Vec2 p, std::span<const Vec2> ccw);

// Closed interior test (boundary counts as inside).
bool inside_convex_closed(Vec2 p, std::span<const Vec2> ccw);

}  // namespace beamxfer
