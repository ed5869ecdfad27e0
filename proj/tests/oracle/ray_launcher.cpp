#include "ray_launcher.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace oracle {

namespace {

struct V {
    double x, y, z;
};
V operator+(V a, V b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
V operator-(V a, V b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
V operator*(double s, V a) { return {s * a.x, s * a.y, s * a.z}; }
double dotv(V a, V b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr double kDeg = std::numbers::pi / 180.0;

struct Wall {
    double ax, ay, bx, by;  // footprint edge a -> b
    double nx, ny;          // outward unit normal
    double h;
    int id;
};

struct Box {
    std::vector<Wall> walls;
    double h;
};

// First thing the ray p + t d (t > tmin) runs into. kind: 0 nothing,
// 1 wall (reflect), 2 roof or ground (absorb).
struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int kind = 0;
    const Wall* wall = nullptr;
};

// Slab clipping of the ray against one convex prism: the entry point is the
// largest entering-plane parameter, provided it precedes every exit.
void hit_prism(const Box& box, V p, V d, double tmin, Hit& best) {
    double t_in = -std::numeric_limits<double>::infinity();
    double t_out = std::numeric_limits<double>::infinity();
    int entry = -1;  // wall index, or -2 for the roof
    for (std::size_t i = 0; i < box.walls.size(); ++i) {
        const Wall& w = box.walls[i];
        const double dist = (p.x - w.ax) * w.nx + (p.y - w.ay) * w.ny;  // > 0 outside
        const double rate = d.x * w.nx + d.y * w.ny;
        if (rate == 0.0) {
            if (dist > 0.0) return;
            continue;
        }
        const double t = -dist / rate;
        if (rate < 0.0) {
            if (t > t_in) {
                t_in = t;
                entry = static_cast<int>(i);
            }
        } else {
            t_out = std::min(t_out, t);
        }
    }
    // Roof plane z = h (outside above), ground plane z = 0 (outside below).
    if (d.z == 0.0) {
        if (p.z > box.h || p.z < 0.0) return;
    } else {
        const double t_roof = (box.h - p.z) / d.z;
        const double t_floor = -p.z / d.z;
        if (d.z < 0.0) {
            if (t_roof > t_in) {
                t_in = t_roof;
                entry = -2;
            }
            t_out = std::min(t_out, t_floor);
        } else {
            t_out = std::min(t_out, t_roof);
            if (t_floor > t_in) {
                t_in = t_floor;
                entry = -3;
            }
        }
    }
    if (t_in >= t_out || t_in <= tmin || t_in >= best.t) return;
    best.t = t_in;
    if (entry >= 0) {
        best.kind = 1;
        best.wall = &box.walls[static_cast<std::size_t>(entry)];
    } else {
        best.kind = 2;
        best.wall = nullptr;
    }
}

}  // namespace

std::vector<std::vector<Capture>> launch(const beamxfer::Scenario& scenario, beamxfer::Vec3 source,
                                         const std::vector<beamxfer::Vec3>& receivers, const LaunchOptions& options) {
    std::vector<Box> boxes;
    int next_id = 0;
    for (const auto& b : scenario.buildings) {
        Box box;
        box.h = b.height_m;
        const std::size_t n = b.footprint.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = b.footprint[i];
            const auto c = b.footprint[(i + 1) % n];
            const double ex = c.x - a.x, ey = c.y - a.y;
            const double len = std::hypot(ex, ey);
            // Footprints wind counter-clockwise, so (ey, -ex) points out of the prism.
            box.walls.push_back({a.x, a.y, c.x, c.y, ey / len, -ex / len, b.height_m, next_id++});
        }
        boxes.push_back(std::move(box));
    }

    const double cap = std::tan(options.capture_deg * kDeg);
    std::vector<std::map<std::vector<int>, Capture>> found(receivers.size());
    const V src{source.x, source.y, source.z};

    const int n_az = static_cast<int>(std::lround(360.0 / options.step_deg));
    const int n_el = static_cast<int>(std::lround((options.elevation_max_deg - options.elevation_min_deg) / options.step_deg));
    std::vector<int> seq;
    for (int ie = 0; ie <= n_el; ++ie) {
        const double el = options.elevation_min_deg + ie * options.step_deg;
        for (int ia = 0; ia < n_az; ++ia) {
            const double az = -180.0 + ia * options.step_deg;
            const V d0{std::cos(el * kDeg) * std::cos(az * kDeg), std::cos(el * kDeg) * std::sin(az * kDeg), std::sin(el * kDeg)};
            V p = src, d = d0;
            double travelled = 0.0;
            seq.clear();
            const Wall* last = nullptr;
            for (int bounce = 0; bounce <= options.max_bounces; ++bounce) {
                Hit hit;
                // Ground absorbs.
                if (d.z < 0.0) {
                    hit.t = -p.z / d.z;
                    hit.kind = 2;
                }
                for (const Box& box : boxes) hit_prism(box, p, d, 1e-9, hit);
                // The wall we just left cannot be hit again immediately.
                if (hit.kind == 1 && hit.wall == last && hit.t < 1e-7) break;

                for (std::size_t r = 0; r < receivers.size(); ++r) {
                    const V q{receivers[r].x, receivers[r].y, receivers[r].z};
                    double t = dotv(q - p, d);
                    if (t <= 0.0 || t >= hit.t) continue;
                    const V closest = p + t * d;
                    const V off = closest - q;
                    const double miss = std::sqrt(dotv(off, off));
                    const double total = travelled + t;
                    if (miss > total * cap) continue;
                    auto [it, inserted] = found[r].try_emplace(seq);
                    if (inserted || miss < it->second.miss_m) {
                        Capture& c = it->second;
                        c.faces = seq;
                        c.length_m = total;
                        c.miss_m = miss;
                        c.aod_az = az;
                        c.aod_el = el;
                        c.aoa_az = std::atan2(-d.y, -d.x) / kDeg;
                        c.aoa_el = std::asin(std::clamp(-d.z, -1.0, 1.0)) / kDeg;
                    }
                }
                if (hit.kind != 1 || bounce == options.max_bounces) break;
                const Wall& w = *hit.wall;
                p = p + hit.t * d;
                travelled += hit.t;
                const double dn = d.x * w.nx + d.y * w.ny;
                d = V{d.x - 2.0 * dn * w.nx, d.y - 2.0 * dn * w.ny, d.z};
                seq.push_back(w.id);
                last = &w;
            }
        }
    }

    std::vector<std::vector<Capture>> out(receivers.size());
    for (std::size_t r = 0; r < receivers.size(); ++r)
        for (auto& [k, c] : found[r]) out[r].push_back(c);
    return out;
}

}  // namespace oracle
