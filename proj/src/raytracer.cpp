#include "beamxfer/raytracer.hpp"

#include "beamxfer/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>

namespace beamxfer {

double fspl_db(double distance_m, double frequency_hz) {
    if (!(distance_m > 0.0) || !(frequency_hz > 0.0) || !std::isfinite(distance_m) || !std::isfinite(frequency_hz))
        fail(ErrorKind::Domain, "fspl_db requires positive finite distance and frequency");
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * frequency_hz / kSpeedOfLight);
}

std::vector<Face> scene_faces(const Scenario& scenario) {
    std::vector<Face> faces;
    for (std::size_t b = 0; b < scenario.buildings.size(); ++b) {
        const auto& fp = scenario.buildings[b].footprint;
        for (std::size_t k = 0; k < fp.size(); ++k) {
            const Vec2 a = fp[k];
            const Vec2 e = fp[(k + 1) % fp.size()] - a;
            const double len = norm(e);
            // Counter-clockwise footprint: the outward normal is the edge turned clockwise.
            faces.push_back({static_cast<int>(b), a, a + e, Vec2{e.y / len, -e.x / len},
                             scenario.buildings[b].height_m});
        }
    }
    return faces;
}

namespace {

struct Segment2 {
    Vec2 p0;
    Vec2 p1;
};

// Keeps the part of seg where f(p) = dot(n, p) + c >= -tol.
bool clip_halfplane(Segment2& seg, Vec2 n, double c, double tol) {
    const double f0 = dot(n, seg.p0) + c;
    const double f1 = dot(n, seg.p1) + c;
    if (f0 < -tol && f1 < -tol) return false;
    if (f0 >= -tol && f1 >= -tol) return true;
    const double s = (f0 + tol) / (f0 - f1);
    const Vec2 cut = seg.p0 + s * (seg.p1 - seg.p0);
    if (f0 < -tol)
        seg.p0 = cut;
    else
        seg.p1 = cut;
    return true;
}

// Half-plane of points p with cross(dir, p - origin) >= 0, as (n, c).
std::pair<Vec2, double> left_of(Vec2 origin, Vec2 dir) {
    const Vec2 n{-dir.y, dir.x};
    return {n, -dot(n, origin)};
}

constexpr double kClipTol = 1e-9;
constexpr double kMinWindow = 1e-7;

}  // namespace

RayTracer::RayTracer(const Scenario& scenario, Vec3 source)
    : rf_(scenario.rf), source_(source), faces_(scene_faces(scenario)) {
    for (const auto& b : scenario.buildings) {
        Prism p;
        p.footprint = b.footprint;
        p.height_m = b.height_m;
        p.lo = p.hi = b.footprint.front();
        for (std::size_t k = 0; k < b.footprint.size(); ++k) {
            const Vec2 v = b.footprint[k];
            const Vec2 e = b.footprint[(k + 1) % b.footprint.size()] - v;
            p.normals.push_back(Vec2{e.y, -e.x});
            p.lo = {std::min(p.lo.x, v.x), std::min(p.lo.y, v.y)};
            p.hi = {std::max(p.hi.x, v.x), std::max(p.hi.y, v.y)};
        }
        prisms_.push_back(std::move(p));
    }
    build_tree();
}

void RayTracer::build_tree() {
    nodes_.push_back({source_.xy(), -1, -1, 0, {}, {}});
    for (std::size_t at = 0; at < nodes_.size(); ++at) {
        const Node parent = nodes_[at];
        if (parent.depth >= rf_.max_reflections) continue;
        Vec2 wedge_lo_n{}, wedge_hi_n{};
        double wedge_lo_c = 0.0, wedge_hi_c = 0.0;
        if (parent.face >= 0) {
            Vec2 w0 = parent.w0, w1 = parent.w1;
            if (cross(w0 - parent.image, w1 - parent.image) < 0.0) std::swap(w0, w1);
            // Beam through the window: cross(w0 - S, p - S) >= 0 and cross(p - S, w1 - S) >= 0.
            std::tie(wedge_lo_n, wedge_lo_c) = left_of(parent.image, w0 - parent.image);
            std::tie(wedge_hi_n, wedge_hi_c) = left_of(parent.image, parent.image - w1);
        }
        for (std::size_t g = 0; g < faces_.size(); ++g) {
            if (static_cast<int>(g) == parent.face) continue;
            const Face& f = faces_[g];
            if (dot(parent.image - f.a, f.normal) <= kClipTol) continue;  // back-facing
            Segment2 seg{f.a, f.b};
            if (parent.face >= 0) {
                const Face& pf = faces_[static_cast<std::size_t>(parent.face)];
                if (!clip_halfplane(seg, pf.normal, -dot(pf.normal, pf.a), kClipTol)) continue;
                if (!clip_halfplane(seg, wedge_lo_n, wedge_lo_c, kClipTol)) continue;
                if (!clip_halfplane(seg, wedge_hi_n, wedge_hi_c, kClipTol)) continue;
            }
            if (norm(seg.p1 - seg.p0) < kMinWindow) continue;
            nodes_.push_back({reflect_across_line(parent.image, f.a, f.b), static_cast<int>(g),
                              static_cast<int>(at), parent.depth + 1, seg.p0, seg.p1});
        }
    }
}

bool RayTracer::blocked(Vec3 a, Vec3 b, int skip0, int skip1) const {
    const Vec3 d = b - a;
    const Vec2 lo{std::min(a.x, b.x), std::min(a.y, b.y)};
    const Vec2 hi{std::max(a.x, b.x), std::max(a.y, b.y)};
    const double zmin = std::min(a.z, b.z);
    for (std::size_t i = 0; i < prisms_.size(); ++i) {
        if (static_cast<int>(i) == skip0 || static_cast<int>(i) == skip1) continue;
        const Prism& p = prisms_[i];
        if (hi.x < p.lo.x || lo.x > p.hi.x || hi.y < p.lo.y || lo.y > p.hi.y || zmin > p.height_m) continue;
        // Cyrus-Beck clipping of the parameter range against the closed prism.
        double tlo = 0.0, thi = 1.0;
        auto clip = [&](double num, double den) {
            // constraint: num + t * den <= 0
            if (den == 0.0) return num <= 0.0;
            const double t = -num / den;
            if (den > 0.0)
                thi = std::min(thi, t);
            else
                tlo = std::max(tlo, t);
            return tlo <= thi;
        };
        bool hit = true;
        for (std::size_t k = 0; k < p.footprint.size() && hit; ++k) {
            hit = clip(dot(a.xy() - p.footprint[k], p.normals[k]), dot(d.xy(), p.normals[k]));
        }
        if (hit) hit = clip(-a.z, -d.z);
        if (hit) hit = clip(a.z - p.height_m, d.z);
        if (hit) return true;
    }
    return false;
}

bool RayTracer::validate(int node, Vec3 receiver, PropagationPath& out) const {
    const int depth = nodes_[static_cast<std::size_t>(node)].depth;
    std::array<int, 16> chain{};
    std::vector<int> chain_dyn;
    int* ids = chain.data();
    if (depth > static_cast<int>(chain.size())) {
        chain_dyn.resize(static_cast<std::size_t>(depth));
        ids = chain_dyn.data();
    }
    for (int n = node, k = depth - 1; n > 0; n = nodes_[static_cast<std::size_t>(n)].parent, --k) ids[k] = n;

    // Walk back from the receiver: each reflection point is where the line
    // from the current image to the current target crosses that image's wall.
    std::vector<Vec2> points(static_cast<std::size_t>(depth));
    Vec2 target = receiver.xy();
    for (int k = depth - 1; k >= 0; --k) {
        const Node& nd = nodes_[static_cast<std::size_t>(ids[k])];
        const Face& f = faces_[static_cast<std::size_t>(nd.face)];
        const Vec2 d = target - nd.image;
        const Vec2 e = f.b - f.a;
        const double denom = cross(d, e);
        if (denom == 0.0) return false;
        const double t = cross(f.a - nd.image, e) / denom;
        const double s = cross(f.a - nd.image, d) / denom;
        if (!(t > 0.0 && t < 1.0) || s < 0.0 || s > 1.0) return false;
        target = nd.image + t * d;
        points[static_cast<std::size_t>(k)] = target;
    }

    // Heights follow the straight unfolded ray.
    double total = 0.0;
    Vec2 prev = source_.xy();
    std::vector<double> cumulative(static_cast<std::size_t>(depth));
    for (int k = 0; k < depth; ++k) {
        total += norm(points[static_cast<std::size_t>(k)] - prev);
        cumulative[static_cast<std::size_t>(k)] = total;
        prev = points[static_cast<std::size_t>(k)];
    }
    total += norm(receiver.xy() - prev);
    const double dz = receiver.z - source_.z;
    const double length = std::sqrt(total * total + dz * dz);
    if (!(length > 0.0) || (depth > 0 && !(total > 0.0))) return false;

    out.reflection_points.clear();
    out.faces.clear();
    for (int k = 0; k < depth; ++k) {
        const Node& nd = nodes_[static_cast<std::size_t>(ids[k])];
        const Face& f = faces_[static_cast<std::size_t>(nd.face)];
        const double z = source_.z + (receiver.z - source_.z) * cumulative[static_cast<std::size_t>(k)] / total;
        if (z < 0.0 || z > f.height_m) return false;  // ray passes over the wall
        out.reflection_points.push_back({points[static_cast<std::size_t>(k)].x,
                                         points[static_cast<std::size_t>(k)].y, z});
        out.faces.push_back(nd.face);
    }

    Vec3 from = source_;
    int from_building = -1;
    for (int k = 0; k <= depth; ++k) {
        const Vec3 to = k < depth ? out.reflection_points[static_cast<std::size_t>(k)] : receiver;
        const int to_building = k < depth ? faces_[static_cast<std::size_t>(out.faces[static_cast<std::size_t>(k)])].building : -1;
        // A segment leaving (or reaching) a convex wall on its outer side only
        // touches that building at the reflection point itself.
        if (blocked(from, to, from_building, to_building)) return false;
        from = to;
        from_building = to_building;
    }

    out.length_m = length;
    out.bounces = depth;
    out.kind = depth == 0 ? PathKind::LoS : PathKind::NLoS;
    out.path_loss_db = fspl_db(out.length_m, rf_.carrier_frequency_hz) + depth * rf_.reflection_loss_db;
    const Vec3 first = depth > 0 ? out.reflection_points.front() : receiver;
    const Vec3 last = depth > 0 ? out.reflection_points.back() : source_;
    out.aod = direction_of(first - source_);
    out.aoa = direction_of(last - receiver);
    return true;
}

std::vector<PropagationPath> RayTracer::trace(Vec3 receiver) const {
    std::vector<PropagationPath> paths;
    PropagationPath path;
    if (receiver.xy() != source_.xy() || receiver.z != source_.z) {
        if (validate(0, receiver, path)) paths.push_back(path);
    }
    const Vec2 r = receiver.xy();
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const Node& nd = nodes_[i];
        const Face& f = faces_[static_cast<std::size_t>(nd.face)];
        if (dot(r - f.a, f.normal) <= 0.0) continue;
        // Cheap wedge pre-filter; validate() is the exact test.
        const double c0 = cross(nd.w0 - nd.image, r - nd.image);
        const double c1 = cross(r - nd.image, nd.w1 - nd.image);
        const double tol = 1e-9 * (1.0 + norm(r - nd.image));
        if (cross(nd.w0 - nd.image, nd.w1 - nd.image) >= 0.0) {
            if (c0 < -tol || c1 < -tol) continue;
        } else {
            if (c0 > tol || c1 > tol) continue;
        }
        if (validate(static_cast<int>(i), receiver, path)) paths.push_back(path);
    }
    std::sort(paths.begin(), paths.end(), [](const PropagationPath& a, const PropagationPath& b) {
        if (a.path_loss_db != b.path_loss_db) return a.path_loss_db < b.path_loss_db;
        if (a.bounces != b.bounces) return a.bounces < b.bounces;
        return a.faces < b.faces;
    });
    return paths;
}

bool line_of_sight(const Scenario& scenario, Vec3 a, Vec3 b) {
    Scenario los_only = scenario;
    los_only.rf.max_reflections = 0;
    los_only.gnbs.clear();
    const RayTracer tracer(los_only, a);
    return tracer.trace(b).size() == 1 || a == b;
}

std::vector<PropagationPath> trace(const Scenario& scenario, const GnbSite& gnb, Vec3 ue) {
    return RayTracer(scenario, gnb.position).trace(ue);
}

void write_paths_csv_header(std::ostream& out) {
    out << "gnb_id,ue_x,ue_y,kind,bounces,length_m,path_loss_db,aod_az,aod_el,aoa_az,aoa_el\n";
}

void write_paths_csv(std::ostream& out, int gnb_id, Vec3 ue, const std::vector<PropagationPath>& paths) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(10);
    for (const auto& p : paths) {
        out << gnb_id << ',' << ue.x << ',' << ue.y << ',' << (p.kind == PathKind::LoS ? "LoS" : "NLoS") << ','
            << p.bounces << ',' << p.length_m << ',' << p.path_loss_db << ',' << p.aod.azimuth_deg << ','
            << p.aod.elevation_deg << ',' << p.aoa.azimuth_deg << ',' << p.aoa.elevation_deg << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

}  // namespace beamxfer
