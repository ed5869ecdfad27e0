#pragma once

#include "beamxfer/raytracer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Angle between two 3D vectors via atan2, accurate near 0 and pi.
inline double angle_between(beamxfer::Vec3 a, beamxfer::Vec3 b) {
    const beamxfer::Vec3 c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    return std::atan2(norm(c), dot(a, b));
}

// Largest |incidence - reflection| angle over all bounces of a path.
inline double specular_residual(const beamxfer::PropagationPath& p, const std::vector<beamxfer::Face>& faces,
                                beamxfer::Vec3 tx, beamxfer::Vec3 rx) {
    std::vector<beamxfer::Vec3> pts{tx};
    pts.insert(pts.end(), p.reflection_points.begin(), p.reflection_points.end());
    pts.push_back(rx);
    double worst = 0.0;
    for (std::size_t k = 0; k < p.faces.size(); ++k) {
        const beamxfer::Vec2 n2 = faces[static_cast<std::size_t>(p.faces[k])].normal;
        const beamxfer::Vec3 n{n2.x, n2.y, 0.0};
        const beamxfer::Vec3 in = pts[k] - pts[k + 1];
        const beamxfer::Vec3 out = pts[k + 2] - pts[k + 1];
        worst = std::max(worst, std::abs(angle_between(in, n) - angle_between(out, n)));
        // Incoming, outgoing and the normal must be coplanar as well.
        const beamxfer::Vec3 t_in = in - dot(in, n) * n, t_out = out - dot(out, n) * n;
        worst = std::max(worst, angle_between(t_in, -1.0 * t_out) * (norm(t_in) > 1e-9));
    }
    return worst;
}

}  // namespace oracle
