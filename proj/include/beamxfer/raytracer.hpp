#pragma once

#include "beamxfer/geometry.hpp"
#include "beamxfer/scenario.hpp"

#include <ostream>
#include <vector>

namespace beamxfer {

inline constexpr double kSpeedOfLight = 299792458.0;

// Free-space path loss 20 log10(4 pi d f / c) in dB.
double fspl_db(double distance_m, double frequency_hz);

enum class PathKind { LoS, NLoS };

struct PropagationPath {
    PathKind kind = PathKind::LoS;
    Direction aod;  // at the transmitter, pointing along the departing ray
    Direction aoa;  // at the receiver, pointing back toward the last interaction
    double path_loss_db = 0.0;
    double length_m = 0.0;
    int bounces = 0;
    // Global face ids (see scene_faces) and reflection points, in travel order.
    std::vector<int> faces;
    std::vector<Vec3> reflection_points;
};

// Vertical wall of a building: footprint edge a -> b, outward unit normal.
struct Face {
    int building = 0;
    Vec2 a;
    Vec2 b;
    Vec2 normal;
    double height_m = 0.0;
};

std::vector<Face> scene_faces(const Scenario& scenario);

// True iff segment a-b touches no building (walls and roofs are closed sets,
// so grazing contact counts as blocked).
bool line_of_sight(const Scenario& scenario, Vec3 a, Vec3 b);

// Image-method tracer for one transmitter. Construction builds the tree of
// wall images (with the visibility window each image is seen through); each
// trace() call then validates the candidates for one receiver.
class RayTracer {
public:
    RayTracer(const Scenario& scenario, Vec3 source);

    // LoS plus specular wall reflections up to rf.max_reflections, sorted by
    // ascending path loss. Thread-safe.
    std::vector<PropagationPath> trace(Vec3 receiver) const;

    std::size_t image_count() const { return nodes_.size() - 1; }
    const std::vector<Face>& faces() const { return faces_; }

private:
    struct Node {
        Vec2 image;
        int face = -1;
        int parent = -1;
        int depth = 0;
        Vec2 w0;  // visibility window on `face`
        Vec2 w1;
    };

    struct Prism {
        std::vector<Vec2> footprint;
        std::vector<Vec2> normals;
        double height_m = 0.0;
        Vec2 lo;
        Vec2 hi;
    };

    bool blocked(Vec3 a, Vec3 b, int skip0, int skip1) const;
    void build_tree();
    bool validate(int node, Vec3 receiver, PropagationPath& out) const;

    RfConfig rf_;
    Vec3 source_;
    std::vector<Face> faces_;
    std::vector<Prism> prisms_;
    std::vector<Node> nodes_;
};

std::vector<PropagationPath> trace(const Scenario& scenario, const GnbSite& gnb, Vec3 ue);

// CSV dump: gnb_id, ue_x, ue_y, kind, bounces, length_m, path_loss_db, aod_az, aod_el, aoa_az, aoa_el.
void write_paths_csv_header(std::ostream& out);
void write_paths_csv(std::ostream& out, int gnb_id, Vec3 ue, const std::vector<PropagationPath>& paths);

}  // namespace beamxfer
