#pragma once

#include "beamxfer/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace beamxfer {

struct RfConfig {
    double carrier_frequency_hz = 28e9;
    double tx_power_dbm = 20.0;
    double rss_threshold_dbm = -174.0;
    int max_reflections = 4;
    double reflection_loss_db = 10.0;
    double ue_height_m = 1.5;
    double gnb_height_m = 10.0;

    void validate() const;
    friend bool operator==(const RfConfig&, const RfConfig&) = default;
};

// Coverage threshold of the "practical" profile. The default -174 dBm (the
// 1 Hz thermal noise density) excludes almost nothing.
inline constexpr double kPracticalRssThresholdDbm = -90.0;

// Extruded convex prism; footprint is counter-clockwise.
struct Building {
    std::vector<Vec2> footprint;
    double height_m = 0.0;

    friend bool operator==(const Building&, const Building&) = default;
};

struct GnbSite {
    int id = 0;
    Vec3 position;
    // Azimuth the planar array faces (global frame, degrees).
    double boresight_az_deg = 0.0;

    friend bool operator==(const GnbSite&, const GnbSite&) = default;
};

struct Area {
    Vec2 min{0.0, 0.0};
    Vec2 max{500.0, 500.0};

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
    friend bool operator==(const Area&, const Area&) = default;
};

struct Scenario {
    Area area;
    std::vector<Building> buildings;
    std::vector<GnbSite> gnbs;
    double grid_resolution_m = 1.0;
    RfConfig rf;
    std::uint64_t seed = 0;

    // Throws ErrorKind::InvariantViolation naming the first violated invariant.
    void validate() const;
    const GnbSite& gnb(int id) const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct CityParams {
    Area area;
    int building_count = 40;
    double building_size_min_m = 15.0;
    double building_size_max_m = 60.0;
    double building_height_min_m = 12.0;
    double building_height_max_m = 40.0;
    // Minimum clearance between any two building footprints.
    double street_width_m = 6.0;
    int gnb_count = 27;
    double min_gnb_spacing_m = 40.0;
    // gNBs sit this far outside their corner, along the corner bisector.
    double corner_offset_m = 0.5;
    double grid_resolution_m = 1.0;
    RfConfig rf;
    std::uint64_t seed = 1;
    int max_attempts = 20000;
};

Scenario generate_synthetic_city(const CityParams& params);

// Lattice points at grid_resolution_m covering the area (both boundaries
// included), row-major in y then x, minus points strictly inside a building.
std::vector<Vec3> ue_grid(const Scenario& scenario);

std::string scenario_to_json_text(const Scenario& scenario);
Scenario scenario_from_json_text(const std::string& text);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

// Stable content hash (hex) of the canonical serialized form.
std::string scenario_fingerprint(const Scenario& scenario);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace beamxfer
