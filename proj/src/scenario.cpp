#include "beamxfer/scenario.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace beamxfer {

using nlohmann::json;

void RfConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::InvariantViolation, std::string("rf: ") + what);
    };
    check(std::isfinite(carrier_frequency_hz) && carrier_frequency_hz > 0.0, "carrier_frequency_hz must be > 0");
    check(std::isfinite(tx_power_dbm), "tx_power_dbm must be finite");
    check(std::isfinite(rss_threshold_dbm), "rss_threshold_dbm must be finite");
    check(max_reflections >= 0, "max_reflections must be >= 0");
    check(std::isfinite(reflection_loss_db) && reflection_loss_db >= 0.0, "reflection_loss_db must be >= 0");
    check(std::isfinite(ue_height_m) && ue_height_m > 0.0, "ue_height_m must be > 0");
    check(std::isfinite(gnb_height_m) && gnb_height_m > 0.0, "gnb_height_m must be > 0");
}

void Scenario::validate() const {
    auto violated = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
    rf.validate();
    if (!(area.width() > 0.0) || !(area.height() > 0.0)) violated("area must have positive extent");
    if (!(grid_resolution_m > 0.0) || !std::isfinite(grid_resolution_m)) violated("grid_resolution_m must be > 0");
    for (std::size_t b = 0; b < buildings.size(); ++b) {
        const auto& bld = buildings[b];
        const std::string where = "buildings[" + std::to_string(b) + "]";
        if (bld.footprint.size() < 3) violated(where + ": footprint needs at least 3 vertices");
        if (!is_strictly_convex_ccw(bld.footprint))
            violated(where + ": footprint must be a simple convex counter-clockwise polygon");
        if (!(bld.height_m > 0.0) || !std::isfinite(bld.height_m)) violated(where + ": height_m must be > 0");
        for (Vec2 v : bld.footprint)
            if (!area.contains(v)) violated(where + ": vertex outside area");
    }
    for (std::size_t g = 0; g < gnbs.size(); ++g) {
        const auto& site = gnbs[g];
        const std::string where = "gnbs[" + std::to_string(g) + "]";
        if (site.id != static_cast<int>(g)) violated(where + ": ids must be 0..num_gnbs-1 in order");
        if (!area.contains(site.position.xy())) violated(where + ": position outside area");
        if (site.position.z != rf.gnb_height_m) violated(where + ": position z must equal rf.gnb_height_m");
        for (std::size_t b = 0; b < buildings.size(); ++b)
            if (inside_convex_strict(site.position.xy(), buildings[b].footprint))
                violated(where + ": position inside buildings[" + std::to_string(b) + "]");
    }
}

const GnbSite& Scenario::gnb(int id) const {
    if (id < 0 || id >= static_cast<int>(gnbs.size()))
        fail(ErrorKind::OutOfRange, "gnb id " + std::to_string(id) + " not in scenario");
    return gnbs[static_cast<std::size_t>(id)];
}

namespace {

struct Rect {
    double x0, y0, x1, y1;
};

double rect_gap(const Rect& a, const Rect& b) {
    const double dx = std::max({0.0, b.x0 - a.x1, a.x0 - b.x1});
    const double dy = std::max({0.0, b.y0 - a.y1, a.y0 - b.y1});
    return std::hypot(dx, dy);
}

Vec2 normalized(Vec2 v) { return (1.0 / norm(v)) * v; }

void validate_params(const CityParams& p) {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidParameter, what); };
    if (p.building_count < 0) bad("building_count must be >= 0");
    if (p.gnb_count < 1) bad("gnb_count must be >= 1");
    if (!(p.area.width() > 0.0) || !(p.area.height() > 0.0)) bad("area must have positive extent");
    if (!(p.building_size_min_m > 0.0) || p.building_size_max_m < p.building_size_min_m)
        bad("building size range must be positive and ordered");
    if (!(p.building_height_min_m > 0.0) || p.building_height_max_m < p.building_height_min_m)
        bad("building height range must be positive and ordered");
    if (p.building_count > 0 &&
        (p.building_size_max_m > p.area.width() || p.building_size_max_m > p.area.height()))
        bad("building_size_max_m exceeds the area");
    if (p.street_width_m < 0.0) bad("street_width_m must be >= 0");
    if (p.min_gnb_spacing_m < 0.0) bad("min_gnb_spacing_m must be >= 0");
    if (p.corner_offset_m <= 0.0) bad("corner_offset_m must be > 0");
    if (!(p.grid_resolution_m > 0.0)) bad("grid_resolution_m must be > 0");
    if (p.max_attempts < 1) bad("max_attempts must be >= 1");
    p.rf.validate();
}

struct Candidate {
    Vec2 position;
    double boresight_az_deg;
};

}  // namespace

Scenario generate_synthetic_city(const CityParams& p) {
    validate_params(p);
    Rng rng(derive_seed(p.seed, {tag(SeedTag::City)}));

    Scenario s;
    s.area = p.area;
    s.grid_resolution_m = p.grid_resolution_m;
    s.rf = p.rf;
    s.seed = p.seed;

    std::vector<Rect> rects;
    for (int b = 0; b < p.building_count; ++b) {
        bool placed = false;
        for (int attempt = 0; attempt < p.max_attempts && !placed; ++attempt) {
            const double w = uniform_real(rng, p.building_size_min_m, p.building_size_max_m);
            const double d = uniform_real(rng, p.building_size_min_m, p.building_size_max_m);
            const double x0 = uniform_real(rng, p.area.min.x, p.area.max.x - w);
            const double y0 = uniform_real(rng, p.area.min.y, p.area.max.y - d);
            const Rect r{x0, y0, x0 + w, y0 + d};
            const bool clear = std::all_of(rects.begin(), rects.end(),
                                           [&](const Rect& o) { return rect_gap(r, o) >= p.street_width_m; });
            if (!clear) continue;
            rects.push_back(r);
            Building bld;
            bld.footprint = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
            bld.height_m = uniform_real(rng, p.building_height_min_m, p.building_height_max_m);
            s.buildings.push_back(std::move(bld));
            placed = true;
        }
        if (!placed)
            fail(ErrorKind::PlacementFailure,
                 "could not place building " + std::to_string(b) + " within " + std::to_string(p.max_attempts) +
                     " attempts; reduce building_count or sizes");
    }

    std::vector<Candidate> candidates;
    if (s.buildings.empty()) {
        // Open field: area corners first, each pulled inward and facing the centre.
        const Vec2 centre = 0.5 * (p.area.min + p.area.max);
        const std::array<Vec2, 4> corners{p.area.min, Vec2{p.area.max.x, p.area.min.y}, p.area.max,
                                          Vec2{p.area.min.x, p.area.max.y}};
        for (Vec2 c : corners) {
            const Vec2 inward = normalized(centre - c);
            candidates.push_back({c + p.corner_offset_m * inward, rad2deg(std::atan2(inward.y, inward.x))});
        }
    } else {
        for (const auto& bld : s.buildings) {
            const auto& fp = bld.footprint;
            const std::size_t n = fp.size();
            for (std::size_t k = 0; k < n; ++k) {
                const Vec2 v = fp[k];
                const Vec2 out = normalized(normalized(v - fp[(k + n - 1) % n]) + normalized(v - fp[(k + 1) % n]));
                const Vec2 pos = v + p.corner_offset_m * out;
                if (!p.area.contains(pos)) continue;
                const bool free = std::none_of(s.buildings.begin(), s.buildings.end(), [&](const Building& o) {
                    return inside_convex_closed(pos, o.footprint);
                });
                if (free) candidates.push_back({pos, wrap_azimuth_deg(rad2deg(std::atan2(out.y, out.x)))});
            }
        }
    }

    auto spaced = [&](Vec2 pos, const std::vector<Candidate>& chosen) {
        return std::all_of(chosen.begin(), chosen.end(),
                           [&](const Candidate& c) { return norm(c.position - pos) >= p.min_gnb_spacing_m; });
    };

    std::vector<Candidate> chosen;
    const int rounds = 64;
    for (int round = 0; round < rounds && static_cast<int>(chosen.size()) < p.gnb_count; ++round) {
        chosen.clear();
        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        // Open-field corners keep their default order; building corners are shuffled.
        if (!s.buildings.empty() || round > 0) {
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
        }
        for (std::size_t idx : order) {
            if (static_cast<int>(chosen.size()) == p.gnb_count) break;
            if (spaced(candidates[idx].position, chosen)) chosen.push_back(candidates[idx]);
        }
        if (s.buildings.empty()) {
            // More gNBs than corners: rejection-sample free positions.
            const Vec2 centre = 0.5 * (p.area.min + p.area.max);
            for (int attempt = 0; attempt < p.max_attempts && static_cast<int>(chosen.size()) < p.gnb_count;
                 ++attempt) {
                const Vec2 pos{uniform_real(rng, p.area.min.x, p.area.max.x),
                               uniform_real(rng, p.area.min.y, p.area.max.y)};
                if (!spaced(pos, chosen)) continue;
                const Vec2 to_centre = centre - pos;
                chosen.push_back({pos, rad2deg(std::atan2(to_centre.y, to_centre.x))});
            }
        }
    }
    if (static_cast<int>(chosen.size()) < p.gnb_count)
        fail(ErrorKind::PlacementFailure, "could only place " + std::to_string(chosen.size()) + " of " +
                                              std::to_string(p.gnb_count) + " gNBs with spacing " +
                                              std::to_string(p.min_gnb_spacing_m) + " m");

    for (std::size_t g = 0; g < chosen.size(); ++g) {
        s.gnbs.push_back({static_cast<int>(g), Vec3{chosen[g].position.x, chosen[g].position.y, p.rf.gnb_height_m},
                          wrap_azimuth_deg(chosen[g].boresight_az_deg)});
    }
    s.validate();
    return s;
}

std::vector<Vec3> ue_grid(const Scenario& s) {
    std::vector<Vec3> points;
    const double res = s.grid_resolution_m;
    if (!(res > 0.0) || s.area.width() < 0.0 || s.area.height() < 0.0) return points;
    const auto nx = static_cast<std::size_t>(std::floor(s.area.width() / res + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor(s.area.height() / res + 1e-9)) + 1;
    points.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double y = s.area.min.y + static_cast<double>(iy) * res;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const Vec2 p{s.area.min.x + static_cast<double>(ix) * res, y};
            const bool indoor = std::any_of(s.buildings.begin(), s.buildings.end(),
                                            [&](const Building& b) { return inside_convex_strict(p, b.footprint); });
            if (!indoor) points.push_back({p.x, p.y, s.rf.ue_height_m});
        }
    }
    return points;
}

// ---- serialization -------------------------------------------------------

namespace {

json point_json(Vec2 p) { return json::array({p.x, p.y}); }
json point_json(Vec3 p) { return json::array({p.x, p.y, p.z}); }

json rf_to_json(const RfConfig& rf) {
    return json{{"carrier_frequency_hz", rf.carrier_frequency_hz},
                {"tx_power_dbm", rf.tx_power_dbm},
                {"rss_threshold_dbm", rf.rss_threshold_dbm},
                {"max_reflections", rf.max_reflections},
                {"reflection_loss_db", rf.reflection_loss_db},
                {"ue_height_m", rf.ue_height_m},
                {"gnb_height_m", rf.gnb_height_m}};
}

json scenario_to_json(const Scenario& s) {
    json buildings = json::array();
    for (const auto& b : s.buildings) {
        json verts = json::array();
        for (Vec2 v : b.footprint) verts.push_back(point_json(v));
        buildings.push_back({{"vertices", verts}, {"height_m", b.height_m}});
    }
    json gnbs = json::array();
    for (const auto& g : s.gnbs) {
        gnbs.push_back({{"id", g.id}, {"position", point_json(g.position)}, {"boresight_az_deg", g.boresight_az_deg}});
    }
    return json{{"area", {{"min", point_json(s.area.min)}, {"max", point_json(s.area.max)}}},
                {"grid_resolution_m", s.grid_resolution_m},
                {"rf", rf_to_json(s.rf)},
                {"buildings", buildings},
                {"gnbs", gnbs},
                {"seed", s.seed}};
}

// Field accessors that report the JSON path of whatever is wrong.
const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) fail(ErrorKind::Parse, where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(ErrorKind::Parse, where + "." + key + ": missing field");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(ErrorKind::Parse, where + ": expected a number");
    return j.get<double>();
}

double number_field(const json& j, const char* key, const std::string& where) {
    return number(field(j, key, where), where + "." + key);
}

Vec2 vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) fail(ErrorKind::Parse, where + ": expected [x, y]");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

Vec3 vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(ErrorKind::Parse, where + ": expected [x, y, z]");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]")};
}

std::int64_t integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(ErrorKind::Parse, where + ": expected an integer");
    return j.get<std::int64_t>();
}

RfConfig rf_from_json(const json& j, const std::string& where) {
    RfConfig rf;
    rf.carrier_frequency_hz = number_field(j, "carrier_frequency_hz", where);
    rf.tx_power_dbm = number_field(j, "tx_power_dbm", where);
    rf.rss_threshold_dbm = number_field(j, "rss_threshold_dbm", where);
    rf.max_reflections = static_cast<int>(integer(field(j, "max_reflections", where), where + ".max_reflections"));
    rf.reflection_loss_db = number_field(j, "reflection_loss_db", where);
    rf.ue_height_m = number_field(j, "ue_height_m", where);
    rf.gnb_height_m = number_field(j, "gnb_height_m", where);
    return rf;
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    const json& area = field(j, "area", "$");
    s.area.min = vec2(field(area, "min", "$.area"), "$.area.min");
    s.area.max = vec2(field(area, "max", "$.area"), "$.area.max");
    s.grid_resolution_m = number_field(j, "grid_resolution_m", "$");
    s.rf = rf_from_json(field(j, "rf", "$"), "$.rf");
    const json& buildings = field(j, "buildings", "$");
    if (!buildings.is_array()) fail(ErrorKind::Parse, "$.buildings: expected an array");
    for (std::size_t b = 0; b < buildings.size(); ++b) {
        const std::string where = "$.buildings[" + std::to_string(b) + "]";
        Building bld;
        const json& verts = field(buildings[b], "vertices", where);
        if (!verts.is_array()) fail(ErrorKind::Parse, where + ".vertices: expected an array");
        for (std::size_t v = 0; v < verts.size(); ++v)
            bld.footprint.push_back(vec2(verts[v], where + ".vertices[" + std::to_string(v) + "]"));
        bld.height_m = number_field(buildings[b], "height_m", where);
        s.buildings.push_back(std::move(bld));
    }
    const json& gnbs = field(j, "gnbs", "$");
    if (!gnbs.is_array()) fail(ErrorKind::Parse, "$.gnbs: expected an array");
    for (std::size_t g = 0; g < gnbs.size(); ++g) {
        const std::string where = "$.gnbs[" + std::to_string(g) + "]";
        GnbSite site;
        site.id = static_cast<int>(integer(field(gnbs[g], "id", where), where + ".id"));
        site.position = vec3(field(gnbs[g], "position", where), where + ".position");
        if (gnbs[g].contains("boresight_az_deg"))
            site.boresight_az_deg = number(gnbs[g]["boresight_az_deg"], where + ".boresight_az_deg");
        s.gnbs.push_back(site);
    }
    const json& seed = field(j, "seed", "$");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) fail(ErrorKind::Parse, "$.seed: expected an integer");
    s.seed = seed.get<std::uint64_t>();
    return s;
}

}  // namespace

std::string scenario_to_json_text(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "at line L, column C" in the message.
        fail(ErrorKind::Parse, std::string("scenario JSON: ") + e.what());
    }
    Scenario s = scenario_from_json(j);
    s.validate();
    return s;
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
    s.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << scenario_to_json_text(s);
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_json_text(buf.str());
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) hex[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return hex;
}

std::string scenario_fingerprint(const Scenario& s) { return fnv1a_hex(scenario_to_json(s).dump()); }

}  // namespace beamxfer
