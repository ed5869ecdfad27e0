#include "beamxfer/error.hpp"
#include "beamxfer/raytracer.hpp"
#include "oracle/compare.hpp"
#include "oracle/specular.hpp"
#include "scenes.hpp"

#include <doctest.h>

#include <sstream>

using namespace beamxfer;

TEST_CASE("free-space path loss") {
    CHECK(fspl_db(1.0, 28e9) == doctest::Approx(61.39094384872776).epsilon(1e-12));
    CHECK(fspl_db(100.0, 28e9) == doctest::Approx(101.39094384872776).epsilon(1e-12));
    CHECK(fspl_db(74.0, 28e9) - fspl_db(37.0, 28e9) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(fspl_db(0.0, 28e9), Error);
    CHECK_THROWS_AS(fspl_db(1.0, -1.0), Error);
}

TEST_CASE("empty scene gives one direct path") {
    Scenario s = scenes::open_field(200.0);
    const auto paths = RayTracer(s, {0, 0, 10}).trace({100, 0, 1.5});
    REQUIRE(paths.size() == 1);
    const auto& p = paths[0];
    CHECK(p.kind == PathKind::LoS);
    CHECK(p.bounces == 0);
    CHECK(p.aod.azimuth_deg == doctest::Approx(0.0));
    CHECK(p.aod.elevation_deg == doctest::Approx(-4.858462919).epsilon(1e-9));
    CHECK(p.length_m == doctest::Approx(100.36059984).epsilon(1e-9));
    CHECK(p.aoa.azimuth_deg == doctest::Approx(-180.0));
    CHECK(p.aoa.elevation_deg == doctest::Approx(4.858462919).epsilon(1e-9));
    CHECK(p.path_loss_db == doctest::Approx(fspl_db(p.length_m, 28e9)));
}

TEST_CASE("long wall adds exactly one mirror path that the ray launcher also finds") {
    Scenario s = scenes::open_field(400.0);
    s.buildings.push_back(scenes::rect(0, 250, 400, 260, 60));
    const Vec3 tx{150, 200, 10}, rx{230, 180, 1.5};
    RayTracer rt(s, tx);
    const auto paths = rt.trace(rx);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].kind == PathKind::LoS);
    CHECK(paths[1].bounces == 1);
    CHECK(paths[1].path_loss_db == doctest::Approx(fspl_db(paths[1].length_m, 28e9) + 10.0));
    // Mirror image of the transmitter across y = 250 gives the unfolded length.
    CHECK(paths[1].length_m == doctest::Approx(std::sqrt(80.0 * 80.0 + 120.0 * 120.0 + 8.5 * 8.5)).epsilon(1e-12));
    CHECK(oracle::specular_residual(paths[1], rt.faces(), tx, rx) < 1e-9);

    const auto captures = oracle::launch(s, tx, {rx}, {});
    const auto agree = oracle::compare(paths, captures[0]);
    CHECK_MESSAGE(agree.unmatched == 0, agree.details);
    CHECK(agree.max_length_error_m < 0.1);
    CHECK(agree.max_angle_error_deg < 0.2);
}

TEST_CASE("enclosed receiver gets no path") {
    Scenario s = scenes::open_field(100.0);
    // Four walls overlapping at the corners close a ring around the receiver.
    s.buildings.push_back(scenes::rect(40, 40, 60, 42, 30));
    s.buildings.push_back(scenes::rect(40, 58, 60, 60, 30));
    s.buildings.push_back(scenes::rect(40, 40, 42, 60, 30));
    s.buildings.push_back(scenes::rect(58, 40, 60, 60, 30));
    CHECK(RayTracer(s, {10, 10, 10}).trace({50, 50, 1.5}).empty());
}

TEST_CASE("line of sight") {
    Scenario s = scenes::open_field(100.0);
    CHECK(line_of_sight(s, {0, 0, 10}, {100, 100, 1.5}));
    s.buildings.push_back(scenes::rect(40, 40, 60, 60, 20));
    CHECK_FALSE(line_of_sight(s, {10, 50, 10}, {90, 50, 10}));
    CHECK(line_of_sight(s, {10, 50, 30}, {90, 50, 30}));
    // Grazing the roof edge counts as blocked.
    CHECK_FALSE(line_of_sight(s, {10, 50, 20}, {90, 50, 20}));
    // Passing beside the building.
    CHECK(line_of_sight(s, {10, 30, 2}, {90, 30, 2}));
}

TEST_CASE("path invariants on random scenes") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const auto sc = scenes::random_scene(seed, 5);
        RayTracer rt(sc.scenario, sc.source);
        for (const Vec3 rx : sc.receivers) {
            const auto paths = rt.trace(rx);
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const auto& p = paths[i];
                CHECK((p.kind == PathKind::LoS) == (p.bounces == 0));
                CHECK(p.bounces <= sc.scenario.rf.max_reflections);
                CHECK(static_cast<int>(p.faces.size()) == p.bounces);
                CHECK(p.path_loss_db == doctest::Approx(fspl_db(p.length_m, 28e9) + 10.0 * p.bounces).epsilon(1e-12));
                for (const Direction d : {p.aod, p.aoa}) {
                    CHECK(d.azimuth_deg >= -180.0);
                    CHECK(d.azimuth_deg < 180.0);
                    CHECK(std::abs(d.elevation_deg) <= 90.0);
                }
                CHECK(oracle::specular_residual(p, rt.faces(), sc.source, rx) < 1e-9);
                if (i > 0) CHECK(paths[i - 1].path_loss_db <= p.path_loss_db);
            }
        }
    }
}

TEST_CASE("reciprocity") {
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        const auto sc = scenes::random_scene(seed, 3);
        for (const Vec3 rx : sc.receivers) {
            const auto fwd = RayTracer(sc.scenario, sc.source).trace(rx);
            const auto back = RayTracer(sc.scenario, rx).trace(sc.source);
            REQUIRE(fwd.size() == back.size());
            for (const auto& p : fwd) {
                std::vector<int> rev(p.faces.rbegin(), p.faces.rend());
                const auto it = std::find_if(back.begin(), back.end(), [&](const auto& q) { return q.faces == rev; });
                REQUIRE(it != back.end());
                CHECK(it->length_m == doctest::Approx(p.length_m).epsilon(1e-12));
                CHECK(it->path_loss_db == doctest::Approx(p.path_loss_db).epsilon(1e-12));
                CHECK(it->aod.elevation_deg == doctest::Approx(p.aoa.elevation_deg).epsilon(1e-9));
                CHECK(it->aoa.elevation_deg == doctest::Approx(p.aod.elevation_deg).epsilon(1e-9));
                CHECK(oracle::azimuth_gap(it->aod.azimuth_deg, p.aoa.azimuth_deg) < 1e-7);
                CHECK(oracle::azimuth_gap(it->aoa.azimuth_deg, p.aod.azimuth_deg) < 1e-7);
            }
        }
    }
}

TEST_CASE("more reflections never remove a path") {
    for (std::uint64_t seed = 40; seed < 46; ++seed) {
        auto sc = scenes::random_scene(seed, 3);
        std::vector<std::vector<std::vector<int>>> previous(sc.receivers.size());
        for (int m = 0; m <= 4; ++m) {
            sc.scenario.rf.max_reflections = m;
            RayTracer rt(sc.scenario, sc.source);
            for (std::size_t r = 0; r < sc.receivers.size(); ++r) {
                std::vector<std::vector<int>> seqs;
                for (const auto& p : rt.trace(sc.receivers[r])) seqs.push_back(p.faces);
                for (const auto& old : previous[r]) CHECK(std::find(seqs.begin(), seqs.end(), old) != seqs.end());
                previous[r] = seqs;
            }
        }
    }
}

TEST_CASE("image method agrees with brute-force ray launching") {
    for (std::uint64_t seed = 2000; seed < 2003; ++seed) {
        const auto sc = scenes::random_scene(seed, 3);
        RayTracer rt(sc.scenario, sc.source);
        const auto captures = oracle::launch(sc.scenario, sc.source, sc.receivers, {});
        for (std::size_t r = 0; r < sc.receivers.size(); ++r) {
            const auto agree = oracle::compare(rt.trace(sc.receivers[r]), captures[r]);
            CHECK_MESSAGE(agree.unmatched == 0, agree.details);
            CHECK(agree.max_length_error_m < 0.1);
            CHECK(agree.max_angle_error_deg < 0.2);
        }
    }
}

TEST_CASE("path dump format") {
    std::ostringstream os;
    write_paths_csv_header(os);
    CHECK(os.str() == "gnb_id,ue_x,ue_y,kind,bounces,length_m,path_loss_db,aod_az,aod_el,aoa_az,aoa_el\n");
    Scenario s = scenes::open_field(50.0);
    write_paths_csv(os, 3, {20, 0, 1.5}, RayTracer(s, {0, 0, 10}).trace({20, 0, 1.5}));
    CHECK(os.str().find("\n3,20,0,LoS,0,") != std::string::npos);
}
