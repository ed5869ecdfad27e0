#include "beamxfer/dataset.hpp"
#include "beamxfer/error.hpp"
#include "beamxfer/random.hpp"

#include "scenes.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace beamxfer;

namespace {

BplDataset numbered(std::size_t n) {
    BplDataset d;
    d.gnb_id = 2;
    d.scenario_fingerprint = "abc";
    d.area = Area{{0.0, 0.0}, {100.0, 100.0}};
    for (std::size_t i = 0; i < n; ++i) {
        BplSample s;
        s.x_m = static_cast<double>(i);
        s.y_m = 0.5 * static_cast<double>(i % 7);
        for (int k = 0; k < kLabelCount; ++k) {
            s.labels[static_cast<std::size_t>(k)] = static_cast<int>((i * 5 + static_cast<std::size_t>(k)) % kNumBpls);
            s.rss_dbm[static_cast<std::size_t>(k)] = -60.0 - k - 0.001 * static_cast<double>(i);
        }
        d.samples.push_back(s);
    }
    return d;
}

std::set<double> xs(const BplDataset& d) {
    std::set<double> out;
    for (const auto& s : d.samples) out.insert(s.x_m);
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("beamxfer_test_" + name);
}

}  // namespace

TEST_CASE("split sizes follow floor, floor, remainder") {
    auto a = split(numbered(100), {0.6, 0.2, 0.2, 9});
    CHECK(a.train.size() == 60);
    CHECK(a.val.size() == 20);
    CHECK(a.test.size() == 20);
    auto b = split(numbered(101), {0.6, 0.2, 0.2, 9});
    CHECK(b.train.size() == 60);
    CHECK(b.val.size() == 20);
    CHECK(b.test.size() == 21);
}

TEST_CASE("split partitions the samples and is seed deterministic") {
    const auto d = numbered(257);
    const auto a = split(d, {0.6, 0.2, 0.2, 4});
    const auto b = split(d, {0.6, 0.2, 0.2, 4});
    const auto c = split(d, {0.6, 0.2, 0.2, 5});
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK_FALSE(a.train == c.train);
    std::set<double> all;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
        const auto s = xs(*part);
        all.insert(s.begin(), s.end());
        CHECK(part->gnb_id == 2);
        CHECK(part->area == d.area);
    }
    CHECK(all.size() == 257);
}

TEST_CASE("split ratios are validated") {
    CHECK_THROWS_AS(split(numbered(10), {0.6, 0.3, 0.2, 0}), Error);
    CHECK_THROWS_AS(split(numbered(10), {1.0, 0.0, 0.0, 0}), Error);
}

TEST_CASE("subsample size rule") {
    CHECK(subsample_size(59770, 0.05, 0) == 2989);
    CHECK(subsample_size(10000, 0.05, 1000) == 1000);
    CHECK(subsample_size(389, 0.05, 1000) == 389);
    CHECK(subsample_size(100, 0.05, 0) == 5);
    CHECK(subsample_size(100, 1.0, 0) == 100);
    CHECK(subsample_size(3, 0.01, 0) == 1);
    CHECK_THROWS_AS(subsample_size(100, 0.0, 0), Error);
    CHECK_THROWS_AS(subsample_size(100, 1.5, 0), Error);
}

TEST_CASE("subsamples are nested and keep the original order") {
    const auto d = numbered(500);
    BplDataset prev;
    for (double f : {0.05, 0.1, 0.25, 0.5, 1.0}) {
        const auto s = subsample(d, f, 0, 31);
        CHECK(s.size() == subsample_size(500, f, 0));
        CHECK(std::is_sorted(s.samples.begin(), s.samples.end(),
                             [](const BplSample& a, const BplSample& b) { return a.x_m < b.x_m; }));
        const auto now = xs(s);
        for (double x : xs(prev)) CHECK(now.count(x) == 1);
        prev = s;
    }
    CHECK(subsample(d, 1.0, 0, 31) == d);
    CHECK_THROWS_AS(subsample(BplDataset{}, 0.5, 0, 1), Error);
}

TEST_CASE("position normalizer") {
    PositionNormalizer n(Area{{-50.0, 10.0}, {150.0, 60.0}});
    const auto u = n.normalize(-50.0, 10.0);
    CHECK(u[0] == 0.0);
    CHECK(u[1] == 0.0);
    const auto v = n.normalize(150.0, 60.0);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 1.0);
    const auto m = n.normalize(50.0, 35.0);
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(0.5));
    const auto back = n.denormalize(m[0], m[1]);
    CHECK(back[0] == doctest::Approx(50.0));
    CHECK(back[1] == doctest::Approx(35.0));
    CHECK_THROWS_AS(PositionNormalizer(Area{{0.0, 0.0}, {0.0, 5.0}}), Error);
}

TEST_CASE("csv round trip is exact") {
    auto d = numbered(50);
    d.samples[3].rss_dbm[0] = -49.897000433601875;
    d.samples[4].x_m = 0.1 + 0.2;
    const auto path = temp_file("roundtrip.csv");
    save_dataset(d, path);
    CHECK(std::filesystem::exists(path.string() + ".meta.json"));
    const auto back = load_dataset(path);
    CHECK(back == d);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("malformed dataset files are rejected") {
    const auto path = temp_file("bad.csv");
    save_dataset(numbered(3), path);
    {
        std::ofstream out(path);
        out << "x,y\n1,2\n";
    }
    try {
        load_dataset(path);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
    }
    std::filesystem::remove(path);
    try {
        load_dataset(path);
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("open field grid yields one labelled sample per point") {
    Scenario s = scenes::open_field(10.0, 1.0);
    s.gnbs.push_back(GnbSite{0, {5.0, -20.0, 10.0}, 90.0});
    const auto survey = survey_gnb(s, s.gnbs[0]);
    CHECK(survey.grid_points == 121);
    CHECK(survey.covered == 121);
    CHECK(survey.covered_los == 121);
    const auto& d = survey.dataset;
    REQUIRE(d.size() == 121);
    for (const auto& smp : d.samples) {
        CHECK(std::is_sorted(smp.rss_dbm.rbegin(), smp.rss_dbm.rend()));
        std::set<int> distinct(smp.labels.begin(), smp.labels.end());
        CHECK(distinct.size() == kLabelCount);
        for (int l : smp.labels) CHECK((l >= 0 && l < kNumBpls));
    }
    CHECK(build_dataset(s, s.gnbs[0], 3) == d);
}
