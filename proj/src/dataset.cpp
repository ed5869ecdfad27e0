#include "beamxfer/dataset.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/parallel.hpp"
#include "beamxfer/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace beamxfer {

using nlohmann::json;

namespace {

struct PointOutcome {
    bool covered = false;
    bool strongest_los = false;
    std::optional<BplSample> sample;
};

}  // namespace

GnbSurvey survey_gnb(const Scenario& scenario, const GnbSite& gnb, int jobs) {
    const RayTracer tracer(scenario, gnb.position);
    const Codebook gnb_cb = gnb_codebook();
    const Codebook ue_cb = ue_codebook();
    const std::vector<Vec3> grid = ue_grid(scenario);

    std::vector<PointOutcome> outcomes(grid.size());
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, jobs, [&](std::size_t c) {
        const std::size_t end = std::min(grid.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const Vec3 ue = grid[i];
            const auto paths = tracer.trace(ue);
            if (paths.empty()) continue;
            BplMatrix m = compute_bpl_matrix(paths, gnb_cb, ue_cb, scenario.rf.tx_power_dbm, gnb.boresight_az_deg);
            m.gnb_id = gnb.id;
            m.ue_position = ue;
            if (!is_covered(m, scenario.rf.rss_threshold_dbm)) continue;
            PointOutcome& out = outcomes[i];
            out.covered = true;
            out.strongest_los = paths.front().bounces == 0;
            const auto best = top_k(m, kLabelCount);
            if (best.size() < static_cast<std::size_t>(kLabelCount)) continue;  // cannot feed the 5-label loss
            BplSample s;
            s.x_m = ue.x;
            s.y_m = ue.y;
            for (int k = 0; k < kLabelCount; ++k) {
                s.labels[static_cast<std::size_t>(k)] = best[static_cast<std::size_t>(k)].class_id;
                s.rss_dbm[static_cast<std::size_t>(k)] = best[static_cast<std::size_t>(k)].rss_dbm;
            }
            out.sample = s;
        }
    });

    GnbSurvey survey;
    survey.gnb_id = gnb.id;
    survey.grid_points = grid.size();
    survey.dataset.gnb_id = gnb.id;
    survey.dataset.scenario_fingerprint = scenario_fingerprint(scenario);
    survey.dataset.area = scenario.area;
    survey.dataset.rf = scenario.rf;
    for (const auto& o : outcomes) {
        if (!o.covered) continue;
        ++survey.covered;
        if (o.strongest_los) ++survey.covered_los;
        if (o.sample) survey.dataset.samples.push_back(*o.sample);
    }
    return survey;
}

BplDataset build_dataset(const Scenario& scenario, const GnbSite& gnb, int jobs) {
    return survey_gnb(scenario, gnb, jobs).dataset;
}

void SplitSpec::validate() const {
    if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0))
        fail(ErrorKind::InvalidParameter, "split ratios must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) fail(ErrorKind::InvalidParameter, "split ratios must sum to 1");
}

namespace {

BplDataset empty_like(const BplDataset& d) {
    BplDataset out;
    out.gnb_id = d.gnb_id;
    out.scenario_fingerprint = d.scenario_fingerprint;
    out.area = d.area;
    out.rf = d.rf;
    return out;
}

}  // namespace

DatasetSplit split(const BplDataset& dataset, const SplitSpec& spec) {
    spec.validate();
    if (dataset.empty()) fail(ErrorKind::EmptyDataset, "cannot split an empty dataset");
    const std::size_t n = dataset.size();
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
    const auto perm = random_permutation(n, spec.seed);
    DatasetSplit out{empty_like(dataset), empty_like(dataset), empty_like(dataset)};
    for (std::size_t r = 0; r < n; ++r) {
        BplDataset& part = r < n_train ? out.train : (r < n_train + n_val ? out.val : out.test);
        part.samples.push_back(dataset.samples[perm[r]]);
    }
    return out;
}

std::size_t subsample_size(std::size_t dataset_size, double fraction, std::size_t min_size) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        fail(ErrorKind::InvalidParameter, "subsample fraction must be in (0, 1], got " + std::to_string(fraction));
    // The small slack keeps products like 0.05 * 100 from rounding up to 6.
    const auto by_fraction = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(dataset_size) - 1e-9));
    return std::min(dataset_size, std::max(by_fraction, min_size));
}

BplDataset subsample(const BplDataset& dataset, double fraction, std::size_t min_size, std::uint64_t seed) {
    const std::size_t target = subsample_size(dataset.size(), fraction, min_size);
    if (dataset.empty()) fail(ErrorKind::EmptyDataset, "cannot subsample an empty dataset");
    auto perm = random_permutation(dataset.size(), seed);
    perm.resize(target);
    std::sort(perm.begin(), perm.end());
    BplDataset out = empty_like(dataset);
    out.samples.reserve(target);
    for (std::size_t i : perm) out.samples.push_back(dataset.samples[i]);
    return out;
}

BplDataset concat(const BplDataset& a, const BplDataset& b) {
    BplDataset out = a;
    out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
    return out;
}

PositionNormalizer::PositionNormalizer(const Area& a) : area(a) {
    if (!(a.width() > 0.0) || !(a.height() > 0.0))
        fail(ErrorKind::Domain, "position normalisation needs an area with positive extent");
}

std::array<double, 2> PositionNormalizer::normalize(double x_m, double y_m) const {
    return {(x_m - area.min.x) / area.width(), (y_m - area.min.y) / area.height()};
}

std::array<double, 2> PositionNormalizer::denormalize(double u, double v) const {
    return {area.min.x + u * area.width(), area.min.y + v * area.height()};
}

// ---- files ---------------------------------------------------------------

namespace {

void append_number(std::string& line, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, res.ptr);
}

void append_number(std::string& line, int v) {
    char buf[16];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, res.ptr);
}

template <class T>
T parse_field(std::string_view text, std::size_t line_no, int column) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        fail(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ", column " + std::to_string(column) +
                                   ": cannot parse '" + std::string(text) + "'");
    return value;
}

constexpr const char* kHeader = "x_m,y_m,label1,label2,label3,label4,label5,rss1,rss2,rss3,rss4,rss5";

std::filesystem::path sidecar(const std::filesystem::path& csv) {
    return std::filesystem::path(csv.string() + ".meta.json");
}

}  // namespace

void save_dataset(const BplDataset& d, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + csv_path.string());
    std::string line;
    out << kHeader << '\n';
    for (const auto& s : d.samples) {
        line.clear();
        append_number(line, s.x_m);
        line += ',';
        append_number(line, s.y_m);
        for (int l : s.labels) {
            line += ',';
            append_number(line, l);
        }
        for (double r : s.rss_dbm) {
            line += ',';
            append_number(line, r);
        }
        line += '\n';
        out << line;
    }
    if (!out) fail(ErrorKind::Io, "write failed for " + csv_path.string());

    const json meta{{"gnb_id", d.gnb_id},
                    {"scenario_fingerprint", d.scenario_fingerprint},
                    {"sample_count", d.samples.size()},
                    {"area", {{"min", {d.area.min.x, d.area.min.y}}, {"max", {d.area.max.x, d.area.max.y}}}},
                    {"rf",
                     {{"carrier_frequency_hz", d.rf.carrier_frequency_hz},
                      {"tx_power_dbm", d.rf.tx_power_dbm},
                      {"rss_threshold_dbm", d.rf.rss_threshold_dbm},
                      {"max_reflections", d.rf.max_reflections},
                      {"reflection_loss_db", d.rf.reflection_loss_db},
                      {"ue_height_m", d.rf.ue_height_m},
                      {"gnb_height_m", d.rf.gnb_height_m}}}};
    std::ofstream mout(sidecar(csv_path), std::ios::binary);
    if (!mout) fail(ErrorKind::Io, "cannot write " + sidecar(csv_path).string());
    mout << meta.dump(2) << '\n';
}

BplDataset load_dataset(const std::filesystem::path& csv_path) {
    BplDataset d;
    {
        std::ifstream min(sidecar(csv_path), std::ios::binary);
        if (!min) fail(ErrorKind::Io, "cannot read " + sidecar(csv_path).string());
        json meta;
        try {
            meta = json::parse(min);
            d.gnb_id = meta.at("gnb_id").get<int>();
            d.scenario_fingerprint = meta.at("scenario_fingerprint").get<std::string>();
            d.area.min = {meta.at("area").at("min").at(0).get<double>(), meta.at("area").at("min").at(1).get<double>()};
            d.area.max = {meta.at("area").at("max").at(0).get<double>(), meta.at("area").at("max").at(1).get<double>()};
            const json& rf = meta.at("rf");
            d.rf.carrier_frequency_hz = rf.at("carrier_frequency_hz").get<double>();
            d.rf.tx_power_dbm = rf.at("tx_power_dbm").get<double>();
            d.rf.rss_threshold_dbm = rf.at("rss_threshold_dbm").get<double>();
            d.rf.max_reflections = rf.at("max_reflections").get<int>();
            d.rf.reflection_loss_db = rf.at("reflection_loss_db").get<double>();
            d.rf.ue_height_m = rf.at("ue_height_m").get<double>();
            d.rf.gnb_height_m = rf.at("gnb_height_m").get<double>();
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, sidecar(csv_path).string() + ": " + e.what());
        }
    }
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + csv_path.string());
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        fail(ErrorKind::Parse, csv_path.string() + ": missing or unexpected header");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            cols.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cols.size() != 2 + 2 * kLabelCount)
            fail(ErrorKind::Parse, csv_path.string() + " line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(2 + 2 * kLabelCount) + " columns");
        BplSample s;
        s.x_m = parse_field<double>(cols[0], line_no, 1);
        s.y_m = parse_field<double>(cols[1], line_no, 2);
        for (int k = 0; k < kLabelCount; ++k) {
            const int c = parse_field<int>(cols[static_cast<std::size_t>(2 + k)], line_no, 3 + k);
            if (c < 0 || c >= kNumBpls)
                fail(ErrorKind::Parse, csv_path.string() + " line " + std::to_string(line_no) + ": label out of range");
            s.labels[static_cast<std::size_t>(k)] = c;
            s.rss_dbm[static_cast<std::size_t>(k)] =
                parse_field<double>(cols[static_cast<std::size_t>(2 + kLabelCount + k)], line_no, 3 + kLabelCount + k);
        }
        d.samples.push_back(s);
    }
    return d;
}

}  // namespace beamxfer
