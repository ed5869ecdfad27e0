#pragma once

#include "beamxfer/rss.hpp"
#include "beamxfer/scenario.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace beamxfer {

inline constexpr int kLabelCount = 5;

struct BplSample {
    double x_m = 0.0;
    double y_m = 0.0;
    std::array<int, kLabelCount> labels{};        // class ids, best first
    std::array<double, kLabelCount> rss_dbm{};    // non-increasing

    friend bool operator==(const BplSample&, const BplSample&) = default;
};

struct BplDataset {
    int gnb_id = -1;
    std::vector<BplSample> samples;
    std::string scenario_fingerprint;
    Area area;  // study-area frame used for feature normalisation
    RfConfig rf;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    friend bool operator==(const BplDataset&, const BplDataset&) = default;
};

// Per-gNB outcome of tracing every grid point: the dataset plus the counts
// behind the coverage statistics.
struct GnbSurvey {
    int gnb_id = -1;
    std::size_t grid_points = 0;
    std::size_t covered = 0;
    std::size_t covered_los = 0;  // strongest path is the direct one
    BplDataset dataset;
};

GnbSurvey survey_gnb(const Scenario& scenario, const GnbSite& gnb, int jobs = 1);
BplDataset build_dataset(const Scenario& scenario, const GnbSite& gnb, int jobs = 1);

struct SplitSpec {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetSplit {
    BplDataset train;
    BplDataset val;
    BplDataset test;
};

// Seeded permutation, then contiguous slices: floor for train and val, the
// remainder to test.
DatasetSplit split(const BplDataset& dataset, const SplitSpec& spec);

// max(ceil(fraction * |D|), min_size) samples capped at |D|, drawn without
// replacement. Samples keep their original order, and for a fixed seed a
// smaller target is always a subset of a larger one.
BplDataset subsample(const BplDataset& dataset, double fraction, std::size_t min_size, std::uint64_t seed);
std::size_t subsample_size(std::size_t dataset_size, double fraction, std::size_t min_size);

BplDataset concat(const BplDataset& a, const BplDataset& b);

// Maps study-area coordinates to [0, 1]^2.
struct PositionNormalizer {
    Area area;

    explicit PositionNormalizer(const Area& a);
    std::array<double, 2> normalize(double x_m, double y_m) const;
    std::array<double, 2> denormalize(double u, double v) const;
};

// CSV (x_m,y_m,label1..label5,rss1..rss5) plus a "<path>.meta.json" sidecar.
void save_dataset(const BplDataset& dataset, const std::filesystem::path& csv_path);
BplDataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace beamxfer
