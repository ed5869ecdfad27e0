#pragma once

#include "beamxfer/metrics.hpp"
#include "beamxfer/transfer.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace beamxfer {

// Datasets addressed by gNB key.
using DatasetIndex = std::map<GnbKey, BplDataset>;

// Trained references and dataset splits for one master seed, filled on
// demand. Several grids under the same seed share a cache so each reference
// network is trained once.
class ReferenceCache {
public:
    ReferenceCache(const DatasetIndex& datasets, TrainConfig train_config, std::uint64_t master_seed);

    const BplDataset& dataset(const GnbKey& key) const;
    const DatasetSplit& split_of(const GnbKey& key);
    const ReferenceModel& reference(const GnbKey& key);
    // Trains every missing reference among `keys`, up to `jobs` at a time.
    void prepare(const std::vector<GnbKey>& keys, int jobs);

    std::uint64_t master_seed() const { return master_seed_; }
    const TrainConfig& train_config() const { return train_config_; }

private:
    const DatasetIndex& datasets_;
    TrainConfig train_config_;
    std::uint64_t master_seed_;
    std::mutex mutex_;
    std::map<GnbKey, std::shared_ptr<const DatasetSplit>> splits_;
    std::map<GnbKey, std::shared_ptr<const ReferenceModel>> references_;
};

struct AccuracyMatrix {
    std::vector<GnbKey> rows;  // reference gNBs
    std::vector<GnbKey> cols;  // target gNBs
    std::vector<std::vector<double>> values;

    double at(std::size_t r, std::size_t c) const { return values[r][c]; }
};

struct MatrixTemplate {
    // 0 gives the zero-shot grid.
    double fine_tune_fraction = 0.0;
    std::size_t min_fine_tune_size = 0;
    TrainConfig fine_tune_config;
};

struct PairRecord {
    GnbKey reference;
    GnbKey target;
    EvalReport zero_shot;
    EvalReport result;  // equals zero_shot when no fine-tuning happened
    std::size_t subset_size = 0;
};

struct MatrixResult {
    AccuracyMatrix top1;
    AccuracyMatrix best_in_top5;
    AccuracyMatrix zero_shot_top1;
    AccuracyMatrix zero_shot_best_in_top5;
    std::vector<PairRecord> pairs;  // row-major
};

// Every reference is trained once (through the cache). A cell whose
// reference and target are the same gNB holds that gNB's own baseline;
// other cells hold the zero-shot score or, when the template fine-tunes, the
// fine-tuned score, always on the target's held-out test split.
MatrixResult accuracy_matrix(ReferenceCache& cache, const std::vector<GnbKey>& references,
                             const std::vector<GnbKey>& targets, const MatrixTemplate& tmpl, int jobs = 1);

struct GnbCoverage {
    int gnb_id = 0;
    std::size_t grid_points = 0;
    double covered_fraction = 0.0;
    double los_fraction = 0.0;  // covered with the strongest path direct
    double nlos_fraction = 0.0;
    std::size_t dataset_size = 0;
};

GnbCoverage coverage_of(const GnbSurvey& survey);
std::vector<GnbCoverage> coverage_stats(const Scenario& scenario, int jobs = 1);

struct SweepSpec {
    GnbKey reference;
    GnbKey target;
    std::vector<double> fractions;
    std::vector<std::uint64_t> seeds;  // master seeds
    std::size_t min_fine_tune_size = 0;
    // Caps the target dataset to this many samples before splitting (0: off).
    std::size_t target_cap = 0;
    TrainConfig train_config;
    TrainConfig fine_tune_config;
};

struct SweepPoint {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    EvalReport report;
    std::size_t subset_size = 0;
};

struct SweepBaseline {
    std::uint64_t seed = 0;
    EvalReport target_only;  // trained from scratch on the full target
    EvalReport zero_shot;
};

struct SweepResult {
    SweepSpec spec;
    std::size_t target_size = 0;  // after the cap
    std::vector<SweepPoint> points;  // seed-major, fractions in spec order
    std::vector<SweepBaseline> baselines;
};

SweepResult fine_tune_sweep(const DatasetIndex& datasets, const SweepSpec& spec, int jobs = 1);

struct CurvePoint {
    double fraction = 0.0;
    MeanStd top1;
    MeanStd best_in_top5;
};

// Mean over seeds per fraction, in spec order.
std::vector<CurvePoint> mean_curve(const SweepResult& sweep);

// Output writers. Numbers use shortest round-trip formatting so files are
// byte-stable across runs.
void write_matrix_csv(const AccuracyMatrix& matrix, const std::filesystem::path& path);
void write_coverage_csv(const std::vector<GnbCoverage>& stats, const std::filesystem::path& path);
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);
std::string matrix_summary_json(const MatrixResult& result, const MatrixTemplate& tmpl, std::uint64_t master_seed);
std::string sweep_summary_json(const SweepResult& sweep);
std::string coverage_table(const std::vector<GnbCoverage>& stats);

// "0.05" -> "f0.05"; used in output file names.
std::string fraction_tag(double fraction);
std::string format_double(double value);

}  // namespace beamxfer
