#pragma once

#include "beamxfer/checkpoint.hpp"
#include "beamxfer/metrics.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace beamxfer {

// One gNB of one scenario. scenario_id is any stable label (the CLI uses the
// scenario fingerprint).
struct GnbKey {
    std::string scenario_id;
    int gnb_id = 0;

    friend auto operator<=>(const GnbKey&, const GnbKey&) = default;
    std::string str() const { return scenario_id + ":" + std::to_string(gnb_id); }
};

std::uint64_t key_hash(const GnbKey& key);

// The 60/20/20 split every run uses for a gNB dataset under a master seed.
// Shared by reference training and target evaluation, so a gNB's test split
// is the same whichever side of a transfer it is on.
SplitSpec dataset_split_spec(std::uint64_t master_seed, const GnbKey& key);

struct ReferenceModel {
    Checkpoint checkpoint;
    DatasetSplit split;
    EvalReport baseline;  // on its own test split
};

// Splits the dataset, trains a fresh He-initialised network on the training
// part (config.seed drives init and shuffling) and scores the test part.
// Requires at least 10 samples.
ReferenceModel train_reference(const BplDataset& dataset, const TrainConfig& config, const SplitSpec& split_spec);

// Evaluates a checkpoint as is on a target test split.
EvalReport zero_shot_eval(const Checkpoint& reference, const BplDataset& target_test);

struct FineTuneResult {
    Checkpoint checkpoint;
    std::size_t subset_size = 0;  // |subsample|, before its 60/20/20 split
    std::size_t train_size = 0;
};

// Initialises from `reference`, draws subsample(pool, fraction, min_size) and
// trains on the 60% training slice of it with fresh optimizer state.
// config.seed drives the subsample, its split and the shuffles; for one seed
// the subsample for a smaller fraction is contained in that of a larger one.
// fraction 0 returns the reference parameters unchanged.
FineTuneResult fine_tune(const Checkpoint& reference, const BplDataset& pool, double fraction, std::size_t min_size,
                         const TrainConfig& config);

struct TransferJob {
    GnbKey reference;
    GnbKey target;
    double fine_tune_fraction = 0.0;
    std::size_t min_fine_tune_size = 0;
    TrainConfig train_config;
    TrainConfig fine_tune_config;
    std::uint64_t seed = 0;  // master seed; every stage seed is derived from it
};

// Seeds used for the pieces of a job.
std::uint64_t reference_seed(std::uint64_t master_seed, const GnbKey& key);
std::uint64_t fine_tune_seed(std::uint64_t master_seed, const GnbKey& reference, const GnbKey& target);

// Fine-tuning draws from the target's training and validation splits; its
// test split stays held out for every reported number.
BplDataset fine_tune_pool(const DatasetSplit& target_split);

struct TransferResult {
    TransferJob job;
    EvalReport reference_baseline;
    EvalReport zero_shot;
    std::optional<EvalReport> fine_tuned;
    std::size_t subset_size = 0;
    std::size_t train_size = 0;
    std::string reference_checkpoint;
    std::string fine_tuned_checkpoint;
};

// Runs one pair end to end. When checkpoint_dir is set, w_x and w_y are
// written there.
TransferResult run_transfer_job(const TransferJob& job, const BplDataset& reference_data, const BplDataset& target_data,
                                const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

std::string transfer_result_json(const TransferResult& result);

}  // namespace beamxfer
