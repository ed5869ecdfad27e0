#include "beamxfer/transfer.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/random.hpp"
#include "beamxfer/scenario.hpp"

#include <json.hpp>

#include <cstring>

namespace beamxfer {

std::uint64_t key_hash(const GnbKey& key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key.scenario_id) h = (h ^ c) * 0x100000001b3ULL;
    return mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(key.gnb_id)));
}

SplitSpec dataset_split_spec(std::uint64_t master_seed, const GnbKey& key) {
    SplitSpec s;
    s.seed = derive_seed(master_seed, {tag(SeedTag::Split), key_hash(key)});
    return s;
}

std::uint64_t reference_seed(std::uint64_t master_seed, const GnbKey& key) {
    return derive_seed(master_seed, {tag(SeedTag::Reference), key_hash(key)});
}

std::uint64_t fine_tune_seed(std::uint64_t master_seed, const GnbKey& reference, const GnbKey& target) {
    return derive_seed(master_seed, {tag(SeedTag::FineTune), key_hash(reference), key_hash(target)});
}

ReferenceModel train_reference(const BplDataset& dataset, const TrainConfig& config, const SplitSpec& split_spec) {
    if (dataset.size() < 10)
        fail(ErrorKind::EmptyDataset,
             "reference training needs at least 10 samples, gNB " + std::to_string(dataset.gnb_id) + " has " +
                 std::to_string(dataset.size()));
    ReferenceModel ref;
    ref.split = split(dataset, split_spec);
    const PositionNormalizer normalizer(dataset.area);
    TrainResult tr = train(MlpModel::he_uniform(kBeamNetDims, config.seed), ref.split.train, ref.split.val, config, normalizer);
    ref.checkpoint = Checkpoint{std::move(tr.model), dataset.area, config, std::move(tr.history)};
    ref.baseline = evaluate(ref.checkpoint.model, ref.split.test, normalizer);
    return ref;
}

EvalReport zero_shot_eval(const Checkpoint& reference, const BplDataset& target_test) {
    return evaluate(reference.model, target_test, PositionNormalizer(target_test.area));
}

FineTuneResult fine_tune(const Checkpoint& reference, const BplDataset& pool, double fraction, std::size_t min_size,
                         const TrainConfig& config) {
    if (reference.model.input_dim() != 2 || reference.model.output_dim() != kNumBpls)
        fail(ErrorKind::ShapeMismatch, "reference network must map 2 features to " + std::to_string(kNumBpls) + " classes");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        fail(ErrorKind::InvalidParameter, "fine-tune fraction must be in [0, 1], got " + std::to_string(fraction));
    if (pool.empty()) fail(ErrorKind::EmptyDataset, "fine-tuning pool is empty");

    FineTuneResult out;
    if (fraction == 0.0) {
        out.checkpoint = reference;
        return out;
    }
    const BplDataset subset = subsample(pool, fraction, min_size, derive_seed(config.seed, {tag(SeedTag::Subsample)}));
    SplitSpec spec;
    spec.seed = derive_seed(config.seed, {tag(SeedTag::Split)});
    const DatasetSplit parts = split(subset, spec);
    if (parts.train.empty())
        fail(ErrorKind::EmptyDataset, "fine-tuning subset of " + std::to_string(subset.size()) + " samples has no training part");
    out.subset_size = subset.size();
    out.train_size = parts.train.size();

    TrainResult tr = train(reference.model, parts.train, parts.val, config, PositionNormalizer(pool.area));
    out.checkpoint = Checkpoint{std::move(tr.model), pool.area, config, std::move(tr.history)};
    return out;
}

BplDataset fine_tune_pool(const DatasetSplit& target_split) { return concat(target_split.train, target_split.val); }

TransferResult run_transfer_job(const TransferJob& job, const BplDataset& reference_data, const BplDataset& target_data,
                                const std::optional<std::filesystem::path>& checkpoint_dir) {
    TransferResult res;
    res.job = job;

    TrainConfig ref_config = job.train_config;
    ref_config.seed = reference_seed(job.seed, job.reference);
    const ReferenceModel ref = train_reference(reference_data, ref_config, dataset_split_spec(job.seed, job.reference));
    res.reference_baseline = ref.baseline;

    const DatasetSplit target_split =
        job.target == job.reference ? ref.split : split(target_data, dataset_split_spec(job.seed, job.target));
    res.zero_shot = zero_shot_eval(ref.checkpoint, target_split.test);

    if (checkpoint_dir) {
        std::filesystem::create_directories(*checkpoint_dir);
        const auto path = *checkpoint_dir / ("reference_" + job.reference.scenario_id + "_g" +
                                             std::to_string(job.reference.gnb_id) + ".ckpt");
        save_checkpoint(ref.checkpoint, path);
        res.reference_checkpoint = path.string();
    }

    if (job.fine_tune_fraction > 0.0) {
        TrainConfig ft_config = job.fine_tune_config;
        ft_config.seed = fine_tune_seed(job.seed, job.reference, job.target);
        const FineTuneResult ft =
            fine_tune(ref.checkpoint, fine_tune_pool(target_split), job.fine_tune_fraction, job.min_fine_tune_size, ft_config);
        res.fine_tuned = evaluate(ft.checkpoint.model, target_split.test, PositionNormalizer(target_split.test.area));
        res.subset_size = ft.subset_size;
        res.train_size = ft.train_size;
        if (checkpoint_dir) {
            const auto path = *checkpoint_dir / ("finetuned_" + job.target.scenario_id + "_g" +
                                                 std::to_string(job.target.gnb_id) + ".ckpt");
            save_checkpoint(ft.checkpoint, path);
            res.fine_tuned_checkpoint = path.string();
        }
    }
    return res;
}

namespace {

nlohmann::json report_json(const EvalReport& r) {
    return {{"top1", r.top1}, {"best_in_top5", r.best_in_top5}, {"sample_count", r.sample_count}};
}

}  // namespace

std::string transfer_result_json(const TransferResult& r) {
    using nlohmann::json;
    json j{
        {"reference", {{"scenario", r.job.reference.scenario_id}, {"gnb", r.job.reference.gnb_id}}},
        {"target", {{"scenario", r.job.target.scenario_id}, {"gnb", r.job.target.gnb_id}}},
        {"fine_tune_fraction", r.job.fine_tune_fraction},
        {"min_fine_tune_size", r.job.min_fine_tune_size},
        {"seed", r.job.seed},
        {"reference_baseline", report_json(r.reference_baseline)},
        {"zero_shot", report_json(r.zero_shot)},
        {"fine_tuned", r.fine_tuned ? report_json(*r.fine_tuned) : json(nullptr)},
        {"fine_tune_subset_size", r.subset_size},
        {"fine_tune_train_size", r.train_size},
        {"checkpoints", {{"reference", r.reference_checkpoint}, {"fine_tuned", r.fine_tuned_checkpoint}}},
    };
    return j.dump(2) + "\n";
}

}  // namespace beamxfer
