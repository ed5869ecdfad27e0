#pragma once

#include "beamxfer/dataset.hpp"
#include "beamxfer/mlp.hpp"

#include <cstddef>

namespace beamxfer {

struct EvalReport {
    double top1 = 0.0;
    double best_in_top5 = 0.0;
    std::size_t sample_count = 0;
};

// Both accuracies in one batched pass. Throws EmptyDataset on an empty set
// and InvariantViolation if best_in_top5 < top1.
EvalReport evaluate(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer);

double top1_accuracy(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer);
double best_in_top5_accuracy(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer);

// Mean and population standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& xs);

}  // namespace beamxfer
