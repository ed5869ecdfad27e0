#include "beamxfer/metrics.hpp"

#include "beamxfer/error.hpp"

#include <cmath>
#include <numeric>

namespace beamxfer {

namespace {

// Rank of the true class among the logits, counting ties to a lower class id
// as ranked above it (the same order predict_top_m uses).
int rank_of(const Eigen::MatrixXd& logits, Eigen::Index col, int cls) {
    const double v = logits(cls, col);
    int rank = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double o = logits(r, col);
        if (o > v || (o == v && r < cls)) ++rank;
    }
    return rank;
}

}  // namespace

EvalReport evaluate(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer) {
    if (test_set.empty()) fail(ErrorKind::EmptyDataset, "cannot evaluate on an empty test set");
    model.require_finite();
    const Eigen::MatrixXd logits = forward_logits(model, feature_matrix(test_set, normalizer));
    std::size_t hit1 = 0, hit5 = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const int cls = test_set.samples[i].labels[0];
        if (cls < 0 || cls >= model.output_dim()) fail(ErrorKind::OutOfRange, "label outside the output layer");
        const int rank = rank_of(logits, static_cast<Eigen::Index>(i), cls);
        hit1 += rank == 0;
        hit5 += rank < 5;
    }
    EvalReport r;
    r.sample_count = test_set.size();
    r.top1 = static_cast<double>(hit1) / static_cast<double>(r.sample_count);
    r.best_in_top5 = static_cast<double>(hit5) / static_cast<double>(r.sample_count);
    if (r.best_in_top5 < r.top1) fail(ErrorKind::InvariantViolation, "best-in-top-5 accuracy below top-1 accuracy");
    return r;
}

double top1_accuracy(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer) {
    return evaluate(model, test_set, normalizer).top1;
}

double best_in_top5_accuracy(const MlpModel& model, const BplDataset& test_set, const PositionNormalizer& normalizer) {
    return evaluate(model, test_set, normalizer).best_in_top5;
}

MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / n)};
}

}  // namespace beamxfer
