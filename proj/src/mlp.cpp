#include "beamxfer/mlp.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace beamxfer {

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidParameter, "train config: " + what); };
    if (epochs < 0) bad("epochs must be >= 0");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (!(initial_lr > 0.0)) bad("initial_lr must be > 0");
    if (!(lr_gamma > 0.0)) bad("lr_gamma must be > 0");
    if (!std::is_sorted(milestones.begin(), milestones.end())) bad("milestones must be ascending");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) bad("Adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) bad("adam_eps must be > 0");
    if (min_steps < 0) bad("min_steps must be >= 0");
    if (frozen_layers < 0) bad("frozen_layers must be >= 0");
    for (std::size_t k = 0; k < loss_weights.size(); ++k) {
        if (!(loss_weights[k] > 0.0)) bad("loss weights must be positive");
        if (k > 0 && loss_weights[k] > loss_weights[k - 1]) bad("loss weights must be non-increasing");
    }
    if (compensated_sum(loss_weights) != 1.0) bad("loss weights must sum to 1");
}

double compensated_sum(std::span<const double> xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

TrainConfig default_train_config() { return TrainConfig{}; }

TrainConfig practical_train_config() {
    TrainConfig c;
    c.initial_lr = kPracticalLearningRate;
    c.batch_size = kPracticalBatchSize;
    c.min_steps = kPracticalMinSteps;
    return c;
}

TrainConfig effective_schedule(const TrainConfig& config, std::size_t n) {
    TrainConfig c = config;
    if (n == 0 || c.epochs == 0) return c;
    const long per_epoch = static_cast<long>((n + static_cast<std::size_t>(c.batch_size) - 1) / static_cast<std::size_t>(c.batch_size));
    if (per_epoch * c.epochs >= c.min_steps) return c;
    const long epochs = (c.min_steps + per_epoch - 1) / per_epoch;
    const double stretch = static_cast<double>(epochs) / static_cast<double>(c.epochs);
    for (int& m : c.milestones) m = static_cast<int>(std::lround(m * stretch));
    c.epochs = static_cast<int>(epochs);
    return c;
}

// ---- model ----------------------------------------------------------------

namespace {

void check_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) fail(ErrorKind::InvalidParameter, "network needs at least input and output layers");
    for (int d : dims)
        if (d < 1) fail(ErrorKind::InvalidParameter, "layer widths must be positive");
}

}  // namespace

MlpModel MlpModel::zeros(const std::vector<int>& dims) {
    check_dims(dims);
    MlpModel m;
    m.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        m.weights.push_back(Eigen::MatrixXd::Zero(dims[l + 1], dims[l]));
        m.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
    }
    return m;
}

MlpModel MlpModel::he_uniform(const std::vector<int>& dims, std::uint64_t seed) {
    MlpModel m = zeros(dims);
    Rng rng(derive_seed(seed, {tag(SeedTag::Init)}));
    for (auto& w : m.weights) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform_real(rng, -limit, limit);
    }
    return m;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return n;
}

bool MlpModel::all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
        if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    return true;
}

void MlpModel::require_finite() const {
    if (!all_finite()) fail(ErrorKind::NonFinite, "model parameters contain NaN or Inf");
}

bool operator==(const MlpModel& a, const MlpModel& b) {
    if (a.dims != b.dims) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    return true;
}

// ---- inference ------------------------------------------------------------

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double peak = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - peak).exp();
    return e / e.sum();
}

Eigen::MatrixXd forward_logits(const MlpModel& model, const Eigen::MatrixXd& features) {
    if (features.rows() != model.input_dim())
        fail(ErrorKind::ShapeMismatch, "feature rows do not match the network input width");
    Eigen::MatrixXd a = features;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        Eigen::MatrixXd z = model.weights[l] * a;
        z.colwise() += model.biases[l];
        if (l + 1 < model.layer_count()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

ForwardResult forward(const MlpModel& model, std::span<const double> features) {
    model.require_finite();
    for (double f : features)
        if (!std::isfinite(f)) fail(ErrorKind::NonFinite, "input features must be finite");
    const Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
    ForwardResult r;
    r.logits = forward_logits(model, x).col(0);
    r.probs = softmax(r.logits);
    return r;
}

double weighted_ce_loss(std::span<const double> probs, std::span<const int> labels, std::span<const double> weights,
                        double clamp) {
    if (labels.size() != weights.size()) fail(ErrorKind::ShapeMismatch, "one weight per label required");
    double loss = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const int c = labels[k];
        if (c < 0 || static_cast<std::size_t>(c) >= probs.size())
            fail(ErrorKind::OutOfRange, "label " + std::to_string(c) + " outside the output layer");
        loss -= weights[k] * std::log(std::max(probs[static_cast<std::size_t>(c)], clamp));
    }
    return loss;
}

// ---- training -------------------------------------------------------------

Gradients backward(const MlpModel& model, const Eigen::MatrixXd& features,
                   std::span<const std::array<int, kLabelCount>> labels, std::span<const double> weights) {
    model.require_finite();
    const Eigen::Index batch = features.cols();
    if (static_cast<std::size_t>(batch) != labels.size()) fail(ErrorKind::ShapeMismatch, "one label set per sample required");
    if (weights.size() != static_cast<std::size_t>(kLabelCount)) fail(ErrorKind::ShapeMismatch, "one weight per label required");
    if (features.rows() != model.input_dim()) fail(ErrorKind::ShapeMismatch, "feature rows do not match the network input width");
    const std::size_t layers = model.layer_count();

    // activations[0] is the input; pre[l] feeds activations[l + 1].
    std::vector<Eigen::MatrixXd> activations(layers + 1);
    std::vector<Eigen::MatrixXd> pre(layers);
    activations[0] = features;
    for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = model.weights[l] * activations[l];
        pre[l].colwise() += model.biases[l];
        activations[l + 1] = l + 1 < layers ? pre[l].cwiseMax(0.0) : pre[l];
    }

    // Softmax per column, then dL/dz = p * sum(w) - t.
    Eigen::MatrixXd delta = activations[layers];
    const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    Gradients g;
    double loss = 0.0;
    for (Eigen::Index c = 0; c < batch; ++c) {
        auto col = delta.col(c);
        const double peak = col.maxCoeff();
        col = (col.array() - peak).exp();
        col /= col.sum();
        const auto& lab = labels[static_cast<std::size_t>(c)];
        for (int k = 0; k < kLabelCount; ++k) {
            const int cls = lab[static_cast<std::size_t>(k)];
            if (cls < 0 || cls >= model.output_dim())
                fail(ErrorKind::OutOfRange, "label " + std::to_string(cls) + " outside the output layer");
            loss -= weights[static_cast<std::size_t>(k)] * std::log(std::max(col(cls), kProbClamp));
        }
        col *= weight_sum;
        for (int k = 0; k < kLabelCount; ++k) col(lab[static_cast<std::size_t>(k)]) -= weights[static_cast<std::size_t>(k)];
    }
    const double inv_batch = 1.0 / static_cast<double>(batch);
    delta *= inv_batch;
    g.loss = loss * inv_batch;

    g.weights.resize(layers);
    g.biases.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l].noalias() = delta * activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = model.weights[l].transpose() * delta;
            delta = (pre[l - 1].array() > 0.0).select(back, 0.0);
        }
    }
    return g;
}

AdamState AdamState::for_model(const MlpModel& model) {
    AdamState s;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        s.m_weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        s.v_weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        s.m_biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        s.v_biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }
    return s;
}

namespace {

template <class Param>
void adam_update(Param& p, const Param& g, Param& m, Param& v, double lr, double b1, double b2, double eps,
                 double correction1, double correction2) {
    m = b1 * m + (1.0 - b1) * g;
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
}

}  // namespace

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, double lr, const TrainConfig& config) {
    if (grads.weights.size() != model.layer_count() || state.m_weights.size() != model.layer_count())
        fail(ErrorKind::ShapeMismatch, "gradient/optimizer layer count does not match the model");
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        if (grads.weights[l].rows() != model.weights[l].rows() || grads.weights[l].cols() != model.weights[l].cols() ||
            grads.biases[l].size() != model.biases[l].size() ||
            state.m_weights[l].rows() != model.weights[l].rows() || state.m_weights[l].cols() != model.weights[l].cols())
            fail(ErrorKind::ShapeMismatch, "gradient/optimizer shapes do not match layer " + std::to_string(l));
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    for (auto l = static_cast<std::size_t>(std::max(config.frozen_layers, 0)); l < model.layer_count(); ++l) {
        adam_update(model.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l], lr, config.adam_beta1,
                    config.adam_beta2, config.adam_eps, c1, c2);
        adam_update(model.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l], lr, config.adam_beta1,
                    config.adam_beta2, config.adam_eps, c1, c2);
    }
}

double lr_at(const TrainConfig& config, int epoch) {
    const auto passed = std::count_if(config.milestones.begin(), config.milestones.end(), [&](int m) { return m <= epoch; });
    return config.initial_lr * std::pow(config.lr_gamma, static_cast<double>(passed));
}

Eigen::MatrixXd feature_matrix(const BplDataset& dataset, const PositionNormalizer& normalizer) {
    Eigen::MatrixXd x(2, static_cast<Eigen::Index>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto f = normalizer.normalize(dataset.samples[i].x_m, dataset.samples[i].y_m);
        x(0, static_cast<Eigen::Index>(i)) = f[0];
        x(1, static_cast<Eigen::Index>(i)) = f[1];
    }
    return x;
}

namespace {

double top1_of_logits(const Eigen::MatrixXd& logits, const BplDataset& set) {
    std::size_t hits = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index best = 0;
        logits.col(c).maxCoeff(&best);  // first maximum, i.e. lowest class id on ties
        if (static_cast<int>(best) == set.samples[static_cast<std::size_t>(c)].labels[0]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.cols());
}

}  // namespace

TrainResult train(MlpModel model, const BplDataset& train_set, const BplDataset& val_set, const TrainConfig& requested,
                  const PositionNormalizer& normalizer) {
    requested.validate();
    if (train_set.empty()) fail(ErrorKind::EmptyDataset, "training set is empty");
    const TrainConfig config = effective_schedule(requested, train_set.size());
    if (model.input_dim() != 2 || model.output_dim() != kNumBpls)
        fail(ErrorKind::ShapeMismatch, "beam network must map 2 features to " + std::to_string(kNumBpls) + " classes");
    model.require_finite();
    if (static_cast<std::size_t>(config.frozen_layers) >= model.layer_count())
        fail(ErrorKind::InvalidParameter, "frozen_layers must leave at least one trainable layer");

    const Eigen::MatrixXd x_all = feature_matrix(train_set, normalizer);
    const Eigen::MatrixXd x_val = feature_matrix(val_set, normalizer);
    const std::size_t n = train_set.size();
    const auto batch = static_cast<std::size_t>(config.batch_size);
    const std::span<const double> w(config.loss_weights);

    AdamState state = AdamState::for_model(model);
    TrainResult result;
    Eigen::MatrixXd xb;
    std::vector<std::array<int, kLabelCount>> lb;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config, epoch);
        const auto perm = random_permutation(n, derive_seed(config.seed, {tag(SeedTag::Shuffle), static_cast<std::uint64_t>(epoch)}));
        double loss_sum = 0.0;
        for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
            const std::size_t len = std::min(batch, n - start);
            xb.resize(2, static_cast<Eigen::Index>(len));
            lb.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t src = perm[start + i];
                xb.col(static_cast<Eigen::Index>(i)) = x_all.col(static_cast<Eigen::Index>(src));
                lb[i] = train_set.samples[src].labels;
            }
            const Gradients g = backward(model, xb, lb, w);
            if (!std::isfinite(g.loss))
                fail(ErrorKind::NonFinite, "training loss became non-finite at epoch " + std::to_string(epoch + 1) +
                                               ", batch " + std::to_string(b) + " (lr " + std::to_string(lr) + ")");
            loss_sum += g.loss * static_cast<double>(len);
            adam_step(model, g, state, lr, config);
        }
        if (!model.all_finite())
            fail(ErrorKind::NonFinite, "parameters became non-finite during epoch " + std::to_string(epoch + 1));
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(n);
        if (!val_set.empty()) rec.val_top1 = top1_of_logits(forward_logits(model, x_val), val_set);
        result.history.push_back(rec);
    }
    result.model = std::move(model);
    return result;
}

std::vector<int> top_m_of(std::span<const double> scores, int m) {
    if (m < 1 || static_cast<std::size_t>(m) > scores.size())
        fail(ErrorKind::InvalidParameter, "m must be in [1, " + std::to_string(scores.size()) + "]");
    std::vector<int> ids(scores.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::partial_sort(ids.begin(), ids.begin() + m, ids.end(), [&](int a, int b) {
        const double sa = scores[static_cast<std::size_t>(a)];
        const double sb = scores[static_cast<std::size_t>(b)];
        return sa != sb ? sa > sb : a < b;
    });
    ids.resize(static_cast<std::size_t>(m));
    return ids;
}

std::vector<int> predict_top_m(const MlpModel& model, std::span<const double> features, int m) {
    // Softmax is strictly increasing, so ranking logits ranks probabilities.
    const ForwardResult r = forward(model, features);
    return top_m_of(std::span<const double>(r.logits.data(), static_cast<std::size_t>(r.logits.size())), m);
}

}  // namespace beamxfer
