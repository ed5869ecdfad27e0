#include "beamxfer/checkpoint.hpp"

#include "beamxfer/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace beamxfer {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'B', 'X', 'M', 'L', 'P', 'C', 'K', '1'};

using nlohmann::json;

// JSON cannot carry NaN, so an unset val_top1 is written as null.
json history_to_json(const TrainHistory& history) {
    json out = json::array();
    for (const auto& e : history) {
        json rec{{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}};
        rec["val_top1"] = std::isnan(e.val_top1) ? json(nullptr) : json(e.val_top1);
        out.push_back(rec);
    }
    return out;
}

json config_to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"initial_lr", c.initial_lr},
                {"milestones", c.milestones}, {"lr_gamma", c.lr_gamma},     {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2}, {"adam_eps", c.adam_eps},     {"loss_weights", c.loss_weights},
                {"seed", c.seed},             {"min_steps", c.min_steps},   {"frozen_layers", c.frozen_layers}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    j.at("epochs").get_to(c.epochs);
    j.at("batch_size").get_to(c.batch_size);
    j.at("initial_lr").get_to(c.initial_lr);
    j.at("milestones").get_to(c.milestones);
    j.at("lr_gamma").get_to(c.lr_gamma);
    j.at("adam_beta1").get_to(c.adam_beta1);
    j.at("adam_beta2").get_to(c.adam_beta2);
    j.at("adam_eps").get_to(c.adam_eps);
    j.at("loss_weights").get_to(c.loss_weights);
    j.at("seed").get_to(c.seed);
    c.min_steps = j.value("min_steps", 0L);
    c.frozen_layers = j.value("frozen_layers", 0);
    return c;
}

void put_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

void put_doubles(std::string& out, const double* data, std::size_t n) {
    out.append(reinterpret_cast<const char*>(data), n * sizeof(double));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    const char* take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) fail(ErrorKind::Parse, std::string("checkpoint truncated while reading ") + what);
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t u64(const char* what) {
        std::uint64_t v;
        std::memcpy(&v, take(8, what), 8);
        return v;
    }
    void doubles(double* dst, std::size_t n, const char* what) { std::memcpy(dst, take(n * sizeof(double), what), n * sizeof(double)); }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_to_bytes(const Checkpoint& ck) {
    const MlpModel& m = ck.model;
    json shapes = json::array();
    for (std::size_t l = 0; l < m.layer_count(); ++l)
        shapes.push_back(json{{"weight", {m.weights[l].rows(), m.weights[l].cols()}}, {"bias", m.biases[l].size()}});
    const json header{
        {"format", "beamxfer-mlp"},
        {"version", 1},
        {"layer_dims", m.dims},
        {"normalizer", {{"area_min", {ck.normalizer_area.min.x, ck.normalizer_area.min.y}},
                        {"area_max", {ck.normalizer_area.max.x, ck.normalizer_area.max.y}}}},
        {"config", config_to_json(ck.config)},
        {"history", history_to_json(ck.history)},
        {"arrays", shapes},
        {"dtype", "float64-le"},
        {"order", "row-major"},
    };
    const std::string text = header.dump();

    std::string out(kMagic, sizeof kMagic);
    put_u64(out, text.size());
    out += text;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m.weights[l];
        put_doubles(out, rm.data(), static_cast<std::size_t>(rm.size()));
        put_doubles(out, m.biases[l].data(), static_cast<std::size_t>(m.biases[l].size()));
    }
    return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
    Reader in(bytes);
    if (std::memcmp(in.take(sizeof kMagic, "magic"), kMagic, sizeof kMagic) != 0)
        fail(ErrorKind::Parse, "not a beamxfer checkpoint (bad magic)");
    const std::uint64_t len = in.u64("header length");
    const char* text = in.take(len, "header");

    json header;
    try {
        header = json::parse(text, text + len);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("checkpoint header: ") + e.what());
    }

    Checkpoint ck;
    try {
        const auto dims = header.at("layer_dims").get<std::vector<int>>();
        ck.model = MlpModel::zeros(dims);
        const auto& nm = header.at("normalizer");
        ck.normalizer_area.min = {nm.at("area_min").at(0).get<double>(), nm.at("area_min").at(1).get<double>()};
        ck.normalizer_area.max = {nm.at("area_max").at(0).get<double>(), nm.at("area_max").at(1).get<double>()};
        ck.config = config_from_json(header.at("config"));
        for (const auto& rec : header.at("history")) {
            EpochRecord e;
            rec.at("epoch").get_to(e.epoch);
            rec.at("lr").get_to(e.lr);
            rec.at("train_loss").get_to(e.train_loss);
            if (!rec.at("val_top1").is_null()) rec.at("val_top1").get_to(e.val_top1);
            ck.history.push_back(e);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("checkpoint header: ") + e.what());
    }

    for (std::size_t l = 0; l < ck.model.layer_count(); ++l) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(ck.model.weights[l].rows(),
                                                                                 ck.model.weights[l].cols());
        in.doubles(rm.data(), static_cast<std::size_t>(rm.size()), "weights");
        ck.model.weights[l] = rm;
        in.doubles(ck.model.biases[l].data(), static_cast<std::size_t>(ck.model.biases[l].size()), "biases");
    }
    if (!in.done()) fail(ErrorKind::Parse, "checkpoint has trailing bytes");
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const std::string bytes = checkpoint_to_bytes(checkpoint);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_bytes(ss.str());
}

}  // namespace beamxfer
