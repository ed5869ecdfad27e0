#include "beamxfer/error.hpp"
#include "beamxfer/evaluation.hpp"
#include "beamxfer/transfer.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace beamxfer;

namespace {

struct SmallCity {
    Scenario scenario;
    DatasetIndex datasets;
    std::vector<GnbKey> keys;
};

const SmallCity& small_city() {
    static const SmallCity city = [] {
        CityParams p;
        p.area = Area{{0.0, 0.0}, {60.0, 60.0}};
        p.building_count = 3;
        p.building_size_min_m = 10.0;
        p.building_size_max_m = 18.0;
        p.gnb_count = 2;
        p.min_gnb_spacing_m = 15.0;
        p.grid_resolution_m = 2.0;
        p.seed = 4;
        SmallCity c;
        c.scenario = generate_synthetic_city(p);
        for (const auto& g : c.scenario.gnbs) {
            GnbKey k{"city", g.id};
            c.datasets[k] = build_dataset(c.scenario, g);
            c.keys.push_back(k);
        }
        return c;
    }();
    return city;
}

TrainConfig quick_config() {
    TrainConfig c = practical_train_config();
    c.epochs = 2;
    c.milestones = {1};
    c.min_steps = 0;
    return c;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvariantViolation;
}

}  // namespace

TEST_CASE("seed helpers depend on content, not order") {
    const GnbKey a{"s1", 0}, b{"s1", 1}, c{"s2", 0};
    CHECK(key_hash(a) != key_hash(b));
    CHECK(key_hash(a) != key_hash(c));
    CHECK(reference_seed(7, a) == reference_seed(7, a));
    CHECK(reference_seed(7, a) != reference_seed(8, a));
    CHECK(fine_tune_seed(7, a, b) != fine_tune_seed(7, b, a));
    CHECK(dataset_split_spec(7, a).seed == dataset_split_spec(7, a).seed);
    CHECK(a.str() == "s1:0");
    CHECK(a < b);
}

TEST_CASE("metrics agree with a recount over predict_top_m") {
    const auto& city = small_city();
    const auto& d = city.datasets.at(city.keys[0]);
    const PositionNormalizer n(d.area);
    const MlpModel m = MlpModel::he_uniform(kBeamNetDims, 3);
    std::size_t h1 = 0, h5 = 0;
    for (const auto& s : d.samples) {
        const auto f = n.normalize(s.x_m, s.y_m);
        const auto top = predict_top_m(m, f, 5);
        h1 += top[0] == s.labels[0];
        h5 += std::find(top.begin(), top.end(), s.labels[0]) != top.end();
    }
    const EvalReport r = evaluate(m, d, n);
    CHECK(r.sample_count == d.size());
    CHECK(r.top1 == static_cast<double>(h1) / static_cast<double>(d.size()));
    CHECK(r.best_in_top5 == static_cast<double>(h5) / static_cast<double>(d.size()));
    CHECK(kind_of([&] { evaluate(m, BplDataset{}, n); }) == ErrorKind::EmptyDataset);
}

TEST_CASE("mean and population standard deviation") {
    const auto ms = mean_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(ms.mean == doctest::Approx(5.0));
    CHECK(ms.std == doctest::Approx(2.0));
}

TEST_CASE("reference training, zero shot and fine tuning") {
    const auto& city = small_city();
    const auto& ref = city.datasets.at(city.keys[0]);
    const auto& tgt = city.datasets.at(city.keys[1]);
    TrainConfig cfg = quick_config();
    cfg.seed = reference_seed(1, city.keys[0]);
    const ReferenceModel rm = train_reference(ref, cfg, dataset_split_spec(1, city.keys[0]));
    CHECK(rm.split.train.size() + rm.split.val.size() + rm.split.test.size() == ref.size());
    CHECK(rm.baseline.sample_count == rm.split.test.size());
    CHECK(rm.checkpoint.normalizer_area == ref.area);
    CHECK(rm.checkpoint.history.size() == 2);

    const auto tsplit = split(tgt, dataset_split_spec(1, city.keys[1]));
    const auto pool = fine_tune_pool(tsplit);
    CHECK(pool.size() == tsplit.train.size() + tsplit.val.size());
    const EvalReport zs = zero_shot_eval(rm.checkpoint, tsplit.test);
    CHECK(zs.sample_count == tsplit.test.size());

    TrainConfig ft = quick_config();
    ft.seed = 5;
    const auto same = fine_tune(rm.checkpoint, pool, 0.0, 0, ft);
    CHECK(same.checkpoint.model == rm.checkpoint.model);
    CHECK(same.train_size == 0);
    CHECK(zero_shot_eval(same.checkpoint, tsplit.test).top1 == zs.top1);

    const auto tuned = fine_tune(rm.checkpoint, pool, 0.5, 0, ft);
    CHECK(tuned.subset_size == subsample_size(pool.size(), 0.5, 0));
    CHECK(tuned.train_size == tuned.subset_size * 6 / 10);
    CHECK_FALSE(tuned.checkpoint.model == rm.checkpoint.model);
    CHECK(fine_tune(rm.checkpoint, pool, 0.5, 0, ft).checkpoint.model == tuned.checkpoint.model);

    CHECK(kind_of([&] { fine_tune(rm.checkpoint, pool, 1.5, 0, ft); }) == ErrorKind::InvalidParameter);
    CHECK(kind_of([&] { fine_tune(rm.checkpoint, pool, -0.1, 0, ft); }) == ErrorKind::InvalidParameter);
    BplDataset one = pool;
    one.samples.resize(1);
    CHECK(kind_of([&] { fine_tune(rm.checkpoint, one, 1.0, 0, ft); }) == ErrorKind::EmptyDataset);
    Checkpoint narrow = rm.checkpoint;
    narrow.model = MlpModel::he_uniform({2, 8, 16}, 1);
    CHECK(kind_of([&] { fine_tune(narrow, pool, 0.5, 0, ft); }) == ErrorKind::ShapeMismatch);
    BplDataset tiny = ref;
    tiny.samples.resize(9);
    CHECK(kind_of([&] { train_reference(tiny, cfg, SplitSpec{}); }) == ErrorKind::EmptyDataset);
}

TEST_CASE("transfer job is reproducible and writes checkpoints") {
    const auto& city = small_city();
    TransferJob job;
    job.reference = city.keys[0];
    job.target = city.keys[1];
    job.fine_tune_fraction = 0.1;
    job.train_config = quick_config();
    job.fine_tune_config = quick_config();
    job.seed = 3;
    const auto dir = std::filesystem::temp_directory_path() / "beamxfer_transfer_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto a = run_transfer_job(job, city.datasets.at(job.reference), city.datasets.at(job.target), dir);
    const auto b = run_transfer_job(job, city.datasets.at(job.reference), city.datasets.at(job.target));
    REQUIRE(a.fine_tuned.has_value());
    CHECK(a.fine_tuned->top1 == b.fine_tuned->top1);
    CHECK(a.zero_shot.top1 == b.zero_shot.top1);
    CHECK(std::filesystem::exists(a.reference_checkpoint));
    CHECK(std::filesystem::exists(a.fine_tuned_checkpoint));
    CHECK(load_checkpoint(a.fine_tuned_checkpoint).model.layer_count() == 4);
    CHECK(transfer_result_json(a).find("\"zero_shot\"") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("coverage fractions are consistent") {
    const auto& city = small_city();
    const auto stats = coverage_stats(city.scenario);
    REQUIRE(stats.size() == 2);
    for (const auto& s : stats) {
        CHECK(s.los_fraction + s.nlos_fraction == doctest::Approx(s.covered_fraction).epsilon(1e-12));
        CHECK(s.covered_fraction * static_cast<double>(s.grid_points) ==
              doctest::Approx(static_cast<double>(s.dataset_size)));
        CHECK(s.dataset_size == city.datasets.at(GnbKey{"city", s.gnb_id}).size());
        CHECK(s.covered_fraction <= 1.0);
    }
    CHECK(coverage_table(stats).find("gNB") != std::string::npos);
}

TEST_CASE("accuracy matrix: diagonal baselines and job-count independence") {
    const auto& city = small_city();
    MatrixTemplate tmpl;
    tmpl.fine_tune_fraction = 0.1;
    tmpl.fine_tune_config = quick_config();
    ReferenceCache c1(city.datasets, quick_config(), 9);
    const auto r1 = accuracy_matrix(c1, city.keys, city.keys, tmpl, 1);
    ReferenceCache c2(city.datasets, quick_config(), 9);
    const auto r2 = accuracy_matrix(c2, city.keys, city.keys, tmpl, 2);
    CHECK(r1.top1.values == r2.top1.values);
    CHECK(r1.best_in_top5.values == r2.best_in_top5.values);
    CHECK(r1.zero_shot_top1.values == r2.zero_shot_top1.values);
    for (std::size_t i = 0; i < city.keys.size(); ++i) {
        CHECK(r1.top1.at(i, i) == c1.reference(city.keys[i]).baseline.top1);
        CHECK(r1.zero_shot_top1.at(i, i) == r1.top1.at(i, i));
    }
    CHECK(r1.pairs.size() == 4);
    for (const auto& p : r1.pairs) CHECK(p.result.best_in_top5 >= p.result.top1);
    CHECK(matrix_summary_json(r1, tmpl, 9) == matrix_summary_json(r2, tmpl, 9));
}

TEST_CASE("sweep covers every fraction and seed") {
    const auto& city = small_city();
    SweepSpec spec;
    spec.reference = city.keys[0];
    spec.target = city.keys[1];
    spec.fractions = {0.05, 0.2, 1.0};
    spec.seeds = {1, 2};
    spec.target_cap = 200;
    spec.train_config = quick_config();
    spec.fine_tune_config = quick_config();
    const auto s = fine_tune_sweep(city.datasets, spec, 1);
    CHECK(s.target_size == std::min<std::size_t>(200, city.datasets.at(spec.target).size()));
    CHECK(s.points.size() == 6);
    CHECK(s.baselines.size() == 2);
    CHECK(s.points[1].subset_size <= s.points[2].subset_size);
    spec.fractions = {0.0};
    CHECK(kind_of([&] { fine_tune_sweep(city.datasets, spec, 1); }) == ErrorKind::InvalidParameter);
    const auto curve = mean_curve(s);
    REQUIRE(curve.size() == 3);
    CHECK(curve[1].fraction == 0.2);
    CHECK(fraction_tag(0.05) == "f0.05");
    CHECK(format_double(0.1) == "0.1");
}
