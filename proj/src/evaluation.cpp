#include "beamxfer/evaluation.hpp"

#include "beamxfer/error.hpp"
#include "beamxfer/parallel.hpp"
#include "beamxfer/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace beamxfer {

// ---- reference cache --------------------------------------------------------

ReferenceCache::ReferenceCache(const DatasetIndex& datasets, TrainConfig train_config, std::uint64_t master_seed)
    : datasets_(datasets), train_config_(std::move(train_config)), master_seed_(master_seed) {
    train_config_.validate();
}

const BplDataset& ReferenceCache::dataset(const GnbKey& key) const {
    const auto it = datasets_.find(key);
    if (it == datasets_.end()) fail(ErrorKind::InvalidParameter, "no dataset for gNB " + key.str());
    return it->second;
}

const DatasetSplit& ReferenceCache::split_of(const GnbKey& key) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = splits_.find(key); it != splits_.end()) return *it->second;
    }
    auto parts = std::make_shared<const DatasetSplit>(split(dataset(key), dataset_split_spec(master_seed_, key)));
    std::lock_guard lock(mutex_);
    return *splits_.try_emplace(key, std::move(parts)).first->second;
}

const ReferenceModel& ReferenceCache::reference(const GnbKey& key) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = references_.find(key); it != references_.end()) return *it->second;
    }
    TrainConfig config = train_config_;
    config.seed = reference_seed(master_seed_, key);
    auto ref = std::make_shared<const ReferenceModel>(
        train_reference(dataset(key), config, dataset_split_spec(master_seed_, key)));
    std::lock_guard lock(mutex_);
    return *references_.try_emplace(key, std::move(ref)).first->second;
}

void ReferenceCache::prepare(const std::vector<GnbKey>& keys, int jobs) {
    std::vector<GnbKey> unique = keys;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    parallel_for(unique.size(), jobs, [&](std::size_t i) { reference(unique[i]); });
}

// ---- accuracy matrix --------------------------------------------------------

MatrixResult accuracy_matrix(ReferenceCache& cache, const std::vector<GnbKey>& references,
                             const std::vector<GnbKey>& targets, const MatrixTemplate& tmpl, int jobs) {
    if (references.empty() || targets.empty())
        fail(ErrorKind::InvalidParameter, "an accuracy matrix needs at least one reference and one target");
    if (!(tmpl.fine_tune_fraction >= 0.0 && tmpl.fine_tune_fraction <= 1.0))
        fail(ErrorKind::InvalidParameter, "fine-tune fraction must be in [0, 1]");
    cache.prepare(references, jobs);
    for (const auto& t : targets) cache.split_of(t);

    const std::size_t rows = references.size(), cols = targets.size();
    std::vector<PairRecord> pairs(rows * cols);
    parallel_for(pairs.size(), jobs, [&](std::size_t idx) {
        const GnbKey& rk = references[idx / cols];
        const GnbKey& tk = targets[idx % cols];
        const ReferenceModel& ref = cache.reference(rk);
        PairRecord rec;
        rec.reference = rk;
        rec.target = tk;
        if (rk == tk) {
            rec.zero_shot = ref.baseline;
            rec.result = ref.baseline;
        } else {
            const DatasetSplit& ts = cache.split_of(tk);
            rec.zero_shot = zero_shot_eval(ref.checkpoint, ts.test);
            rec.result = rec.zero_shot;
            if (tmpl.fine_tune_fraction > 0.0) {
                TrainConfig ft_config = tmpl.fine_tune_config;
                ft_config.seed = fine_tune_seed(cache.master_seed(), rk, tk);
                const FineTuneResult ft = fine_tune(ref.checkpoint, fine_tune_pool(ts), tmpl.fine_tune_fraction,
                                                    tmpl.min_fine_tune_size, ft_config);
                rec.result = evaluate(ft.checkpoint.model, ts.test, PositionNormalizer(ts.test.area));
                rec.subset_size = ft.subset_size;
            }
        }
        pairs[idx] = std::move(rec);
    });

    MatrixResult out;
    for (AccuracyMatrix* m : {&out.top1, &out.best_in_top5, &out.zero_shot_top1, &out.zero_shot_best_in_top5}) {
        m->rows = references;
        m->cols = targets;
        m->values.assign(rows, std::vector<double>(cols, 0.0));
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const PairRecord& p = pairs[r * cols + c];
            out.top1.values[r][c] = p.result.top1;
            out.best_in_top5.values[r][c] = p.result.best_in_top5;
            out.zero_shot_top1.values[r][c] = p.zero_shot.top1;
            out.zero_shot_best_in_top5.values[r][c] = p.zero_shot.best_in_top5;
        }
    out.pairs = std::move(pairs);
    return out;
}

// ---- coverage ---------------------------------------------------------------

GnbCoverage coverage_of(const GnbSurvey& survey) {
    GnbCoverage c;
    c.gnb_id = survey.gnb_id;
    c.grid_points = survey.grid_points;
    c.dataset_size = survey.dataset.size();
    if (survey.grid_points > 0) {
        const double n = static_cast<double>(survey.grid_points);
        c.covered_fraction = static_cast<double>(survey.covered) / n;
        c.los_fraction = static_cast<double>(survey.covered_los) / n;
        c.nlos_fraction = static_cast<double>(survey.covered - survey.covered_los) / n;
    }
    return c;
}

std::vector<GnbCoverage> coverage_stats(const Scenario& scenario, int jobs) {
    scenario.validate();
    std::vector<GnbCoverage> out;
    for (const auto& g : scenario.gnbs) out.push_back(coverage_of(survey_gnb(scenario, g, jobs)));
    return out;
}

// ---- fine-tuning sweep ------------------------------------------------------

namespace {

BplDataset cap_dataset(const BplDataset& d, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || d.size() <= cap) return d;
    auto perm = random_permutation(d.size(), seed);
    perm.resize(cap);
    std::sort(perm.begin(), perm.end());
    BplDataset out = d;
    out.samples.clear();
    for (std::size_t i : perm) out.samples.push_back(d.samples[i]);
    return out;
}

}  // namespace

SweepResult fine_tune_sweep(const DatasetIndex& datasets, const SweepSpec& spec, int jobs) {
    if (spec.fractions.empty() || spec.seeds.empty())
        fail(ErrorKind::InvalidParameter, "a sweep needs at least one fraction and one seed");
    for (double f : spec.fractions)
        if (!(f > 0.0 && f <= 1.0)) fail(ErrorKind::InvalidParameter, "sweep fractions must be in (0, 1]");
    if (spec.reference == spec.target) fail(ErrorKind::InvalidParameter, "sweep reference and target must differ");
    const auto find = [&](const GnbKey& k) -> const BplDataset& {
        const auto it = datasets.find(k);
        if (it == datasets.end()) fail(ErrorKind::InvalidParameter, "no dataset for gNB " + k.str());
        return it->second;
    };

    SweepResult out;
    out.spec = spec;
    const std::size_t n_seeds = spec.seeds.size(), n_fracs = spec.fractions.size();

    // Per seed: the capped target, and a cache holding the reference and the
    // target-only baseline.
    std::vector<DatasetIndex> indices(n_seeds);
    std::vector<std::unique_ptr<ReferenceCache>> caches(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) {
        indices[s][spec.reference] = find(spec.reference);
        indices[s][spec.target] =
            cap_dataset(find(spec.target), spec.target_cap,
                        derive_seed(spec.seeds[s], {tag(SeedTag::Subsample), key_hash(spec.target), spec.target_cap}));
        caches[s] = std::make_unique<ReferenceCache>(indices[s], spec.train_config, spec.seeds[s]);
    }
    out.target_size = indices[0][spec.target].size();

    parallel_for(2 * n_seeds, jobs, [&](std::size_t i) {
        caches[i / 2]->reference(i % 2 == 0 ? spec.reference : spec.target);
    });

    out.baselines.resize(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) {
        ReferenceCache& cache = *caches[s];
        out.baselines[s].seed = spec.seeds[s];
        out.baselines[s].target_only = cache.reference(spec.target).baseline;
        out.baselines[s].zero_shot = zero_shot_eval(cache.reference(spec.reference).checkpoint, cache.split_of(spec.target).test);
    }

    out.points.resize(n_seeds * n_fracs);
    parallel_for(out.points.size(), jobs, [&](std::size_t idx) {
        const std::size_t s = idx / n_fracs;
        ReferenceCache& cache = *caches[s];
        const DatasetSplit& ts = cache.split_of(spec.target);
        TrainConfig ft_config = spec.fine_tune_config;
        ft_config.seed = fine_tune_seed(spec.seeds[s], spec.reference, spec.target);
        const FineTuneResult ft = fine_tune(cache.reference(spec.reference).checkpoint, fine_tune_pool(ts),
                                            spec.fractions[idx % n_fracs], spec.min_fine_tune_size, ft_config);
        SweepPoint& p = out.points[idx];
        p.fraction = spec.fractions[idx % n_fracs];
        p.seed = spec.seeds[s];
        p.report = evaluate(ft.checkpoint.model, ts.test, PositionNormalizer(ts.test.area));
        p.subset_size = ft.subset_size;
    });
    return out;
}

std::vector<CurvePoint> mean_curve(const SweepResult& sweep) {
    std::vector<CurvePoint> curve;
    for (double f : sweep.spec.fractions) {
        std::vector<double> t1, t5;
        for (const auto& p : sweep.points)
            if (p.fraction == f) {
                t1.push_back(p.report.top1);
                t5.push_back(p.report.best_in_top5);
            }
        curve.push_back({f, mean_std(t1), mean_std(t5)});
    }
    return curve;
}

// ---- output -----------------------------------------------------------------

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string fraction_tag(double fraction) { return "f" + format_double(fraction); }

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

nlohmann::json report_json(const EvalReport& r) {
    return {{"top1", r.top1}, {"best_in_top5", r.best_in_top5}, {"sample_count", r.sample_count}};
}

nlohmann::json matrix_json(const AccuracyMatrix& m) {
    nlohmann::json rows = nlohmann::json::array(), cols = nlohmann::json::array();
    for (const auto& k : m.rows) rows.push_back(k.str());
    for (const auto& k : m.cols) cols.push_back(k.str());
    return {{"rows", rows}, {"cols", cols}, {"values", m.values}};
}

}  // namespace

void write_matrix_csv(const AccuracyMatrix& matrix, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "reference";
    for (const auto& k : matrix.cols) out << ',' << k.str();
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
        out << matrix.rows[r].str();
        for (double v : matrix.values[r]) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_coverage_csv(const std::vector<GnbCoverage>& stats, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "gnb_id,grid_points,covered_fraction,los_fraction,nlos_fraction,dataset_size\n";
    for (const auto& c : stats)
        out << c.gnb_id << ',' << c.grid_points << ',' << format_double(c.covered_fraction) << ','
            << format_double(c.los_fraction) << ',' << format_double(c.nlos_fraction) << ',' << c.dataset_size << '\n';
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "kind,fraction,seed,top1,best_in_top5,subset_size,test_samples\n";
    for (const auto& p : sweep.points)
        out << "fine_tuned," << format_double(p.fraction) << ',' << p.seed << ',' << format_double(p.report.top1) << ','
            << format_double(p.report.best_in_top5) << ',' << p.subset_size << ',' << p.report.sample_count << '\n';
    for (const auto& b : sweep.baselines) {
        out << "target_only,1," << b.seed << ',' << format_double(b.target_only.top1) << ','
            << format_double(b.target_only.best_in_top5) << ",," << b.target_only.sample_count << '\n';
        out << "zero_shot,0," << b.seed << ',' << format_double(b.zero_shot.top1) << ','
            << format_double(b.zero_shot.best_in_top5) << ",0," << b.zero_shot.sample_count << '\n';
    }
}

std::string matrix_summary_json(const MatrixResult& result, const MatrixTemplate& tmpl, std::uint64_t master_seed) {
    using nlohmann::json;
    json pairs = json::array();
    for (const auto& p : result.pairs)
        pairs.push_back({{"reference", p.reference.str()},
                         {"target", p.target.str()},
                         {"zero_shot", report_json(p.zero_shot)},
                         {"result", report_json(p.result)},
                         {"fine_tune_subset_size", p.subset_size}});
    const json j{{"seed", master_seed},
                 {"fine_tune_fraction", tmpl.fine_tune_fraction},
                 {"min_fine_tune_size", tmpl.min_fine_tune_size},
                 {"top1", matrix_json(result.top1)},
                 {"best_in_top5", matrix_json(result.best_in_top5)},
                 {"zero_shot_top1", matrix_json(result.zero_shot_top1)},
                 {"zero_shot_best_in_top5", matrix_json(result.zero_shot_best_in_top5)},
                 {"pairs", pairs}};
    return j.dump(2) + "\n";
}

std::string sweep_summary_json(const SweepResult& sweep) {
    using nlohmann::json;
    json curve = json::array();
    for (const auto& c : mean_curve(sweep))
        curve.push_back({{"fraction", c.fraction},
                         {"top1_mean", c.top1.mean},
                         {"top1_std", c.top1.std},
                         {"best_in_top5_mean", c.best_in_top5.mean},
                         {"best_in_top5_std", c.best_in_top5.std}});
    json baselines = json::array();
    for (const auto& b : sweep.baselines)
        baselines.push_back({{"seed", b.seed}, {"target_only", report_json(b.target_only)}, {"zero_shot", report_json(b.zero_shot)}});
    const json j{{"reference", sweep.spec.reference.str()},
                 {"target", sweep.spec.target.str()},
                 {"fractions", sweep.spec.fractions},
                 {"seeds", sweep.spec.seeds},
                 {"min_fine_tune_size", sweep.spec.min_fine_tune_size},
                 {"target_cap", sweep.spec.target_cap},
                 {"target_size", sweep.target_size},
                 {"mean_curve", curve},
                 {"baselines", baselines}};
    return j.dump(2) + "\n";
}

std::string coverage_table(const std::vector<GnbCoverage>& stats) {
    std::ostringstream os;
    os << "gNB   grid    covered%   LoS%    NLoS%   samples\n";
    os << std::fixed;
    for (const auto& c : stats)
        os << std::setw(3) << c.gnb_id << std::setw(8) << c.grid_points << std::setprecision(2) << std::setw(10)
           << 100.0 * c.covered_fraction << std::setw(8) << 100.0 * c.los_fraction << std::setw(9)
           << 100.0 * c.nlos_fraction << std::setw(10) << c.dataset_size << '\n';
    return os.str();
}

}  // namespace beamxfer
